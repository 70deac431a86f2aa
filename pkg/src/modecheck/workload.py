"""Mission scripting: command verbs, a builder in the style of a ground-control
script, a cooperative step-locked runner and the two default missions."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

from .modes import Mode
from .sim import Environment, Fence


class CommandKind(enum.Enum):
    ARM = "arm"
    TAKEOFF = "takeoff"  # arm and climb, then hold position
    UPLOAD_MISSION = "upload_mission"
    SET_MODE = "set_mode"
    REPOSITION = "reposition"
    DISARM = "disarm"
    WAIT_ALTITUDE = "wait_altitude"
    WAIT_POSITION = "wait_position"
    WAIT_TIME = "wait_time"
    WAIT_MODE = "wait_mode"
    WAIT_DISARMED = "wait_disarmed"
    PASS_TEST = "pass_test"


VEHICLE_COMMANDS = frozenset(
    {
        CommandKind.ARM,
        CommandKind.TAKEOFF,
        CommandKind.UPLOAD_MISSION,
        CommandKind.SET_MODE,
        CommandKind.REPOSITION,
        CommandKind.DISARM,
    }
)


@dataclass(frozen=True)
class MissionItem:
    kind: str  # "takeoff" | "waypoint" | "land"
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    index: int = 0

    @property
    def altitude(self) -> float:
        return self.position[2]


@dataclass(frozen=True)
class Command:
    kind: CommandKind
    args: tuple = ()
    issue_step: int = -1

    def issued(self, step: int) -> "Command":
        return Command(self.kind, self.args, step)


@dataclass
class Telemetry:
    """What the ground station sees: the firmware's own estimate, not ground truth."""

    position: tuple[float, float, float]
    mode: Mode
    armed: bool
    landed: bool


class WorkloadTimeout(RuntimeError):
    pass


class Workload:
    """Script builder.  Subclasses override :meth:`test` and call the verbs::

        class AutoWorkload(Workload):
            def test(self):
                self.wait_time(40000)
                self.upload_mission(self.takeoff_mission(20) + self.land_mission())
                self.arm_system_completely()
                self.enter_auto_mode()
                self.wait_altitude(20)
                self.wait_altitude(0)
                self.pass_test()
    """

    name = "custom"

    def __init__(self, environment: Optional[Environment] = None):
        self.environment = environment or Environment()
        self.commands: list[Command] = []
        self.cur_x = self.environment.home[0]
        self.cur_y = self.environment.home[1]
        self.home_alt = self.environment.home[2]

    def test(self) -> None:
        pass

    def script(self) -> "Script":
        self.commands = []
        self.test()
        return Script(self.name, tuple(self.commands), self.environment)

    def _add(self, kind: CommandKind, *args) -> None:
        self.commands.append(Command(kind, tuple(args)))

    # mission items
    def takeoff_mission(self, alt: float, x: Optional[float] = None, y: Optional[float] = None, home_alt: float = 0.0):
        x = self.cur_x if x is None else x
        y = self.cur_y if y is None else y
        return [MissionItem("takeoff", (x, y, home_alt + alt))]

    def waypoint_mission(self, points: Sequence[Sequence[float]]):
        return [MissionItem("waypoint", tuple(float(v) for v in p)) for p in points]

    def land_mission(self):
        return [MissionItem("land")]

    # vehicle verbs
    def upload_mission(self, items) -> None:
        items = tuple(MissionItem(it.kind, it.position, i) for i, it in enumerate(items))
        self._add(CommandKind.UPLOAD_MISSION, items)

    def arm_system_completely(self) -> None:
        self._add(CommandKind.ARM)

    def enter_auto_mode(self) -> None:
        self._add(CommandKind.SET_MODE, Mode.GUIDED)

    def enter_mode(self, mode: Mode) -> None:
        self._add(CommandKind.SET_MODE, mode)

    def takeoff(self, alt: float) -> None:
        self._add(CommandKind.TAKEOFF, float(alt))

    def reposition(self, x: float, y: float, z: float) -> None:
        self._add(CommandKind.REPOSITION, (float(x), float(y), float(z)))

    def disarm(self) -> None:
        self._add(CommandKind.DISARM)

    # script-side waits
    def wait_time(self, ms: float) -> None:
        self._add(CommandKind.WAIT_TIME, float(ms))

    def wait_altitude(self, alt: float, tolerance: float = 0.5) -> None:
        self._add(CommandKind.WAIT_ALTITUDE, float(alt), float(tolerance))

    def wait_position(self, x: float, y: float, z: float, tolerance: float = 1.0) -> None:
        self._add(CommandKind.WAIT_POSITION, (float(x), float(y), float(z)), float(tolerance))

    def wait_mode(self, mode: Mode) -> None:
        self._add(CommandKind.WAIT_MODE, mode)

    def wait_disarmed(self) -> None:
        self._add(CommandKind.WAIT_DISARMED)

    def pass_test(self) -> None:
        self._add(CommandKind.PASS_TEST)


@dataclass(frozen=True)
class Script:
    name: str
    commands: tuple[Command, ...]
    environment: Environment = field(default_factory=Environment)


class ScriptStatus(enum.Enum):
    RUNNING = "running"
    PASSED = "passed"
    TIMEOUT = "timeout"


class ScriptRunner:
    """Interprets a script one simulation step at a time.

    Each :meth:`step` call corresponds to exactly one simulation step.  Vehicle
    commands are emitted without waiting; wait verbs poll telemetry and hold
    the program counter, never the simulation.
    """

    def __init__(self, commands: Sequence[Command], dt: float, max_steps: Optional[int] = None):
        self.commands = tuple(commands)
        self.dt = dt
        self.max_steps = max_steps
        self.pc = 0
        self.steps = 0
        self.status = ScriptStatus.RUNNING
        self._wait_deadline: Optional[int] = None

    @property
    def done(self) -> bool:
        return self.status is not ScriptStatus.RUNNING

    def _satisfied(self, cmd: Command, tel: Telemetry, now: int) -> bool:
        k = cmd.kind
        if k is CommandKind.WAIT_TIME:
            if self._wait_deadline is None:
                self._wait_deadline = now + int(round(cmd.args[0] / 1000.0 / self.dt))
            if now >= self._wait_deadline:
                self._wait_deadline = None
                return True
            return False
        if k is CommandKind.WAIT_ALTITUDE:
            return abs(tel.position[2] - cmd.args[0]) <= cmd.args[1]
        if k is CommandKind.WAIT_POSITION:
            target, tol = cmd.args
            return sum((a - b) ** 2 for a, b in zip(tel.position, target)) <= tol * tol
        if k is CommandKind.WAIT_MODE:
            return tel.mode is cmd.args[0]
        if k is CommandKind.WAIT_DISARMED:
            return tel.mode is Mode.DISARMED or (tel.landed and not tel.armed)
        raise AssertionError(k)

    def step(self, tel: Telemetry, now: int) -> list[Command]:
        """Advance the script as far as possible at step ``now``; return vehicle commands."""
        out: list[Command] = []
        self.steps += 1
        if self.done:
            return out
        while self.pc < len(self.commands):
            cmd = self.commands[self.pc]
            if cmd.kind is CommandKind.PASS_TEST:
                self.status = ScriptStatus.PASSED
                self.pc += 1
                return out
            if cmd.kind in VEHICLE_COMMANDS:
                out.append(cmd.issued(now))
                self.pc += 1
                continue
            if not self._satisfied(cmd, tel, now):
                break
            self.pc += 1
        else:
            # ran off the end without passing
            self.status = ScriptStatus.TIMEOUT
            return out
        if self.max_steps is not None and self.steps >= self.max_steps:
            self.status = ScriptStatus.TIMEOUT
        return out


class Channel(Protocol):
    now: int

    def telemetry(self) -> Telemetry: ...

    def step(self, commands: list[Command]) -> bool:
        """Advance one simulation step; return False once the simulation has stopped."""


@dataclass
class WorkloadResult:
    status: ScriptStatus
    steps: int


def run_script(script: Script | Sequence[Command], channel: Channel, dt: float = 0.01, max_steps: Optional[int] = None) -> WorkloadResult:
    """Drive ``channel`` with the script until it passes, times out or the channel stops."""
    commands = script.commands if isinstance(script, Script) else tuple(script)
    runner = ScriptRunner(commands, dt, max_steps)
    while True:
        cmds = runner.step(channel.telemetry(), channel.now)
        alive = channel.step(cmds)
        if runner.done or not alive:
            break
    return WorkloadResult(runner.status, runner.steps)


# -- default missions -------------------------------------------------------

def box_corners(size: float = 20.0, altitude: float = 20.0) -> list[tuple[float, float, float]]:
    return [
        (0.0, 0.0, altitude),
        (size, 0.0, altitude),
        (size, size, altitude),
        (0.0, size, altitude),
        (0.0, 0.0, altitude),
    ]


DEFAULT_FENCE = ((16.0, 8.0), (24.0, 8.0), (24.0, 12.0), (16.0, 12.0))


class BoxHoldWorkload(Workload):
    """Position-hold flight: climb, fly the box perimeter, descend and land at launch."""

    name = "box_hold"

    def __init__(self, altitude=20.0, size=20.0, warmup_ms=2000.0, final_altitude=1.5, environment=None):
        super().__init__(environment)
        self.altitude = altitude
        self.size = size
        self.warmup_ms = warmup_ms
        self.final_altitude = final_altitude

    def test(self):
        self.wait_time(self.warmup_ms)
        self.takeoff(self.altitude)
        self.wait_mode(Mode.POSITION_HOLD)
        for x, y, z in box_corners(self.size, self.altitude)[1:]:
            self.reposition(x, y, z)
            self.wait_position(x, y, z, tolerance=1.0)
        self.reposition(self.cur_x, self.cur_y, self.final_altitude)
        self.wait_altitude(self.final_altitude, tolerance=0.2)
        self.enter_mode(Mode.LAND)
        self.wait_disarmed()
        self.pass_test()


class WaypointFenceWorkload(Workload):
    """Auto mission around the box; one leg crosses an exclusion fence."""

    name = "waypoint_fence"

    def __init__(self, altitude=20.0, size=20.0, warmup_ms=2000.0, fence=DEFAULT_FENCE, fence_max_altitude=50.0, environment=None):
        env = environment or Environment(fence=Fence(tuple(map(tuple, fence)), fence_max_altitude))
        super().__init__(env)
        self.altitude = altitude
        self.size = size
        self.warmup_ms = warmup_ms

    def test(self):
        self.wait_time(self.warmup_ms)
        self.upload_mission(
            self.takeoff_mission(self.altitude)
            + self.waypoint_mission(box_corners(self.size, self.altitude)[1:])
            + self.land_mission()
        )
        self.arm_system_completely()
        self.enter_auto_mode()
        self.wait_altitude(self.altitude)
        self.wait_disarmed()
        self.pass_test()


class AutoTakeoffLandWorkload(Workload):
    """Takeoff-then-land auto mission, verb for verb the classic minimal example."""

    name = "auto_takeoff_land"

    def __init__(self, altitude=20.0, warmup_ms=40000.0, environment=None):
        super().__init__(environment)
        self.altitude = altitude
        self.warmup_ms = warmup_ms

    def test(self):
        self.wait_time(self.warmup_ms)
        self.upload_mission(self.takeoff_mission(self.altitude, self.cur_x, self.cur_y, self.home_alt) + self.land_mission())
        self.arm_system_completely()
        self.enter_auto_mode()
        self.wait_altitude(self.altitude)
        self.wait_altitude(0)
        self.pass_test()


def box_hold_workload(**params) -> Script:
    return BoxHoldWorkload(**params).script()


def waypoint_fence_workload(**params) -> Script:
    return WaypointFenceWorkload(**params).script()


WORKLOADS = {
    "box_hold": box_hold_workload,
    "waypoint_fence": waypoint_fence_workload,
    "auto_takeoff_land": lambda **p: AutoTakeoffLandWorkload(**p).script(),
}


def make_workload(name: str, **params) -> Script:
    try:
        factory = WORKLOADS[name]
    except KeyError:
        raise ValueError(f"unknown workload {name!r}; known: {sorted(WORKLOADS)}") from None
    return factory(**params)
