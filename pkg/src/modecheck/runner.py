"""One simulated flight: simulator, firmware, fault interception, script and monitor in lockstep.

Per step, in this order: the script polls telemetry and may issue commands;
commands that have cleared their delivery delay reach the firmware; sensors
are read and passed through the fault schedule; the firmware ticks; the
vehicle moves; collisions and liveliness are checked on the new state.
"""
from __future__ import annotations

import copy
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .faults import FaultScenario, Interceptor
from .firmware import Firmware, FirmwareConfig
from .modes import Mode, ModeTransition
from .monitor import SAFE, LivelinessMonitor, Verdict, check_safety
from .sim import PhysicalState, SensorConfig, VehicleParams, detect_collision, sense, step
from .workload import Script, ScriptRunner, ScriptStatus


class ReplayDivergence(RuntimeError):
    """An anchoring mode transition never showed up during replay."""


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.01
    sensors: SensorConfig = field(default_factory=SensorConfig)
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    noise_seed: int = 0
    jitter_seed: int = 0
    max_jitter: int = 10  # steps of command delivery delay
    collision_threshold: float = 2.0


@dataclass(frozen=True)
class Anchor:
    """Injection placement relative to a mode transition (or to the run start)."""

    edge: Optional[tuple]  # (from, to) or None for the run start
    occurrence: int
    offset: int
    sensor_type: object
    instance_id: int

    def to_json(self) -> dict:
        return {
            "from": None if self.edge is None else self.edge[0].value,
            "to": None if self.edge is None else self.edge[1].value,
            "occurrence": self.occurrence,
            "offset": self.offset,
            "sensor": self.sensor_type.label,
            "instance": self.instance_id,
        }

    @classmethod
    def from_json(cls, rec: dict) -> "Anchor":
        from .sim import SensorType

        edge = None if rec["from"] is None else (Mode.parse(rec["from"]), Mode.parse(rec["to"]))
        return cls(edge, rec["occurrence"], rec["offset"], SensorType.parse(rec["sensor"]), rec["instance"])


def anchor_injections(scenario: FaultScenario, transitions: Sequence[ModeTransition]) -> list[Anchor]:
    """Tie each injection to the latest transition at or before it."""
    out = []
    for inj in scenario.injections:
        best, occ = None, 0
        counts: dict = {}
        for tr in transitions:
            if tr.timestamp > inj.step:
                break
            counts[tr.edge] = counts.get(tr.edge, 0) + 1
            best, occ = tr, counts[tr.edge]
        if best is None:
            out.append(Anchor(None, 0, inj.step, inj.sensor_type, inj.instance_id))
        else:
            out.append(Anchor(best.edge, occ, inj.step - best.timestamp, inj.sensor_type, inj.instance_id))
    return out


class Trace:
    """Per-step record of ground truth, mode and active failures; rows are contiguous from step 0."""

    FIELDS = ("step", "px", "py", "pz", "vx", "vy", "vz", "ax", "ay", "az", "mode", "failures")

    def __init__(self):
        self.start = 0
        self.pos: list = []
        self.vel: list = []
        self.acc: list = []
        self.modes: list = []
        self.failures: list = []

    def append(self, state: PhysicalState, mode: Mode, active: tuple) -> None:
        if len(self.pos) != state.timestamp - self.start:
            raise ValueError("trace steps must be contiguous")
        self.pos.append(state.position)
        self.vel.append(state.velocity)
        self.acc.append(state.acceleration)
        self.modes.append(mode)
        self.failures.append(active)

    def __len__(self) -> int:
        return len(self.pos)

    def copy(self) -> "Trace":
        t = Trace()
        t.start = self.start
        t.pos, t.vel, t.acc = list(self.pos), list(self.vel), list(self.acc)
        t.modes, t.failures = list(self.modes), list(self.failures)
        return t

    @property
    def positions(self) -> np.ndarray:
        return np.array(self.pos, dtype=float).reshape(-1, 3)

    @property
    def velocities(self) -> np.ndarray:
        return np.array(self.vel, dtype=float).reshape(-1, 3)

    @property
    def accelerations(self) -> np.ndarray:
        return np.array(self.acc, dtype=float).reshape(-1, 3)

    def lines(self):
        g = "%.9g"
        for k in range(len(self.pos)):
            p, v, a = self.pos[k], self.vel[k], self.acc[k]
            fails = ";".join(f"{st}:{i}" for st, i in self.failures[k])
            yield ",".join(
                [str(self.start + k)] + [g % x for x in p] + [g % x for x in v] + [g % x for x in a]
                + [self.modes[k].value, fails]
            )

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(",".join(self.FIELDS) + "\n")
            for line in self.lines():
                fh.write(line + "\n")


@dataclass
class RunResult:
    verdict: Verdict
    status: str  # passed | disarmed | violation | arming_refused | timeout
    steps: int
    transitions: list
    trace: Optional[Trace]
    bug_hits: list
    applied: FaultScenario
    unresolved_anchors: list = field(default_factory=list)

    @property
    def unsafe(self) -> bool:
        return self.verdict.unsafe


class Simulation:
    """A single flight.  Also acts as the script's channel to the vehicle."""

    def __init__(
        self,
        script: Script,
        firmware: Optional[FirmwareConfig] = None,
        config: SimConfig = SimConfig(),
        scenario: Optional[FaultScenario] = None,
        monitor: Optional[LivelinessMonitor] = None,
        max_steps: Optional[int] = None,
        anchors: Sequence[Anchor] = (),
        record_trace: bool = True,
    ):
        self.script = script
        self.env = script.environment
        self.cfg = config
        self.fw = Firmware(firmware or FirmwareConfig(), self.env)
        self.state = PhysicalState.at_rest(self.env.home)
        self.runner = ScriptRunner(script.commands, config.dt, max_steps)
        self.max_steps = max_steps
        self.interceptor = Interceptor(scenario)
        self.monitor = monitor
        self.jitter = random.Random(config.jitter_seed)
        self.in_flight: list = []  # (delivery step, seq, command)
        self._last_delivery = -1
        self.transitions: list[ModeTransition] = []
        self.edge_counts: dict = {}
        self.anchors = list(anchors)
        self.verdict: Optional[Verdict] = None
        self.status: Optional[str] = None
        self.trace = Trace() if record_trace else None
        self._active: tuple = ()
        for a in [a for a in self.anchors if a.edge is None]:
            self.interceptor.add(a.offset, a.sensor_type, a.instance_id)
            self.anchors.remove(a)
        self._next_onset = self._compute_next_onset()
        if self.trace is not None:
            self.trace.append(self.state, self.fw.mode, ())

    # -- channel protocol -----------------------------------------------------------
    @property
    def now(self) -> int:
        return self.state.timestamp

    def telemetry(self):
        return self.fw.telemetry()

    @property
    def done(self) -> bool:
        return self.status is not None

    # -- fault schedule -----------------------------------------------------------------
    def _compute_next_onset(self) -> Optional[int]:
        now = self.state.timestamp
        pending = [t for t in self.interceptor.schedule.values() if t >= now]
        return min(pending) if pending else None

    def inject(self, scenario: FaultScenario) -> None:
        """Add injections; none may lie in the past."""
        for inj in scenario.injections:
            if inj.step < self.now:
                raise ValueError(f"injection at {inj.step} is before the current step {self.now}")
            self.interceptor.add(inj.step, inj.sensor_type, inj.instance_id)
        self._next_onset = self._compute_next_onset()

    def applied(self) -> FaultScenario:
        now = self.now
        return FaultScenario.of(*((t, st, i) for (st, i), t in self.interceptor.schedule.items() if t < now))

    # -- stepping ---------------------------------------------------------------------------
    def step(self, commands: list) -> bool:
        if self.done:
            return False
        now = self.state.timestamp
        for c in commands:
            due = max(now + self.jitter.randint(0, self.cfg.max_jitter), self._last_delivery)
            self._last_delivery = due
            self.in_flight.append((due, c))
        deliver = []
        if self.in_flight and self.in_flight[0][0] <= now:
            while self.in_flight and self.in_flight[0][0] <= now:
                deliver.append(self.in_flight.pop(0)[1])

        if self._next_onset is not None and now >= self._next_onset:
            self._active = self.interceptor.active(now)
            self._next_onset = self._compute_next_onset_after(now)
        readings = sense(self.state, self.cfg.noise_seed, self.cfg.sensors, self.cfg.dt)
        readings = self.interceptor.apply(readings, now)
        try:
            act, emitted = self.fw.tick(readings, deliver)
        except Exception as exc:  # firmware panic
            self.verdict = check_safety(None, f"{type(exc).__name__}: {exc}", self.fw.mode, now)
            self.status = "violation"
            return False
        for tr in emitted:
            self.transitions.append(tr)
            self._resolve_anchors(tr)

        prev = self.state
        self.state = cur = step(prev, act, self.env, self.cfg.dt, self.cfg.vehicle)
        if self.trace is not None:
            self.trace.append(cur, self.fw.mode, self._active)
        verdict = check_safety(detect_collision(prev, cur, self.env, self.cfg.collision_threshold), None, self.fw.mode)
        if verdict is None and self.monitor is not None:
            verdict = self.monitor.observe(cur.timestamp, cur.position, cur.acceleration, self.fw.mode)
        if verdict is not None:
            self.verdict = verdict
            self.status = "violation"
            return False

        fw = self.fw
        if fw.arming_refused:
            self.status = "arming_refused"
        elif fw.mode is Mode.DISARMED and cur.position[2] <= 0.0 and cur.velocity == (0.0, 0.0, 0.0):
            self.status = "disarmed"
        elif self.max_steps is not None and cur.timestamp >= self.max_steps:
            self.status = "timeout"
        return not self.done

    def _compute_next_onset_after(self, now: int) -> Optional[int]:
        later = [t for t in self.interceptor.schedule.values() if t > now]
        return min(later) if later else None

    def _resolve_anchors(self, tr: ModeTransition) -> None:
        n = self.edge_counts.get(tr.edge, 0) + 1
        self.edge_counts[tr.edge] = n
        if not self.anchors:
            return
        keep = []
        for a in self.anchors:
            if a.edge == tr.edge and a.occurrence == n:
                self.interceptor.add(tr.timestamp + a.offset, a.sensor_type, a.instance_id)
            else:
                keep.append(a)
        self.anchors = keep
        self._next_onset = self._compute_next_onset()

    def advance(self) -> bool:
        """One script poll plus one simulation step."""
        if self.done:
            return False
        cmds = self.runner.step(self.fw.telemetry(), self.now)
        alive = self.step(cmds)
        if alive and self.runner.done:
            if self.runner.status is not ScriptStatus.PASSED:
                self.status = "timeout"
            elif self._settled():
                # the mission is over once nothing is moving any more
                self.status = "passed"
            return not self.done
        return alive

    def _settled(self) -> bool:
        s = self.state
        return s.position[2] <= 0.0 and s.velocity == (0.0, 0.0, 0.0)

    def run(self, until: Optional[int] = None) -> Optional[RunResult]:
        """Run to completion, or pause before executing step ``until``."""
        while not self.done:
            if until is not None and self.now >= until:
                return None
            self.advance()
        return self.result()

    def result(self) -> RunResult:
        return RunResult(
            verdict=self.verdict or SAFE,
            status=self.status or "running",
            steps=self.now,
            transitions=list(self.transitions),
            trace=self.trace,
            bug_hits=list(self.fw.bug_hits),
            applied=self.applied(),
            unresolved_anchors=list(self.anchors),
        )

    # -- snapshots -------------------------------------------------------------------------------
    def fork(self) -> "Simulation":
        """Independent copy sharing only immutable inputs."""
        memo = {id(self.script): self.script, id(self.env): self.env, id(self.cfg): self.cfg}
        if self.trace is not None:
            memo[id(self.trace)] = self.trace.copy()
        if self.monitor is not None:
            m = self.monitor
            for shared in (m.profiles, m.c, m.g, m.cfg, m._dist):
                memo[id(shared)] = shared
        memo[id(self.fw.config)] = self.fw.config
        memo[id(self.fw.p)] = self.fw.p
        return copy.deepcopy(self, memo)
