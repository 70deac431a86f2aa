"""Reference control firmware.

A deliberately small autopilot: redundant sensor instances with failover, a
complementary-filter estimator that degrades to single-source modes, mode
logic for takeoff / position hold / waypoint guidance / return-to-launch /
land, correct fail-safes, and a catalog of seeded sensor bugs that can be
switched on one by one.
"""
from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .modes import FAILSAFE_MODES, FLYING_MODES, Mode, ModeTransition, is_legal
from .sim import DEFAULT_INSTANCE_COUNTS, G, Actuation, Environment, SensorReading, SensorType
from .workload import Command, CommandKind, MissionItem, Telemetry


class Role(enum.Enum):
    PRIMARY = "P"
    BACKUP = "B"


class Health(enum.Enum):
    OK = "OK"
    FAILED = "Failed"


class AltitudeSource(enum.Enum):
    IMU_FUSED = "IMU-fused"
    GPS_ONLY = "GPS-only"
    BARO_ONLY = "Baro-only"
    NONE = "None"


class UnknownBugError(KeyError):
    pass


def role_of(instance_id: int) -> Role:
    """Roles are fixed by configuration: instance 0 is the primary."""
    return Role.PRIMARY if instance_id == 0 else Role.BACKUP


@dataclass
class SensorSlot:
    sensor_type: SensorType
    instance_id: int
    role: Role
    health: Health = Health.OK


class SensorBank:
    def __init__(self, counts: Optional[dict] = None):
        counts = DEFAULT_INSTANCE_COUNTS if counts is None else counts
        self.slots: dict[SensorType, list[SensorSlot]] = {
            st: [SensorSlot(st, i, role_of(i)) for i in range(counts.get(st, 0))] for st in SensorType
        }
        self.acting: dict[SensorType, Optional[int]] = {st: (0 if self.slots[st] else None) for st in SensorType}

    def mark_failed(self, st: SensorType, instance_id: int) -> bool:
        slot = self.slots[st][instance_id]
        if slot.health is Health.FAILED:
            return False
        slot.health = Health.FAILED
        return True

    def is_ok(self, st: SensorType, instance_id: int) -> bool:
        return self.slots[st][instance_id].health is Health.OK

    def any_ok(self, st: SensorType) -> bool:
        return any(s.health is Health.OK for s in self.slots[st])


def failover(bank: SensorBank, st: SensorType) -> Optional[int]:
    """Primary if healthy, else the lowest-id healthy backup (promoted for the rest of the run)."""
    slots = bank.slots[st]
    if slots and slots[0].health is Health.OK and bank.acting[st] in (0, None):
        bank.acting[st] = 0
        return 0
    cur = bank.acting[st]
    if cur is not None and slots[cur].health is Health.OK:
        return cur
    for s in slots:
        if s.health is Health.OK:
            bank.acting[st] = s.instance_id
            return s.instance_id
    bank.acting[st] = None
    return None


@dataclass
class Estimate:
    position: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    velocity: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    heading: float = 0.0
    altitude_source: AltitudeSource = AltitudeSource.IMU_FUSED
    horizontal_ok: bool = True
    vertical_ok: bool = True
    heading_ok: bool = True


@dataclass(frozen=True)
class SeededBug:
    id: str
    description: str
    trigger: Callable[["Firmware", list, int], bool]
    effect: Callable[["Firmware", int], Optional[Mode]]


@dataclass(frozen=True)
class FirmwareParams:
    dt: float = 0.01
    cruise_speed: float = 6.0
    climb_rate: float = 3.0
    descent_rate: float = 2.5
    land_speed_high: float = 2.0
    land_speed_low: float = 0.6
    land_slow_altitude: float = 5.0
    max_horizontal_accel: float = 4.0
    max_vertical_accel: float = 5.0
    max_tilt: float = math.radians(35.0)
    position_gain: float = 1.0
    velocity_gain: float = 2.5
    waypoint_radius: float = 1.0
    takeoff_tolerance: float = 0.3
    rtl_altitude: float = 5.0
    rtl_final_altitude: float = 2.0
    landed_steps: int = 30
    gps_altitude_band: float = 1.5
    baro_gain: float = 0.5
    fence_lookahead: float = 5.0
    fence_margin: float = 3.0
    fence_pause_steps: int = 100
    max_thrust_accel: float = 2.0 * G
    # seeded-bug windows, in steps after entering the mode
    takeoff_init_steps: int = 30
    land_init_steps: int = 5
    low_altitude: float = 2.0
    gyro_drift_rate: float = 0.35  # rad/s


@dataclass
class FirmwareConfig:
    counts: dict = field(default_factory=lambda: dict(DEFAULT_INSTANCE_COUNTS))
    bugs: tuple = ()
    params: FirmwareParams = field(default_factory=FirmwareParams)


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def _events_of(events, st: SensorType, instance_id: int) -> bool:
    return (st, instance_id) in events


class Firmware:
    """One vehicle's firmware.  ``tick`` is called once per simulation step."""

    def __init__(self, config: Optional[FirmwareConfig] = None, env: Optional[Environment] = None):
        self.config = config or FirmwareConfig()
        self.p = self.config.params
        self.env = env or Environment()
        self.bank = SensorBank(self.config.counts)
        self.est = Estimate(position=list(self.env.home))
        self.enabled_bugs: list[str] = []
        for bug_id in self.config.bugs:
            self.enable_bug(bug_id)
        self.mode = Mode.PREFLIGHT
        self.mode_entered_at = 0
        self.armed = False
        self.arming_refused = False
        self.mission: tuple[MissionItem, ...] = ()
        self.mission_index = -1
        self.detour: list[tuple[float, float, float]] = []
        self.hold_target = list(self.env.home)
        self.takeoff_target = list(self.env.home)
        self.after_takeoff = Mode.POSITION_HOLD
        self.yaw_cmd = 0.0
        self.yaw_frozen = False
        self.pause_until: Optional[int] = None
        self.landed_count = 0
        self.pending: deque = deque()
        self.transitions: list[ModeTransition] = []
        self.bug_hits: list[tuple[str, int]] = []
        self.flags: dict = {}
        self.battery_failsafe = False
        self.rtl_climbed = False
        self.last_readings: dict = {}
        self.now = 0

    # -- configuration ------------------------------------------------------
    def enable_bug(self, bug_id: str) -> None:
        if bug_id not in BUG_CATALOG:
            raise UnknownBugError(bug_id)
        if bug_id not in self.enabled_bugs:
            self.enabled_bugs.append(bug_id)

    # -- telemetry ----------------------------------------------------------
    def telemetry(self) -> Telemetry:
        landed = self.mode in (Mode.PREFLIGHT, Mode.DISARMED)
        return Telemetry(tuple(self.est.position), self.mode, self.armed, landed)

    @property
    def steps_in_mode(self) -> int:
        return self.now - self.mode_entered_at

    # -- main loop ------------------------------------------------------------
    def tick(self, readings: Sequence[SensorReading], commands: Iterable[Command] = ()) -> tuple[Actuation, list[ModeTransition]]:
        now = readings[0].timestamp if readings else self.now + 1
        self.now = now
        events = self._update_health(readings)
        self._update_estimate()
        self.pending.extend(commands)

        requested: Optional[Mode] = self._failsafe()
        for bug_id in self.enabled_bugs:
            if bug_id in self.flags:
                continue
            bug = BUG_CATALOG[bug_id]
            if bug.trigger(self, events, now):
                self.flags[bug_id] = now
                self.bug_hits.append((bug_id, now))
                forced = bug.effect(self, now)
                if forced is not None:
                    requested = forced
        if requested is None:
            requested = self._commands()
        if requested is None:
            requested = self._mode_logic()

        emitted: list[ModeTransition] = []
        if requested is not None and requested is not self.mode and is_legal(self.mode, requested):
            tr = ModeTransition(self.mode, requested, now + 1)
            self._enter(requested, now + 1)
            self.transitions.append(tr)
            emitted.append(tr)
        return self._control(), emitted

    # -- sensors and estimation --------------------------------------------------
    def _update_health(self, readings: Sequence[SensorReading]) -> list:
        events = []
        last = self.last_readings
        for r in readings:
            key = (r.sensor_type, r.instance_id)
            last[key] = r
            if not r.valid and self.bank.mark_failed(r.sensor_type, r.instance_id):
                events.append(key)
        return events

    def _reading(self, st: SensorType) -> Optional[SensorReading]:
        i = failover(self.bank, st)
        if i is None:
            return None
        return self.last_readings.get((st, i))

    def _update_estimate(self) -> None:
        dt = self.p.dt
        est = self.est
        gps = self._reading(SensorType.GPS)
        baro = self._reading(SensorType.BAROMETER)
        gyro = self._reading(SensorType.GYROSCOPE)
        acc = self._reading(SensorType.ACCELEROMETER)
        compass = self._reading(SensorType.COMPASS)
        imu_ok = gyro is not None and acc is not None

        pos, vel = est.position, est.velocity
        if gps is not None:
            g = gps.value
            pos[0], pos[1] = g[0], g[1]
            vel[0], vel[1], vel[2] = g[3], g[4], g[5]
        else:
            if imu_ok:
                a = acc.value
                vel[0] += a[0] * dt
                vel[1] += a[1] * dt
                vel[2] += (a[2] - G) * dt
            pos[0] += vel[0] * dt
            pos[1] += vel[1] * dt
        est.horizontal_ok = gps is not None
        if "GPS+BATTERY-FLYAWAY" in self.flags:
            # local position judged from the original primary receiver only
            est.horizontal_ok = False

        z_pred = pos[2] + vel[2] * dt
        if "LOW-ALT-IMU-RTL" in self.flags and gps is not None:
            est.altitude_source = AltitudeSource.GPS_ONLY
            pos[2] = gps.value[2] - self.p.gps_altitude_band
        elif baro is not None:
            est.altitude_source = AltitudeSource.IMU_FUSED if imu_ok else AltitudeSource.BARO_ONLY
            z = z_pred + self.p.baro_gain * (baro.value[0] - z_pred)
            if gps is None:
                vel[2] += (z - pos[2]) / dt - vel[2] if not imu_ok else 0.0
            pos[2] = z
        elif gps is not None:
            est.altitude_source = AltitudeSource.GPS_ONLY
            pos[2] = gps.value[2] - self.p.gps_altitude_band
        else:
            est.altitude_source = AltitudeSource.NONE
            pos[2] = z_pred
        est.vertical_ok = est.altitude_source is not AltitudeSource.NONE

        if "STALE-COMPASS-TURN" in self.flags:
            est.heading = self.last_readings[(SensorType.COMPASS, 0)].value[0]
            est.heading_ok = True
        elif compass is not None:
            est.heading = compass.value[0]
            est.heading_ok = True
        else:
            est.heading_ok = False
            self.yaw_frozen = True

    # -- mode management ----------------------------------------------------------
    def _enter(self, mode: Mode, at: int) -> None:
        prev = self.mode
        self.mode = mode
        self.mode_entered_at = at
        self.landed_count = 0
        pos = self.est.position
        if mode is Mode.POSITION_HOLD:
            self.hold_target = [pos[0], pos[1], pos[2]]
        elif mode is Mode.LAND:
            self.hold_target = [pos[0], pos[1], 0.0]
        elif mode is Mode.TAKEOFF:
            self.armed = True
        elif mode is Mode.DISARMED:
            self.armed = False
        elif mode is Mode.RTL:
            self.rtl_climbed = False
        elif mode is Mode.GUIDED and prev is Mode.TAKEOFF and self.mission_index >= 0:
            self.mission_index += 1

    def _failsafe(self) -> Optional[Mode]:
        mode = self.mode
        if mode not in FLYING_MODES:
            return None
        bank = self.bank
        if self.est.altitude_source in (AltitudeSource.NONE, AltitudeSource.GPS_ONLY) and mode not in FAILSAFE_MODES:
            return Mode.LAND
        if not (bank.any_ok(SensorType.GYROSCOPE) and bank.any_ok(SensorType.ACCELEROMETER)):
            if mode is not Mode.LAND:
                return Mode.LAND
        if not bank.any_ok(SensorType.GPS) and mode is not Mode.LAND:
            return Mode.LAND
        if bank.slots[SensorType.BATTERY] and not bank.any_ok(SensorType.BATTERY):
            if mode in (Mode.TAKEOFF, Mode.GUIDED, Mode.POSITION_HOLD):
                self.battery_failsafe = True
                return Mode.RTL
        return None

    def _arming_checks(self) -> bool:
        # every sensor type is required; a type configured with no instances fails too
        ok = all(self.bank.any_ok(st) for st in SensorType)
        if not ok:
            self.arming_refused = True
        return ok

    def _commands(self) -> Optional[Mode]:
        while self.pending:
            cmd = self.pending.popleft()
            k = cmd.kind
            mode = self.mode
            if k is CommandKind.UPLOAD_MISSION:
                self.mission = tuple(cmd.args[0])
                self.mission_index = -1
            elif k is CommandKind.ARM:
                if mode is Mode.PREFLIGHT and self._arming_checks():
                    self.armed = True
            elif k is CommandKind.TAKEOFF:
                if mode is Mode.PREFLIGHT and self._arming_checks():
                    self.armed = True
                    pos = self.est.position
                    self.takeoff_target = [pos[0], pos[1], cmd.args[0]]
                    self.after_takeoff = Mode.POSITION_HOLD
                    return Mode.TAKEOFF
            elif k is CommandKind.REPOSITION:
                if mode is Mode.POSITION_HOLD:
                    self.hold_target = list(cmd.args[0])
            elif k is CommandKind.DISARM:
                if mode is Mode.PREFLIGHT:
                    self.armed = False
            elif k is CommandKind.SET_MODE:
                target = cmd.args[0]
                if target is Mode.GUIDED and mode is Mode.PREFLIGHT:
                    if self.armed and self.mission and self.mission[0].kind == "takeoff":
                        self.mission_index = 0
                        pos = self.est.position
                        self.takeoff_target = [pos[0], pos[1], self.mission[0].altitude]
                        self.after_takeoff = self._next_mission_mode(0)
                        return Mode.TAKEOFF
                elif mode in FLYING_MODES and is_legal(mode, target):
                    return target
        return None

    def _next_mission_mode(self, index: int) -> Mode:
        nxt = index + 1
        if nxt >= len(self.mission) or self.mission[nxt].kind == "land":
            return Mode.LAND
        return Mode.GUIDED

    def _mode_logic(self) -> Optional[Mode]:
        mode = self.mode
        pos = self.est.position
        p = self.p
        if mode is Mode.TAKEOFF:
            alt = pos[2]
            if "BARO-TAKEOFF-FLYAWAY" in self.flags:
                alt = self.last_readings[(SensorType.BAROMETER, 0)].value[0]
            if alt >= self.takeoff_target[2] - p.takeoff_tolerance:
                return self.after_takeoff
        elif mode is Mode.GUIDED:
            return self._guided_logic()
        elif mode is Mode.POSITION_HOLD:
            if self.pause_until is not None and self.now >= self.pause_until:
                self.pause_until = None
                return Mode.GUIDED
        elif mode is Mode.RTL:
            home = self.env.home
            if not self.est.horizontal_ok:
                return None
            if math.hypot(pos[0] - home[0], pos[1] - home[1]) < p.waypoint_radius and pos[2] <= p.rtl_final_altitude + 0.2:
                return Mode.LAND
        elif mode is Mode.LAND:
            if "LOW-ALT-IMU-RTL" in self.flags:
                landed = pos[2] <= 0.0
            else:
                near_ground = pos[2] < 0.5 or self.est.altitude_source is AltitudeSource.NONE
                if near_ground and abs(self.est.velocity[2]) < 0.1 and self.steps_in_mode > 10:
                    self.landed_count += 1
                else:
                    self.landed_count = 0
                landed = self.landed_count >= p.landed_steps
            if landed:
                return Mode.DISARMED
        return None

    def _current_target(self) -> Optional[tuple]:
        if self.detour:
            return self.detour[0]
        if 0 <= self.mission_index < len(self.mission):
            item = self.mission[self.mission_index]
            if item.kind == "waypoint":
                return item.position
        return None

    def _guided_logic(self) -> Optional[Mode]:
        pos = self.est.position
        target = self._current_target()
        if target is None:
            return Mode.LAND
        dx, dy = target[0] - pos[0], target[1] - pos[1]
        dist = math.hypot(dx, dy)
        if dist < self.p.waypoint_radius and abs(target[2] - pos[2]) < 1.0:
            if self.detour:
                self.detour.pop(0)
                return None
            nxt = self._next_mission_mode(self.mission_index)
            self.mission_index += 1
            if nxt is Mode.LAND:
                return Mode.LAND
            return None
        fence = self.env.fence
        if fence is not None and not self.detour and dist > 0:
            look = min(self.p.fence_lookahead, dist)
            ahead = (pos[0] + dx / dist * look, pos[1] + dy / dist * look)
            if fence.segment_hits(pos, ahead):
                self.detour = self._plan_detour(pos, target)
                self.pause_until = self.now + self.p.fence_pause_steps
                return Mode.POSITION_HOLD
        return None

    def _plan_detour(self, pos, target) -> list:
        fence = self.env.fence
        m = self.p.fence_margin
        x0, y0, x1, y1 = fence.bbox()
        corners = [(x0 - m, y0 - m), (x1 + m, y0 - m), (x1 + m, y1 + m), (x0 - m, y1 + m)]
        z = target[2]
        routes = [[c] for c in corners]
        for i in range(4):
            routes.append([corners[i], corners[(i + 1) % 4]])
            routes.append([corners[(i + 1) % 4], corners[i]])
        best = None
        for route in routes:
            pts = [(pos[0], pos[1])] + route + [(target[0], target[1])]
            if any(fence.segment_hits(a, b) for a, b in zip(pts, pts[1:])):
                continue
            length = sum(math.dist(a, b) for a, b in zip(pts, pts[1:]))
            if best is None or length < best[0] - 1e-9:
                best = (length, route)
        if best is None:
            return []
        return [(c[0], c[1], z) for c in best[1]]

    # -- control ------------------------------------------------------------------
    def _control(self) -> Actuation:
        mode = self.mode
        if mode in (Mode.PREFLIGHT, Mode.DISARMED):
            return Actuation(0.0, (0.0, 0.0, self.yaw_cmd))
        p = self.p
        pos, vel = self.est.position, self.est.velocity
        vcmd = [0.0, 0.0, 0.0]
        target_h = None
        if mode is Mode.TAKEOFF:
            target_h = self.takeoff_target
            alt = pos[2]
            if "BARO-TAKEOFF-FLYAWAY" in self.flags:
                alt = self.last_readings[(SensorType.BAROMETER, 0)].value[0]
            vcmd[2] = _clamp(p.position_gain * (self.takeoff_target[2] - alt), -p.descent_rate, p.climb_rate)
        elif mode is Mode.POSITION_HOLD:
            target_h = self.hold_target
            vcmd[2] = _clamp(p.position_gain * (self.hold_target[2] - pos[2]), -p.descent_rate, p.climb_rate)
        elif mode is Mode.GUIDED:
            target = self._current_target() or pos
            target_h = target
            vcmd[2] = _clamp(p.position_gain * (target[2] - pos[2]), -p.descent_rate, p.climb_rate)
            dx, dy = target[0] - pos[0], target[1] - pos[1]
            if math.hypot(dx, dy) > 2.0 and not self.yaw_frozen:
                self.yaw_cmd = math.atan2(dy, dx)
        elif mode is Mode.RTL and not self.est.horizontal_ok:
            # no local position: hold altitude and keep going along the current heading
            psi = self.est.heading
            vcmd = [p.cruise_speed * math.cos(psi), p.cruise_speed * math.sin(psi),
                    _clamp(p.position_gain * (max(pos[2], p.rtl_altitude) - pos[2]), -p.descent_rate, p.climb_rate)]
        elif mode is Mode.RTL:
            home = self.env.home
            if pos[2] < p.rtl_altitude - 0.5 and not self.rtl_climbed:
                target_h = pos
                vcmd[2] = p.climb_rate
            else:
                self.rtl_climbed = True
                target_h = home
                if math.hypot(pos[0] - home[0], pos[1] - home[1]) < p.waypoint_radius * 2:
                    vcmd[2] = _clamp(p.position_gain * (p.rtl_final_altitude - pos[2]), -p.descent_rate, p.climb_rate)
                else:
                    vcmd[2] = _clamp(p.position_gain * (max(pos[2], p.rtl_altitude) - pos[2]), -p.descent_rate, p.climb_rate)
        elif mode is Mode.LAND:
            target_h = self.hold_target if self.est.horizontal_ok else None
            vcmd[2] = -(p.land_speed_high if pos[2] > p.land_slow_altitude else p.land_speed_low)

        if target_h is not None:
            dx, dy = target_h[0] - pos[0], target_h[1] - pos[1]
            vx, vy = p.position_gain * dx, p.position_gain * dy
            s = math.hypot(vx, vy)
            if s > p.cruise_speed:
                vx *= p.cruise_speed / s
                vy *= p.cruise_speed / s
            vcmd[0], vcmd[1] = vx, vy
        ax = _clamp(p.velocity_gain * (vcmd[0] - vel[0]), -p.max_horizontal_accel, p.max_horizontal_accel)
        ay = _clamp(p.velocity_gain * (vcmd[1] - vel[1]), -p.max_horizontal_accel, p.max_horizontal_accel)
        az = _clamp(p.velocity_gain * (vcmd[2] - vel[2]), -p.max_vertical_accel, p.max_vertical_accel)
        return self._actuate(ax, ay, az)

    def _actuate(self, ax: float, ay: float, az: float) -> Actuation:
        p = self.p
        fz = az + G
        if fz < 0.0:
            fz = 0.0
        h = math.hypot(ax, ay)
        hmax = fz * math.tan(p.max_tilt)
        if h > hmax and h > 0:
            ax *= hmax / h
            ay *= hmax / h
        f = math.sqrt(ax * ax + ay * ay + fz * fz)
        thrust = _clamp(f / p.max_thrust_accel, 0.0, 1.0)
        psi = self.est.heading
        cy, sy = math.cos(psi), math.sin(psi)
        pitch = math.atan2(ax * cy + ay * sy, fz) if f > 0 else 0.0
        roll = math.asin(_clamp((ax * sy - ay * cy) / f, -1.0, 1.0)) if f > 0 else 0.0
        if "GYRO-TAKEOFF-CRASH" in self.flags:
            roll += p.gyro_drift_rate * (self.now - self.flags["GYRO-TAKEOFF-CRASH"]) * p.dt
        return Actuation(thrust, (roll, pitch, self.yaw_cmd))


# -- seeded bug catalog ---------------------------------------------------------------

def _imu_primary_event(events) -> bool:
    return (SensorType.GYROSCOPE, 0) in events or (SensorType.ACCELEROMETER, 0) in events


def _low_alt_trigger(fw: Firmware, events, now) -> bool:
    return (
        fw.mode is Mode.LAND
        and fw.steps_in_mode < fw.p.land_init_steps
        and fw.est.position[2] < fw.p.low_altitude
        and _imu_primary_event(events)
    )


def _low_alt_effect(fw: Firmware, now) -> Mode:
    # treats one IMU fault as total IMU loss and hands over to GPS-driven RTL
    return Mode.RTL


def _stale_compass_trigger(fw: Firmware, events, now) -> bool:
    if fw.mode is not Mode.GUIDED or (SensorType.COMPASS, 0) not in events:
        return False
    remaining = [it for it in fw.mission[fw.mission_index:] if it.kind == "waypoint"]
    return len(remaining) >= 2


def _no_transition(fw: Firmware, now) -> None:
    return None


def _gps_battery_trigger(fw: Firmware, events, now) -> bool:
    return (
        fw.battery_failsafe
        and fw.mode is Mode.RTL
        and fw.bank.slots[SensorType.GPS]
        and not fw.bank.is_ok(SensorType.GPS, 0)
        and fw.bank.any_ok(SensorType.GPS)
    )


def _baro_takeoff_trigger(fw: Firmware, events, now) -> bool:
    return (
        fw.mode is Mode.TAKEOFF
        and fw.steps_in_mode < fw.p.takeoff_init_steps
        and (SensorType.BAROMETER, 0) in events
    )


def _gyro_takeoff_trigger(fw: Firmware, events, now) -> bool:
    return (
        fw.mode is Mode.TAKEOFF
        and fw.steps_in_mode < fw.p.takeoff_init_steps
        and (SensorType.GYROSCOPE, 0) in events
    )


BUG_CATALOG: dict[str, SeededBug] = {
    b.id: b
    for b in (
        SeededBug(
            "LOW-ALT-IMU-RTL",
            "IMU fault right after entering Land below 2 m switches to GPS-driven RTL; "
            "GPS altitude cannot resolve the last meters and the vehicle disarms in the air",
            _low_alt_trigger,
            _low_alt_effect,
        ),
        SeededBug(
            "STALE-COMPASS-TURN",
            "primary compass failure between waypoints is not failed over; the stale "
            "heading is used through the following turns",
            _stale_compass_trigger,
            _no_transition,
        ),
        SeededBug(
            "GPS+BATTERY-FLYAWAY",
            "battery fail-safe judges local position from the original primary GPS only; "
            "after that receiver failed it flies the return leg blind along its heading",
            _gps_battery_trigger,
            _no_transition,
        ),
        SeededBug(
            "BARO-TAKEOFF-FLYAWAY",
            "barometer fault during takeoff initialisation leaves the takeoff controller "
            "reading the dead primary; the climb never completes",
            _baro_takeoff_trigger,
            _no_transition,
        ),
        SeededBug(
            "GYRO-TAKEOFF-CRASH",
            "gyro fault during takeoff initialisation corrupts the attitude reference; "
            "roll error grows until lift is lost",
            _gyro_takeoff_trigger,
            _no_transition,
        ),
    )
}
