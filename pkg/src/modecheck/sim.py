"""Fixed-step point-mass quadcopter simulator.

Frame convention: x north, y east, z up (altitude above the ground plane).
The ground is the plane z = 0.  Vectors are plain 3-tuples of floats so that
one simulation step stays cheap; a campaign runs hundreds of thousands of them.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

G = 9.81

Vec3 = tuple[float, float, float]


class SimulationFault(RuntimeError):
    """Non-finite state or actuation; a defect of the run, not a vehicle crash."""


class SensorType(enum.IntEnum):
    # declaration order is the canonical enumeration order used by the search
    GPS = 0
    BAROMETER = 1
    GYROSCOPE = 2
    ACCELEROMETER = 3
    COMPASS = 4
    BATTERY = 5

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def parse(cls, text: str) -> "SensorType":
        key = text.strip().lower()
        for st, name in _LABELS.items():
            if key in (name, st.name.lower()):
                return st
        raise ValueError(f"unknown sensor type {text!r}")


_LABELS = {
    SensorType.GPS: "gps",
    SensorType.BAROMETER: "baro",
    SensorType.GYROSCOPE: "gyro",
    SensorType.ACCELEROMETER: "accel",
    SensorType.COMPASS: "compass",
    SensorType.BATTERY: "battery",
}

DEFAULT_INSTANCE_COUNTS = {
    SensorType.GPS: 2,
    SensorType.BAROMETER: 2,
    SensorType.GYROSCOPE: 2,
    SensorType.ACCELEROMETER: 2,
    SensorType.COMPASS: 3,
    SensorType.BATTERY: 1,
}


@dataclass(frozen=True, slots=True)
class PhysicalState:
    position: Vec3 = (0.0, 0.0, 0.0)
    velocity: Vec3 = (0.0, 0.0, 0.0)
    acceleration: Vec3 = (0.0, 0.0, 0.0)
    attitude: Vec3 = (0.0, 0.0, 0.0)  # roll, pitch, yaw [rad]
    timestamp: int = 0
    body_rates: Vec3 = (0.0, 0.0, 0.0)

    @classmethod
    def at_rest(cls, position: Sequence[float] = (0.0, 0.0, 0.0)) -> "PhysicalState":
        return cls(position=tuple(float(v) for v in position))


@dataclass(frozen=True, slots=True)
class Actuation:
    thrust: float
    attitude_command: Vec3 = (0.0, 0.0, 0.0)

    def check(self) -> None:
        if not (0.0 <= self.thrust <= 1.0) or not all(map(math.isfinite, self.attitude_command)):
            raise SimulationFault(f"invalid actuation {self!r}")


@dataclass(frozen=True)
class Box:
    """Axis-aligned obstacle, closed on all faces."""

    lo: Vec3
    hi: Vec3
    name: str = "box"

    def contains(self, p: Sequence[float]) -> bool:
        return all(self.lo[i] <= p[i] <= self.hi[i] for i in range(3))

    def surface_point(self, p: Sequence[float]) -> Vec3:
        # move p onto the nearest face
        best = None
        for i in range(3):
            for bound in (self.lo[i], self.hi[i]):
                gap = abs(p[i] - bound)
                if best is None or gap < best[0]:
                    best = (gap, i, bound)
        q = list(p)
        q[best[1]] = best[2]
        return (q[0], q[1], q[2])


def point_in_polygon(x: float, y: float, poly: Sequence[tuple[float, float]]) -> bool:
    inside = False
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < xc:
                inside = not inside
    return inside


def segments_intersect(a, b, c, d) -> bool:
    def orient(p, q, r):
        v = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
        return (v > 0) - (v < 0)

    def on_seg(p, q, r):
        return min(p[0], r[0]) <= q[0] <= max(p[0], r[0]) and min(p[1], r[1]) <= q[1] <= max(p[1], r[1])

    o1, o2, o3, o4 = orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and on_seg(a, c, b):
        return True
    if o2 == 0 and on_seg(a, d, b):
        return True
    if o3 == 0 and on_seg(c, a, d):
        return True
    if o4 == 0 and on_seg(c, b, d):
        return True
    return False


@dataclass(frozen=True)
class Fence:
    """Exclusion zone: a horizontal polygon the vehicle must stay out of, plus an altitude ceiling."""

    polygon: tuple[tuple[float, float], ...]
    max_altitude: float = 120.0

    def __post_init__(self):
        poly = tuple((float(x), float(y)) for x, y in self.polygon)
        object.__setattr__(self, "polygon", poly)
        if len(poly) < 3:
            raise ValueError("fence polygon needs at least 3 vertices")
        n = len(poly)
        for i in range(n):
            for j in range(i + 1, n):
                if j == i + 1 or (i == 0 and j == n - 1):
                    continue
                if segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]):
                    raise ValueError("fence polygon is self-intersecting")

    def breached(self, p: Sequence[float]) -> bool:
        return p[2] > self.max_altitude or point_in_polygon(p[0], p[1], self.polygon)

    def segment_hits(self, a: Sequence[float], b: Sequence[float]) -> bool:
        if point_in_polygon(b[0], b[1], self.polygon):
            return True
        poly = self.polygon
        n = len(poly)
        return any(segments_intersect(a, b, poly[i], poly[(i + 1) % n]) for i in range(n))

    def bbox(self) -> tuple[float, float, float, float]:
        xs = [p[0] for p in self.polygon]
        ys = [p[1] for p in self.polygon]
        return min(xs), min(ys), max(xs), max(ys)


@dataclass(frozen=True)
class Environment:
    home: Vec3 = (0.0, 0.0, 0.0)
    obstacles: tuple[Box, ...] = ()
    fence: Optional[Fence] = None

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        for box in self.obstacles:
            if box.contains(self.home):
                raise ValueError(f"home {self.home} lies inside obstacle {box.name!r}")


@dataclass(frozen=True)
class VehicleParams:
    max_thrust_accel: float = 2.0 * G
    max_horizontal_speed: float = 15.0
    max_vertical_speed: float = 10.0
    max_yaw_rate: float = math.pi / 2.0


@dataclass(frozen=True)
class SensorConfig:
    counts: dict = field(default_factory=lambda: dict(DEFAULT_INSTANCE_COUNTS))
    sigma_gps: float = 0.0
    sigma_baro: float = 0.0
    sigma_gyro: float = 0.0
    sigma_accel: float = 0.0
    sigma_compass: float = 0.0
    sigma_battery: float = 0.0
    battery_full: float = 16.8
    battery_drain_per_s: float = 0.01

    def __post_init__(self):
        sig = {
            SensorType.GPS: self.sigma_gps,
            SensorType.BAROMETER: self.sigma_baro,
            SensorType.GYROSCOPE: self.sigma_gyro,
            SensorType.ACCELEROMETER: self.sigma_accel,
            SensorType.COMPASS: self.sigma_compass,
            SensorType.BATTERY: self.sigma_battery,
        }
        # (type, instance count, sigma) for every configured type, in enumeration order
        plan = tuple((st, self.counts.get(st, 0), sig[st]) for st in SensorType if self.counts.get(st, 0))
        object.__setattr__(self, "_plan", plan)

    def sigma(self, st: SensorType) -> float:
        for t, _, s in self._plan:
            if t is st:
                return s
        return 0.0

    @property
    def noiseless(self) -> bool:
        return not any(s > 0 for _, _, s in self._plan)

    def instances(self) -> list[tuple[SensorType, int]]:
        return [(st, i) for st in SensorType for i in range(self.counts.get(st, 0))]


@dataclass(slots=True)
class SensorReading:
    sensor_type: SensorType
    instance_id: int
    value: tuple
    valid: bool = True
    timestamp: int = 0


@dataclass(frozen=True)
class CollisionReport:
    obj: str
    impact_speed: float
    timestamp: int


def _wrap(a: float) -> float:
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def _finite(*vecs) -> bool:
    isf = math.isfinite
    for vec in vecs:
        if not (isf(vec[0]) and isf(vec[1]) and isf(vec[2])):
            return False
    return True


def step(
    state: PhysicalState,
    act: Actuation,
    env: Environment,
    dt: float,
    params: VehicleParams = VehicleParams(),
) -> PhysicalState:
    """Advance the vehicle by one fixed step.

    Roll and pitch follow the command immediately; yaw slews at a bounded
    rate.  Thrust acts along the body z axis, gravity along -z.  Velocity is
    clamped per axis group, then integrated semi-implicitly.
    """
    if dt <= 0:
        raise SimulationFault("dt must be positive")
    act.check()
    if not _finite(state.position, state.velocity, state.attitude):
        raise SimulationFault(f"non-finite state at step {state.timestamp}")

    roll, pitch, yaw_cmd = act.attitude_command
    yaw0 = state.attitude[2]
    max_dyaw = params.max_yaw_rate * dt
    dyaw = _wrap(yaw_cmd - yaw0)
    if dyaw > max_dyaw:
        dyaw = max_dyaw
    elif dyaw < -max_dyaw:
        dyaw = -max_dyaw
    yaw = _wrap(yaw0 + dyaw)

    f = act.thrust * params.max_thrust_accel
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    ax = f * (cy * sp * cr + sy * sr)
    ay = f * (sy * sp * cr - cy * sr)
    az = f * cp * cr - G

    vx0, vy0, vz0 = state.velocity
    vx = vx0 + ax * dt
    vy = vy0 + ay * dt
    vz = vz0 + az * dt
    vh = math.hypot(vx, vy)
    if vh > params.max_horizontal_speed:
        k = params.max_horizontal_speed / vh
        vx *= k
        vy *= k
    if vz > params.max_vertical_speed:
        vz = params.max_vertical_speed
    elif vz < -params.max_vertical_speed:
        vz = -params.max_vertical_speed

    px, py, pz = state.position
    px += vx * dt
    py += vy * dt
    pz += vz * dt
    if pz <= 0.0:
        pz = 0.0
        if vz <= 0.0:
            # resting on the ground: no sinking, no sliding
            vx = vy = vz = 0.0
    pos = (px, py, pz)
    for box in env.obstacles:
        if box.contains(pos):
            pos = box.surface_point(pos)
            vx = vy = vz = 0.0
            break

    vel = (vx, vy, vz)
    acc = ((vx - vx0) / dt, (vy - vy0) / dt, (vz - vz0) / dt)
    att = (roll, pitch, yaw)
    rates = (
        (roll - state.attitude[0]) / dt,
        (pitch - state.attitude[1]) / dt,
        dyaw / dt,
    )
    out = PhysicalState(pos, vel, acc, att, state.timestamp + 1, rates)
    if not _finite(pos, vel, acc):
        raise SimulationFault(f"non-finite state at step {out.timestamp}")
    return out


def _clean_value(st: SensorType, state: PhysicalState, cfg: SensorConfig, dt: float) -> tuple:
    if st is SensorType.GPS:
        return state.position + state.velocity
    if st is SensorType.BAROMETER:
        return (state.position[2],)
    if st is SensorType.GYROSCOPE:
        return state.body_rates
    if st is SensorType.ACCELEROMETER:
        a = state.acceleration
        return (a[0], a[1], a[2] + G)
    if st is SensorType.COMPASS:
        return (state.attitude[2],)
    return (cfg.battery_full - cfg.battery_drain_per_s * state.timestamp * dt,)


def noise_vector(noise_seed: int, timestamp: int, st: SensorType, instance: int, n: int) -> np.ndarray:
    """Standard-normal draws that depend only on (seed, timestamp, sensor instance)."""
    rng = np.random.default_rng([noise_seed, timestamp, int(st), instance])
    return rng.standard_normal(n)


def sense(
    state: PhysicalState,
    noise_seed: int = 0,
    config: SensorConfig = SensorConfig(),
    dt: float = 0.01,
) -> list[SensorReading]:
    """One reading per configured sensor instance."""
    out = []
    ts = state.timestamp
    for st, n, sigma in config._plan:
        clean = _clean_value(st, state, config, dt)
        for i in range(n):
            if sigma > 0.0:
                eps = noise_vector(noise_seed, ts, st, i, len(clean))
                value = tuple(float(c + sigma * e) for c, e in zip(clean, eps))
            else:
                value = clean
            out.append(SensorReading(st, i, value, True, ts))
    return out


def detect_collision(
    prev: PhysicalState,
    cur: PhysicalState,
    env: Environment,
    threshold: float = 2.0,
) -> Optional[CollisionReport]:
    """Report an impact: a velocity jump above ``threshold`` within one step while touching something."""
    dv = math.dist(cur.velocity, prev.velocity)
    if dv <= threshold:
        return None
    if cur.position[2] <= 0.0:
        return CollisionReport("ground", dv, cur.timestamp)
    for box in env.obstacles:
        if box.contains(cur.position):
            return CollisionReport(box.name, dv, cur.timestamp)
    return None
