"""Safety and liveliness checks over simulated flights.

Liveliness compares the test flight with fault-free profiling flights at the
same step.  A state is (position, acceleration, mode); its distance to
another state mixes Euclidean gaps, scaled into mode-graph hops, with the
hop distance between the two modes.  A step is suspicious when the test
state is farther than ``tau`` from every profile at that step, and a
violation needs ``confirm_steps`` suspicious steps in a row outside of a
fail-safe that is visibly making progress.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import networkx as nx
import numpy as np

from .modes import Mode
from .sim import CollisionReport


class ConfigError(ValueError):
    pass


# -- mode graph --------------------------------------------------------------------

class ModeGraph:
    """Directed graph of observed mode changes with cached hop distances."""

    def __init__(self, nodes: Iterable[Mode] = (), edges: Iterable[tuple[Mode, Mode]] = ()):
        g = nx.DiGraph()
        g.add_nodes_from(nodes)
        g.add_edges_from(edges)
        self.graph = g
        self._hops = {a: dict(d) for a, d in nx.all_pairs_shortest_path_length(g)}
        finite = [h for d in self._hops.values() for h in d.values()]
        self.diameter = max(1, max(finite, default=0))

    @property
    def nodes(self) -> set:
        return set(self.graph.nodes)

    @property
    def edges(self) -> set:
        return set(self.graph.edges)

    def hops(self, a: Mode, b: Mode) -> Optional[int]:
        return self._hops.get(a, {}).get(b)

    def distance(self, a: Mode, b: Mode) -> int:
        if a is b:
            return 0
        d1, d2 = self.hops(a, b), self.hops(b, a)
        if d1 is None and d2 is None:
            return self.diameter
        return min(d for d in (d1, d2) if d is not None)

    def distance_table(self) -> dict:
        return {(a, b): self.distance(a, b) for a in Mode for b in Mode}


def build_mode_graph(traces: Iterable) -> ModeGraph:
    """Accepts traces (anything with a ``modes`` sequence) or plain mode sequences."""
    nodes, edges = set(), set()
    for tr in traces:
        modes = tr.modes if hasattr(tr, "modes") else tr
        prev = None
        for m in modes:
            nodes.add(m)
            if prev is not None and m is not prev:
                edges.add((prev, m))
            prev = m
    return ModeGraph(nodes, edges)


def mode_distance(g: ModeGraph, m1: Mode, m2: Mode) -> int:
    return g.distance(m1, m2)


# -- constants ----------------------------------------------------------------------

@dataclass(frozen=True)
class MonitorConfig:
    position_floor: float = 0.1
    accel_floor: float = 0.1
    tau_floor: float = 0.5
    clamp_factor: float = 3.0
    confirm_steps: int = 10
    progress_window_s: float = 2.0
    progress_min: float = 0.5
    landed_altitude: float = 0.05
    safe_modes: tuple = (Mode.RTL, Mode.LAND, Mode.PREFLIGHT)


@dataclass(frozen=True)
class NormalizationConstants:
    P: float
    A: float
    D: int
    tau: float
    T: int
    N: int
    raw_P: float = 0.0
    raw_A: float = 0.0
    raw_tau: float = 0.0
    clamp_factor: float = 3.0

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in ("P", "A", "D", "tau", "T", "N", "raw_P", "raw_A", "raw_tau", "clamp_factor")}


def pad(arr: np.ndarray, T: int) -> np.ndarray:
    """Repeat the last row until the array has ``T`` rows."""
    if len(arr) >= T:
        return arr[:T]
    return np.concatenate([arr, np.repeat(arr[-1:], T - len(arr), axis=0)])


def pad_modes(modes: Sequence[Mode], T: int) -> list:
    modes = list(modes)
    return modes[:T] + [modes[-1]] * max(0, T - len(modes))


def _norm_rows(d: np.ndarray) -> np.ndarray:
    # same operation order as the per-step scalar code, so results agree bit for bit
    return np.sqrt(d[..., 0] * d[..., 0] + d[..., 1] * d[..., 1] + d[..., 2] * d[..., 2])


def _mode_index_table(g: ModeGraph) -> tuple[dict, np.ndarray]:
    idx = {m: i for i, m in enumerate(Mode)}
    tab = np.zeros((len(idx), len(idx)))
    for a, i in idx.items():
        for b, j in idx.items():
            tab[i, j] = g.distance(a, b)
    return idx, tab


def _component_scale(raw: np.ndarray, limit: float, scale: float, D: int) -> np.ndarray:
    return np.minimum(raw, limit) * (D / scale)


def compute_constants(traces: Sequence, graph: Optional[ModeGraph] = None, config: MonitorConfig = MonitorConfig()) -> NormalizationConstants:
    """Normalisation constants and threshold from N >= 2 profiling traces."""
    N = len(traces)
    if N < 2:
        raise ConfigError("need at least two profiling traces")
    g = graph or build_mode_graph(traces)
    T = max(len(tr) for tr in traces)
    P = np.stack([pad(tr.positions, T) for tr in traces])
    A = np.stack([pad(tr.accelerations, T) for tr in traces])
    idx, tab = _mode_index_table(g)
    M = np.array([[idx[m] for m in pad_modes(tr.modes, T)] for tr in traces])
    raw_P = raw_A = 0.0
    pairs = [(i, j) for i in range(N) for j in range(i + 1, N)]
    for i, j in pairs:
        raw_P = max(raw_P, float(_norm_rows(P[i] - P[j]).max()))
        raw_A = max(raw_A, float(_norm_rows(A[i] - A[j]).max()))
    cP = max(raw_P, config.position_floor)
    cA = max(raw_A, config.accel_floor)
    D = g.diameter
    raw_tau = 0.0
    for i, j in pairs:
        dP = _component_scale(_norm_rows(P[i] - P[j]), config.clamp_factor * cP, cP, D)
        dA = _component_scale(_norm_rows(A[i] - A[j]), config.clamp_factor * cA, cA, D)
        dM = tab[M[i], M[j]]
        raw_tau = max(raw_tau, float(np.sqrt(dP * dP + dA * dA + dM * dM).max()))
    return NormalizationConstants(cP, cA, D, max(raw_tau, config.tau_floor), T, N, raw_P, raw_A, raw_tau, config.clamp_factor)


def state_distance(s1, s2, c: NormalizationConstants, g: ModeGraph) -> float:
    """Distance between two (position, acceleration, mode) states."""
    (p1, a1, m1), (p2, a2, m2) = s1, s2
    dx, dy, dz = p1[0] - p2[0], p1[1] - p2[1], p1[2] - p2[2]
    de = math.sqrt(dx * dx + dy * dy + dz * dz)
    dP = min(de, c.clamp_factor * c.P) * (c.D / c.P)
    dx, dy, dz = a1[0] - a2[0], a1[1] - a2[1], a1[2] - a2[2]
    de = math.sqrt(dx * dx + dy * dy + dz * dz)
    dA = min(de, c.clamp_factor * c.A) * (c.D / c.A)
    dM = g.distance(m1, m2)
    return math.sqrt(dP * dP + dA * dA + dM * dM)


# -- verdicts --------------------------------------------------------------------------

class VerdictKind(enum.Enum):
    SAFE = "Safe"
    SAFETY = "SafetyViolation"
    LIVELINESS = "LivelinessViolation"


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    at: Optional[int] = None
    cause: str = ""
    mode: Optional[Mode] = None
    evidence: dict = field(default_factory=dict, compare=False)

    @property
    def unsafe(self) -> bool:
        return self.kind is not VerdictKind.SAFE

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "at": self.at,
            "cause": self.cause,
            "mode": None if self.mode is None else self.mode.value,
            "evidence": self.evidence,
        }

    @classmethod
    def from_json(cls, rec: dict) -> "Verdict":
        mode = rec.get("mode")
        return cls(VerdictKind(rec["kind"]), rec.get("at"), rec.get("cause", ""), None if mode is None else Mode.parse(mode), rec.get("evidence", {}))


SAFE = Verdict(VerdictKind.SAFE)


def check_safety(collision: Optional[CollisionReport], crash: Optional[str], mode: Optional[Mode] = None, at: Optional[int] = None) -> Optional[Verdict]:
    if crash is not None:
        return Verdict(VerdictKind.SAFETY, at, "crash", mode, {"error": crash})
    if collision is not None:
        return Verdict(VerdictKind.SAFETY, collision.timestamp, "collision", mode,
                       {"object": collision.obj, "impact_speed": float("%.9g" % collision.impact_speed)})
    return None


def check_liveliness(distances: Sequence[float], tau: float) -> bool:
    """Divergence condition: farther than ``tau`` from every profile."""
    return all(d > tau for d in distances)


# -- incremental monitor ---------------------------------------------------------------

@dataclass
class ProfileSet:
    """Profiling flights padded to a common length, kept as plain tuples for the per-step loop."""

    positions: list
    accelerations: list
    modes: list
    T: int

    @classmethod
    def from_traces(cls, traces: Sequence) -> "ProfileSet":
        T = max(len(tr) for tr in traces)
        pos = [[tuple(map(float, r)) for r in pad(tr.positions, T)] for tr in traces]
        acc = [[tuple(map(float, r)) for r in pad(tr.accelerations, T)] for tr in traces]
        modes = [pad_modes(tr.modes, T) for tr in traces]
        return cls(pos, acc, modes, T)

    def __len__(self) -> int:
        return len(self.positions)


class ProgressTracker:
    """Fail-safe progress obligations, fed one step at a time."""

    def __init__(self, home, dt: float, config: MonitorConfig):
        self.home = home
        self.window = max(1, int(round(config.progress_window_s / dt)))
        self.cfg = config
        self.mode: Optional[Mode] = None
        self.hist: list = []

    def update(self, mode: Mode, pos) -> bool:
        """True if ``mode`` is a safe mode currently meeting its obligation."""
        cfg = self.cfg
        if mode is not self.mode:
            self.mode = mode
            self.hist = []
        hd = math.hypot(pos[0] - self.home[0], pos[1] - self.home[1])
        self.hist.append((hd, pos[2]))
        landed = pos[2] <= cfg.landed_altitude
        if mode is Mode.DISARMED:
            return landed
        if mode not in cfg.safe_modes:
            return False
        if mode is Mode.PREFLIGHT:
            return landed
        if landed:
            return True
        if len(self.hist) <= self.window:
            return True
        recent = self.hist[-1 - self.window:]
        if mode is Mode.LAND:
            # measured from the highest point, so coasting upward on entry is forgiven once it turns
            return max(z for _, z in recent) - pos[2] >= cfg.progress_min
        # return-to-launch: close on home relative to the farthest point of the window,
        # or be in a vertical leg (the climb before the return, the descent once overhead)
        if max(h for h, _ in recent) - hd >= cfg.progress_min:
            return True
        return max(abs(z - pos[2]) for _, z in recent) >= cfg.progress_min


class LivelinessMonitor:
    def __init__(self, profiles: ProfileSet, constants: NormalizationConstants, graph: ModeGraph, home=(0.0, 0.0, 0.0),
                 dt: float = 0.01, config: MonitorConfig = MonitorConfig(), record: bool = False):
        self.profiles = profiles
        self.c = constants
        self.g = graph
        self.cfg = config
        self.progress = ProgressTracker(home, dt, config)
        self.streak = 0
        self.record = record
        self.distances: list = []
        self.flags: list = []
        self._dist = graph.distance_table()
        c = constants
        self._kP = c.D / c.P
        self._kA = c.D / c.A
        self._limP = c.clamp_factor * c.P
        self._limA = c.clamp_factor * c.A

    def observe(self, t: int, pos, acc, mode: Mode) -> Optional[Verdict]:
        ps = self.profiles
        k = t if t < ps.T else ps.T - 1
        tau = self.c.tau
        dist = self._dist
        kP, kA, limP, limA = self._kP, self._kA, self._limP, self._limA
        diverged = True
        ds = []
        for i in range(len(ps)):
            q = ps.positions[i][k]
            dx, dy, dz = pos[0] - q[0], pos[1] - q[1], pos[2] - q[2]
            de = math.sqrt(dx * dx + dy * dy + dz * dz)
            dP = (de if de < limP else limP) * kP
            q = ps.accelerations[i][k]
            dx, dy, dz = acc[0] - q[0], acc[1] - q[1], acc[2] - q[2]
            de = math.sqrt(dx * dx + dy * dy + dz * dz)
            dA = (de if de < limA else limA) * kA
            dM = dist[(mode, ps.modes[i][k])]
            d = math.sqrt(dP * dP + dA * dA + dM * dM)
            ds.append(d)
            if d <= tau:
                diverged = False
                if not self.record:
                    break
        exempt = self.progress.update(mode, pos)
        flagged = diverged and not exempt
        if self.record:
            self.distances.append(tuple(ds))
            self.flags.append(flagged)
        self.streak = self.streak + 1 if flagged else 0
        if self.streak >= self.cfg.confirm_steps:
            return Verdict(VerdictKind.LIVELINESS, t, "liveliness", mode,
                           {"min_distance": float("%.9g" % min(ds)), "tau": float("%.9g" % tau)})
        return None


def brute_force_liveliness(trace, profiles: Sequence, constants: NormalizationConstants, graph: ModeGraph,
                           home=(0.0, 0.0, 0.0), dt: float = 0.01, config: MonitorConfig = MonitorConfig()):
    """Whole-trace recomputation of distances and the confirmed-violation step.

    Returns ``(distances, flags, violation_step)``, with ``distances`` an
    array of shape (len(trace), N).
    """
    c = constants
    T = c.T
    n = len(trace)
    idx = np.minimum(np.arange(trace.start, trace.start + n), T - 1)
    P = np.stack([pad(p.positions, T)[idx] for p in profiles])
    A = np.stack([pad(p.accelerations, T)[idx] for p in profiles])
    midx, tab = _mode_index_table(graph)
    M = np.array([[midx[m] for m in pad_modes(p.modes, T)] for p in profiles])[:, idx]
    tm = np.array([midx[m] for m in trace.modes])
    dP = np.minimum(_norm_rows(trace.positions[None] - P), c.clamp_factor * c.P) * (c.D / c.P)
    dA = np.minimum(_norm_rows(trace.accelerations[None] - A), c.clamp_factor * c.A) * (c.D / c.A)
    dM = tab[tm[None, :], M]
    dist = np.sqrt(dP * dP + dA * dA + dM * dM).T
    diverged = (dist > c.tau).all(axis=1)

    tracker = ProgressTracker(home, dt, config)
    exempt = np.array([tracker.update(m, p) for m, p in zip(trace.modes, trace.positions.tolist())], dtype=bool)
    flags = diverged & ~exempt
    streak, at = 0, None
    for k, f in enumerate(flags):
        streak = streak + 1 if f else 0
        if streak >= config.confirm_steps:
            at = trace.start + k
            break
    return dist, flags, at
