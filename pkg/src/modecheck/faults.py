"""Fault scenarios, read interception and the search strategies that order them.

Every strategy exposes the same two calls: ``next()`` hands out the next
scenario to simulate (``None`` once its space is exhausted) and
``record(scenario, outcome)`` feeds the simulation result back.  Only SABRE
actually uses the feedback; the baselines ignore it.
"""
from __future__ import annotations

import itertools
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

from .firmware import Role, role_of
from .sim import SensorReading, SensorType

Instance = tuple[SensorType, int]


@dataclass(frozen=True, order=True)
class Injection:
    step: int
    sensor_type: SensorType
    instance_id: int

    @property
    def instance(self) -> Instance:
        return (self.sensor_type, self.instance_id)

    def to_json(self) -> list:
        return [self.step, self.sensor_type.label, self.instance_id]

    @classmethod
    def from_json(cls, rec: Sequence) -> "Injection":
        return cls(int(rec[0]), SensorType.parse(rec[1]), int(rec[2]))


@dataclass(frozen=True)
class FaultScenario:
    """A set of (step, sensor instance) failure onsets; at most one per instance."""

    injections: tuple[Injection, ...] = ()
    provenance: Optional[tuple] = field(default=None, compare=False, hash=False)

    def __post_init__(self):
        inj = tuple(sorted(set(self.injections)))
        seen = set()
        for i in inj:
            if i.instance in seen:
                raise ValueError(f"instance {i.sensor_type.label}#{i.instance_id} injected twice")
            seen.add(i.instance)
        object.__setattr__(self, "injections", inj)

    @classmethod
    def of(cls, *items: tuple, provenance=None) -> "FaultScenario":
        return cls(tuple(Injection(t, st, i) for t, st, i in items), provenance)

    def __len__(self) -> int:
        return len(self.injections)

    def __bool__(self) -> bool:
        return bool(self.injections)

    @property
    def newest_step(self) -> Optional[int]:
        return self.injections[-1].step if self.injections else None

    @property
    def earliest_step(self) -> Optional[int]:
        return self.injections[0].step if self.injections else None

    def instances(self) -> frozenset:
        return frozenset(i.instance for i in self.injections)

    def schedule(self) -> dict:
        return {i.instance: i.step for i in self.injections}

    def with_failures(self, step: int, failure_set: Iterable[Instance], provenance=None) -> "FaultScenario":
        added = tuple(Injection(step, st, i) for st, i in failure_set)
        return FaultScenario(self.injections + added, provenance)

    def issubset(self, other: "FaultScenario") -> bool:
        return set(self.injections) <= set(other.injections)

    def key(self, symmetric: bool = False) -> tuple:
        if symmetric:
            return symmetry_signature(self.injections)
        return tuple((i.step, int(i.sensor_type), i.instance_id) for i in self.injections)

    def to_json(self) -> list:
        return [i.to_json() for i in self.injections]

    @classmethod
    def from_json(cls, recs: Sequence) -> "FaultScenario":
        return cls(tuple(Injection.from_json(r) for r in recs))


def symmetry_signature(injections: Iterable) -> tuple:
    """Canonical form under sensor-instance symmetry: sorted (step, type, role) triples.

    Accepts ``Injection`` objects or bare ``(sensor_type, instance_id)`` pairs
    (the latter are treated as simultaneous).
    """
    out = []
    for item in injections:
        if isinstance(item, Injection):
            step, st, inst = item.step, item.sensor_type, item.instance_id
        else:
            step, (st, inst) = 0, item
        out.append((step, int(st), role_of(inst).value))
    out.sort()
    return tuple(out)


def unpruned_scenario_bound(n_instances: int) -> int:
    return n_instances * (2 ** n_instances - 1)


def symmetric_scenario_count(n_instances: int) -> int:
    return 2 * n_instances - 1


# -- read interception ---------------------------------------------------------

def intercept_read(reading: SensorReading, scenario: FaultScenario | dict, now: int, last_good: Optional[dict] = None) -> SensorReading:
    """Fail the read if its instance has an injection at or before ``now``.

    A failed read carries the last good value (from ``last_good`` when given,
    else the incoming value) and ``valid=False``.
    """
    sched = scenario if isinstance(scenario, dict) else scenario.schedule()
    key = (reading.sensor_type, reading.instance_id)
    t = sched.get(key)
    if t is None or now < t:
        if last_good is not None:
            last_good[key] = reading.value
        return reading
    frozen = reading.value if last_good is None else last_good.setdefault(key, reading.value)
    return SensorReading(reading.sensor_type, reading.instance_id, frozen, False, reading.timestamp)


class Interceptor:
    """Per-simulation fault schedule applied to every sensor read."""

    def __init__(self, scenario: Optional[FaultScenario] = None):
        self.schedule: dict = {}
        self.last_good: dict = {}
        if scenario is not None:
            self.schedule.update(scenario.schedule())

    def add(self, step: int, st: SensorType, instance_id: int) -> None:
        self.schedule.setdefault((st, instance_id), step)

    def active(self, now: int) -> tuple:
        return tuple(sorted((int(st), i) for (st, i), t in self.schedule.items() if t <= now))

    def apply(self, readings: list, now: int) -> list:
        sched = self.schedule
        last = self.last_good
        if not sched:
            # keep last-good values current; injections may be added mid-run
            for r in readings:
                last[(r.sensor_type, r.instance_id)] = r.value
            return readings
        out = []
        for r in readings:
            key = (r.sensor_type, r.instance_id)
            t = sched.get(key)
            if t is None or now < t:
                last[key] = r.value
                out.append(r)
            else:
                out.append(SensorReading(r.sensor_type, r.instance_id, last.setdefault(key, r.value), False, r.timestamp))
        return out


# -- pruning -----------------------------------------------------------------------

def found_bug_prunable(t: int, failure_set: Iterable[Instance], seen_bugs: Iterable[FaultScenario], injected: FaultScenario) -> bool:
    candidate = set(injected.injections) | {Injection(t, st, i) for st, i in failure_set}
    for bug in seen_bugs:
        b = set(bug.injections)
        if bug.newest_step == t and b < candidate:
            return True
    return False


def can_prune(
    t: int,
    failure_set: Iterable[Instance],
    seen_bugs: Iterable[FaultScenario],
    injected: FaultScenario,
    tested: Optional[set] = None,
    symmetry: bool = True,
    found_bug: bool = True,
) -> bool:
    failure_set = tuple(failure_set)
    if found_bug and found_bug_prunable(t, failure_set, seen_bugs, injected):
        return True
    if symmetry and tested is not None:
        return injected.with_failures(t, failure_set).key(symmetric=True) in tested
    return False


# -- search strategies --------------------------------------------------------------

@dataclass
class Outcome:
    unsafe: bool
    transitions: tuple = ()  # timestamps of mode transitions observed in the run


def ordered_subsets(instances: Sequence[Instance], max_size: Optional[int] = None) -> Iterator[tuple]:
    """Non-empty subsets by ascending size, then lexicographic (type, instance) order."""
    pool = sorted(instances, key=lambda x: (int(x[0]), x[1]))
    top = len(pool) if max_size is None else min(max_size, len(pool))
    for k in range(1, top + 1):
        yield from itertools.combinations(pool, k)


class Strategy:
    name = "base"

    def __init__(self, instances: Sequence[Instance], horizon: Sequence[int], max_failure_set_size: Optional[int] = 1):
        self.instances = tuple(sorted(instances, key=lambda x: (int(x[0]), x[1])))
        self.horizon = range(horizon.start, horizon.stop) if isinstance(horizon, range) else range(min(horizon), max(horizon) + 1)
        self.max_size = max_failure_set_size
        self.explored: set = set()
        self.duplicates = 0

    def _fresh(self, scenario: FaultScenario, symmetric: bool = False) -> bool:
        key = scenario.key(symmetric)
        if key in self.explored:
            self.duplicates += 1
            return False
        self.explored.add(key)
        return True

    def next(self) -> Optional[FaultScenario]:
        raise NotImplementedError

    def record(self, scenario: FaultScenario, outcome: Outcome) -> None:
        pass

    def __iter__(self):
        while True:
            s = self.next()
            if s is None:
                return
            yield s


class Sabre(Strategy):
    """Stratified breadth-first search seeded with profiled mode transitions.

    Queue entries are ``(step, injected, limit)``; an entry drifts forward one
    step at a time after its batch, up to (not including) ``limit``, which is
    the next transition of the run that produced it.  ``unbounded_drift``
    lets every entry drift to the end of the horizon instead.
    """

    name = "sabre"

    def __init__(
        self,
        instances,
        horizon,
        transitions: Sequence[int],
        max_failure_set_size: Optional[int] = 1,
        symmetry: bool = True,
        found_bug_pruning: bool = True,
        unbounded_drift: bool = False,
    ):
        super().__init__(instances, horizon, max_failure_set_size)
        self.symmetry = symmetry
        self.found_bug_pruning = found_bug_pruning
        self.unbounded_drift = unbounded_drift
        self.seen_bugs: list[FaultScenario] = []
        self.queue: deque = deque()
        self.pruned = 0
        self._enqueue_transitions(sorted(transitions), FaultScenario())
        self._gen = self._search()
        self._started = False
        self._pending: Optional[Outcome] = None

    def _limit(self, ts: Sequence[int], i: int) -> int:
        if self.unbounded_drift or i + 1 >= len(ts):
            return self.horizon.stop
        return ts[i + 1]

    def _enqueue_transitions(self, ts: Sequence[int], injected: FaultScenario) -> None:
        for i, t in enumerate(ts):
            if t in self.horizon:
                self.queue.append((t, injected, self._limit(ts, i)))

    def _search(self):
        while self.queue:
            t, injected, limit = self.queue.popleft()
            used = injected.instances()
            free = [x for x in self.instances if x not in used]
            for fs in ordered_subsets(free, self.max_size):
                if can_prune(t, fs, self.seen_bugs, injected, self.explored if self.symmetry else None,
                             self.symmetry, self.found_bug_pruning):
                    self.pruned += 1
                    continue
                scenario = injected.with_failures(t, fs, provenance=(t, injected.key()))
                if not self._fresh(scenario, self.symmetry):
                    continue
                outcome = yield scenario
                if outcome is None:
                    raise RuntimeError("record() must be called before next()")
                if outcome.unsafe:
                    self.seen_bugs.append(scenario)
                else:
                    later = sorted(x for x in outcome.transitions if x > t)
                    self._enqueue_transitions(later, scenario)
            if t + 1 < limit and t + 1 in self.horizon:
                self.queue.append((t + 1, injected, limit))

    def next(self) -> Optional[FaultScenario]:
        try:
            if not self._started:
                self._started = True
                return next(self._gen)
            outcome, self._pending = self._pending, None
            return self._gen.send(outcome)
        except StopIteration:
            return None

    def record(self, scenario: FaultScenario, outcome: Outcome) -> None:
        self._pending = outcome


class Dfs(Strategy):
    """Odometer over per-step onset sets; the last step varies fastest.

    The state is kept sparse (step -> onset subset), so the horizon length
    does not matter for memory and there is no recursion.
    """

    name = "dfs"

    def __init__(self, instances, horizon, max_failure_set_size: Optional[int] = 1, include_empty: bool = True):
        super().__init__(instances, horizon, max_failure_set_size)
        self._digits: Optional[dict] = None
        self._include_empty = include_empty
        self._done = False

    def _succ(self, cur: tuple, avail: Sequence[Instance]) -> Optional[tuple]:
        """Subset following ``cur`` in enumeration order over ``avail``."""
        it = ordered_subsets(avail, self.max_size)
        if not cur:
            return next(it, None)
        for s in it:
            if s == cur:
                return next(it, None)
        return None

    def _advance(self) -> bool:
        d = self._digits
        for step in reversed(self.horizon):
            cur = d.pop(step, ())
            used = {x for s, sub in d.items() if s < step for x in sub}
            avail = [x for x in self.instances if x not in used]
            nxt = self._succ(cur, avail) if avail else None
            if nxt is not None:
                d[step] = nxt
                return True
            # digit exhausted: clear it and carry into the previous step
        return False

    def _scenario(self) -> FaultScenario:
        return FaultScenario(tuple(Injection(s, st, i) for s, sub in self._digits.items() for st, i in sub))

    def next(self) -> Optional[FaultScenario]:
        while not self._done:
            if self._digits is None:
                self._digits = {}
                if not self._include_empty:
                    continue
            elif not self._advance():
                self._done = True
                return None
            s = self._scenario()
            if self._fresh(s):
                return s
        return None


class Bfs(Strategy):
    """Earliest onsets first: all single-onset scenarios in time order, then two-onset ones."""

    name = "bfs"

    def __init__(self, instances, horizon, max_failure_set_size: Optional[int] = 1, include_empty: bool = True, max_onsets: Optional[int] = None):
        super().__init__(instances, horizon, max_failure_set_size)
        self._gen = self._enumerate(include_empty, max_onsets)

    def _assign(self, steps: tuple, avail: tuple) -> Iterator[tuple]:
        if not steps:
            yield ()
            return
        for sub in ordered_subsets(avail, self.max_size):
            rest = tuple(x for x in avail if x not in sub)
            for tail in self._assign(steps[1:], rest):
                yield ((steps[0], sub),) + tail

    def _enumerate(self, include_empty: bool, max_onsets: Optional[int]):
        if include_empty:
            yield FaultScenario()
        top = len(self.instances) if max_onsets is None else max_onsets
        for k in range(1, top + 1):
            for steps in itertools.combinations(self.horizon, k):
                for plan in self._assign(steps, self.instances):
                    yield FaultScenario(tuple(Injection(t, st, i) for t, sub in plan for st, i in sub))

    def next(self) -> Optional[FaultScenario]:
        for s in self._gen:
            if self._fresh(s):
                return s
        return None


class RandomSearch(Strategy):
    """Uniform sampling of (step, failure set) without replacement."""

    name = "random"

    def __init__(self, instances, horizon, max_failure_set_size: Optional[int] = 1, seed: int = 0, steps: Optional[Sequence[int]] = None):
        super().__init__(instances, horizon, max_failure_set_size)
        self.rng = random.Random(seed)
        self.subsets = list(ordered_subsets(self.instances, self.max_size))
        self.steps = list(self.horizon) if steps is None else sorted(set(steps))
        self._drawn: set = set()

    @property
    def space_size(self) -> int:
        return len(self.steps) * len(self.subsets)

    def next(self) -> Optional[FaultScenario]:
        n_sub = len(self.subsets)
        while len(self._drawn) < self.space_size:
            k = self.rng.randrange(self.space_size)
            if k in self._drawn:
                continue
            self._drawn.add(k)
            t, sub = self.steps[k // n_sub], self.subsets[k % n_sub]
            s = FaultScenario(tuple(Injection(t, st, i) for st, i in sub))
            if self._fresh(s):
                return s
        return None


class StratifiedRandom(RandomSearch):
    """Random sampling restricted to steps within ``window`` of a profiled transition."""

    name = "stratified_random"

    def __init__(self, instances, horizon, transitions: Sequence[int], max_failure_set_size: Optional[int] = 1, seed: int = 0, window: int = 100):
        hz = range(horizon.start, horizon.stop) if isinstance(horizon, range) else range(min(horizon), max(horizon) + 1)
        steps = {s for t in transitions for s in range(t - window, t + window + 1) if s in hz}
        super().__init__(instances, hz, max_failure_set_size, seed, sorted(steps))
        self.window = window


STRATEGIES = {
    "sabre": Sabre,
    "dfs": Dfs,
    "bfs": Bfs,
    "random": RandomSearch,
    "stratified_random": StratifiedRandom,
}
