"""Budgeted fault-injection campaigns: profiling, search, reports and replay."""
from __future__ import annotations

import bisect
import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .faults import STRATEGIES, FaultScenario, Outcome, Sabre, StratifiedRandom, RandomSearch, Dfs, Bfs
from .firmware import BUG_CATALOG, FirmwareConfig, UnknownBugError
from .modes import Mode
from .monitor import (
    ConfigError,
    LivelinessMonitor,
    ModeGraph,
    MonitorConfig,
    NormalizationConstants,
    ProfileSet,
    Verdict,
    build_mode_graph,
    compute_constants,
)
from .runner import Anchor, ReplayDivergence, RunResult, SimConfig, Simulation, Trace, anchor_injections
from .sim import DEFAULT_INSTANCE_COUNTS, SensorConfig, SensorType
from .workload import WORKLOADS, Script, make_workload

REPORT_VERSION = 1


class GoldenRunViolation(RuntimeError):
    """A fault-free profiling flight was itself unsafe or never finished."""


@dataclass(frozen=True)
class CampaignConfig:
    workload: str = "box_hold"
    workload_params: dict = field(default_factory=dict)
    strategy: str = "sabre"
    budget: int = 300
    seed: int = 0
    bugs: tuple = tuple(BUG_CATALOG)
    instance_counts: Optional[dict] = None  # sensor label -> count
    n_profile: int = 5
    dt: float = 0.01
    max_jitter: int = 10
    max_failure_set_size: Optional[int] = 1
    symmetry: bool = True
    found_bug_pruning: bool = True
    unbounded_drift: bool = False
    stratified_window: int = 100
    timeout_factor: float = 3.0
    snapshot_every: int = 50
    stop_on_first_detection: bool = False
    monitor: MonitorConfig = field(default_factory=MonitorConfig)
    out_dir: Optional[str] = None

    def __post_init__(self):
        if self.budget < 0:
            raise ConfigError("budget must be >= 0")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}; known: {sorted(STRATEGIES)}")
        if self.workload not in WORKLOADS:
            raise ConfigError(f"unknown workload {self.workload!r}; known: {sorted(WORKLOADS)}")
        unknown = [b for b in self.bugs if b not in BUG_CATALOG]
        if unknown:
            raise ConfigError(f"unknown seeded bugs {unknown}")
        if self.n_profile < 2:
            raise ConfigError("n_profile must be >= 2")
        object.__setattr__(self, "bugs", tuple(self.bugs))

    # -- derived pieces -------------------------------------------------------------
    def counts(self) -> dict:
        if self.instance_counts is None:
            return dict(DEFAULT_INSTANCE_COUNTS)
        out = dict(DEFAULT_INSTANCE_COUNTS)
        for k, v in self.instance_counts.items():
            out[SensorType.parse(k) if isinstance(k, str) else SensorType(k)] = int(v)
        return out

    def firmware_config(self) -> FirmwareConfig:
        return FirmwareConfig(counts=self.counts(), bugs=self.bugs)

    def sim_config(self, jitter_seed: int) -> SimConfig:
        return SimConfig(dt=self.dt, sensors=SensorConfig(counts=self.counts()), noise_seed=self.seed,
                         jitter_seed=jitter_seed, max_jitter=self.max_jitter)

    def jitter_seeds(self) -> list[int]:
        return [self.seed * 1000 + i for i in range(self.n_profile)]

    def script(self) -> Script:
        return make_workload(self.workload, **self.workload_params)

    def to_json(self) -> dict:
        d = dataclasses.asdict(self)
        d["monitor"]["safe_modes"] = [m.value for m in self.monitor.safe_modes]
        d["bugs"] = list(self.bugs)
        d.pop("out_dir")
        if self.instance_counts is not None:
            d["instance_counts"] = {str(k if isinstance(k, str) else SensorType(k).label): v for k, v in self.instance_counts.items()}
        return d

    def hash(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignConfig":
        d = dict(d)
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        if "monitor" in d and isinstance(d["monitor"], dict):
            m = dict(d["monitor"])
            if "safe_modes" in m:
                m["safe_modes"] = tuple(Mode.parse(x) for x in m["safe_modes"])
            d["monitor"] = MonitorConfig(**m)
        if "bugs" in d:
            d["bugs"] = tuple(d["bugs"])
        return cls(**d)

    def replace(self, **changes) -> "CampaignConfig":
        return dataclasses.replace(self, **changes)


# -- profiling ----------------------------------------------------------------------

@dataclass
class Profile:
    traces: list
    transitions: list  # of the reference flight (first jitter seed)
    constants: NormalizationConstants
    graph: ModeGraph
    profiles: ProfileSet
    golden_steps: int
    snapshots: list = field(default_factory=list)  # (step, Simulation) sorted by step

    @property
    def transition_steps(self) -> list[int]:
        return [tr.timestamp for tr in self.transitions]

    def snapshot_before(self, step: int) -> Optional[Simulation]:
        """Latest snapshot strictly before ``step``."""
        keys = [s for s, _ in self.snapshots]
        i = bisect.bisect_left(keys, step) - 1
        return self.snapshots[i][1] if i >= 0 else None

    def to_json(self) -> dict:
        return {
            "constants": self.constants.to_json(),
            "golden_steps": self.golden_steps,
            "mode_graph": {
                "nodes": sorted(m.value for m in self.graph.nodes),
                "edges": sorted([a.value, b.value] for a, b in self.graph.edges),
                "diameter": self.graph.diameter,
            },
            "transitions": [tr.to_json() for tr in self.transitions],
        }


def profile(config: CampaignConfig, snapshots: bool = True) -> Profile:
    """Fault-free flights with all configured bugs enabled, then constants and snapshots."""
    script = config.script()
    fw = config.firmware_config()
    results = []
    for js in config.jitter_seeds():
        r = Simulation(script, fw, config.sim_config(js), max_steps=100_000).run()
        if r.unsafe or r.status not in ("passed", "disarmed"):
            raise GoldenRunViolation(f"profiling flight (jitter seed {js}) ended {r.status}: {r.verdict.to_json()}")
        results.append(r)
    traces = [r.trace for r in results]
    graph = build_mode_graph(traces)
    constants = compute_constants(traces, graph, config.monitor)
    prof = Profile(traces, results[0].transitions, constants, graph, ProfileSet.from_traces(traces), results[0].steps)
    if snapshots:
        sim = new_simulation(config, prof)
        every = max(1, config.snapshot_every)
        k = 0
        while not sim.done:
            prof.snapshots.append((sim.now, sim.fork()))
            k += every
            sim.run(until=k)
        if sim.verdict is not None and sim.verdict.unsafe:
            raise GoldenRunViolation(f"reference flight judged unsafe against its own profiles: {sim.verdict.to_json()}")
    return prof


def new_simulation(config: CampaignConfig, prof: Profile, jitter_seed: Optional[int] = None, scenario=None,
                   anchors: Sequence[Anchor] = (), record: bool = False) -> Simulation:
    js = config.jitter_seeds()[0] if jitter_seed is None else jitter_seed
    monitor = LivelinessMonitor(prof.profiles, prof.constants, prof.graph, config.script().environment.home,
                                config.dt, config.monitor, record=record)
    max_steps = int(config.timeout_factor * prof.golden_steps)
    return Simulation(config.script(), config.firmware_config(), config.sim_config(js), scenario, monitor, max_steps, anchors)


def run_scenario(config: CampaignConfig, prof: Profile, scenario: FaultScenario) -> RunResult:
    """Simulate one scenario, resuming from the reference flight where the prefix is shared."""
    start = prof.snapshot_before(scenario.earliest_step) if scenario else None
    if start is None:
        sim = new_simulation(config, prof, scenario=scenario)
    else:
        sim = start.fork()
        sim.inject(scenario)
    return sim.run()


# -- campaign -----------------------------------------------------------------------

def make_strategy(config: CampaignConfig, prof: Profile, instances):
    horizon = range(0, prof.golden_steps)
    ts = prof.transition_steps
    name = config.strategy
    size = config.max_failure_set_size
    if name == "sabre":
        return Sabre(instances, horizon, ts, size, config.symmetry, config.found_bug_pruning, config.unbounded_drift)
    if name == "dfs":
        return Dfs(instances, horizon, size)
    if name == "bfs":
        return Bfs(instances, horizon, size)
    if name == "random":
        return RandomSearch(instances, horizon, size, seed=config.seed)
    return StratifiedRandom(instances, horizon, ts, size, seed=config.seed, window=config.stratified_window)


def _mode_at(trace: Optional[Trace], transitions, step: Optional[int]) -> Optional[Mode]:
    if step is None:
        return None
    if trace is not None and step < len(trace):
        return trace.modes[step]
    mode = Mode.PREFLIGHT
    for tr in transitions:
        if tr.timestamp <= step:
            mode = tr.to_mode
    return mode


def attribute(result: RunResult) -> Optional[str]:
    """The seeded bug whose trigger fired first in this flight, if any."""
    return result.bug_hits[0][0] if result.bug_hits else None


def run_campaign(config: CampaignConfig, prof: Optional[Profile] = None, write: bool = True) -> dict:
    prof = prof or profile(config)
    fwc = config.firmware_config()
    instances = [(st, i) for st in SensorType for i in range(fwc.counts.get(st, 0))]
    strategy = make_strategy(config, prof, instances)
    out_dir = resolve_out_dir(config)
    records = []
    violations = []
    first: dict = {}
    n = 0
    while n < config.budget:
        scenario = strategy.next()
        if scenario is None:
            break
        n += 1
        result = run_scenario(config, prof, scenario)
        strategy.record(scenario, Outcome(result.unsafe, tuple(tr.timestamp for tr in result.transitions)))
        bug = attribute(result) if result.unsafe else None
        inj_mode = _mode_at(result.trace, result.transitions, scenario.newest_step)
        rec = {
            "id": n,
            "strategy": config.strategy,
            "injections": scenario.to_json(),
            "anchors": [a.to_json() for a in anchor_injections(result.applied, result.transitions)],
            "parent": None if scenario.provenance is None else [scenario.provenance[0], [list(x) for x in scenario.provenance[1]]],
            "verdict": result.verdict.to_json(),
            "status": result.status,
            "steps": result.steps,
            "bug": bug,
            "bug_hits": [list(h) for h in result.bug_hits],
            "injection_mode": None if inj_mode is None else inj_mode.value,
        }
        records.append(rec)
        if result.unsafe:
            key = bug or "unattributed"
            first.setdefault(key, n)
            violations.append((rec, result))
            if config.stop_on_first_detection:
                break
    report = build_report(config, prof, records, first)
    if write and out_dir is not None:
        write_outputs(out_dir, report, prof, violations)
    return report


def build_report(config: CampaignConfig, prof: Profile, records: list, first: dict) -> dict:
    unsafe = [r for r in records if r["verdict"]["kind"] != "Safe"]
    by_bug: dict = {}
    buckets: dict = {}
    kinds: dict = {}
    for r in unsafe:
        key = r["bug"] or "unattributed"
        by_bug[key] = by_bug.get(key, 0) + 1
        m = r["injection_mode"] or "none"
        buckets[m] = buckets.get(m, 0) + 1
        kinds[r["verdict"]["kind"]] = kinds.get(r["verdict"]["kind"], 0) + 1
    return {
        "version": REPORT_VERSION,
        "config": config.to_json(),
        "config_hash": config.hash(),
        "profile": prof.to_json(),
        "records": records,
        "totals": {
            "simulations": len(records),
            "unsafe": len(unsafe),
            "by_bug": by_bug,
            "by_kind": kinds,
            "mode_buckets": buckets,
            "first_detection": first,
            "distinct_bugs": sorted(b for b in by_bug if b != "unattributed"),
        },
    }


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=1) + "\n"


def resolve_out_dir(config: CampaignConfig) -> Optional[Path]:
    env = os.environ.get("MODECHECK_OUT")
    if env:
        return Path(env)
    return None if config.out_dir is None else Path(config.out_dir)


def write_outputs(out_dir: Path, report: dict, prof: Profile, violations) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    tdir = out_dir / "traces"
    tdir.mkdir(exist_ok=True)
    for i, tr in enumerate(prof.traces):
        tr.write(tdir / f"profile-{i}.csv")
    for rec, result in violations:
        if result.trace is not None:
            result.trace.write(tdir / f"scenario-{rec['id']}.csv")
    path = out_dir / "report.json"
    path.write_text(dumps(report))
    return path


# -- replay -------------------------------------------------------------------------------

def replay(record: dict, config: CampaignConfig, prof: Optional[Profile] = None, jitter_seed: Optional[int] = None) -> Verdict:
    """Re-fly a recorded scenario with injections re-anchored to the observed transitions."""
    prof = prof or profile(config, snapshots=False)
    anchors = [Anchor.from_json(a) for a in record["anchors"]]
    sim = new_simulation(config, prof, jitter_seed=jitter_seed, anchors=anchors)
    result = sim.run()
    if result.unresolved_anchors and not result.unsafe:
        missing = [a.to_json() for a in result.unresolved_anchors]
        raise ReplayDivergence(f"anchoring transitions never observed: {missing}")
    return result.verdict


def find_record(report: dict, scenario_id: int) -> dict:
    for r in report["records"]:
        if r["id"] == scenario_id:
            return r
    raise KeyError(f"no scenario {scenario_id} in report")


# -- comparisons ------------------------------------------------------------------------------

def compare_strategies(config: CampaignConfig, strategies: Sequence[str], budget: Optional[int] = None,
                       prof: Optional[Profile] = None) -> dict:
    """Run each strategy on the same profile, seeds and budget; return one row per strategy."""
    prof = prof or profile(config)
    rows = {}
    reports = {}
    for name in strategies:
        cfg = config.replace(strategy=name, budget=config.budget if budget is None else budget)
        rep = run_campaign(cfg, prof, write=False)
        t = rep["totals"]
        rows[name] = {
            "simulations": t["simulations"],
            "unsafe": t["unsafe"],
            "distinct_bugs": t["distinct_bugs"],
            "mode_buckets": t["mode_buckets"],
            "first_detection": t["first_detection"],
        }
        reports[name] = rep
    return {"config_hash": config.hash(), "workload": config.workload, "budget": budget or config.budget,
            "seed": config.seed, "rows": rows, "reports": reports}


def comparison_table(comparison: dict) -> str:
    """Plain-text table, one line per strategy."""
    lines = [f"{'strategy':<18} {'sims':>5} {'unsafe':>6}  bugs"]
    for name, row in comparison["rows"].items():
        lines.append(f"{name:<18} {row['simulations']:>5} {row['unsafe']:>6}  {','.join(row['distinct_bugs']) or '-'}")
    return "\n".join(lines)
