"""In-situ model checking of drone control firmware under sensor failures.

The package bundles a small quadcopter simulator, a reference firmware with
switchable seeded bugs, fault scenario search (mode-boundary SABRE plus
baselines), a safety/liveliness monitor and a campaign runner.
"""
from .campaign import CampaignConfig, compare_strategies, profile, replay, run_campaign
from .faults import (
    Bfs,
    Dfs,
    FaultScenario,
    Injection,
    RandomSearch,
    Sabre,
    StratifiedRandom,
    can_prune,
    intercept_read,
    symmetry_signature,
)
from .firmware import BUG_CATALOG, Firmware, FirmwareConfig, SensorBank, failover
from .modes import Mode, ModeTransition
from .monitor import (
    ModeGraph,
    Verdict,
    VerdictKind,
    build_mode_graph,
    check_liveliness,
    check_safety,
    compute_constants,
    mode_distance,
    state_distance,
)
from .runner import Simulation, SimConfig, Trace
from .sim import Actuation, Environment, Fence, PhysicalState, SensorType, detect_collision, sense, step
from .workload import Workload, box_hold_workload, make_workload, run_script, waypoint_fence_workload

__all__ = [name for name in dir() if not name.startswith("_")]
