import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import synthetic_trace
from modecheck.modes import Mode
from modecheck.monitor import (
    ConfigError,
    LivelinessMonitor,
    ModeGraph,
    MonitorConfig,
    ProfileSet,
    ProgressTracker,
    VerdictKind,
    brute_force_liveliness,
    build_mode_graph,
    check_liveliness,
    check_safety,
    compute_constants,
    mode_distance,
    state_distance,
)
from modecheck.sim import CollisionReport

M = Mode
CHAIN = [M.PREFLIGHT, M.TAKEOFF, M.POSITION_HOLD, M.LAND, M.DISARMED]
CHAIN_GRAPH = build_mode_graph([CHAIN])


def hop_table_by_hand(edges, nodes):
    """Floyd-Warshall over the observed edges; the oracle for shortest paths."""
    inf = math.inf
    d = {(a, b): (0 if a is b else inf) for a in nodes for b in nodes}
    for a, b in edges:
        d[(a, b)] = 1
    for k, i, j in itertools.product(nodes, repeat=3):
        if d[(i, k)] + d[(k, j)] < d[(i, j)]:
            d[(i, j)] = d[(i, k)] + d[(k, j)]
    return d


# -- mode graph ------------------------------------------------------------------------

def test_chain_diameter_is_four():
    assert CHAIN_GRAPH.diameter == 4
    hand = hop_table_by_hand(CHAIN_GRAPH.edges, CHAIN)
    assert max(v for v in hand.values() if v < math.inf) == 4


def test_single_mode_diameter_floor():
    assert build_mode_graph([[M.PREFLIGHT] * 10]).diameter == 1


def test_mode_distance_examples():
    g = CHAIN_GRAPH
    assert mode_distance(g, M.LAND, M.LAND) == 0
    assert mode_distance(g, M.TAKEOFF, M.POSITION_HOLD) == 1
    assert mode_distance(g, M.POSITION_HOLD, M.TAKEOFF) == 1  # symmetrised
    assert mode_distance(g, M.PREFLIGHT, M.DISARMED) == 4
    # no edge between these in either direction is ever observed
    assert mode_distance(g, M.RTL, M.GUIDED) == g.diameter
    assert (M.PREFLIGHT, M.LAND) not in g.edges


def test_unreachable_pairs_take_the_diameter():
    g = ModeGraph([M.PREFLIGHT, M.TAKEOFF, M.LAND, M.DISARMED], [(M.PREFLIGHT, M.TAKEOFF), (M.LAND, M.DISARMED)])
    assert g.diameter == 1
    assert mode_distance(g, M.TAKEOFF, M.LAND) == 1


def test_mode_graph_matches_floyd_warshall_on_workloads(box_profile, fence_profile):
    for prof in (box_profile, fence_profile):
        g = prof.graph
        hand = hop_table_by_hand(g.edges, list(Mode))
        finite = [v for v in hand.values() if v < math.inf]
        assert g.diameter == max(1, max(finite))
        for a, b in itertools.product(Mode, repeat=2):
            h = min(hand[(a, b)], hand[(b, a)])
            assert mode_distance(g, a, b) == (g.diameter if h == math.inf else h)


# -- constants -------------------------------------------------------------------------

def _flat(n, offset_at=None, offset=(0, 0, 0), modes=None):
    pos = [(0.0, 0.0, 10.0)] * n
    if offset_at is not None:
        pos = list(pos)
        pos[offset_at] = tuple(a + b for a, b in zip(pos[offset_at], offset))
    return synthetic_trace(pos, modes or [M.POSITION_HOLD] * n)


def test_identical_traces_hit_the_floors():
    c = compute_constants([_flat(20), _flat(20)])
    assert (c.raw_P, c.raw_A, c.raw_tau) == (0.0, 0.0, 0.0)
    cfg = MonitorConfig()
    assert (c.P, c.A, c.tau) == (cfg.position_floor, cfg.accel_floor, cfg.tau_floor)


def test_position_offset_three_four_gives_five():
    c = compute_constants([_flat(20), _flat(20, 7, (3, 4, 0))])
    assert c.P == 5.0
    assert c.T == 20 and c.N == 2


def test_needs_two_profiles():
    with pytest.raises(ConfigError):
        compute_constants([_flat(5)])


def test_shorter_traces_are_padded_with_their_last_state():
    a = synthetic_trace([(0, 0, z) for z in range(10)], [M.TAKEOFF] * 10)
    b = synthetic_trace([(0, 0, z) for z in range(6)], [M.TAKEOFF] * 6)
    c = compute_constants([a, b])
    assert c.T == 10
    assert c.raw_P == 9.0 - 5.0


def brute_tau(traces, cfg=MonitorConfig()):
    """O(N^2 T) loop over every pair and step, written without numpy."""
    T = max(len(t) for t in traces)

    def row(seq, k):
        return seq[min(k, len(seq) - 1)]

    raw_P = raw_A = 0.0
    for a, b in itertools.combinations(traces, 2):
        for k in range(T):
            raw_P = max(raw_P, math.dist(row(a.pos, k), row(b.pos, k)))
            raw_A = max(raw_A, math.dist(row(a.acc, k), row(b.acc, k)))
    P, A = max(raw_P, cfg.position_floor), max(raw_A, cfg.accel_floor)
    g = build_mode_graph(traces)
    D = g.diameter
    tau = 0.0
    for a, b in itertools.combinations(traces, 2):
        for k in range(T):
            dP = min(math.dist(row(a.pos, k), row(b.pos, k)), cfg.clamp_factor * P) * D / P
            dA = min(math.dist(row(a.acc, k), row(b.acc, k)), cfg.clamp_factor * A) * D / A
            dM = g.distance(row(a.modes, k), row(b.modes, k))
            tau = max(tau, math.sqrt(dP ** 2 + dA ** 2 + dM ** 2))
    return P, A, D, max(tau, cfg.tau_floor)


def test_constants_match_a_brute_force_loop():
    rng = np.random.default_rng(5)
    traces = []
    for n in (30, 25, 33):
        pos = rng.normal(0, 2, (n, 3))
        acc = rng.normal(0, 1, (n, 3))
        modes = [CHAIN[min(4, i // 7)] for i in range(n)]
        traces.append(synthetic_trace(pos.tolist(), modes, acc.tolist()))
    c = compute_constants(traces)
    P, A, D, tau = brute_tau(traces)
    assert c.P == pytest.approx(P, rel=1e-12)
    assert c.A == pytest.approx(A, rel=1e-12)
    assert c.D == D
    assert c.tau == pytest.approx(tau, rel=1e-12)


def test_profiling_constants_match_the_brute_force_loop(box_profile):
    P, A, D, tau = brute_tau(box_profile.traces)
    c = box_profile.constants
    assert (c.P, c.A, c.D) == pytest.approx((P, A, D), rel=1e-12)
    assert c.tau == pytest.approx(tau, rel=1e-12)


# -- state distance --------------------------------------------------------------------

C = compute_constants([_flat(20, modes=CHAIN * 4), _flat(20, 7, (3, 4, 0), modes=CHAIN * 4)], CHAIN_GRAPH)


def test_state_distance_examples():
    s = ((1.0, 2.0, 3.0), (0.0, 0.0, -1.0), M.TAKEOFF)
    assert state_distance(s, s, C, CHAIN_GRAPH) == 0.0
    far = ((4.0, 6.0, 3.0), (0.0, 0.0, -1.0), M.TAKEOFF)  # the 5 m gap that sets P
    assert state_distance(s, far, C, CHAIN_GRAPH) == pytest.approx(C.D)
    two_hops = ((1.0, 2.0, 3.0), (0.0, 0.0, -1.0), M.LAND)
    assert state_distance(s, two_hops, C, CHAIN_GRAPH) == 2.0


vec = st.tuples(*[st.floats(-50, 50, allow_nan=False)] * 3)
state = st.tuples(vec, vec, st.sampled_from(list(Mode)))


@settings(max_examples=200, deadline=None)
@given(state, state, state)
def test_state_distance_is_a_metric_on_the_chain(a, b, c):
    d = lambda x, y: state_distance(x, y, C, CHAIN_GRAPH)
    assert d(a, b) == pytest.approx(d(b, a), abs=1e-12)
    assert d(a, a) == 0.0
    assert d(a, c) <= d(a, b) + d(b, c) + 1e-9


@settings(max_examples=100, deadline=None)
@given(state, state, state)
def test_state_distance_is_a_metric_on_workload_graphs(box_profile, fence_profile, a, b, c):
    for prof in (box_profile, fence_profile):
        d = lambda x, y: state_distance(x, y, prof.constants, prof.graph)
        assert d(a, b) == pytest.approx(d(b, a), abs=1e-12)
        assert d(a, c) <= d(a, b) + d(b, c) + 1e-9


@settings(max_examples=200, deadline=None)
@given(vec, st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.sampled_from(list(Mode)))
def test_normalisation_bound_for_same_mode_states(p, u1, u2, v1, v2, m):
    # within the profiling maxima each component is at most D, so the total is at most D*sqrt(2)
    dp = (u1 * C.P / math.sqrt(3),) * 3
    da = (v1 * C.A / math.sqrt(3),) * 3
    s1 = (p, (0.0, 0.0, 0.0), m)
    s2 = (tuple(x + y for x, y in zip(p, dp)), da, m)
    assert state_distance(s1, s2, C, CHAIN_GRAPH) <= C.D * math.sqrt(2) + 1e-9
    # beyond the maxima the clamp keeps it under 3*D*sqrt(2)
    huge = (tuple(x + 1e6 * (u2 + 1) for x in p), (1e6 * (v2 + 1),) * 3, m)
    assert state_distance(s1, huge, C, CHAIN_GRAPH) <= C.clamp_factor * C.D * math.sqrt(2) + 1e-9


# -- verdicts ---------------------------------------------------------------------------

def test_check_safety_examples():
    v = check_safety(CollisionReport(obj="ground", impact_speed=8.0, timestamp=12), None, M.LAND)
    assert v.kind is VerdictKind.SAFETY and v.cause == "collision" and v.at == 12
    v = check_safety(None, "ZeroDivisionError", M.GUIDED, 40)
    assert v.kind is VerdictKind.SAFETY and v.cause == "crash"
    assert check_safety(None, None) is None


def test_liveliness_needs_every_profile_to_be_far():
    assert not check_liveliness([0.0, 9.0, 9.0], 1.0)
    assert not check_liveliness([0.9, 1.1], 1.0)
    assert check_liveliness([1.1, 2.0, 5.0], 1.0)


def _monitor(profiles, const, graph, cfg=MonitorConfig()):
    return LivelinessMonitor(ProfileSet.from_traces(profiles), const, graph, (0.0, 0.0, 0.0), 0.01, cfg, record=True)


def test_state_equal_to_a_profile_is_not_flagged():
    a = _flat(50)
    b = _flat(50, 3, (1, 0, 0))
    c = compute_constants([a, b])
    mon = _monitor([a, b], c, build_mode_graph([a, b]))
    for t in range(50):
        assert mon.observe(t, a.pos[t], a.acc[t], M.POSITION_HOLD) is None
    assert not any(mon.flags)


def test_divergence_is_confirmed_after_consecutive_steps():
    a, b = _flat(100), _flat(100)
    c = compute_constants([a, b])
    mon = _monitor([a, b], c, build_mode_graph([a, b]))
    verdicts = [mon.observe(t, (50.0, 0.0, 10.0), (0.0, 0.0, 0.0), M.POSITION_HOLD) for t in range(20)]
    first = next(i for i, v in enumerate(verdicts) if v is not None)
    assert first == MonitorConfig().confirm_steps - 1
    assert verdicts[first].kind is VerdictKind.LIVELINESS


def test_rtl_progress_exempts_and_stalling_does_not():
    dt, cfg = 0.01, MonitorConfig()
    window = int(cfg.progress_window_s / dt)
    tr = ProgressTracker((0.0, 0.0, 0.0), dt, cfg)
    # closing on home at 1 m/s is 2 m per window
    assert all(tr.update(M.RTL, (30.0 - t * dt, 0.0, 10.0)) for t in range(3 * window))
    tr = ProgressTracker((0.0, 0.0, 0.0), dt, cfg)
    stalled = [tr.update(M.RTL, (30.0, 0.0, 10.0)) for t in range(3 * window)]
    assert all(stalled[:window]) and not any(stalled[window:])
    tr = ProgressTracker((0.0, 0.0, 0.0), dt, cfg)
    assert not any(tr.update(M.GUIDED, (30.0, 0.0, 10.0)) for _ in range(10))


def _kinematic(x0, v0, accel, vmax, steps, dt=0.01):
    """Positions along one axis: constant acceleration toward ``-vmax``, then cruise."""
    x, v, out = x0, v0, []
    for _ in range(steps):
        out.append(x)
        v = max(v - accel * dt, -vmax)
        x += v * dt
    return out


def test_rtl_braking_away_from_home_counts_as_progress():
    dt, cfg = 0.01, MonitorConfig()
    # entered at 6 m/s heading away; brakes at 4 m/s^2 and comes back at 5 m/s
    xs = _kinematic(10.0, 6.0, 4.0, 5.0, 450)  # stops short of home
    assert max(xs) - xs[0] > 4.0
    tr = ProgressTracker((0.0, 0.0, 0.0), dt, cfg)
    assert all(tr.update(M.RTL, (x, 0.0, 20.0)) for x in xs)


def test_rtl_vertical_leg_counts_as_progress():
    dt, cfg = 0.01, MonitorConfig()
    # overshooting climb to the return altitude, then settling back, far from home
    zs = [5.4 - 1.716 * (t * dt - 1.3) ** 2 for t in range(261)]
    assert abs(zs[230] - zs[30]) < 0.5  # no net change across the window ending at step 230
    tr = ProgressTracker((0.0, 0.0, 0.0), dt, cfg)
    assert all(tr.update(M.RTL, (12.0, 0.0, z)) for z in zs)


def test_rtl_drifting_away_is_not_progress():
    dt, cfg = 0.01, MonitorConfig()
    window = int(cfg.progress_window_s / dt)
    tr = ProgressTracker((0.0, 0.0, 0.0), dt, cfg)
    out = [tr.update(M.RTL, (10.0 + 3.0 * t * dt, 0.0, 20.0)) for t in range(3 * window)]
    assert all(out[:window]) and not any(out[window:])


def test_land_entered_while_climbing_counts_as_progress():
    dt, cfg = 0.01, MonitorConfig()
    zs = _kinematic(0.8, 2.0, 4.0, 0.6, 600)
    tr = ProgressTracker((0.0, 0.0, 0.0), dt, cfg)
    assert all(tr.update(M.LAND, (0.0, 0.0, max(z, 0.0))) for z in zs)


def test_stalled_rtl_far_from_profiles_is_a_violation():
    a, b = _flat(1000), _flat(1000)
    c = compute_constants([a, b])
    g = build_mode_graph([a, b])
    moving = _monitor([a, b], c, g)
    assert all(moving.observe(t, (30.0 - t * 0.01, 0.0, 10.0), (0.0, 0.0, 0.0), M.RTL) is None for t in range(1000))
    stalled = _monitor([a, b], c, g)
    verdicts = [stalled.observe(t, (30.0, 0.0, 10.0), (0.0, 0.0, 0.0), M.RTL) for t in range(1000)]
    hit = next(i for i, v in enumerate(verdicts) if v is not None)
    assert hit == 200 + MonitorConfig().confirm_steps - 1


def test_land_progress_rule():
    dt, cfg = 0.01, MonitorConfig()
    tr = ProgressTracker((0.0, 0.0, 0.0), dt, cfg)
    assert all(tr.update(M.LAND, (5.0, 5.0, 10.0 - 0.5 * t * dt)) for t in range(1000))
    tr = ProgressTracker((0.0, 0.0, 0.0), dt, cfg)
    out = [tr.update(M.LAND, (5.0, 5.0, 10.0)) for t in range(400)]
    assert not out[-1]
    tr = ProgressTracker((0.0, 0.0, 0.0), dt, cfg)
    assert tr.update(M.DISARMED, (5.0, 5.0, 0.0)) and not tr.update(M.DISARMED, (5.0, 5.0, 3.0))


def test_leave_one_out_profiles_never_violate(box_profile, fence_profile):
    for prof in (box_profile, fence_profile):
        traces = prof.traces
        assert len(traces) == 5
        for i, tr in enumerate(traces):
            rest = traces[:i] + traces[i + 1:]
            dist, flags, at = brute_force_liveliness(tr, rest, prof.constants, prof.graph)
            assert at is None
            assert (dist.min(axis=1) <= prof.constants.tau).all()


def test_incremental_monitor_matches_brute_force(box_profile):
    c, g = box_profile.constants, box_profile.graph
    rng = np.random.default_rng(0)
    base = box_profile.traces[0]
    # a perturbed copy of a profiling flight that wanders off mid-mission
    pos = base.positions.copy()
    pos[1500:] += np.linspace(0, 40, len(pos) - 1500)[:, None] * np.array([1.0, 0.0, 0.0])
    acc = base.accelerations + rng.normal(0, 0.2, base.accelerations.shape)
    tr = synthetic_trace(pos.tolist(), base.modes, acc.tolist())
    mon = LivelinessMonitor(box_profile.profiles, c, g, (0.0, 0.0, 0.0), 0.01, MonitorConfig(), record=True)
    at_inc = None
    for t in range(len(tr)):
        v = mon.observe(t, tr.pos[t], tr.acc[t], tr.modes[t])
        if v is not None:
            at_inc = t
            break
    dist, flags, at_bf = brute_force_liveliness(tr, box_profile.traces, c, g)
    assert at_inc is not None and at_inc == at_bf
    n = len(mon.distances)
    inc = np.array(mon.distances)
    assert np.array_equal(inc, dist[:n])
    assert list(mon.flags) == flags[:n].tolist()
