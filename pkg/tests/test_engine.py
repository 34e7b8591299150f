import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import ks_2samp

from cp_regular.engine import (
    EventLog,
    ProcessParams,
    duality_check,
    log_batch,
    multi_type_survivors,
    record_reinfections,
    sample_event_log,
    simulate,
    simulate_batch,
    simulate_log,
)
from cp_regular.estimators import estimate_survival
from cp_regular.graph import Multigraph, complete_graph, isolated_vertex, path_graph, sample_configuration, star_graph
from cp_regular.oracle import exact_first_reinfection, hit_probability


def _mean_se(x):
    x = np.asarray(x, float)
    return x.mean(), x.std(ddof=1) / math.sqrt(len(x))


def test_params_validation():
    with pytest.raises(ValueError):
        ProcessParams(-0.1)
    with pytest.raises(ValueError):
        ProcessParams(float("nan"))


def test_rejects_bad_inputs():
    g = complete_graph(2)
    with pytest.raises(ValueError):
        simulate(g, [], ProcessParams(1.0), 1.0, 0)
    with pytest.raises(ValueError):
        simulate(g, [0], ProcessParams(1.0), -1.0, 0)
    with pytest.raises(ValueError):
        duality_check(g, [], [1], ProcessParams(1.0), 1.0, 10, 0)


def test_isolated_vertex_exponential():
    ext, _ = simulate_batch(isolated_vertex(), [0], ProcessParams(3.0), 1e9, 50_000, 1)
    m, se = _mean_se(ext)
    assert abs(m - 1.0) < 3 * se


def test_loop_never_transmits():
    g = Multigraph.from_edges(1, [(0, 0), (0, 0)])
    ext, _ = simulate_batch(g, [0], ProcessParams(5.0), 1e9, 50_000, 2)
    m, se = _mean_se(ext)
    assert abs(m - 1.0) < 3 * se


def test_k2_mean_extinction():
    ext, _ = simulate_batch(complete_graph(2), [0], ProcessParams(1.0), 1e9, 50_000, 3)
    m, se = _mean_se(ext)
    assert abs(m - 1.5) < 3 * se


def test_parallel_edges_rate():
    # u infected, v healthy, k parallel edges: first event is an infection w.p. k lam / (k lam + 1)
    k, lam = 3, 1.0
    g = Multigraph.from_edges(2, [(0, 1)] * k)
    first = [simulate(g, [0], ProcessParams(lam), 10.0, s).jump_sign[0] for s in range(20_000)]
    p = np.mean(np.array(first) > 0)
    want = k * lam / (k * lam + 1)
    assert abs(p - want) < 3 * math.sqrt(want * (1 - want) / 20_000)


def test_trajectory_replays_consistently():
    g = sample_configuration(40, 3, 1)
    tr = simulate(g, [0, 1, 2], ProcessParams(1.2), 5.0, 7, grid=np.linspace(0, 5, 11))
    for t, c in zip(tr.grid, tr.grid_counts):
        if c >= 0:
            assert len(tr.state_at(t)) == c
    if tr.extinct:
        assert tr.state_at(tr.extinction_time) == set()


def test_determinism():
    g = sample_configuration(100, 3, 3)
    a = simulate(g, [0], ProcessParams(1.5), 5.0, 11)
    b = simulate(g, [0], ProcessParams(1.5), 5.0, 11)
    assert np.array_equal(a.jump_times, b.jump_times)
    assert np.array_equal(a.jump_vertex, b.jump_vertex)


def test_trajectory_csv_rows():
    tr = simulate(complete_graph(2), [0], ProcessParams(0.0), 100.0, 1, grid=[0.0, 50.0])
    rows = list(tr.csv_rows(4))
    assert rows[0] == (4, 0.0, 1, 0)
    assert rows[1] == (4, 50.0, 0, 1)


# reinfection records

def test_no_reinfection_without_infection():
    rec = record_reinfections(complete_graph(3), 0, ProcessParams(0.0), 50.0, 3, 1)
    assert len(rec) == 0 and rec.extinct


def test_reinfection_from_fixed_log():
    g = complete_graph(2)
    log = EventLog(2.0, edge_events=[np.array([1.5])], recovery_events=[np.array([1.0]), np.array([])])
    tr = simulate_log(g, log, [0, 1])
    ups = [t for t, v, s in zip(tr.jump_times, tr.jump_vertex, tr.jump_sign) if v == 0 and s > 0]
    assert ups == [1.5]


def test_reinfection_times_increasing_and_csv():
    g = sample_configuration(200, 3, 4)
    rec = record_reinfections(g, 0, ProcessParams(2.0), 100.0, 5, 9)
    assert len(rec) == 5
    assert np.all(np.diff(rec.times) > 0)
    rows = list(rec.csv_rows(0))
    assert [r[1] for r in rows] == [1, 2, 3, 4, 5]


def test_first_reinfection_matches_oracle():
    g, lam = complete_graph(2), 1.0
    p_hit, mean_hit = exact_first_reinfection(g, lam)
    times, hits = [], 0
    n = 40_000
    for s in range(n):
        rec = record_reinfections(g, 0, ProcessParams(lam), 1e6, 1, s)
        if len(rec):
            hits += 1
            times.append(rec.times[0])
    assert abs(hits / n - p_hit) < 3 * math.sqrt(p_hit * (1 - p_hit) / n)
    m, se = _mean_se(times)
    assert abs(m - mean_hit) < 3 * se


def test_certified_survival_stops_early():
    g = sample_configuration(2000, 3, 1)
    rec = record_reinfections(g, 0, ProcessParams(3.0), 100.0, 2, 5, t_cond=50.0, certify_size=200)
    assert rec.certified and rec.survived_cond and len(rec) == 2


# graphical construction

def test_event_log_sorted_and_in_range():
    log = sample_event_log(complete_graph(3), ProcessParams(2.0), 3.0, 1)
    for arr in log.edge_events + log.recovery_events:
        assert np.all(np.diff(arr) > 0)
        assert np.all((arr >= 0) & (arr <= 3.0))


small_graphs = st.sampled_from([complete_graph(3), path_graph(4), star_graph(3), complete_graph(4),
                                Multigraph.from_edges(3, [(0, 1), (0, 1), (1, 2), (2, 2)])])


@settings(max_examples=40, deadline=None)
@given(g=small_graphs, seed=st.integers(0, 10**6), data=st.data())
def test_monotone_and_additive_on_shared_log(g, seed, data):
    verts = list(range(g.n))
    A = set(data.draw(st.lists(st.sampled_from(verts), min_size=1, max_size=g.n)))
    B = set(data.draw(st.lists(st.sampled_from(verts), min_size=1, max_size=g.n)))
    log = sample_event_log(g, ProcessParams(1.3), 3.0, seed)
    ta, tb, tab = (simulate_log(g, log, s) for s in (A, B, A | B))
    times = np.union1d(np.union1d(ta.jump_times, tb.jump_times), tab.jump_times)
    for t in np.append(times, 3.0):
        xa, xb, xab = ta.state_at(t), tb.state_at(t), tab.state_at(t)
        assert xab == xa | xb
        assert xa <= xab


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_fast_engine_matches_event_log_engine(t):
    g = path_graph(4)
    _, fast = simulate_batch(g, [0], ProcessParams(1.0), t, 100_000, 21, grid=[t])
    _, slow = log_batch(g, [0], ProcessParams(1.0), t, 100_000, 22, grid=[t])
    assert ks_2samp(fast[:, 0], slow[:, 0]).pvalue > 0.01


def test_duality_identities():
    g = path_graph(3)
    p_ab, p_ba, z = duality_check(g, {0, 1}, {0, 1}, ProcessParams(1.0), 1.0, 1000, 5)
    assert p_ab == p_ba and z == 0
    p_ab, p_ba, _ = duality_check(g, {0}, {2}, ProcessParams(1.0), 0.0, 1000, 5)
    assert p_ab == p_ba == 0


def test_duality_k2():
    g = complete_graph(2)
    p_ab, p_ba, z = duality_check(g, {0}, {1}, ProcessParams(1.0), 1.0, 100_000, 6)
    exact = hit_probability(g, 1.0, 1.0, {0}, {1})
    assert abs(z) < 3
    assert abs(p_ab - exact) < 4 * math.sqrt(exact * (1 - exact) / 100_000)


# multi-type runs

def test_multitype_validation_and_trivial_cases():
    with pytest.raises(ValueError):
        multi_type_survivors(3, 5, ProcessParams(1.0), 5.0, 0)
    assert multi_type_survivors(3, 5, ProcessParams(0.0), 20.0, 0) == 0
    assert multi_type_survivors(complete_graph(4), 5, ProcessParams(0.0), 20.0, 0) == 0


def test_single_type_matches_survival():
    lam, horizon, n = 1.0, 8.0, 3000
    S = [multi_type_survivors(3, 1, ProcessParams(lam), horizon, s) for s in range(n)]
    est = estimate_survival(3, ProcessParams(lam), horizon - 1.0, 3000, 77)
    se = math.sqrt(est.p_hat * (1 - est.p_hat) * 2 / n)
    assert set(S) <= {0, 1}
    assert abs(np.mean(S) - est.p_hat) < 3 * se
