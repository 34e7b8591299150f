import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import ks_2samp

from cp_regular.cover import (
    TRUE,
    Explorer,
    clash_hazard,
    explore,
    first_clash_time,
    no_clash_probability,
    project,
)
from cp_regular.engine import ProcessParams, simulate, simulate_log


def test_initial_state():
    ex = Explorer(10, 3, ProcessParams(1.0), 1)
    assert ex.label[0] == 0 and ex.true[0]
    assert ex.free_pool[0] == 3
    assert ex.matched == []


def test_rejects_bad_sizes():
    with pytest.raises(ValueError):
        Explorer(5, 3, ProcessParams(1.0), 0)
    with pytest.raises(ValueError):
        Explorer(4, 2, ProcessParams(1.0), 0)


def test_lambda_zero_never_extends():
    for s in range(50):
        res = explore(20, 3, ProcessParams(0.0), 10.0, s)
        assert res.state.matched == []
        assert res.clashes == []
        assert project(res.state) == set()


def test_project_at_start_and_after_extinction():
    res = explore(10, 3, ProcessParams(1.0), 1e-9, 3)
    assert project(res.state) == {0}
    res = explore(1000, 3, ProcessParams(0.3), 1e4, 3)
    assert math.isfinite(res.extinction_time)
    assert project(res.state) == set()


def test_pairs_equal_labels_minus_one_before_repeat():
    for s in range(100):
        res = explore(10**6, 3, ProcessParams(1.0), 4.0, s)
        if res.first_clash is None:
            labels = set(res.state.ell.values())
            assert len(res.state.matched) == len(labels) - 1


def test_free_pool_accounting():
    res = explore(30, 3, ProcessParams(1.5), 3.0, 8)
    used = np.zeros(30, dtype=int)
    for a, b in res.state.matched:
        used[a // 3] += 1
        used[b // 3] += 1
    assert np.array_equal(res.state.free_pool, 3 - used)


def test_true_labels_unique_in_debug_mode():
    for s in range(200):
        res = explore(30, 3, ProcessParams(1.5), 2.0, s, debug=True)
        trues = [lab for v, lab in res.state.ell.items() if res.state.marks[v] == TRUE]
        assert len(trues) == len(set(trues)) == len(project(res.state))


def test_projection_replays_on_revealed_graph():
    for s in range(100):
        res = explore(40, 3, ProcessParams(1.2), 2.0, s)
        g = res.partial_graph()
        tr = simulate_log(g, res.induced_log, [0])
        assert np.array_equal(tr.jump_times, res.jump_times)
        assert np.array_equal(tr.jump_vertex, res.jump_label)


def test_projection_law_matches_direct_simulation():
    lam, t, reps = 1.0, 2.0, 3000
    proj, direct = [], []
    for s in range(reps):
        res = explore(50, 3, ProcessParams(lam), t, s, grid=[t])
        proj.append(res.projected_counts[0])
        g = res.completed_graph(10**6 + s)
        direct.append(simulate(g, [0], ProcessParams(lam), t, 2 * 10**6 + s, grid=[t]).grid_counts[0])
    assert ks_2samp(proj, direct).pvalue > 0.01


def test_clash_hazard_values():
    assert clash_hazard(2, 3, 10) == Fraction(4, 29)
    assert clash_hazard(5, 3, 10**6) < 1e-5
    with pytest.raises(ValueError):
        clash_hazard(1, 3, 10)
    with pytest.raises(ValueError):
        clash_hazard(11, 3, 10)


@pytest.mark.parametrize("n", [100, 400, 2500])
def test_no_clash_product_bound(n):
    for k in range(2, int(math.isqrt(n)) + 1):
        assert no_clash_probability(k, 3, n) >= 1 - Fraction(k * k, n)


def test_first_clash_lambda_zero_and_csv():
    out = first_clash_time([100], 3, ProcessParams(0.0), 20, 1)
    sample = out[100]
    assert np.all(np.isnan(sample.times)) and not sample.survived.any()
    rows = list(sample.csv_rows())
    assert rows[0][1] == 100 and rows[0][2] == "" and rows[0][4] == 0


def test_clash_time_grows_with_n():
    out = first_clash_time([100, 10_000], 3, ProcessParams(1.5), 150, 2)
    assert np.median(out[10_000].conditioned) > np.median(out[100].conditioned)
