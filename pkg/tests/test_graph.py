import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from cp_regular.graph import (
    Multigraph,
    count_matchings,
    complete_graph,
    extract_ball,
    is_simple,
    matching_key,
    sample_configuration,
)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 60), d=st.integers(3, 6), seed=st.integers(0, 2**63 - 1))
def test_handshake_identity(n, d, seed):
    if (n * d) % 2:
        with pytest.raises(ValueError):
            sample_configuration(n, d, seed)
        return
    g = sample_configuration(n, d, seed)
    assert np.all(g.degrees == d)
    assert len(g.matching) == n * d // 2
    # the matching is a perfect matching of [dN]
    assert sorted(g.matching.ravel().tolist()) == list(range(n * d))
    # edges are the vertex projection of the matching, loops counted twice
    deg = Counter()
    for (u, v), m in g.edges.items():
        deg[u] += m
        deg[v] += m
    assert all(deg[v] == d for v in range(n))


def test_rejects_bad_parameters():
    with pytest.raises(ValueError):
        sample_configuration(3, 3, 0)
    with pytest.raises(ValueError):
        sample_configuration(4, 2, 0)


def test_deterministic_given_seed():
    a = sample_configuration(100, 3, 42)
    b = sample_configuration(100, 3, 42)
    assert np.array_equal(a.matching, b.matching)
    assert not np.array_equal(a.matching, sample_configuration(100, 3, 43).matching)


def test_two_vertices_never_simple():
    for s in range(200):
        assert not is_simple(sample_configuration(2, 3, s))


def test_k4_is_simple_and_loop_is_not():
    assert is_simple(complete_graph(4))
    assert not is_simple(Multigraph.from_edges(2, [(0, 0), (0, 1)]))
    assert not is_simple(Multigraph.from_edges(2, [(0, 1), (0, 1)]))


def test_matching_count():
    assert count_matchings(6) == 15
    assert count_matchings(2) == 1


def test_matching_uniformity_small():
    counts = Counter(matching_key(sample_configuration(2, 3, s).matching) for s in range(15_000))
    assert len(counts) == 15
    assert chisquare(list(counts.values())).pvalue > 0.001


def test_ball_radius_zero_and_one():
    g = complete_graph(4)
    b0 = extract_ball(g, 0, 0)
    assert b0.vertices == [0] and not b0.edges
    b1 = extract_ball(g, 0, 1)
    assert sorted(b1.vertices) == [0, 1, 2, 3]
    assert all(r <= 1 for r in b1.distance.values())


def test_ball_is_tree_on_large_graph():
    g = sample_configuration(20_000, 3, 5)
    frac = np.mean([extract_ball(g, v, 2).is_regular_tree_ball(3) for v in range(200)])
    assert frac > 0.97


def test_ball_rejects_bad_vertex():
    with pytest.raises(ValueError):
        extract_ball(complete_graph(3), 5, 1)


def test_text_roundtrip(tmp_path):
    g = sample_configuration(30, 3, 9)
    path = tmp_path / "g.txt"
    g.save(path)
    h = Multigraph.load(path)
    assert h.n == g.n and h.edges == g.edges
    first = path.read_text().splitlines()[0].split()
    assert first == ["30", "3", "9"]


def test_simple_frequency_trend():
    freq = [np.mean([is_simple(sample_configuration(n, 3, s)) for s in range(2000)]) for n in (50, 500)]
    assert abs(freq[-1] - math.exp(-2)) < 0.03
