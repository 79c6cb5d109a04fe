import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ringswarm.circle import wrap, wrapped_difference
from ringswarm.graph import (
    CommGraph,
    complete_graph,
    is_connected,
    knn_graph,
    laplacian_apply,
    proximity_graph,
)
from ringswarm.sim import initial_positions

position_sets = arrays(
    np.float64, st.integers(min_value=3, max_value=20),
    elements=st.floats(min_value=-np.pi, max_value=np.pi - 1e-9),
    unique=True)


def brute_force_knn(positions, k):
    """Independent reference: symmetric union of each agent's k closest."""
    n = len(positions)
    adj = np.zeros((n, n))
    for i in range(n):
        d = np.abs(wrapped_difference(positions[i], positions))
        d[i] = np.inf
        order = np.argsort(d, kind="stable")
        adj[i, order[:k]] = 1.0
    return np.maximum(adj, adj.T)


class TestKnn:
    @given(position_sets, st.integers(min_value=1, max_value=5))
    @settings(max_examples=40, deadline=None)
    def test_matches_brute_force(self, positions, k):
        if k >= len(positions):
            return
        g = knn_graph(positions, k)
        assert np.array_equal(g.adjacency, brute_force_knn(positions, k))

    def test_even_ring_degree_is_k(self):
        # symmetric deployment: everyone picks the same neighbors both ways
        g = knn_graph(initial_positions(50), 10)
        assert np.all(g.adjacency.sum(axis=1) == 10)

    @given(position_sets, st.integers(min_value=1, max_value=5))
    @settings(max_examples=40, deadline=None)
    def test_degree_at_least_k(self, positions, k):
        if k >= len(positions):
            return
        g = knn_graph(positions, k)
        assert np.all(g.adjacency.sum(axis=1) >= k)

    def test_k_out_of_range(self):
        with pytest.raises(ValueError):
            knn_graph(initial_positions(10), 10)
        with pytest.raises(ValueError):
            knn_graph(initial_positions(10), 0)


class TestProximity:
    def test_even_ring_degree(self):
        g = proximity_graph(initial_positions(50), np.pi / 4)
        assert np.all(g.adjacency.sum(axis=1) == 12)

    def test_eps_at_least_pi_gives_complete(self):
        pos = initial_positions(12)
        g = proximity_graph(pos, np.pi)
        assert np.array_equal(g.adjacency, complete_graph(12).adjacency)

    @given(position_sets, st.floats(min_value=0.1, max_value=3.0),
           st.floats(min_value=-np.pi, max_value=np.pi))
    @settings(max_examples=40, deadline=None)
    def test_rotation_invariant(self, positions, eps, shift):
        # only generic configurations: an ulp of rounding under the shift can
        # legitimately flip a pair sitting exactly on the threshold
        d = np.abs(wrapped_difference(positions[:, None], positions[None, :]))
        assume(np.abs(d - eps).min() > 1e-9)
        a = proximity_graph(positions, eps).adjacency
        b = proximity_graph(wrap(positions + shift), eps).adjacency
        assert np.array_equal(a, b)

    def test_threshold_is_inclusive(self):
        pos = np.array([0.0, 0.5])
        assert proximity_graph(pos, 0.5).adjacency[0, 1] == 1.0
        assert proximity_graph(pos, 0.49).adjacency[0, 1] == 0.0


class TestLaplacian:
    def test_complete_three_pinned(self):
        g = complete_graph(3)
        states = np.array([1.0, 2.0, 3.0])
        assert np.array_equal(laplacian_apply(g, states), [-3.0, 0.0, 3.0])

    def test_row_sums_exactly_zero(self):
        g = knn_graph(initial_positions(50), 10)
        assert np.all(g.laplacian.sum(axis=1) == 0.0)

    def test_positive_semidefinite(self):
        g = proximity_graph(initial_positions(30), 0.9)
        eigs = np.linalg.eigvalsh(g.laplacian)
        assert eigs.min() > -1e-12

    def test_annihilates_consensus(self):
        g = knn_graph(initial_positions(20), 4)
        assert np.abs(laplacian_apply(g, np.full(20, 7.0))).max() == 0.0

    def test_matrix_states(self):
        g = complete_graph(3)
        states = np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
        out = laplacian_apply(g, states)
        assert np.array_equal(out[:, 0], [-3.0, 0.0, 3.0])
        assert np.array_equal(out[:, 1], [0.0, 0.0, 0.0])


class TestConnectivity:
    def test_ring_connected(self):
        assert is_connected(knn_graph(initial_positions(50), 2))

    def test_two_clusters_disconnected(self):
        pos = np.array([0.0, 0.05, 0.1, 3.0, 3.05])
        assert not is_connected(proximity_graph(pos, 0.2))

    def test_single_node_connected(self):
        assert is_connected(CommGraph(np.zeros((1, 1))))

    def test_complete_always_connected(self):
        assert is_connected(complete_graph(7))


class TestCommGraphValidation:
    def test_rejects_asymmetric(self):
        adj = np.zeros((3, 3))
        adj[0, 1] = 1.0
        with pytest.raises(ValueError):
            CommGraph(adj)

    def test_rejects_self_loops(self):
        adj = np.eye(3)
        with pytest.raises(ValueError):
            CommGraph(adj)
