from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from consensus_formation import topology
from consensus_formation.errors import CertificateError, ConfigurationError, ConnectivityError
from consensus_formation.control import stacked_consensus_error


def test_line_graph_laplacian_by_hand():
    g = topology.build_line_graph(4)
    expected = np.array([[1, -1, 0, 0], [-1, 2, -1, 0], [0, -1, 2, -1], [0, 0, -1, 1]], dtype=float)
    assert np.array_equal(topology.laplacian(g), expected)
    gl = topology.grounded_laplacian(g)
    assert np.array_equal(gl.matrix, expected[1:, 1:])
    assert gl.follower_order == (1, 2, 3)


@pytest.mark.parametrize("followers", [1, 2, 3, 5, 8])
def test_path_grounded_at_end_spectrum_closed_form(followers):
    # grounded path: eigenvalues 2 - 2 cos((2k - 1) pi / (2N + 1))
    gl = topology.grounded_laplacian(topology.build_line_graph(followers + 1))
    k = np.arange(1, followers + 1)
    expected = 2 - 2 * np.cos((2 * k - 1) * np.pi / (2 * followers + 1))
    assert np.allclose(gl.eigenvalues(), np.sort(expected), atol=1e-12)


def test_star_with_leader_hub_grounds_to_identity():
    gl = topology.grounded_laplacian(topology.build_star_graph(5))
    assert np.array_equal(gl.matrix, np.eye(4))


def test_leader_injection_marks_leader_neighbors():
    g = topology.parse_graph(edges=[(0, 1), (1, 2), (0, 3)])
    assert np.array_equal(topology.leader_injection(g), [1.0, 0.0, 1.0])


def test_stacked_error_equals_full_laplacian_rows():
    rng = np.random.default_rng(3)
    g = topology.random_tree(6, rng)
    x = rng.normal(size=(6, 2))
    gl = topology.grounded_laplacian(g)
    stacked = stacked_consensus_error(x[1:], x[0], gl, topology.leader_injection(g))
    assert np.allclose(stacked.reshape(5, 2), (topology.laplacian(g) @ x)[1:], atol=1e-14)


def test_inverse_m_identity_and_refusal():
    gl = topology.grounded_laplacian(topology.build_line_graph(5))
    m = topology.inverse_m(gl)
    assert np.allclose(m @ gl.matrix, np.eye(4), atol=1e-12)
    with pytest.raises(CertificateError):
        topology.inverse_m(np.diag([1.0, 0.0]))


def test_graph_validation():
    with pytest.raises(ConnectivityError):
        topology.LeaderFollowerGraph(4, ((0, 1), (2, 3)))
    with pytest.raises(ConfigurationError):
        topology.LeaderFollowerGraph(3, ((0, 0), (1, 2)))
    with pytest.raises(ConfigurationError):
        topology.LeaderFollowerGraph(3, ((0, 1), (1, 0), (1, 2)))
    with pytest.raises(ConfigurationError):
        topology.LeaderFollowerGraph(2, ((0, 5),))
    with pytest.raises(ConfigurationError):
        topology.build_line_graph(1)


def test_parse_graph_shorthand_and_errors():
    assert topology.parse_graph("line:4").edges == ((0, 1), (1, 2), (2, 3))
    assert topology.parse_graph("star:3").edges == ((0, 1), (0, 2))
    with pytest.raises(ConfigurationError):
        topology.parse_graph("ring:4")
    with pytest.raises(ConfigurationError):
        topology.parse_graph("line:x")


def test_neighbors_sorted():
    g = topology.parse_graph(edges=[(2, 1), (0, 2), (2, 3)])
    assert g.neighbors(2) == (0, 1, 3)
    assert g.has_edge(1, 2) and not g.has_edge(0, 1)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**31 - 1))
def test_random_tree_grounded_laplacian_positive_definite(count, seed):
    g = topology.random_tree(count, np.random.default_rng(seed))
    assert len(g.edges) == count - 1
    w = topology.grounded_laplacian(g).eigenvalues()
    assert w[0] > 1e-10


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 6), st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_quadratic_identity_property(count, n, seed):
    rng = np.random.default_rng(seed)
    g = topology.random_tree(count, rng)
    h = rng.normal(size=count * n)
    k = rng.normal(size=count * n)
    r = topology.laplacian_quadratic_identity_check(topology.laplacian(g), topology.adjacency(g), h, k, n)
    assert r <= 1e-9


def test_quadratic_identity_detects_wrong_laplacian():
    g = topology.build_line_graph(3)
    ones = np.ones(3)
    # constant vectors: the pair sum is 0 but 2 h^T I k = 6
    assert topology.laplacian_quadratic_identity_check(np.eye(3), topology.adjacency(g), ones, ones, 1) == 6.0
