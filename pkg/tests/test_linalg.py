from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from consensus_formation import linalg
from consensus_formation.errors import CertificateError, DimensionError, SymmetryError


def test_kron_blocks_match_manual_loop():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(3, 2))
    b = rng.normal(size=(2, 4))
    k = linalg.kron(a, b)
    assert k.shape == (6, 8)
    for i in range(3):
        for j in range(2):
            assert np.array_equal(k[2 * i:2 * i + 2, 4 * j:4 * j + 4], a[i, j] * b)


def test_kron_identity_factor_is_block_diagonal():
    p = np.array([[2.0, 1.0], [1.0, 3.0]])
    k = linalg.kron(np.eye(3), p)
    assert np.array_equal(k[2:4, 2:4], p)
    assert np.all(k[0:2, 2:6] == 0)


def test_check_symmetric_rejects_asymmetry_and_shape():
    with pytest.raises(SymmetryError):
        linalg.check_symmetric([[1.0, 2.0], [2.0 + 1e-9, 1.0]])
    with pytest.raises(DimensionError):
        linalg.check_symmetric(np.ones((2, 3)))
    linalg.check_symmetric([[1.0, 2.0], [2.0 + 1e-14, 1.0]])


def test_positive_definite_decisions():
    assert linalg.is_positive_definite(np.eye(4))
    assert not linalg.is_positive_definite(np.diag([1.0, 0.0]))
    assert not linalg.is_positive_definite(np.array([[1.0, 2.0], [2.0, 1.0]]))
    assert linalg.is_negative_definite(-np.eye(2))
    assert linalg.is_negative_semidefinite(np.diag([-1.0, 0.0]))
    assert not linalg.is_negative_semidefinite(np.diag([-1.0, 1e-3]))


def test_sym_sqrt_squares_back():
    rng = np.random.default_rng(1)
    q = rng.normal(size=(5, 5))
    s = q @ q.T + 0.5 * np.eye(5)
    r = linalg.sym_sqrt(s)
    assert np.allclose(r, r.T)
    assert np.allclose(r @ r, s, atol=1e-12)
    assert np.all(np.linalg.eigvalsh(r) > 0)


def test_sym_sqrt_names_offending_eigenvalue():
    with pytest.raises(CertificateError, match="eigenvalue -1.000e\\+00"):
        linalg.sym_sqrt(np.diag([2.0, -1.0]))


def test_spd_inverse_against_numpy():
    rng = np.random.default_rng(2)
    q = rng.normal(size=(4, 4))
    s = q @ q.T + np.eye(4)
    assert np.allclose(linalg.spd_inverse(s), np.linalg.inv(s), atol=1e-12)
    with pytest.raises(CertificateError):
        linalg.spd_inverse(np.diag([1.0, -1.0]))


def test_schur_known_cases():
    # [[-2, 1], [1, -2]] is negative definite; both complements are -1.5
    r = linalg.schur_negdef_equivalent([[-2.0]], [[1.0]], [[-2.0]])
    assert r.full and r.via_k11 and r.via_k22 and r.consistent
    # [[-1, 2], [2, -1]] has eigenvalues 1 and -3
    r = linalg.schur_negdef_equivalent([[-1.0]], [[2.0]], [[-1.0]])
    assert not (r.full or r.via_k11 or r.via_k22)


def test_schur_singular_block_is_flagged():
    r = linalg.schur_negdef_equivalent([[0.0]], [[1.0]], [[-1.0]])
    assert r.k11_singular and not r.via_k11
    assert not r.full


def test_schur_rejects_bad_block_shapes():
    with pytest.raises(DimensionError):
        linalg.schur_negdef_equivalent(np.eye(2), np.ones((3, 1)), np.eye(1))


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 2**31 - 1), st.booleans())
def test_schur_statements_agree_with_spectrum(a, b, seed, definite):
    rng = np.random.default_rng(seed)
    q = rng.normal(size=(a + b, a + b))
    s = -(q @ q.T) - 0.1 * np.eye(a + b) if definite else q + q.T
    r = linalg.schur_negdef_equivalent(s[:a, :a], s[:a, a:], s[a:, a:])
    truth = np.linalg.eigvalsh(s)[-1] < -linalg.default_pd_tol(s)
    assert r.full == truth
    if not (r.k11_singular or r.k22_singular):
        assert r.consistent
