"""Small dense linear-algebra helpers.

All spectra are computed with symmetric routines (``numpy.linalg.eigh``);
every matrix that needs a spectrum here is symmetric.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import CertificateError, DimensionError, SymmetryError

SYMMETRY_TOL = 1e-12
PD_RELATIVE_TOL = 1e-10

Matrix = NDArray[np.float64]


def as_matrix(a: ArrayLike) -> Matrix:
    m = np.atleast_2d(np.asarray(a, dtype=np.float64))
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {m.shape}")
    return m


def check_symmetric(s: ArrayLike, tol: float = SYMMETRY_TOL) -> Matrix:
    """Return ``s`` as a float matrix, raising if it is not square and symmetric."""
    m = as_matrix(s)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"matrix must be square, got {m.shape}")
    asym = float(np.max(np.abs(m - m.T))) if m.size else 0.0
    if asym > tol:
        raise SymmetryError(f"matrix is not symmetric (max |A - A^T| = {asym:.3e})")
    return m


def kron(a: ArrayLike, b: ArrayLike) -> Matrix:
    """Kronecker product; block (i, j) of the result is ``a[i, j] * b``."""
    return np.kron(as_matrix(a), as_matrix(b))


def sym_eigvalsh(s: ArrayLike) -> NDArray[np.float64]:
    """Ascending eigenvalues of a symmetric matrix."""
    return np.linalg.eigvalsh(check_symmetric(s))


def default_pd_tol(s: Matrix) -> float:
    scale = float(np.max(np.abs(np.diag(s)))) if s.size else 0.0
    return PD_RELATIVE_TOL * max(scale, 1.0)


def is_positive_definite(s: ArrayLike, tol: float | None = None) -> bool:
    """True iff the smallest eigenvalue of symmetric ``s`` exceeds ``tol``.

    ``tol`` defaults to 1e-10 relative to the largest diagonal magnitude.
    ``tol > 0`` gives a strict test; ``tol = 0`` accepts a zero eigenvalue
    only up to the sign of round-off, i.e. ``lambda_min > 0``.
    Use :func:`is_negative_semidefinite` for the non-strict ``<= 0`` form.
    """
    m = check_symmetric(s)
    if tol is None:
        tol = default_pd_tol(m)
    return bool(np.linalg.eigvalsh(m)[0] > tol)


def is_negative_definite(s: ArrayLike, tol: float | None = None) -> bool:
    return is_positive_definite(-as_matrix(s), tol)


def is_negative_semidefinite(s: ArrayLike, tol: float = 0.0) -> bool:
    """``lambda_max(s) <= tol``: the non-strict ``s <= 0`` reading."""
    return bool(np.linalg.eigvalsh(check_symmetric(s))[-1] <= tol)


def sym_sqrt(s: ArrayLike) -> Matrix:
    """Symmetric positive-definite square root ``R`` with ``R @ R == s``.

    Raises:
        CertificateError: if ``s`` is not positive definite; the message names
            the offending eigenvalue.
    """
    m = check_symmetric(s)
    w, q = np.linalg.eigh(m)
    tol = default_pd_tol(m)
    if w[0] <= tol:
        raise CertificateError(
            f"sym_sqrt requires a positive definite matrix; eigenvalue {w[0]:.3e} <= {tol:.1e}"
        )
    r = (q * np.sqrt(w)) @ q.T
    return 0.5 * (r + r.T)


def spd_inverse(s: ArrayLike) -> Matrix:
    """Inverse of a symmetric positive-definite matrix via Cholesky."""
    m = check_symmetric(s)
    try:
        c = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise CertificateError(f"matrix is not positive definite: {exc}") from None
    ci = np.linalg.solve(c, np.eye(m.shape[0]))
    inv = ci.T @ ci
    return 0.5 * (inv + inv.T)


class SchurStatements(NamedTuple):
    """Truth values of the three equivalent negative-definiteness statements.

    ``k11_singular`` / ``k22_singular`` flag that the inverse needed by the
    second / third statement does not exist, in which case that statement
    is reported false.
    """

    full: bool
    via_k11: bool
    via_k22: bool
    k11_singular: bool = False
    k22_singular: bool = False

    @property
    def consistent(self) -> bool:
        return self.full == self.via_k11 == self.via_k22


def _invert_or_none(a: Matrix) -> Matrix | None:
    if a.size == 0:
        return None
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > 1e14:
        return None
    return np.linalg.inv(a)


def schur_negdef_equivalent(
    k11: ArrayLike, k12: ArrayLike, k22: ArrayLike, tol: float | None = None
) -> SchurStatements:
    """Evaluate K < 0 directly and through both Schur complements.

    K is assembled as ``[[k11, k12], [k12.T, k22]]`` and must be symmetric.
    """
    a = as_matrix(k11)
    b = as_matrix(k12)
    c = as_matrix(k22)
    if a.shape[0] != a.shape[1] or c.shape[0] != c.shape[1]:
        raise DimensionError("diagonal blocks must be square")
    if b.shape != (a.shape[0], c.shape[0]):
        raise DimensionError(
            f"off-diagonal block has shape {b.shape}, expected {(a.shape[0], c.shape[0])}"
        )
    k = np.block([[a, b], [b.T, c]])
    check_symmetric(k)

    full = is_negative_definite(k, tol)

    a_inv = _invert_or_none(a)
    if a_inv is None:
        via_k11 = False
    else:
        s = c - b.T @ a_inv @ b
        via_k11 = is_negative_definite(a, tol) and is_negative_definite(0.5 * (s + s.T), tol)

    c_inv = _invert_or_none(c)
    if c_inv is None:
        via_k22 = False
    else:
        s = a - b @ c_inv @ b.T
        via_k22 = is_negative_definite(c, tol) and is_negative_definite(0.5 * (s + s.T), tol)

    return SchurStatements(full, via_k11, via_k22, a_inv is None, c_inv is None)
