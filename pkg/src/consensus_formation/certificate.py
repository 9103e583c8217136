"""Validation and construction of the consensus gain P.

The operative certificate is the pairwise goal-state inequality
``d_ij^T P (f(xi_i) - f(xi_j)) <= 0`` over every formation edge. The block
matrix inequality built from ``D``, ``Delta f`` and ``I_N kron P^-1`` is
assembled for diagnostics only: its upper-left block is zero, so with any
nonzero off-diagonal coupling it cannot be negative semidefinite.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from . import linalg
from .errors import CertificateError, DimensionError
from .formation import FormationSpec, assemble_D, assemble_delta_f
from .plant import ControlAffineModel, QuadrotorParams, linearize
from .topology import Edge, GroundedLaplacian

Array = NDArray[np.float64]

PAIRWISE_TOL = 1e-12
SAMPLED_TOL = 1e-12


@dataclass
class LMIAssembly:
    matrix: Array
    eig_min: float
    eig_max: float
    symmetric: bool

    def to_dict(self) -> dict:
        return {"size": int(self.matrix.shape[0]), "eig_min": self.eig_min,
                "eig_max": self.eig_max, "symmetric": self.symmetric}


@dataclass
class CertificateReport:
    P: Array
    pairwise_residuals: dict[Edge, float]
    positive_definite: bool
    sampled_assumption5_max: float | None = None
    lmi: LMIAssembly | None = None
    reasons: list[str] = field(default_factory=list)

    @property
    def verdict(self) -> bool:
        return not self.reasons

    def to_dict(self) -> dict:
        return {
            "verdict": "pass" if self.verdict else "fail",
            "reasons": list(self.reasons),
            "positive_definite": self.positive_definite,
            "P_diagonal": [float(v) for v in np.diag(self.P)],
            "P_is_identity": bool(np.array_equal(self.P, np.eye(self.P.shape[0]))),
            "pairwise_residuals": {f"{i}-{j}": r for (i, j), r in self.pairwise_residuals.items()},
            "max_pairwise_residual": max(self.pairwise_residuals.values(), default=0.0),
            "sampled_assumption5_max": self.sampled_assumption5_max,
            "lmi": None if self.lmi is None else self.lmi.to_dict(),
        }


def pairwise_residual(p: Array, spec: FormationSpec, f_goals: Array, i: int, j: int) -> float:
    return float(spec.offset(i, j) @ p @ (f_goals[i] - f_goals[j]))


def pairwise_check(p: ArrayLike, spec: FormationSpec, model: ControlAffineModel,
                   tol: float = PAIRWISE_TOL) -> CertificateReport:
    """Evaluate the pairwise inequality on every formation edge.

    Passes iff ``P`` is positive definite and every residual is ``<= tol``.

    Raises:
        SymmetryError: if ``P`` is not symmetric.
    """
    p = linalg.check_symmetric(p)
    if p.shape[0] != model.state_dim or spec.state_dim != model.state_dim:
        raise DimensionError(f"P is {p.shape}, model n={model.state_dim}, formation n={spec.state_dim}")
    f_goals = model.drift(spec.goal_states)
    residuals = {(i, j): pairwise_residual(p, spec, f_goals, i, j) for i, j in spec.formation_edges}
    pd = linalg.is_positive_definite(p)
    reasons = [] if pd else ["P is not positive definite"]
    reasons += [f"edge {i}-{j}: residual {r:.3e} > {tol:g}" for (i, j), r in residuals.items() if r > tol]
    return CertificateReport(p, residuals, pd, reasons=reasons)


def assemble_lmi(p: ArrayLike, spec: FormationSpec, model: ControlAffineModel) -> LMIAssembly:
    """Assemble ``[[0, Pbar^(1/2)], [Pbar^(1/2), -Delta_f D^T]]`` with ``Pbar = I_N kron P^-1``.

    Eigenvalue extremes are those of the symmetric part, because
    ``Delta_f D^T`` is in general not symmetric.
    """
    p = linalg.check_symmetric(p)
    if not linalg.is_positive_definite(p):
        raise CertificateError("assemble_lmi requires a positive definite P")
    n_f = spec.agent_count - 1
    p_bar = linalg.kron(np.eye(n_f), linalg.spd_inverse(p))
    root = linalg.sym_sqrt(p_bar)
    lower = -assemble_delta_f(spec, model) @ assemble_D(spec).T
    size = root.shape[0]
    k = np.block([[np.zeros((size, size)), root], [root, lower]])
    sym = 0.5 * (k + k.T)
    w = np.linalg.eigvalsh(sym)
    return LMIAssembly(k, float(w[0]), float(w[-1]), bool(np.max(np.abs(k - k.T)) <= linalg.SYMMETRY_TOL))


def extract_P(p_bar: ArrayLike, n: int) -> Array:
    """Recover P from the inverse of the upper-left n x n block of ``Pbar``."""
    pb = linalg.check_symmetric(p_bar)
    if pb.shape[0] % n:
        raise DimensionError(f"Pbar of size {pb.shape[0]} is not a multiple of n={n}")
    block = pb[:n, :n]
    try:
        p = np.linalg.inv(block)
    except np.linalg.LinAlgError:
        raise CertificateError("upper-left block of Pbar is singular") from None
    if not np.all(np.isfinite(p)) or np.linalg.cond(block) > 1e14:
        raise CertificateError("upper-left block of Pbar is singular")
    return 0.5 * (p + p.T)


def sampled_assumption5_check(p: ArrayLike, model: ControlAffineModel, lower: ArrayLike,
                              upper: ArrayLike, samples: int = 1000, seed: int = 0) -> float:
    """Largest ``(x_i - x_j)^T P (f(x_i) - f(x_j))`` over seeded random pairs in a box.

    A positive value refutes the drift inequality on the box; a non-positive
    value is evidence only.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    p = linalg.as_matrix(p)
    lo = np.broadcast_to(np.asarray(lower, dtype=np.float64), (model.state_dim,))
    hi = np.broadcast_to(np.asarray(upper, dtype=np.float64), (model.state_dim,))
    rng = np.random.default_rng(seed)
    xi = rng.uniform(lo, hi, size=(samples, model.state_dim))
    xj = rng.uniform(lo, hi, size=(samples, model.state_dim))
    df = model.drift(xi) - model.drift(xj)
    vals = np.einsum("ki,ij,kj->k", xi - xj, p, df)
    return float(np.max(vals))


def state_envelope(states: ArrayLike, inflate: float = 0.2) -> tuple[Array, Array]:
    """Bounding box of a set of states, widened by ``inflate`` of its half-width on each side."""
    x = np.asarray(states, dtype=np.float64).reshape(-1, np.shape(states)[-1])
    lo, hi = x.min(axis=0), x.max(axis=0)
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    return mid - (1 + inflate) * half, mid + (1 + inflate) * half


def certify(p: ArrayLike, spec: FormationSpec, model: ControlAffineModel,
            domain: tuple[ArrayLike, ArrayLike] | None = None, samples: int = 1000,
            seed: int = 0) -> CertificateReport:
    """Pairwise check plus, when a domain is given, the sampled drift check and LMI diagnostics."""
    report = pairwise_check(p, spec, model)
    if domain is not None:
        report.sampled_assumption5_max = sampled_assumption5_check(p, model, domain[0], domain[1], samples, seed)
    if report.positive_definite:
        report.lmi = assemble_lmi(p, spec, model)
    return report


def diagonal_candidate_search(spec: FormationSpec, model: ControlAffineModel,
                              grid: Sequence[float] = (0.5, 1.0, 2.0),
                              domain: tuple[ArrayLike, ArrayLike] | None = None,
                              samples: int = 200, seed: int = 0,
                              max_candidates: int = 100_000,
                              extra: Iterable[ArrayLike] = ()) -> Array | None:
    """First diagonal P (identity tried first, then user candidates, then the grid) that passes.

    A candidate passes when the pairwise check passes and, if ``domain``
    is supplied, the sampled drift check finds no positive residual.
    Returns ``None`` when every candidate fails.
    """
    n = model.state_dim
    values = [float(v) for v in grid]
    if any(v <= 0 for v in values):
        raise ValueError("grid values must be positive")

    def candidates():
        yield np.eye(n)
        for c in extra:
            yield linalg.as_matrix(c)
        for diag in itertools.islice(itertools.product(values, repeat=n), max_candidates):
            yield np.diag(diag)

    for cand in candidates():
        if not pairwise_check(cand, spec, model).verdict:
            continue
        if domain is not None and sampled_assumption5_check(cand, model, domain[0], domain[1], samples, seed) > SAMPLED_TOL:
            continue
        return cand
    return None


def riccati_gain(model: ControlAffineModel, gl: GroundedLaplacian,
                 state_weights: ArrayLike | None = None, scale: float = 0.5,
                 x_eq: ArrayLike | None = None) -> Array:
    """Gain from the algebraic Riccati equation of the plant linearized at ``x_eq``.

    Solves ``A^T X + X A - X B B^T X + Q = 0`` (unit input weight, so that
    ``-B^T X`` is the LQR feedback) and returns ``P = scale / lambda_1 * X``
    with ``lambda_1`` the smallest grounded-Laplacian eigenvalue. For every
    Laplacian eigenvalue ``lambda`` the linearized error mode
    ``A - (scale lambda / lambda_1) B B^T X`` is Hurwitz when ``scale >= 1/2``.
    """
    a, b = linearize(model, x_eq)
    q = np.eye(model.state_dim) if state_weights is None else np.diag(np.asarray(state_weights, dtype=np.float64))
    x = scipy.linalg.solve_continuous_are(a, b, q, np.eye(model.input_dim))
    lam1 = float(gl.eigenvalues()[0])
    p = (scale / lam1) * 0.5 * (x + x.T)
    if not linalg.is_positive_definite(p):
        raise CertificateError("Riccati solution is not positive definite; check state weights")
    return p


def gain_from_feedback(k: ArrayLike, b: ArrayLike, margin: float = 1.0, tol: float = 1e-9) -> Array:
    """Symmetric positive-definite P with ``b.T @ P == k``.

    ``b`` must have exactly one nonzero entry per column, in distinct rows
    (the quadrotor's ``g`` at level attitude has this shape). Those rows of
    P are fixed by ``k``; the remaining block is set to
    ``C S^-1 C^T + margin I`` so that P is positive definite whenever the
    fixed block ``S`` is.

    Raises:
        CertificateError: if ``b`` lacks the selector structure, the fixed
            block is not symmetric, or it is not positive definite.
    """
    k = linalg.as_matrix(k)
    b = linalg.as_matrix(b)
    n, m = b.shape
    if k.shape != (m, n):
        raise DimensionError(f"feedback must be {m} x {n}, got {k.shape}")
    rows = []
    for j in range(m):
        nz = np.flatnonzero(np.abs(b[:, j]) > 0)
        if nz.size != 1:
            raise CertificateError(f"column {j} of g has {nz.size} nonzero entries, need exactly one")
        rows.append(int(nz[0]))
    if len(set(rows)) != m:
        raise CertificateError("columns of g must act on distinct state rows")
    p = np.zeros((n, n))
    for j, r in enumerate(rows):
        p[r, :] = k[j, :] / b[r, j]
    fixed = np.array(rows)
    s = p[np.ix_(fixed, fixed)]
    if np.max(np.abs(s - s.T)) > tol * max(1.0, float(np.max(np.abs(s)))):
        raise CertificateError("feedback is incompatible with a symmetric P on the actuated rows")
    s = 0.5 * (s + s.T)
    if not linalg.is_positive_definite(s):
        raise CertificateError("actuated block of P is not positive definite")
    free = np.array([i for i in range(n) if i not in rows], dtype=int)
    c = p[np.ix_(fixed, free)].T
    p[np.ix_(free, fixed)] = c
    p[np.ix_(fixed, fixed)] = s
    p[np.ix_(free, free)] = c @ np.linalg.solve(s, c.T) + margin * np.eye(free.size)
    return 0.5 * (p + p.T)


@dataclass(frozen=True)
class CascadeGains:
    """Linearized cascaded PD gains for the gravity-compensated quadrotor."""

    kp_position: float = 4.0
    kd_position: float = 4.0
    kp_altitude: float = 4.0
    kd_altitude: float = 4.0
    kp_attitude: float = 100.0
    kd_attitude: float = 20.0
    kp_yaw: float = 25.0
    kd_yaw: float = 10.0


def quadrotor_cascade_feedback(params: QuadrotorParams, gains: CascadeGains = CascadeGains()) -> Array:
    """4 x 12 feedback ``K`` of a hover-linearized cascade; ``u = -K z``."""
    g = params.gravity
    ixx, iyy, izz = params.inertia
    kk = np.zeros((4, 12))
    kk[0, 2] = params.mass * gains.kp_altitude
    kk[0, 5] = params.mass * gains.kd_altitude
    ka = gains.kp_attitude
    # roll tracks phi_des = (kp y + kd vy) / g, pitch tracks theta_des = -(kp x + kd vx) / g
    kk[1, [1, 4, 6, 9]] = ixx * np.array([-ka * gains.kp_position / g, -ka * gains.kd_position / g,
                                          ka, gains.kd_attitude])
    kk[2, [0, 3, 7, 10]] = iyy * np.array([ka * gains.kp_position / g, ka * gains.kd_position / g,
                                           ka, gains.kd_attitude])
    kk[3, [8, 11]] = izz * np.array([gains.kp_yaw, gains.kd_yaw])
    return kk


def cascade_gain(model: ControlAffineModel, gl: GroundedLaplacian,
                 gains: CascadeGains = CascadeGains(), margin: float = 1.0) -> Array:
    """Consensus gain P whose feedback ``g(0)^T P`` is the cascade scaled by ``1 / lambda_1``.

    Scaling by the smallest grounded-Laplacian eigenvalue keeps every
    Laplacian mode's effective loop gain at least that of the nominal cascade.
    """
    if not isinstance(model.params, QuadrotorParams) or model.state_dim != 12:
        raise CertificateError(f"cascade gain needs the quadrotor model, got {model.name}")
    lam1 = float(gl.eigenvalues()[0])
    kk = quadrotor_cascade_feedback(model.params, gains) / lam1
    _, b = linearize(model)
    return gain_from_feedback(kk, b, margin)
