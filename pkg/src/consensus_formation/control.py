"""Consensus errors, the follower/leader control laws and their ensemble forms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from . import linalg
from .errors import CertificateError, DimensionError
from .plant import ControlAffineModel
from .topology import GroundedLaplacian, LeaderFollowerGraph

Array = NDArray[np.float64]


@dataclass(frozen=True)
class ConsensusGain:
    """Symmetric positive-definite gain ``P`` of the consensus law."""

    P: Array

    def __post_init__(self) -> None:
        p = linalg.check_symmetric(self.P)
        if not linalg.is_positive_definite(p):
            raise CertificateError("consensus gain P must be positive definite")
        p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "P", p)

    @property
    def dim(self) -> int:
        return self.P.shape[0]


def consensus_error(i: int, states: ArrayLike, graph: LeaderFollowerGraph) -> Array:
    """``e_i = sum_{j in N_i} (x_i - x_j)`` read straight off the neighbor set."""
    x = np.asarray(states, dtype=np.float64)
    if x.shape[0] != graph.vertex_count:
        raise DimensionError(f"expected states for {graph.vertex_count} agents, got {x.shape[0]}")
    e = np.zeros(x.shape[1])
    for j in graph.neighbors(i):
        e += x[i] - x[j]
    return e


def stacked_consensus_error(follower_states: ArrayLike, leader_state: ArrayLike,
                            gl: GroundedLaplacian, injection: ArrayLike) -> Array:
    """Follower errors in block form: ``(L_g kron I_n) x - b kron x_L`` (length N n)."""
    x = np.asarray(follower_states, dtype=np.float64).reshape(gl.size, -1)
    n = x.shape[1]
    b = np.asarray(injection, dtype=np.float64)
    return np.kron(gl.matrix, np.eye(n)) @ x.ravel() - np.kron(b, np.asarray(leader_state, dtype=np.float64))


def _check_law_dims(e: Array, d: Array, model: ControlAffineModel, gain: ConsensusGain) -> None:
    n = model.state_dim
    if e.shape[-1] != n or d.shape[-1] != n or gain.dim != n:
        raise DimensionError(f"state dimension mismatch: e {e.shape}, d {d.shape}, P {gain.P.shape}, n={n}")


def follower_control(e_i: ArrayLike, d_i: ArrayLike, x_i: ArrayLike,
                     model: ControlAffineModel, gain: ConsensusGain) -> Array:
    """``u_i = -g(x_i)^T P (e_i + d_i)``.

    Accepts single agents or a leading batch axis.
    """
    e = np.asarray(e_i, dtype=np.float64)
    d = np.asarray(d_i, dtype=np.float64)
    _check_law_dims(e, d, model, gain)
    g = model.control_matrix(np.asarray(x_i, dtype=np.float64))
    return -np.einsum("...ij,...i->...j", g, (e + d) @ gain.P)


def leader_control(e_l: ArrayLike, d_l: ArrayLike, x_l: ArrayLike, model: ControlAffineModel,
                   gain: ConsensusGain, u_track: ArrayLike) -> Array:
    """Consensus term of the follower law plus the independent tracking input."""
    u_track = np.asarray(u_track, dtype=np.float64)
    if u_track.shape != (model.input_dim,):
        raise DimensionError(f"u_track must have shape ({model.input_dim},), got {u_track.shape}")
    return follower_control(e_l, d_l, x_l, model, gain) + u_track


def block_control_matrix(model: ControlAffineModel, x: ArrayLike) -> Array:
    """Block-diagonal ``G(x) = diag(g(x_1), ..., g(x_N))`` of size (N n) x (N m)."""
    xs = np.asarray(x, dtype=np.float64).reshape(-1, model.state_dim)
    return scipy.linalg.block_diag(*[np.asarray(model.control_matrix(xi)) for xi in xs])


def block_drift(model: ControlAffineModel, x: ArrayLike) -> Array:
    xs = np.asarray(x, dtype=np.float64).reshape(-1, model.state_dim)
    return np.concatenate([model.drift(xi) for xi in xs])


def ensemble_control(x: ArrayLike, e: ArrayLike, d: ArrayLike, model: ControlAffineModel,
                     gain: ConsensusGain) -> Array:
    """Stacked law ``u = -G(x)^T (I_N kron P) (e + d)`` (length N m)."""
    x = np.asarray(x, dtype=np.float64).ravel()
    e = np.asarray(e, dtype=np.float64).ravel()
    d = np.asarray(d, dtype=np.float64).ravel()
    if not (x.size == e.size == d.size) or x.size % model.state_dim:
        raise DimensionError(f"inconsistent stacked sizes x={x.size}, e={e.size}, d={d.size}")
    count = x.size // model.state_dim
    big_g = block_control_matrix(model, x)
    return -big_g.T @ np.kron(np.eye(count), gain.P) @ (e + d)


def ensemble_error_rate(follower_rates: ArrayLike, leader_rate: ArrayLike,
                        gl: GroundedLaplacian, injection: ArrayLike) -> Array:
    """``e_dot = (L_g kron I_n) x_dot - b kron x_L_dot``.

    With a stationary leader this reduces to ``(L_g kron I_n) x_dot``.
    """
    return stacked_consensus_error(follower_rates, leader_rate, gl, injection)


def lyapunov_value(e: ArrayLike, d: ArrayLike, m: ArrayLike, p: ArrayLike) -> float:
    """``V = 1/2 (e + d)^T (M kron P) (e + d)``."""
    z = np.asarray(e, dtype=np.float64).ravel() + np.asarray(d, dtype=np.float64).ravel()
    mp = np.kron(linalg.as_matrix(m), linalg.as_matrix(p))
    if mp.shape[0] != z.size:
        raise DimensionError(f"M kron P has size {mp.shape[0]} but e + d has {z.size}")
    return 0.5 * float(z @ mp @ z)


def formation_error(e: ArrayLike, d: ArrayLike) -> Array:
    """Componentwise ``d - e``."""
    return np.asarray(d, dtype=np.float64) - np.asarray(e, dtype=np.float64)


def drift_inner_product(e: ArrayLike, d: ArrayLike, p: ArrayLike, drift_stack: ArrayLike) -> float:
    """``(e + d)^T (I_N kron P) F(x)``, the quantity bounded above by zero in the drift inequality."""
    z = (np.asarray(e, dtype=np.float64) + np.asarray(d, dtype=np.float64)).reshape(-1, np.shape(p)[0])
    f = np.asarray(drift_stack, dtype=np.float64).reshape(z.shape)
    return float(np.sum((z @ np.asarray(p)) * f))

