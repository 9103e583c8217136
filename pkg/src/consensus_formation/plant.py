"""Control-affine plant models and a fixed-step RK4 integrator.

Every model evaluates ``xdot = f(x) + g(x) u``. Drift and control-matrix
callables accept a single state of shape ``(n,)`` or a batch ``(k, n)``
and return ``(..., n)`` / ``(..., n, m)`` respectively, so the simulator can
advance all agents with one vectorized call.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ConfigurationError, DimensionError, NumericError, SingularityError

Array = NDArray[np.float64]
DriftFn = Callable[[Array], Array]
ControlMatrixFn = Callable[[Array], Array]

# Pitch guard for the ZYX Euler-rate transform; tan/sec blow up at pi/2.
PITCH_LIMIT = 0.5 * np.pi - 1e-9


@dataclass(frozen=True)
class ControlAffineModel:
    """Bundle of drift ``f`` and control matrix ``g`` with dimensions.

    ``input_bias`` converts model inputs to raw actuator inputs
    (``raw = u + input_bias``); it is zero except for the gravity-compensated
    quadrotor. ``position_index`` selects the physical position coordinates
    used for inter-agent distances. ``vector_field``, when given, is a fused
    evaluation of ``f(x) + g(x) u`` used on the integration hot path.
    """

    name: str
    state_dim: int
    input_dim: int
    drift: DriftFn
    control_matrix: ControlMatrixFn
    output_map: Callable[[Array], Array] | None = None
    input_bias: Array = field(default=None)  # type: ignore[assignment]
    position_index: tuple[int, ...] = ()
    params: object = None
    vector_field: Callable[[Array, Array], Array] | None = None

    def __post_init__(self) -> None:
        if self.input_bias is None:
            object.__setattr__(self, "input_bias", np.zeros(self.input_dim))
        if not self.position_index:
            object.__setattr__(self, "position_index", tuple(range(min(3, self.state_dim))))

    def derivative(self, x: ArrayLike, u: ArrayLike) -> Array:
        x = np.asarray(x, dtype=np.float64)
        u = np.asarray(u, dtype=np.float64)
        if x.shape[-1] != self.state_dim or u.shape[-1] != self.input_dim:
            raise DimensionError(
                f"{self.name}: state {x.shape} / input {u.shape} do not match n={self.state_dim}, m={self.input_dim}"
            )
        return self._rhs(x, u)

    def _rhs(self, x: Array, u: Array) -> Array:
        if self.vector_field is not None:
            return self.vector_field(x, u)
        return self.drift(x) + np.einsum("...ij,...j->...i", self.control_matrix(x), u)


def single_integrator(n: int) -> ControlAffineModel:
    """``xdot = u`` in R^n."""
    if n < 1:
        raise ConfigurationError("single integrator needs n >= 1")
    eye = np.eye(n)

    def drift(x: Array) -> Array:
        return np.zeros_like(np.asarray(x, dtype=np.float64))

    def control_matrix(x: Array) -> Array:
        x = np.asarray(x)
        return np.broadcast_to(eye, x.shape[:-1] + (n, n))

    return ControlAffineModel(f"single_integrator({n})", n, n, drift, control_matrix)


def linear_model(a: ArrayLike, b: ArrayLike | None = None) -> ControlAffineModel:
    """LTI plant ``f(x) = A x``, ``g(x) = B`` (B defaults to identity)."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    n = a.shape[0]
    if a.shape != (n, n):
        raise DimensionError(f"A must be square, got {a.shape}")
    b = np.eye(n) if b is None else np.atleast_2d(np.asarray(b, dtype=np.float64))
    if b.shape[0] != n:
        raise DimensionError(f"B must have {n} rows, got {b.shape}")
    m = b.shape[1]

    def drift(x: Array) -> Array:
        return np.asarray(x, dtype=np.float64) @ a.T

    def control_matrix(x: Array) -> Array:
        x = np.asarray(x)
        return np.broadcast_to(b, x.shape[:-1] + (n, m))

    return ControlAffineModel(f"linear({n}x{m})", n, m, drift, control_matrix)


@dataclass(frozen=True)
class QuadrotorParams:
    """Rigid-body parameters; defaults are the Crazyflie 2.1 values."""

    mass: float = 0.028
    arm_length: float = 0.046
    inertia_xx: float = 6.4893e-6
    inertia_yy: float = 16.4562e-6
    inertia_zz: float = 29.5435e-6
    gravity: float = 9.81

    def __post_init__(self) -> None:
        for name in ("mass", "arm_length", "inertia_xx", "inertia_yy", "inertia_zz", "gravity"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ConfigurationError(f"quadrotor parameter {name} must be positive, got {value}")

    @property
    def inertia(self) -> Array:
        return np.array([self.inertia_xx, self.inertia_yy, self.inertia_zz])

    @property
    def hover_thrust(self) -> float:
        return self.mass * self.gravity


# State layout of the 12-state quadrotor.
POS = slice(0, 3)
VEL = slice(3, 6)
ATT = slice(6, 9)
RATE = slice(9, 12)
YAW = 8


def _check_pitch(theta: Array) -> None:
    if np.any(np.abs(theta) >= PITCH_LIMIT):
        raise SingularityError(f"pitch {float(np.max(np.abs(theta))):.6f} rad reached the Euler singularity")


def euler_rate_transform(zeta: ArrayLike) -> Array:
    """ZYX matrix mapping body rates (p, q, r) to Euler-angle rates."""
    zeta = np.asarray(zeta, dtype=np.float64)
    phi, theta = zeta[..., 0], zeta[..., 1]
    _check_pitch(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    ct, tt = np.cos(theta), np.tan(theta)
    one = np.ones_like(phi)
    zero = np.zeros_like(phi)
    t = np.stack(
        [
            np.stack([one, sp * tt, cp * tt], axis=-1),
            np.stack([zero, cp, -sp], axis=-1),
            np.stack([zero, sp / ct, cp / ct], axis=-1),
        ],
        axis=-2,
    )
    return t


def body_z_axis(zeta: ArrayLike) -> Array:
    """Third column of the ZYX rotation body -> inertial."""
    zeta = np.asarray(zeta, dtype=np.float64)
    phi, theta, psi = zeta[..., 0], zeta[..., 1], zeta[..., 2]
    sp, cp = np.sin(phi), np.cos(phi)
    st, ct = np.sin(theta), np.cos(theta)
    ss, cs = np.sin(psi), np.cos(psi)
    return np.stack([cp * st * cs + sp * ss, cp * st * ss - sp * cs, cp * ct], axis=-1)


def quadrotor_model(params: QuadrotorParams | None = None, gravity_compensated: bool = True) -> ControlAffineModel:
    """12-state Newton-Euler quadrotor, input ``(thrust, tau_x, tau_y, tau_z)``.

    State is ``(x, y, z, vx, vy, vz, phi, theta, psi, p, q, r)``. With
    ``gravity_compensated`` the thrust input is measured relative to hover
    (``raw = u + (m g, 0, 0, 0)``) so that ``f(0) = 0``; otherwise the input
    is raw thrust and the drift carries ``-g`` on the vertical acceleration.
    """
    p = params or QuadrotorParams()
    inertia = p.inertia
    inv_inertia = 1.0 / inertia
    g = p.gravity
    e3 = np.array([0.0, 0.0, 1.0])

    def drift(x: Array) -> Array:
        x = np.asarray(x, dtype=np.float64)
        zeta = x[..., ATT]
        omega = x[..., RATE]
        out = np.empty_like(x)
        out[..., POS] = x[..., VEL]
        if gravity_compensated:
            out[..., VEL] = g * (body_z_axis(zeta) - e3)
        else:
            out[..., VEL] = -g * e3
        out[..., ATT] = np.einsum("...ij,...j->...i", euler_rate_transform(zeta), omega)
        out[..., RATE] = -inv_inertia * np.cross(omega, inertia * omega)
        return out

    def control_matrix(x: Array) -> Array:
        x = np.asarray(x, dtype=np.float64)
        gm = np.zeros(x.shape[:-1] + (12, 4))
        gm[..., VEL, 0] = body_z_axis(x[..., ATT]) / p.mass
        gm[..., 9, 1] = inv_inertia[0]
        gm[..., 10, 2] = inv_inertia[1]
        gm[..., 11, 3] = inv_inertia[2]
        return gm

    ixx, iyy, izz = inertia
    hover_acc = g if gravity_compensated else 0.0

    def vector_field(x: Array, u: Array) -> Array:
        # same equations as drift + control_matrix @ u, written out per component
        phi, theta, psi = x[..., 6], x[..., 7], x[..., 8]
        wp, wq, wr = x[..., 9], x[..., 10], x[..., 11]
        _check_pitch(theta)
        sp, cp = np.sin(phi), np.cos(phi)
        st, ct = np.sin(theta), np.cos(theta)
        ss, cs = np.sin(psi), np.cos(psi)
        acc = hover_acc + u[..., 0] / p.mass
        out = np.empty(np.broadcast_shapes(x.shape, u.shape[:-1] + (12,)))
        out[..., 0:3] = x[..., 3:6]
        out[..., 3] = acc * (cp * st * cs + sp * ss)
        out[..., 4] = acc * (cp * st * ss - sp * cs)
        out[..., 5] = acc * cp * ct - g
        rot = (sp * wq + cp * wr) / ct
        out[..., 6] = wp + st * rot
        out[..., 7] = cp * wq - sp * wr
        out[..., 8] = rot
        out[..., 9] = ((iyy - izz) * wq * wr + u[..., 1]) / ixx
        out[..., 10] = ((izz - ixx) * wr * wp + u[..., 2]) / iyy
        out[..., 11] = ((ixx - iyy) * wp * wq + u[..., 3]) / izz
        return out

    bias = np.array([p.hover_thrust, 0.0, 0.0, 0.0]) if gravity_compensated else np.zeros(4)
    name = "quadrotor" + ("" if gravity_compensated else "(raw-thrust)")
    return ControlAffineModel(name, 12, 4, drift, control_matrix, input_bias=bias,
                              position_index=(0, 1, 2), params=p, vector_field=vector_field)


def rigid_body_rotation(params: QuadrotorParams | None = None) -> ControlAffineModel:
    """Body-rate subsystem ``omega_dot = J^-1 (tau - omega x J omega)`` of the quadrotor."""
    p = params or QuadrotorParams()
    inertia = p.inertia
    inv_inertia = 1.0 / inertia
    gmat = np.diag(inv_inertia)

    def drift(w: Array) -> Array:
        w = np.asarray(w, dtype=np.float64)
        return -inv_inertia * np.cross(w, inertia * w)

    def control_matrix(w: Array) -> Array:
        w = np.asarray(w)
        return np.broadcast_to(gmat, w.shape[:-1] + (3, 3))

    return ControlAffineModel("rigid_body_rotation", 3, 3, drift, control_matrix, params=p)


def rotational_energy(omega: ArrayLike, params: QuadrotorParams | None = None) -> float:
    p = params or QuadrotorParams()
    w = np.asarray(omega, dtype=np.float64)
    return float(0.5 * np.sum(p.inertia * w * w))


def step_rk4(model: ControlAffineModel, x: ArrayLike, u: ArrayLike, dt: float) -> Array:
    """One classical RK4 step with the input held constant over ``dt``."""
    if not dt > 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    x = np.asarray(x, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(u))):
        raise NumericError("non-finite state or input passed to step_rk4")
    def rhs(s: Array) -> Array:
        return model._rhs(s, u)

    k1 = rhs(x)
    k2 = rhs(x + 0.5 * dt * k1)
    k3 = rhs(x + 0.5 * dt * k2)
    k4 = rhs(x + dt * k3)
    out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NumericError("RK4 step produced non-finite state")
    return out


def linearize(model: ControlAffineModel, x0: ArrayLike | None = None, eps: float = 1e-6) -> tuple[Array, Array]:
    """Central-difference Jacobian of the drift and ``g(x0)``."""
    n = model.state_dim
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=np.float64)
    a = np.empty((n, n))
    for k in range(n):
        dx = np.zeros(n)
        dx[k] = eps
        a[:, k] = (model.drift(x0 + dx) - model.drift(x0 - dx)) / (2 * eps)
    return a, np.array(model.control_matrix(x0), dtype=np.float64)
