"""Leader references and the leader's independent tracking controller."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .plant import ATT, POS, RATE, VEL, YAW, ControlAffineModel, QuadrotorParams

Array = NDArray[np.float64]


def figure_eight_reference(t: float, amplitude: float, period: float, altitude: float,
                           n: int = 12) -> Array:
    """Goal state on the figure-eight ``x = A sin(wt)``, ``y = A/2 sin(2wt)``, ``z = altitude``.

    For ``n = 12`` the velocity slots hold the analytic derivatives and
    attitude/rate goals stay zero; for ``n = 3`` only the position is returned.
    """
    return FigureEight(amplitude, period, altitude).state(t, n)


@dataclass(frozen=True)
class FigureEight:
    amplitude: float = 1.0
    period: float = 20.0
    altitude: float = 1.0

    def __post_init__(self) -> None:
        if not self.period > 0:
            raise ValueError("figure-eight period must be positive")

    def _pva(self, t: float) -> tuple[Array, Array, Array]:
        w = 2.0 * np.pi / self.period
        a = self.amplitude
        s1, c1 = np.sin(w * t), np.cos(w * t)
        s2, c2 = np.sin(2 * w * t), np.cos(2 * w * t)
        pos = np.array([a * s1, 0.5 * a * s2, self.altitude])
        vel = np.array([a * w * c1, a * w * c2, 0.0])
        acc = np.array([-a * w * w * s1, -2.0 * a * w * w * s2, 0.0])
        return pos, vel, acc

    def state(self, t: float, n: int = 12) -> Array:
        pos, vel, _ = self._pva(t)
        return _embed(pos, vel, n)

    def rate(self, t: float, n: int = 12) -> Array:
        _, vel, acc = self._pva(t)
        return _embed(vel, acc, n)


@dataclass(frozen=True)
class StationaryReference:
    point: tuple[float, ...] = (0.0, 0.0, 1.0)

    def state(self, t: float, n: int = 12) -> Array:
        return _embed(np.asarray(self.point, dtype=np.float64), np.zeros(3), n)

    def rate(self, t: float, n: int = 12) -> Array:
        return np.zeros(n)


def _embed(first: Array, second: Array, n: int) -> Array:
    out = np.zeros(n)
    if n == 12:
        out[POS] = first[:3]
        out[VEL] = second[:3]
    else:
        k = min(n, first.size)
        out[:k] = first[:k]
    return out


@dataclass(frozen=True)
class TrackingGains:
    """Cascaded PD gains (quadrotor) and the proportional gain ``k`` (integrator)."""

    kp_position: float = 4.0
    kd_position: float = 4.0
    kp_attitude: float = 400.0
    kd_attitude: float = 40.0
    kp_yaw: float = 100.0
    kd_yaw: float = 20.0
    max_tilt: float = 0.6
    k: float = 1.0


def leader_tracking_control(x_l: ArrayLike, ref: ArrayLike, ref_rate: ArrayLike,
                            model: ControlAffineModel, gains: TrackingGains = TrackingGains()) -> Array:
    """Raw tracking input for the leader.

    Quadrotor: outer position PD with hover feed-forward yields a desired
    acceleration, hence thrust and roll/pitch commands; an inner attitude PD
    yields body torques. Returned as raw ``(thrust, tau_x, tau_y, tau_z)``.
    Integrator-type models: ``u = ref_rate - k (x - ref)``.
    """
    x = np.asarray(x_l, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    ref_rate = np.asarray(ref_rate, dtype=np.float64)
    if isinstance(model.params, QuadrotorParams) and model.state_dim == 12:
        return _quadrotor_tracking(x, ref, ref_rate, model.params, gains)
    if model.input_dim != model.state_dim:
        raise ValueError(f"no tracking law for model {model.name}")
    return ref_rate - gains.k * (x - ref)


def _quadrotor_tracking(x: Array, ref: Array, ref_rate: Array, p: QuadrotorParams,
                        gains: TrackingGains) -> Array:
    g = p.gravity
    acc = (ref_rate[VEL] + gains.kp_position * (ref[POS] - x[POS])
           + gains.kd_position * (ref[VEL] - x[VEL]))
    acc[2] += g
    phi, theta, psi = x[ATT]
    psi_ref = ref[YAW]
    thrust_dir = acc / np.linalg.norm(acc)
    sp, cp = np.sin(psi_ref), np.cos(psi_ref)
    phi_des = np.arcsin(np.clip(thrust_dir[0] * sp - thrust_dir[1] * cp, -1.0, 1.0))
    theta_des = np.arctan2(thrust_dir[0] * cp + thrust_dir[1] * sp, thrust_dir[2])
    lim = gains.max_tilt
    if abs(phi_des) > lim or abs(theta_des) > lim:
        warnings.warn(f"tilt command saturated to +-{lim:.3f} rad", RuntimeWarning, stacklevel=3)
        phi_des = float(np.clip(phi_des, -lim, lim))
        theta_des = float(np.clip(theta_des, -lim, lim))
    b3 = np.array([np.cos(phi) * np.sin(theta) * np.cos(psi) + np.sin(phi) * np.sin(psi),
                   np.cos(phi) * np.sin(theta) * np.sin(psi) - np.sin(phi) * np.cos(psi),
                   np.cos(phi) * np.cos(theta)])
    thrust = p.mass * float(acc @ b3)
    omega = x[RATE]
    att_acc = np.array([
        gains.kp_attitude * (phi_des - phi) - gains.kd_attitude * omega[0],
        gains.kp_attitude * (theta_des - theta) - gains.kd_attitude * omega[1],
        gains.kp_yaw * _wrap(psi_ref - psi) - gains.kd_yaw * omega[2],
    ])
    inertia = p.inertia
    torque = inertia * att_acc + np.cross(omega, inertia * omega)
    return np.concatenate([[thrust], torque])


def _wrap(angle: float) -> float:
    return float((angle + np.pi) % (2 * np.pi) - np.pi)
