"""Closed-form reference solutions used as integration oracles."""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import ellipj, ellipkinc

Array = NDArray[np.float64]


def torque_free_rotation(omega0: ArrayLike, inertia: ArrayLike, t: ArrayLike) -> Array:
    """Body rates of a torque-free rigid body, ``J w' = -w x J w``, in Jacobi elliptic form.

    Requires principal moments ``I1 < I2 < I3`` and an initial condition
    with ``|H|^2 > 2 E I2`` (spin closer to the major axis, so ``w3`` keeps
    its sign). Then ``w = (A1 cn, s A2 sn, s A3 dn)`` evaluated at
    ``lam * t + u0`` with ``s = sign(w3)``.

    Args:
        omega0: initial body rates, shape (3,).
        inertia: principal moments (I1, I2, I3).
        t: times, scalar or 1-D.

    Returns:
        Rates of shape ``t.shape + (3,)``.
    """
    w = np.asarray(omega0, dtype=np.float64)
    i1, i2, i3 = (float(v) for v in inertia)
    if not (0 < i1 < i2 < i3):
        raise ValueError("principal moments must satisfy 0 < I1 < I2 < I3")
    two_e = i1 * w[0] ** 2 + i2 * w[1] ** 2 + i3 * w[2] ** 2
    h2 = (i1 * w[0]) ** 2 + (i2 * w[1]) ** 2 + (i3 * w[2]) ** 2
    if not h2 > two_e * i2:
        raise ValueError("only the branch |H|^2 > 2 E I2 is implemented")
    a1 = np.sqrt((two_e * i3 - h2) / (i1 * (i3 - i1)))
    a2 = np.sqrt((two_e * i3 - h2) / (i2 * (i3 - i2)))
    a3 = np.sqrt((h2 - two_e * i1) / (i3 * (i3 - i1)))
    lam = np.sqrt((h2 - two_e * i1) * (i3 - i2) / (i1 * i2 * i3))
    m = (i2 - i1) * (two_e * i3 - h2) / ((i3 - i2) * (h2 - two_e * i1))
    s = 1.0 if w[2] > 0 else -1.0
    # phase from sn = sin(phi), cn = cos(phi)
    phi0 = np.arctan2(w[1] / (s * a2), w[0] / a1) if a1 > 0 else 0.0
    u0 = ellipkinc(phi0, m)
    sn, cn, dn, _ = ellipj(lam * np.asarray(t, dtype=np.float64) + u0, m)
    return np.stack([a1 * cn, s * a2 * sn, s * a3 * dn], axis=-1)
