"""Quick property checks runnable without pytest (``formation-sim self-test``)."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import linalg, plant, topology
from .analytic import torque_free_rotation
from .certificate import pairwise_check, sampled_assumption5_check
from .formation import triangular_formation


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def check_grounded_laplacian(seed: int = 0) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst_eig, worst_inv = np.inf, 0.0
    for _ in range(100):
        g = topology.random_tree(int(rng.integers(2, 13)), rng)
        gl = topology.grounded_laplacian(g)
        worst_eig = min(worst_eig, float(gl.eigenvalues()[0]))
        m = topology.inverse_m(gl)
        worst_inv = max(worst_inv, float(np.max(np.abs(m @ gl.matrix - np.eye(gl.size)))))
    return worst_eig > 1e-10 and worst_inv <= 1e-9, f"min eig {worst_eig:.3e}, |ML - I| {worst_inv:.1e}"


def check_quadratic_identity(seed: int = 1) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(200):
        g = topology.random_tree(int(rng.integers(2, 7)), rng)
        n = int(rng.integers(1, 5))
        h = rng.normal(size=g.vertex_count * n)
        k = rng.normal(size=g.vertex_count * n)
        r = topology.laplacian_quadratic_identity_check(topology.laplacian(g), topology.adjacency(g), h, k, n)
        worst = max(worst, r)
    return worst <= 1e-9, f"max residual {worst:.1e}"


def check_schur(seed: int = 2) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(200):
        a, b = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        q = rng.normal(size=(a + b, a + b))
        s = -(q @ q.T) - 0.1 * np.eye(a + b) if rng.random() < 0.5 else q + q.T
        r = linalg.schur_negdef_equivalent(s[:a, :a], s[:a, a:], s[a:, a:])
        bad += not r.consistent
    return bad == 0, f"{bad} inconsistent of 200"


def check_certificate() -> tuple[bool, str]:
    spec = triangular_formation(n=12)
    quad = plant.quadrotor_model()
    ok_quad = pairwise_check(np.eye(12), spec, quad).verdict
    expanding = plant.linear_model(np.eye(3))
    worst = sampled_assumption5_check(np.eye(3), expanding, -np.ones(3), np.ones(3), samples=10, seed=0)
    return ok_quad and worst > 0, f"quadrotor P=I {'pass' if ok_quad else 'fail'}, expanding max {worst:.3e}"


def check_rk4_order() -> tuple[bool, str]:
    model = plant.rigid_body_rotation()
    inertia = plant.QuadrotorParams().inertia
    w0 = np.array([3.0, -2.0, 8.0])
    horizon = 2.0
    exact = torque_free_rotation(w0, inertia, horizon)
    errs = []
    for dt in (0.01, 0.005):
        w = w0.copy()
        for _ in range(int(round(horizon / dt))):
            w = plant.step_rk4(model, w, np.zeros(3), dt)
        errs.append(float(np.linalg.norm(w - exact)))
    ratio = errs[0] / errs[1]
    return 12 <= ratio <= 20, f"error ratio {ratio:.2f}"


CHECKS: dict[str, Callable[[], tuple[bool, str]]] = {
    "grounded-laplacian": check_grounded_laplacian,
    "laplacian-quadratic-identity": check_quadratic_identity,
    "schur-equivalence": check_schur,
    "certificate": check_certificate,
    "rk4-order": check_rk4_order,
}


def run_all() -> list[CheckResult]:
    out = []
    for name, fn in CHECKS.items():
        t0 = time.perf_counter()
        ok, detail = fn()
        out.append(CheckResult(name, ok, detail, time.perf_counter() - t0))
    return out
