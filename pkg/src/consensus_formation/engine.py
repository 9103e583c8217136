"""Time-stepped formation-maintenance loop and the integrator formation oracle.

Each step evaluates the consensus errors of all agents, forms the follower
and leader inputs, and advances every agent through one RK4 step with the
inputs held constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .certificate import CertificateReport, pairwise_check
from .control import ConsensusGain
from .errors import CertificateError, ConfigurationError, FormationError, NumericError
from .formation import FormationSpec, aggregate_offsets
from .plant import ControlAffineModel, step_rk4
from .topology import (LeaderFollowerGraph, grounded_laplacian, inverse_m, is_connected,
                       laplacian)
from .tracking import TrackingGains, leader_tracking_control

Array = NDArray[np.float64]

LEADER_MODES = ("consensus", "track", "pinned")


class Reference(Protocol):
    def state(self, t: float, n: int = ...) -> Array: ...

    def rate(self, t: float, n: int = ...) -> Array: ...


@dataclass
class Scenario:
    """Everything one simulation run needs.

    ``leader_mode``: ``consensus`` applies the consensus term plus the
    tracking input to the leader, ``track`` applies the tracking input only,
    ``pinned`` freezes the leader at its initial state.
    """

    graph: LeaderFollowerGraph
    model: ControlAffineModel
    spec: FormationSpec
    gain: ConsensusGain
    initial_states: Array
    reference: Reference
    dt: float = 1e-3
    horizon: float = 30.0
    seed: int = 0
    leader_mode: str = "consensus"
    tracking_gains: TrackingGains = field(default_factory=TrackingGains)
    record_stride: int = 1
    name: str = "scenario"

    def __post_init__(self) -> None:
        self.initial_states = np.array(self.initial_states, dtype=np.float64)
        agents = self.graph.vertex_count
        n = self.model.state_dim
        if self.initial_states.shape != (agents, n):
            raise ConfigurationError(f"initial_states must be ({agents}, {n}), got {self.initial_states.shape}")
        if self.spec.agent_count != agents or self.spec.state_dim != n or self.gain.dim != n:
            raise ConfigurationError("graph, formation, model and gain dimensions disagree")
        if not (self.dt > 0 and self.horizon >= 0):
            raise ConfigurationError("dt must be positive and horizon non-negative")
        if self.leader_mode not in LEADER_MODES:
            raise ConfigurationError(f"leader_mode must be one of {LEADER_MODES}")
        if self.record_stride < 1:
            raise ConfigurationError("record_stride must be >= 1")
        self.steps  # validates T / dt

    @property
    def steps(self) -> int:
        ratio = self.horizon / self.dt
        k = int(round(ratio))
        if abs(ratio - k) > 1e-6 * max(1.0, ratio):
            raise ConfigurationError(f"horizon {self.horizon} is not an integer multiple of dt {self.dt}")
        return k


@dataclass
class SimTrace:
    """Recorded samples of a run; arrays are indexed (sample, agent, component).

    ``max_lyapunov_increase`` and ``max_drift_inner`` are monitored at every
    integration step, independent of ``record_stride``.
    """

    steps: Array
    times: Array
    states: Array
    inputs: Array
    errors: Array
    residuals: Array
    formation_errors: Array
    reference: Array
    lyapunov: Array
    drift_inner: Array
    edge_residuals: Array
    edges: tuple[tuple[int, int], ...]
    dt: float
    max_lyapunov_increase: float = 0.0
    max_drift_inner: float = -np.inf
    failed_step: int | None = None
    failure: str | None = None

    @property
    def agent_count(self) -> int:
        return self.states.shape[1]

    @property
    def completed(self) -> bool:
        return self.failed_step is None

    def final_states(self) -> Array:
        return self.states[-1]


class _Recorder:
    def __init__(self, capacity: int, agents: int, n: int, m: int,
                 spec: FormationSpec, position_index: tuple[int, ...]) -> None:
        self.k = 0
        self.edges = spec.formation_edges
        self._ei = np.array([i for i, _ in self.edges])
        self._ej = np.array([j for _, j in self.edges])
        self._pos = np.array(position_index)
        goals = spec.goal_states[:, self._pos]
        self._delta = np.linalg.norm(goals[self._ej] - goals[self._ei], axis=1)
        self.edge_residuals = np.empty((capacity, len(self.edges)))
        self.steps = np.empty(capacity, dtype=np.int64)
        self.times = np.empty(capacity)
        self.states = np.empty((capacity, agents, n))
        self.inputs = np.empty((capacity, agents, m))
        self.errors = np.empty((capacity, agents, n))
        self.residuals = np.empty((capacity, agents, n))
        self.formation_errors = np.empty((capacity, agents, n))
        self.reference = np.empty((capacity, n))
        self.lyapunov = np.empty(capacity)
        self.drift_inner = np.empty(capacity)

    def add(self, step, t, x, u, e, z, fe, ref, v, di) -> None:
        k = self.k
        self.steps[k] = step
        self.times[k] = t
        self.states[k] = x
        self.inputs[k] = u
        self.errors[k] = e
        self.residuals[k] = z
        self.formation_errors[k] = fe
        self.reference[k] = ref
        self.lyapunov[k] = v
        self.drift_inner[k] = di
        pos = x[:, self._pos]
        self.edge_residuals[k] = np.linalg.norm(pos[self._ej] - pos[self._ei], axis=1) - self._delta
        self.k += 1

    def trace(self, dt: float, **extra) -> SimTrace:
        k = self.k
        return SimTrace(self.steps[:k].copy(), self.times[:k].copy(), self.states[:k].copy(),
                        self.inputs[:k].copy(), self.errors[:k].copy(), self.residuals[:k].copy(),
                        self.formation_errors[:k].copy(), self.reference[:k].copy(),
                        self.lyapunov[:k].copy(), self.drift_inner[:k].copy(),
                        self.edge_residuals[:k].copy(), self.edges, dt, **extra)


def certify_scenario(scenario: Scenario) -> CertificateReport:
    return pairwise_check(scenario.gain.P, scenario.spec, scenario.model)


def run(scenario: Scenario, override_certificate: bool = False,
        certificate: CertificateReport | None = None) -> SimTrace:
    """Simulate the closed loop over ``[0, horizon]``.

    Raises:
        CertificateError: if the gain fails the pairwise certificate and
            ``override_certificate`` is not set.

    Numeric blow-ups and Euler singularities do not raise; the returned
    trace is truncated and carries ``failed_step``.
    """
    report = certificate or certify_scenario(scenario)
    if not report.verdict and not override_certificate:
        raise CertificateError("gain certificate refuted: " + "; ".join(report.reasons))

    sc = scenario
    model, graph = sc.model, sc.graph
    n, m = model.state_dim, model.input_dim
    agents = graph.vertex_count
    lap = laplacian(graph)
    offsets = aggregate_offsets(sc.spec, graph)
    p = sc.gain.P
    gl = grounded_laplacian(graph)
    mp = np.kron(inverse_m(gl), p)
    bias = model.input_bias
    steps = sc.steps
    capacity = steps // sc.record_stride + 2
    rec = _Recorder(capacity, agents, n, m, sc.spec, model.position_index)

    x = sc.initial_states.copy()
    v_prev: float | None = None
    max_dv = 0.0
    max_di = -np.inf
    failed: tuple[int, str] | None = None

    # growth to inf is caught by the RK4 finiteness guard below
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps + 1):
            t = k * sc.dt
            e = lap @ x
            z = e + offsets
            ref = sc.reference.state(t, n)
            try:
                g = model.control_matrix(x)
                u = -np.einsum("aij,ai->aj", g, z @ p)
                if sc.leader_mode == "pinned":
                    u[0] = 0.0
                else:
                    u_track = leader_tracking_control(x[0], ref, sc.reference.rate(t, n), model,
                                                      sc.tracking_gains) - bias
                    u[0] = u_track if sc.leader_mode == "track" else u[0] + u_track
                f = model.drift(x[1:])
            except FormationError as exc:
                failed = (k, str(exc))
                break
            zf = z[1:].ravel()
            v = 0.5 * float(zf @ mp @ zf)
            di = float(np.sum((z[1:] @ p) * f))
            if v_prev is not None:
                max_dv = max(max_dv, v - v_prev)
            v_prev = v
            max_di = max(max_di, di)
            if k % sc.record_stride == 0 or k == steps:
                rec.add(k, t, x, u, e, z, offsets - e, ref, v, di)
            if k == steps:
                break
            try:
                x_next = step_rk4(model, x, u, sc.dt)
            except FormationError as exc:
                failed = (k + 1, str(exc))
                break
            if sc.leader_mode == "pinned":
                x_next[0] = x[0]
            x = x_next

    extra = {"max_lyapunov_increase": max_dv, "max_drift_inner": max_di}
    if failed is not None:
        extra.update(failed_step=failed[0], failure=failed[1])
    return rec.trace(sc.dt, **extra)


def run_or_raise(scenario: Scenario, override_certificate: bool = False) -> SimTrace:
    trace = run(scenario, override_certificate)
    if not trace.completed:
        raise NumericError(f"simulation aborted at step {trace.failed_step}: {trace.failure}", trace.failed_step)
    return trace


def initial_states(spec: FormationSpec, model: ControlAffineModel, leader_start: ArrayLike,
                   rng: np.random.Generator, box: float = 0.5) -> Array:
    """Leader at ``leader_start``; followers at their formation slots relative to it,
    with positions perturbed uniformly in ``[-box, box]`` and other components at their goal values.
    """
    leader_start = np.asarray(leader_start, dtype=np.float64)
    goals = spec.goal_states
    x = goals - goals[0] + leader_start
    x[0] = leader_start
    idx = list(model.position_index)
    for i in range(1, spec.agent_count):
        x[i, idx] += rng.uniform(-box, box, size=len(idx))
    return x


@dataclass
class OracleResult:
    displacements: Array
    spread: float
    history: Array | None = None


def run_integrator_oracle(spec: FormationSpec, initial: ArrayLike, horizon: float = 20.0,
                          dt: float = 1e-3, edges=None, keep_history: bool = False) -> OracleResult:
    """Integrate ``x_i' = -sum_{j in N_i} [(x_i - x_j) - (xi_i - xi_j)]`` with RK4.

    Neighborhoods come from ``edges`` (default: the formation edges). The
    feedback is evaluated inside every RK4 stage. Returns the terminal
    displacements ``x_i(T) - xi_i`` and their spread (largest deviation of
    any agent's displacement from the mean displacement).
    """
    agents = spec.agent_count
    edges = spec.formation_edges if edges is None else tuple(edges)
    if not is_connected(agents, edges):
        raise ConfigurationError("oracle graph must be connected")
    adj = np.zeros((agents, agents))
    for i, j in edges:
        adj[i, j] = adj[j, i] = 1.0
    lap = np.diag(adj.sum(axis=1)) - adj
    goals = spec.goal_states
    x = np.array(initial, dtype=np.float64)
    ratio = horizon / dt
    steps = int(round(ratio))
    if abs(ratio - steps) > 1e-6 * max(1.0, ratio):
        raise ConfigurationError("horizon must be an integer multiple of dt")

    def rhs(s: Array) -> Array:
        return -(lap @ s - lap @ goals)

    history = np.empty((steps + 1,) + x.shape) if keep_history else None
    if history is not None:
        history[0] = x - goals
    for k in range(steps):
        k1 = rhs(x)
        k2 = rhs(x + 0.5 * dt * k1)
        k3 = rhs(x + 0.5 * dt * k2)
        k4 = rhs(x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if history is not None:
            history[k + 1] = x - goals
    disp = x - goals
    spread = float(np.max(np.abs(disp - disp.mean(axis=0))))
    return OracleResult(disp, spread, history)
