"""Formation specifications: goal states, offsets and desired distances."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ConfigurationError, ConnectivityError, GeometryError, TopologyError
from .plant import ControlAffineModel
from .topology import Edge, LeaderFollowerGraph, is_connected, laplacian

Array = NDArray[np.float64]


@dataclass(frozen=True)
class FormationSpec:
    """Goal states for every agent (row 0 is the leader) and the formation edges.

    Offsets are ``d_ij = xi_j - xi_i`` for any pair; the formation edges
    select the pairs whose distances ``delta_ij = |d_ij|`` are constrained
    and measured.
    """

    goal_states: Array
    formation_edges: tuple[Edge, ...]

    def __post_init__(self) -> None:
        goals = np.array(self.goal_states, dtype=np.float64)
        if goals.ndim != 2 or goals.shape[0] < 2:
            raise ConfigurationError(f"goal_states must be (agents, n) with >= 2 agents, got {goals.shape}")
        if not np.all(np.isfinite(goals)):
            raise GeometryError("goal states must be finite")
        goals.setflags(write=False)
        object.__setattr__(self, "goal_states", goals)
        agents = goals.shape[0]
        edges = []
        for e in self.formation_edges:
            i, j = (int(v) for v in e)
            if i == j or not (0 <= i < agents and 0 <= j < agents):
                raise ConfigurationError(f"invalid formation edge ({i}, {j}) for {agents} agents")
            edges.append((min(i, j), max(i, j)))
        edges = tuple(dict.fromkeys(edges))
        object.__setattr__(self, "formation_edges", edges)
        if not is_connected(agents, edges):
            raise ConnectivityError("formation graph must be connected")
        for i, j in edges:
            if not self.distance(i, j) > 0:
                raise GeometryError(f"formation edge ({i}, {j}) has zero desired distance")

    @property
    def agent_count(self) -> int:
        return self.goal_states.shape[0]

    @property
    def state_dim(self) -> int:
        return self.goal_states.shape[1]

    def offset(self, i: int, j: int) -> Array:
        return self.goal_states[j] - self.goal_states[i]

    def distance(self, i: int, j: int) -> float:
        return float(np.linalg.norm(self.offset(i, j)))

    @property
    def desired_distances(self) -> dict[Edge, float]:
        return {e: self.distance(*e) for e in self.formation_edges}

    def edges_of(self, agent: int) -> tuple[Edge, ...]:
        return tuple(e for e in self.formation_edges if agent in e)

    def shifted(self, tau: ArrayLike) -> "FormationSpec":
        return FormationSpec(self.goal_states + np.asarray(tau, dtype=np.float64), self.formation_edges)

    def constraint_residuals(self, states: ArrayLike, position_index: Sequence[int] | None = None) -> Array:
        """Per-edge ``|x_j - x_i| - delta_ij`` for the given agent states."""
        x = np.asarray(states, dtype=np.float64)
        idx = list(range(self.state_dim)) if position_index is None else list(position_index)
        goals = self.goal_states[:, idx]
        out = np.empty(len(self.formation_edges))
        for k, (i, j) in enumerate(self.formation_edges):
            out[k] = np.linalg.norm(x[j, idx] - x[i, idx]) - np.linalg.norm(goals[j] - goals[i])
        return out


def triangular_formation(delta_l1: float = 1.0, delta_12: float = 0.8, delta_13: float = 0.8,
                         n: int = 3, spread_angle: float = np.pi / 3) -> FormationSpec:
    """Leader above follower 1, followers 2 and 3 beside follower 1.

    Follower 1 sits ``delta_l1`` straight below the leader; followers 2 and 3
    lie in the horizontal plane of follower 1, at ``delta_12`` / ``delta_13``
    and at angles ``+-spread_angle / 2`` from the negative x axis. With equal
    follower distances and the default 60 degree spread the followers form
    an equilateral triangle. Coordinates beyond the first three are zero.
    """
    if n < 3:
        raise GeometryError(f"triangular formation needs n >= 3, got {n}")
    for name, value in (("delta_l1", delta_l1), ("delta_12", delta_12), ("delta_13", delta_13)):
        if not (np.isfinite(value) and value > 0):
            raise GeometryError(f"{name} must be a positive distance, got {value}")
    if not 0 < spread_angle < np.pi:
        raise GeometryError("spread_angle must lie in (0, pi)")
    half = 0.5 * spread_angle
    goals = np.zeros((4, n))
    f1 = np.array([0.0, 0.0, -delta_l1])
    goals[1, :3] = f1
    goals[2, :3] = f1 + delta_12 * np.array([-np.cos(half), np.sin(half), 0.0])
    goals[3, :3] = f1 + delta_13 * np.array([-np.cos(half), -np.sin(half), 0.0])
    return FormationSpec(goals, ((0, 1), (1, 2), (1, 3)))


def explicit_formation(goal_states: ArrayLike, edges: Iterable[Iterable[int]] | None = None,
                       graph: LeaderFollowerGraph | None = None) -> FormationSpec:
    """Formation from explicit goal vectors; edges default to the graph's edges."""
    if edges is None:
        if graph is None:
            raise ConfigurationError("explicit formation needs edges or a communication graph")
        edges = graph.edges
    return FormationSpec(np.asarray(goal_states, dtype=np.float64), tuple(tuple(e) for e in edges))


def aggregate_offset(spec: FormationSpec, i: int, neighbors: Iterable[int]) -> Array:
    """``d_i``: sum of ``d_ij`` over the neighbors of agent ``i``."""
    nbrs = list(neighbors)
    if not nbrs:
        raise TopologyError(f"agent {i} has an empty neighborhood")
    return np.sum([spec.offset(i, j) for j in nbrs], axis=0)


def aggregate_offsets(spec: FormationSpec, graph: LeaderFollowerGraph) -> Array:
    """Aggregate offsets of every agent over the communication graph, shape (agents, n).

    Equal to ``-(L kron I) xi`` for the full Laplacian ``L``.
    """
    if graph.vertex_count != spec.agent_count:
        raise ConfigurationError(
            f"graph has {graph.vertex_count} vertices but formation has {spec.agent_count} agents"
        )
    return -laplacian(graph) @ spec.goal_states


def assemble_D(spec: FormationSpec) -> Array:
    """Follower block matrix of size (N n) x N with block (i, j) = d_ij on formation edges.

    Block rows and columns are indexed by follower (agents 1..N); the
    leader's edges do not appear.
    """
    n_f = spec.agent_count - 1
    n = spec.state_dim
    d = np.zeros((n_f * n, n_f))
    for a, b in spec.formation_edges:
        if a == 0 or b == 0:
            continue
        i, j = a - 1, b - 1
        d[i * n:(i + 1) * n, j] = spec.offset(a, b)
        d[j * n:(j + 1) * n, i] = spec.offset(b, a)
    return d


def assemble_delta_f(spec: FormationSpec, model: ControlAffineModel) -> Array:
    """Block matrix with block (i, j) = f(xi_i) - f(xi_j) for followers i != j."""
    n_f = spec.agent_count - 1
    n = spec.state_dim
    if model.state_dim != n:
        raise ConfigurationError(f"model state dim {model.state_dim} != formation dim {n}")
    f = model.drift(spec.goal_states[1:])
    out = np.zeros((n_f * n, n_f))
    for i in range(n_f):
        for j in range(n_f):
            if i != j:
                out[i * n:(i + 1) * n, j] = f[i] - f[j]
    return out
