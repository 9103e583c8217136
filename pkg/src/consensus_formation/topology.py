"""Leader-follower communication graphs and their Laplacian operators.

Vertex 0 is always the leader; followers keep insertion order 1..N.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import linalg
from .errors import CertificateError, ConfigurationError, ConnectivityError, DimensionError

Edge = tuple[int, int]


def _normalize_edges(edges: Iterable[Iterable[int]], vertex_count: int) -> tuple[Edge, ...]:
    seen: set[Edge] = set()
    out: list[Edge] = []
    for e in edges:
        i, j = (int(v) for v in e)
        if i == j:
            raise ConfigurationError(f"self-loop on vertex {i}")
        if not (0 <= i < vertex_count and 0 <= j < vertex_count):
            raise ConfigurationError(f"edge ({i}, {j}) references a vertex outside 0..{vertex_count - 1}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ConfigurationError(f"duplicate edge {key}")
        seen.add(key)
        out.append(key)
    return tuple(out)


def is_connected(vertex_count: int, edges: Iterable[Edge]) -> bool:
    adj: list[list[int]] = [[] for _ in range(vertex_count)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    visited = {0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in visited:
                visited.add(w)
                queue.append(w)
    return len(visited) == vertex_count


@dataclass(frozen=True)
class LeaderFollowerGraph:
    """Undirected, unweighted, connected graph with the leader at vertex 0."""

    vertex_count: int
    edges: tuple[Edge, ...]
    leader_index: int = 0
    _neighbors: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.vertex_count < 2:
            raise ConfigurationError("a leader-follower graph needs at least 2 vertices")
        if self.leader_index != 0:
            raise ConfigurationError("the leader must be vertex 0")
        edges = _normalize_edges(self.edges, self.vertex_count)
        object.__setattr__(self, "edges", edges)
        if not is_connected(self.vertex_count, edges):
            raise ConnectivityError(f"graph with edges {list(edges)} is not connected")
        nbrs: list[list[int]] = [[] for _ in range(self.vertex_count)]
        for i, j in edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        object.__setattr__(self, "_neighbors", tuple(tuple(sorted(n)) for n in nbrs))

    @property
    def follower_count(self) -> int:
        return self.vertex_count - 1

    @property
    def followers(self) -> tuple[int, ...]:
        return tuple(range(1, self.vertex_count))

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self._neighbors[i]

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges


def build_line_graph(agent_count: int) -> LeaderFollowerGraph:
    """Path graph L - f1 - ... - fN."""
    if agent_count < 2:
        raise ConfigurationError(f"line graph needs agent_count >= 2, got {agent_count}")
    return LeaderFollowerGraph(agent_count, tuple((k, k + 1) for k in range(agent_count - 1)))


def build_star_graph(agent_count: int, hub: int = 0) -> LeaderFollowerGraph:
    if agent_count < 2:
        raise ConfigurationError(f"star graph needs agent_count >= 2, got {agent_count}")
    return LeaderFollowerGraph(agent_count, tuple((hub, k) for k in range(agent_count) if k != hub))


def parse_graph(spec: str | None = None, edges: Iterable[Iterable[int]] | None = None,
                vertex_count: int | None = None) -> LeaderFollowerGraph:
    """Build a graph from a ``line:N`` / ``star:N`` shorthand or an explicit edge list."""
    if spec:
        kind, _, arg = spec.strip().partition(":")
        try:
            count = int(arg)
        except ValueError:
            raise ConfigurationError(f"graph shorthand {spec!r} needs an integer vertex count") from None
        if kind == "line":
            return build_line_graph(count)
        if kind == "star":
            return build_star_graph(count)
        raise ConfigurationError(f"unknown graph shorthand {kind!r} (expected line:N or star:N)")
    if edges is None:
        raise ConfigurationError("graph needs either a shorthand or an edge list")
    edges = [tuple(e) for e in edges]
    if vertex_count is None:
        vertex_count = 1 + max((max(e) for e in edges), default=0)
    return LeaderFollowerGraph(vertex_count, tuple(edges))


def adjacency(g: LeaderFollowerGraph) -> NDArray[np.float64]:
    a = np.zeros((g.vertex_count, g.vertex_count))
    for i, j in g.edges:
        a[i, j] = a[j, i] = 1.0
    return a


def _laplacian_from_adjacency(a: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.diag(a.sum(axis=1)) - a


def laplacian(g: LeaderFollowerGraph) -> NDArray[np.float64]:
    """Full-graph Laplacian ``diag(degree) - A``; rows sum to zero."""
    return _laplacian_from_adjacency(adjacency(g))


@dataclass(frozen=True)
class GroundedLaplacian:
    """Follower block of the Laplacian after deleting the leader's row and column."""

    matrix: NDArray[np.float64]
    follower_order: tuple[int, ...]

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def eigenvalues(self) -> NDArray[np.float64]:
        return linalg.sym_eigvalsh(self.matrix)


def grounded_laplacian(g: LeaderFollowerGraph) -> GroundedLaplacian:
    if not is_connected(g.vertex_count, g.edges):
        raise ConnectivityError("grounded Laplacian requires a connected graph")
    full = laplacian(g)
    keep = list(g.followers)
    return GroundedLaplacian(full[np.ix_(keep, keep)].copy(), tuple(keep))


def leader_injection(g: LeaderFollowerGraph) -> NDArray[np.float64]:
    """0/1 vector over followers marking adjacency to the leader.

    With it, the stacked consensus errors are ``(L_g kron I) x - b kron x_L``.
    """
    return np.array([1.0 if g.has_edge(g.leader_index, i) else 0.0 for i in g.followers])


def inverse_m(gl: GroundedLaplacian | ArrayLike) -> NDArray[np.float64]:
    """The matrix M with ``M @ L = I``.

    Raises:
        CertificateError: if the grounded Laplacian is singular or indefinite.
    """
    mat = gl.matrix if isinstance(gl, GroundedLaplacian) else linalg.as_matrix(gl)
    m = linalg.spd_inverse(mat)
    resid = np.linalg.norm(m @ mat - np.eye(mat.shape[0]))
    if resid > 1e-9:
        raise CertificateError(f"M @ L deviates from identity by {resid:.3e}")
    return m


def laplacian_quadratic_identity_check(
    lap: ArrayLike, adj: ArrayLike, h: ArrayLike, k: ArrayLike, n: int
) -> float:
    """Residual of ``2 h^T (L kron I_n) k == sum_ij A_ij (h_i - h_j)^T (k_i - k_j)``.

    ``lap`` must be the Laplacian built from ``adj``; both are N x N.
    """
    lap = linalg.as_matrix(lap)
    adj = linalg.as_matrix(adj)
    h = np.asarray(h, dtype=np.float64).ravel()
    k = np.asarray(k, dtype=np.float64).ravel()
    count = lap.shape[0]
    if adj.shape != lap.shape or h.size != count * n or k.size != count * n:
        raise DimensionError(
            f"inconsistent sizes: L {lap.shape}, A {adj.shape}, h {h.size}, k {k.size}, n {n}"
        )
    left = 2.0 * h @ np.kron(lap, np.eye(n)) @ k
    hb = h.reshape(count, n)
    kb = k.reshape(count, n)
    right = 0.0
    for i in range(count):
        for j in range(count):
            if adj[i, j] != 0.0:
                right += adj[i, j] * float((hb[i] - hb[j]) @ (kb[i] - kb[j]))
    return abs(left - right)


def random_tree(vertex_count: int, rng: np.random.Generator) -> LeaderFollowerGraph:
    """Uniformly attached random tree: vertex k links to a random earlier vertex."""
    edges = [(int(rng.integers(0, k)), k) for k in range(1, vertex_count)]
    return LeaderFollowerGraph(vertex_count, tuple(edges))
