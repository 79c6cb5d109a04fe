"""Communication topologies and their Laplacians.

Two constructions: k-nearest-neighbor graphs (frozen at deployment time in
the experiments) and proximity graphs (recomputed every step, possibly
disconnected).  Both are undirected and unweighted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from collections import deque

import numpy as np

from .circle import wrapped_difference


@dataclass(frozen=True)
class CommGraph:
    """Undirected topology: symmetric 0/1 adjacency with zero diagonal."""

    adjacency: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.asarray(self.adjacency, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("CommGraph: adjacency must be square")
        if not np.array_equal(a, a.T) or np.any(np.diag(a) != 0):
            raise ValueError("CommGraph: adjacency must be symmetric with zero diagonal")
        object.__setattr__(self, "adjacency", a)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def laplacian(self) -> np.ndarray:
        a = self.adjacency
        return np.diag(a.sum(axis=1)) - a


def _pairwise_distances(positions: np.ndarray) -> np.ndarray:
    positions = np.asarray(positions, dtype=float)
    d = np.abs(wrapped_difference(positions[:, None], positions[None, :]))
    # the periodic fold of +t and -t can disagree by an ulp when agents sit
    # exactly antipodal; restore the exact symmetry of the true metric
    return np.minimum(d, d.T)


def knn_graph(positions: np.ndarray, k: int) -> CommGraph:
    """k-nearest-neighbor graph by wrapped circular distance.

    Selection is directional; the undirected graph is the union (an edge
    exists when either endpoint selects the other), so every degree is >= k.
    Distance ties are broken toward the lower agent index via stable sort.
    """
    positions = np.asarray(positions, dtype=float)
    n = positions.size
    if not 1 <= k <= n - 1:
        raise ValueError(f"knn_graph: k must be in [1, {n - 1}], got {k}")
    d = _pairwise_distances(positions)
    np.fill_diagonal(d, np.inf)
    order = np.argsort(d, axis=1, kind="stable")
    adj = np.zeros((n, n))
    rows = np.repeat(np.arange(n), k)
    cols = order[:, :k].ravel()
    adj[rows, cols] = 1.0
    adj = np.maximum(adj, adj.T)
    return CommGraph(adj)


def proximity_graph(positions: np.ndarray, eps: float) -> CommGraph:
    """Edges between agents within wrapped distance eps; may be disconnected."""
    if not eps > 0:
        raise ValueError("proximity_graph: eps must be positive")
    d = _pairwise_distances(positions)
    adj = (d <= eps).astype(float)
    np.fill_diagonal(adj, 0.0)
    return CommGraph(adj)


def complete_graph(n: int) -> CommGraph:
    adj = np.ones((n, n)) - np.eye(n)
    return CommGraph(adj)


def laplacian_apply(g: CommGraph, states: np.ndarray) -> np.ndarray:
    """Apply L = D - A row-wise: output_i = sum_{j in N(i)} (state_i - state_j).

    ``states`` is (N,) or (N, M); the Laplacian acts on the agent axis,
    pointwise in any remaining grid axis.
    """
    states = np.asarray(states, dtype=float)
    if states.shape[0] != g.n:
        raise ValueError("laplacian_apply: state count does not match graph")
    return g.laplacian @ states


def is_connected(g: CommGraph) -> bool:
    """Breadth-first reachability of all vertices from vertex 0."""
    n = g.n
    if n <= 1:
        return True
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in np.flatnonzero(g.adjacency[i]):
            if not seen[j]:
                seen[j] = True
                queue.append(int(j))
    return bool(seen.all())
