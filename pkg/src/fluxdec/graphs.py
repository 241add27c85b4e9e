"""Finite-graph combinatorics shared by the discrete jump models.

Half-edges are the pairs (x, y) with x < y in a fixed node order, and every
edge vector (flux, cotangent) is indexed by that list.  Net fluxes are signed:
j_e > 0 means transport from the lower-ordered node to the higher one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import StructuralError

DEFAULT_INTERIOR_EPS = 1e-9


@dataclass(frozen=True)
class Graph:
    """Undirected connected graph with a canonical half-edge list."""

    nodes: tuple
    edges: tuple  # pairs (i, j) of node indices with i < j

    def __post_init__(self):
        k = len(self.nodes)
        if len(set(self.nodes)) != k:
            raise StructuralError("duplicate node identifiers")
        seen = set()
        for (i, j) in self.edges:
            if not (0 <= i < j < k):
                raise StructuralError(f"half-edge ({i},{j}) violates i<j node order")
            if (i, j) in seen:
                raise StructuralError(f"duplicate half-edge ({i},{j})")
            seen.add((i, j))
        if not self._connected():
            raise StructuralError("graph is not connected")

    def _connected(self) -> bool:
        k = len(self.nodes)
        if k == 0:
            return False
        adj = {i: set() for i in range(k)}
        for (i, j) in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        stack, seen = [0], {0}
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        return len(seen) == k

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def incidence(self) -> np.ndarray:
        """Divergence matrix B (nodes x edges): div j = B @ j.

        B[x, e] = +1 if x is the lower end of e, -1 if the upper end.
        """
        B = np.zeros((self.n_nodes, self.n_edges))
        for e, (i, j) in enumerate(self.edges):
            B[i, e] = 1.0
            B[j, e] = -1.0
        return B

    def index(self, label) -> int:
        return self.nodes.index(label)


def complete_graph(nodes) -> Graph:
    nodes = tuple(nodes)
    k = len(nodes)
    edges = tuple((i, j) for i in range(k) for j in range(i + 1, k))
    return Graph(nodes, edges)


def graph_from_rate_matrix(nodes, Q: np.ndarray) -> Graph:
    """Half-edges are the node pairs connected by a positive rate either way."""
    Q = np.asarray(Q, dtype=float)
    k = len(nodes)
    if Q.shape != (k, k):
        raise StructuralError("rate matrix shape does not match node count")
    edges = tuple(
        (i, j)
        for i in range(k)
        for j in range(i + 1, k)
        if Q[i, j] > 0.0 or Q[j, i] > 0.0
    )
    return Graph(tuple(nodes), edges)


def divergence(g: Graph, j: np.ndarray) -> np.ndarray:
    """Discrete divergence of a net flux: (div j)_x = sum_{y>x} j_xy - sum_{y<x} j_yx."""
    j = np.asarray(j, dtype=float)
    if j.shape != (g.n_edges,):
        raise StructuralError(f"flux has shape {j.shape}, expected ({g.n_edges},)")
    out = np.zeros(g.n_nodes)
    for e, (i, jj) in enumerate(g.edges):
        out[i] += j[e]
        out[jj] -= j[e]
    return out


def gradient(g: Graph, xi: np.ndarray) -> np.ndarray:
    """Discrete gradient of a node potential: (grad xi)_{xy} = xi_y - xi_x."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (g.n_nodes,):
        raise StructuralError(f"potential has shape {xi.shape}, expected ({g.n_nodes},)")
    lo = np.fromiter((e[0] for e in g.edges), dtype=int, count=g.n_edges)
    hi = np.fromiter((e[1] for e in g.edges), dtype=int, count=g.n_edges)
    return xi[hi] - xi[lo]


def interior_check(rho: np.ndarray, eps: float = DEFAULT_INTERIOR_EPS) -> bool:
    """True iff every coordinate exceeds eps (state away from the boundary)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    rho = np.asarray(rho, dtype=float)
    return bool(np.min(rho) > eps)


def check_density(rho: np.ndarray, probability: bool = True, tol: float = 1e-12) -> np.ndarray:
    """Validate a density vector: nonnegative, and unit mass if probability-constrained."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0) or not np.all(np.isfinite(rho)):
        raise StructuralError("density has negative or non-finite entries")
    if probability and abs(rho.sum() - 1.0) > tol:
        raise StructuralError(f"density mass {rho.sum()!r} differs from 1 beyond {tol}")
    return rho
