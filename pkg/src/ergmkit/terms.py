"""Sufficient statistics and single-dyad change statistics.

Every term kind contributes exactly one natural statistic.  Shared-partner
statistics are binned by exact count (``Esp(m)`` counts edges whose
endpoints have exactly ``m`` common neighbours); geometric weighting of the
``Esp`` family is a parameter-map concern and lives in :mod:`ergmkit.model`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Sequence, Union

import numpy as np

from .graph import Graph, NodeAttributes, common_neighbors, dyad


@dataclass(frozen=True)
class Edges:
    name = "edges"


@dataclass(frozen=True)
class DegreeCount:
    k: int

    @property
    def name(self) -> str:
        return f"degree{self.k}"


@dataclass(frozen=True)
class TwoPaths:
    name = "twopaths"


@dataclass(frozen=True)
class Triangles:
    name = "triangles"


@dataclass(frozen=True)
class Esp:
    m: int

    @property
    def name(self) -> str:
        return f"esp{self.m}"


@dataclass(frozen=True)
class NodeDegree:
    i: int

    @property
    def name(self) -> str:
        return f"nodedegree{self.i + 1}"


@dataclass(frozen=True)
class NodeMatch:
    attr: str

    @property
    def name(self) -> str:
        return f"nodematch.{self.attr}"


@dataclass(frozen=True)
class DyadCovariate:
    """Sum of ``values[i, j] * y_ij`` over dyads; ``values`` is symmetric ``n x n``."""

    label: str
    values: np.ndarray = field(compare=False, repr=False)

    @property
    def name(self) -> str:
        return f"dyadcov.{self.label}"


@dataclass(frozen=True)
class Offset:
    """Fixed per-dyad reference-measure coefficients; never estimated."""

    label: str
    values: np.ndarray = field(compare=False, repr=False)

    @property
    def name(self) -> str:
        return f"offset.{self.label}"

    @classmethod
    def sparse(cls, n: int) -> "Offset":
        """``-log n`` on every dyad (size-dependent sparsity)."""
        return cls("sparse", np.full((n, n), -np.log(n)))


TermKind = Union[Edges, DegreeCount, TwoPaths, Triangles, Esp, NodeDegree, NodeMatch,
                 DyadCovariate, Offset]

DYAD_INDEPENDENT = (Edges, NodeDegree, NodeMatch, DyadCovariate, Offset)


def is_dyad_independent(terms: Sequence[TermKind]) -> bool:
    return all(isinstance(t, DYAD_INDEPENDENT) for t in terms)


def validate_term(t: TermKind, n: int, a: NodeAttributes | None = None) -> None:
    if isinstance(t, Esp) and not 1 <= t.m <= n - 2:
        raise ValueError(f"Esp m={t.m} outside [1, {n - 2}]")
    if isinstance(t, DegreeCount) and not 0 <= t.k <= n - 1:
        raise ValueError(f"DegreeCount k={t.k} outside [0, {n - 1}]")
    if isinstance(t, NodeDegree) and not 0 <= t.i < n:
        raise ValueError(f"NodeDegree node {t.i} outside [0, {n})")
    if isinstance(t, NodeMatch):
        if a is None or t.attr not in a:
            raise KeyError(f"missing node attribute {t.attr!r}")
        if a.n != n:
            raise ValueError("attribute table does not match graph size")
    if isinstance(t, (DyadCovariate, Offset)) and np.shape(t.values) != (n, n):
        raise ValueError(f"{t.name}: value table must be {n} x {n}")


def dyad_values(t: TermKind, n: int, a: NodeAttributes | None = None) -> np.ndarray | None:
    """Per-dyad weight matrix for the dyad-valued kinds, else ``None``."""
    if isinstance(t, (DyadCovariate, Offset)):
        return np.asarray(t.values, dtype=np.float64)
    if isinstance(t, NodeMatch):
        x = a[t.attr]
        return (x[:, None] == x[None, :]).astype(np.float64)
    return None


def _shared_partner_counts(g: Graph) -> list[int]:
    return [common_neighbors(g, i, j) for i, j in g.edges()]


def stat_value(t: TermKind, g: Graph, a: NodeAttributes | None = None) -> float:
    validate_term(t, g.n, a)
    if isinstance(t, Edges):
        return float(g.edge_count)
    if isinstance(t, DegreeCount):
        return float(np.count_nonzero(g.degrees == t.k))
    if isinstance(t, TwoPaths):
        return float(sum(comb(int(d), 2) for d in g.degrees))
    if isinstance(t, Triangles):
        return float(sum(_shared_partner_counts(g)) // 3)
    if isinstance(t, Esp):
        return float(sum(1 for c in _shared_partner_counts(g) if c == t.m))
    if isinstance(t, NodeDegree):
        return float(g.degree(t.i))
    w = dyad_values(t, g.n, a)
    return float(sum(w[i, j] for i, j in g.edges()))


def stat_vector(terms: Sequence[TermKind], g: Graph, a: NodeAttributes | None = None) -> np.ndarray:
    return np.array([stat_value(t, g, a) for t in terms], dtype=np.float64)


def change_vector(terms: Sequence[TermKind], g: Graph, a: NodeAttributes | None, d: Sequence[int]) -> np.ndarray:
    """``s(g + d) - s(g - d)`` computed locally around dyad ``d``."""
    i, j = g._check(d[0], d[1])
    present = g.has_edge(i, j)
    # degrees and shared-partner counts in the graph with d absent
    di = g.degree(i) - present
    dj = g.degree(j) - present
    cn_nodes = sorted(set(g._nbrs[i]) & set(g._nbrs[j]))
    cn = len(cn_nodes)
    esp_delta: dict[int, int] | None = None
    out = np.zeros(len(terms))
    for k, t in enumerate(terms):
        validate_term(t, g.n, a)
        if isinstance(t, Edges):
            out[k] = 1.0
        elif isinstance(t, DegreeCount):
            out[k] = ((di + 1 == t.k) - (di == t.k)) + ((dj + 1 == t.k) - (dj == t.k))
        elif isinstance(t, TwoPaths):
            out[k] = di + dj
        elif isinstance(t, Triangles):
            out[k] = cn
        elif isinstance(t, Esp):
            if esp_delta is None:
                esp_delta = _esp_change(g, i, j, cn_nodes, present)
            out[k] = esp_delta.get(t.m, 0)
        elif isinstance(t, NodeDegree):
            out[k] = (t.i == i) + (t.i == j)
        else:
            out[k] = dyad_values(t, g.n, a)[i, j]
    return out


def _esp_change(g: Graph, i: int, j: int, cn_nodes: list[int], present: bool) -> dict[int, int]:
    delta: dict[int, int] = {}

    def bump(m: int, by: int) -> None:
        if m >= 1:
            delta[m] = delta.get(m, 0) + by

    # phase 1: the dyad's own bin
    bump(len(cn_nodes), 1)
    # phase 2: every edge from i or j to a common neighbour gains j or i as partner
    for k in cn_nodes:
        for u in (i, j):
            c0 = common_neighbors(g, u, k) - present
            bump(c0, -1)
            bump(c0 + 1, 1)
    return delta


# -- vectorised whole-graph statistics -----------------------------------------

def shared_partner_matrix(adj: np.ndarray) -> np.ndarray:
    a = adj.astype(np.int64)
    return a @ a


def esp_histogram(adj: np.ndarray) -> np.ndarray:
    """Counts of edges by number of shared partners, bins ``0 .. n-2``."""
    n = adj.shape[0]
    cn = shared_partner_matrix(adj)
    iu = np.triu_indices(n, 1)
    on = adj[iu] > 0
    return np.bincount(cn[iu][on], minlength=max(n - 1, 1))[: max(n - 1, 1)]


def degree_histogram(adj: np.ndarray) -> np.ndarray:
    """Counts of nodes by degree, bins ``0 .. n-1``."""
    n = adj.shape[0]
    return np.bincount(adj.sum(axis=1).astype(np.int64), minlength=n)[:n]


def triangle_count(adj: np.ndarray) -> int:
    a = adj.astype(np.int64)
    return int(np.einsum("ij,jk,ki->", a, a, a) // 6)


def stat_vector_adjacency(terms: Sequence[TermKind], adj: np.ndarray, a: NodeAttributes | None = None) -> np.ndarray:
    """Same result as :func:`stat_vector`, computed from an adjacency matrix."""
    n = adj.shape[0]
    adj = (np.asarray(adj) > 0).astype(np.int64)
    deg = adj.sum(axis=1)
    iu = np.triu_indices(n, 1)
    cache: dict[str, np.ndarray] = {}
    out = np.zeros(len(terms))
    for k, t in enumerate(terms):
        validate_term(t, n, a)
        if isinstance(t, Edges):
            out[k] = adj[iu].sum()
        elif isinstance(t, DegreeCount):
            out[k] = np.count_nonzero(deg == t.k)
        elif isinstance(t, TwoPaths):
            out[k] = (deg * (deg - 1) // 2).sum()
        elif isinstance(t, Triangles):
            out[k] = triangle_count(adj)
        elif isinstance(t, Esp):
            if "esp" not in cache:
                cache["esp"] = esp_histogram(adj)
            h = cache["esp"]
            out[k] = h[t.m] if t.m < len(h) else 0
        elif isinstance(t, NodeDegree):
            out[k] = deg[t.i]
        else:
            out[k] = (dyad_values(t, n, a)[iu] * adj[iu]).sum()
    return out


def term_names(terms: Sequence[TermKind]) -> list[str]:
    return [t.name for t in terms]


__all__ = [
    "Edges", "DegreeCount", "TwoPaths", "Triangles", "Esp", "NodeDegree", "NodeMatch",
    "DyadCovariate", "Offset", "TermKind", "stat_value", "stat_vector", "change_vector",
    "stat_vector_adjacency", "esp_histogram", "degree_histogram", "triangle_count",
    "is_dyad_independent", "dyad", "term_names",
]
