"""Undirected binary graphs with incremental degree/neighbour bookkeeping.

Nodes are 0-based integers ``0 .. n-1``.  A dyad is an unordered pair of
distinct nodes, stored canonically as ``(i, j)`` with ``i < j``.
"""

from __future__ import annotations

import bisect
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

UNREACHABLE = "unreachable"


def dyad(i: int, j: int) -> tuple[int, int]:
    """Canonical form of the dyad ``{i, j}``."""
    i, j = int(i), int(j)
    if i == j:
        raise ValueError(f"self-loop ({i}, {i}) is not a dyad")
    return (i, j) if i < j else (j, i)


def dyad_count(n: int) -> int:
    return n * (n - 1) // 2


def all_dyads(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


class Graph:
    """Simple undirected graph over the node set ``range(n)``.

    Edge queries are O(1) through a set of canonical dyads; neighbour lists
    are kept sorted so that shared-partner counts are a linear merge.

    ``toggle`` mutates in place.  The module-level :func:`toggle` returns a
    modified copy and leaves its argument alone.
    """

    __slots__ = ("n", "_edges", "_nbrs")

    def __init__(self, n: int, edges: Iterable[Sequence[int]] = ()):
        n = int(n)
        if n < 1:
            raise ValueError("node count must be positive")
        self.n = n
        self._edges: set[tuple[int, int]] = set()
        self._nbrs: list[list[int]] = [[] for _ in range(n)]
        for e in edges:
            i, j = self._check(e[0], e[1])
            if (i, j) not in self._edges:
                self._add(i, j)

    # -- construction -------------------------------------------------
    @classmethod
    def from_adjacency(cls, adj: np.ndarray) -> "Graph":
        adj = np.asarray(adj)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError("adjacency matrix must be square")
        iu, ju = np.nonzero(np.triu(adj, 1))
        return cls(adj.shape[0], zip(iu.tolist(), ju.tolist()))

    def copy(self) -> "Graph":
        g = Graph.__new__(Graph)
        g.n = self.n
        g._edges = set(self._edges)
        g._nbrs = [list(nb) for nb in self._nbrs]
        return g

    # -- queries ------------------------------------------------------
    def _check(self, i: int, j: int) -> tuple[int, int]:
        i, j = int(i), int(j)
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise ValueError(f"dyad ({i}, {j}) out of range for n={self.n}")
        return dyad(i, j)

    def has_edge(self, i: int, j: int) -> bool:
        return self._check(i, j) in self._edges

    def neighbors(self, i: int) -> list[int]:
        return list(self._nbrs[i])

    def degree(self, i: int) -> int:
        return len(self._nbrs[i])

    @property
    def degrees(self) -> np.ndarray:
        return np.array([len(nb) for nb in self._nbrs], dtype=np.int64)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def edges(self) -> list[tuple[int, int]]:
        return sorted(self._edges)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.edges())

    def __len__(self) -> int:
        return len(self._edges)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and self._edges == other._edges

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={len(self._edges)})"

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.uint8)
        if self._edges:
            ij = np.array(list(self._edges))
            a[ij[:, 0], ij[:, 1]] = 1
            a[ij[:, 1], ij[:, 0]] = 1
        return a

    # -- mutation -----------------------------------------------------
    def _add(self, i: int, j: int) -> None:
        self._edges.add((i, j))
        bisect.insort(self._nbrs[i], j)
        bisect.insort(self._nbrs[j], i)

    def _remove(self, i: int, j: int) -> None:
        self._edges.remove((i, j))
        nb = self._nbrs[i]
        del nb[bisect.bisect_left(nb, j)]
        nb = self._nbrs[j]
        del nb[bisect.bisect_left(nb, i)]

    def toggle(self, i: int, j: int) -> bool:
        """Flip dyad ``{i, j}`` in place; return the new edge state."""
        d = self._check(i, j)
        if d in self._edges:
            self._remove(*d)
            return False
        self._add(*d)
        return True

    def set_edge(self, i: int, j: int, value: bool) -> None:
        if self.has_edge(i, j) != bool(value):
            self.toggle(i, j)

    def check_invariants(self) -> None:
        """Raise ``AssertionError`` if the bookkeeping is inconsistent."""
        deg_sum = 0
        for i, nb in enumerate(self._nbrs):
            assert nb == sorted(set(nb)), f"neighbour list of {i} not sorted/unique"
            assert i not in nb, f"self-loop at {i}"
            for j in nb:
                assert dyad(i, j) in self._edges
            deg_sum += len(nb)
        assert deg_sum == 2 * len(self._edges)


def build_graph(n: int, edges: Iterable[Sequence[int]] = ()) -> Graph:
    return Graph(n, edges)


def toggle(g: Graph, d: Sequence[int]) -> Graph:
    """Return a copy of ``g`` with dyad ``d`` flipped."""
    h = g.copy()
    h.toggle(d[0], d[1])
    return h


def common_neighbors(g: Graph, i: int, j: int) -> int:
    """Number of nodes adjacent to both ``i`` and ``j`` (linear merge)."""
    if i == j:
        raise ValueError("common_neighbors needs two distinct nodes")
    g._check(i, j)
    a, b = g._nbrs[i], g._nbrs[j]
    p = q = count = 0
    while p < len(a) and q < len(b):
        if a[p] == b[q]:
            count += 1
            p += 1
            q += 1
        elif a[p] < b[q]:
            p += 1
        else:
            q += 1
    return count


def all_pairs_geodesics(g: Graph) -> dict:
    """Histogram of shortest-path lengths over all dyads.

    Keys are positive integer distances plus :data:`UNREACHABLE`; only
    non-empty bins are present.  Counts sum to ``n (n - 1) / 2``.
    """
    hist: dict = {}
    n = g.n
    for s in range(n):
        dist = [-1] * n
        dist[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v in g._nbrs[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        for t in range(s + 1, n):
            key = dist[t] if dist[t] > 0 else UNREACHABLE
            hist[key] = hist.get(key, 0) + 1
    return hist


def induced_subgraph(g: Graph, nodes: Sequence[int]) -> Graph:
    """Subgraph induced by ``nodes``, relabelled ``0 .. len(nodes)-1`` in the given order."""
    index = {int(v): k for k, v in enumerate(nodes)}
    sub = Graph(len(index))
    for v, k in index.items():
        for w in g._nbrs[v]:
            kw = index.get(w)
            if kw is not None and k < kw:
                sub._add(k, kw)
    return sub


@dataclass(frozen=True)
class BlockStructure:
    """Partition of the nodes into ``K`` non-empty blocks labelled ``0 .. K-1``."""

    assignment: tuple[int, ...]

    def __post_init__(self):
        a = tuple(int(b) for b in self.assignment)
        object.__setattr__(self, "assignment", a)
        if not a:
            raise ValueError("block assignment is empty")
        labels = set(a)
        if labels != set(range(len(labels))):
            raise ValueError("block ids must be contiguous 0..K-1 with every block non-empty")

    @classmethod
    def equal_blocks(cls, K: int, size: int) -> "BlockStructure":
        return cls(tuple(np.repeat(np.arange(K), size).tolist()))

    @property
    def n(self) -> int:
        return len(self.assignment)

    @property
    def K(self) -> int:
        return max(self.assignment) + 1

    def members(self, k: int) -> list[int]:
        return [i for i, b in enumerate(self.assignment) if b == k]

    def same_block(self, i: int, j: int) -> bool:
        return self.assignment[i] == self.assignment[j]

    def within_mask(self) -> np.ndarray:
        a = np.asarray(self.assignment)
        m = a[:, None] == a[None, :]
        np.fill_diagonal(m, False)
        return m


def split_blocks(g: Graph, blocks: BlockStructure) -> list[Graph]:
    """Within-block subgraphs of ``g``, one per block, in block order."""
    if blocks.n != g.n:
        raise ValueError("block structure does not match graph size")
    return [induced_subgraph(g, blocks.members(k)) for k in range(blocks.K)]


@dataclass
class NodeAttributes:
    """Per-node attributes: each entry maps a name to a length-``n`` array.

    Categorical attributes hold integers or strings; real attributes hold
    floats.
    """

    n: int
    values: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for name, v in self.values.items():
            arr = np.asarray(v)
            if arr.shape[0] != self.n:
                raise ValueError(f"attribute {name!r} has {arr.shape[0]} records, expected {self.n}")
            clean[str(name)] = arr
        self.values = clean

    @classmethod
    def from_mapping(cls, n: int, values: Mapping[str, Sequence]) -> "NodeAttributes":
        return cls(n, dict(values))

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.values[name]
        except KeyError:
            raise KeyError(f"missing node attribute {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self.values

    def names(self) -> list[str]:
        return list(self.values)

    def subset(self, nodes: Sequence[int]) -> "NodeAttributes":
        idx = np.asarray(nodes, dtype=np.int64)
        return NodeAttributes(len(idx), {k: v[idx] for k, v in self.values.items()})

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NodeAttributes):
            return NotImplemented
        if self.n != other.n or set(self.values) != set(other.values):
            return False
        return all(np.array_equal(self.values[k], other.values[k]) for k in self.values)
