"""Observation designs producing dyad masks, and incomplete-data estimation.

A mask marks which dyads were observed.  The designs here are ignorable:
whether a dyad is observed depends only on design randomness and on observed
edges (link tracing), never on unobserved ones, so the likelihood of the
observed dyads (summing the model over all completions) is the right
objective.  For link tracing this is the face-value likelihood.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import estimate as E
from . import exact as _exact
from .errors import AllMissing, NonIgnorableDesign
from .graph import BlockStructure, Graph
from .model import ModelSpec
from .sampler import McmcConfig, make_rng

DESIGN_KINDS = ("ego", "link-trace", "subgraph", "mar")


@dataclass(frozen=True, eq=False)
class ObservationMask:
    """Symmetric boolean matrix; ``observed[i, j]`` is true when dyad ``{i, j}`` was observed."""

    observed: np.ndarray

    def __post_init__(self):
        obs = np.array(self.observed, dtype=bool)
        if obs.ndim != 2 or obs.shape[0] != obs.shape[1]:
            raise ValueError("mask must be a square matrix")
        if not np.array_equal(obs, obs.T):
            raise ValueError("mask must be symmetric")
        np.fill_diagonal(obs, True)
        obs.setflags(write=False)
        object.__setattr__(self, "observed", obs)

    @classmethod
    def full(cls, n: int) -> "ObservationMask":
        return cls(np.ones((n, n), dtype=bool))

    @classmethod
    def empty(cls, n: int) -> "ObservationMask":
        return cls(np.zeros((n, n), dtype=bool))

    @classmethod
    def from_unobserved(cls, n: int, dyads) -> "ObservationMask":
        obs = np.ones((n, n), dtype=bool)
        for i, j in dyads:
            if i == j or not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"invalid dyad ({i}, {j})")
            obs[i, j] = obs[j, i] = False
        return cls(obs)

    @property
    def n(self) -> int:
        return self.observed.shape[0]

    def unobserved_dyads(self) -> list[tuple[int, int]]:
        iu, ju = np.nonzero(np.triu(~self.observed, 1))
        return list(zip(iu.tolist(), ju.tolist()))

    @property
    def n_unobserved(self) -> int:
        return int(np.count_nonzero(np.triu(~self.observed, 1)))

    @property
    def observed_fraction(self) -> float:
        total = self.n * (self.n - 1) // 2
        return 1.0 if total == 0 else 1.0 - self.n_unobserved / total

    def union(self, other: "ObservationMask") -> "ObservationMask":
        return ObservationMask(self.observed | other.observed)

    def apply(self, g: Graph) -> Graph:
        """The observed part of ``g``: unobserved dyads are set to no edge."""
        A = g.adjacency() * self.observed.astype(np.uint8)
        return Graph.from_adjacency(A)

    def __eq__(self, other) -> bool:
        return isinstance(other, ObservationMask) and np.array_equal(self.observed, other.observed)

    __hash__ = None


@dataclass(frozen=True)
class DesignParams:
    """Parameters of an observation design; independent of the model parameter.

    ``probs`` holds per-node (ego, link-trace) or per-block (subgraph)
    inclusion probabilities, or one scalar for all of them.
    """

    kind: str
    probs: float | Sequence[float] = 1.0
    waves: int = 0
    q: float = 0.0
    ignorable: bool = True
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in DESIGN_KINDS:
            raise ValueError(f"unknown design kind {self.kind!r}")
        pr = np.asarray(self.probs, dtype=np.float64)
        if np.any(pr < 0) or np.any(pr > 1) or np.any(np.isnan(pr)):
            raise ValueError("inclusion probabilities must lie in [0, 1]")
        if self.waves < 0:
            raise ValueError("waves must be non-negative")
        if not 0.0 <= self.q <= 1.0:
            raise ValueError("masking probability must lie in [0, 1]")

    def inclusion(self, size: int) -> np.ndarray:
        pr = np.asarray(self.probs, dtype=np.float64)
        if pr.ndim == 0:
            return np.full(size, float(pr))
        if pr.shape != (size,):
            raise ValueError(f"expected {size} inclusion probabilities, got {pr.shape[0]}")
        return pr


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else make_rng(seed)


def _ego_rows(n: int, egos: np.ndarray) -> ObservationMask:
    obs = np.zeros((n, n), dtype=bool)
    obs[egos, :] = True
    obs[:, egos] = True
    return ObservationMask(obs)


def draw_egos(n: int, p: DesignParams, seed=0) -> np.ndarray:
    """Independent Bernoulli node sample with the design's inclusion probabilities."""
    rng = _rng(seed)
    return np.flatnonzero(rng.random(n) < p.inclusion(n))


def ego_sample(g: Graph, p: DesignParams, seed=0) -> ObservationMask:
    """Observe the complete dyad row (edges and non-edges) of every sampled ego."""
    return _ego_rows(g.n, draw_egos(g.n, p, seed))


def ego_mask(n: int, egos) -> ObservationMask:
    return _ego_rows(n, np.asarray(list(egos), dtype=np.int64))


def link_trace(g: Graph, p: DesignParams, seed=0) -> ObservationMask:
    """Ego sample followed by ``p.waves`` waves adding all alters of the previous wave as egos."""
    egos = set(draw_egos(g.n, p, seed).tolist())
    return ego_mask(g.n, trace_egos(g, egos, p.waves))


def trace_egos(g: Graph, seeds, waves: int) -> list[int]:
    egos = set(seeds)
    frontier = set(seeds)
    for _ in range(waves):
        alters = {j for i in frontier for j in g.neighbors(i)} - egos
        if not alters:
            break
        egos |= alters
        frontier = alters
    return sorted(egos)


def subgraph_sample(blocks: BlockStructure, p: DesignParams, seed=0) -> ObservationMask:
    """Observe exactly the within-block dyads of independently sampled blocks."""
    rng = _rng(seed)
    chosen = rng.random(blocks.K) < p.inclusion(blocks.K)
    member = chosen[np.asarray(blocks.assignment)]
    obs = blocks.within_mask() & member[:, None] & member[None, :]
    return ObservationMask(obs)


def mar_mask(n: int, q: float, seed=0) -> ObservationMask:
    """Each dyad unobserved independently with probability ``q``."""
    if not 0.0 <= q <= 1.0:
        raise ValueError("masking probability must lie in [0, 1]")
    rng = _rng(seed)
    hide = np.triu(rng.random((n, n)) < q, 1)
    return ObservationMask(~(hide | hide.T))


def generate_mask(g: Graph, p: DesignParams, seed=0, blocks: BlockStructure | None = None) -> ObservationMask:
    if p.kind == "ego":
        return ego_sample(g, p, seed)
    if p.kind == "link-trace":
        return link_trace(g, p, seed)
    if p.kind == "subgraph":
        if blocks is None:
            raise ValueError("subgraph design needs a block structure")
        return subgraph_sample(blocks, p, seed)
    return mar_mask(g.n, p.q, seed)


def incomplete_loglik(spec: ModelSpec, theta, y_obs: Graph, mask, cap: int = _exact.DEFAULT_CAP) -> float:
    """Log-probability of the observed dyads, summing over all completions of the rest."""
    return _exact.exact_incomplete_loglik(spec, theta, y_obs, mask, cap=cap)


def _as_observed(mask, n: int) -> np.ndarray:
    return ObservationMask(np.asarray(getattr(mask, "observed", mask), dtype=bool)).observed


def incomplete_fit(data: "E.NetworkData", theta0=None, cfg: McmcConfig = McmcConfig(),
                   designs: Sequence[DesignParams] | None = None, method: str = "auto",
                   cap: int = _exact.DEFAULT_CAP, **kw) -> "E.FitResult":
    """Maximise the observed-data likelihood of possibly masked, pooled networks.

    ``method="auto"`` maximises the exact objective when every network can be
    enumerated within ``cap`` and otherwise runs Monte Carlo MLE with
    conditional simulation of the unobserved dyads.  Designs tagged
    non-ignorable are refused.
    """
    if designs is not None and any(not d.ignorable for d in designs):
        raise NonIgnorableDesign("observation design is not ignorable; the observed-data "
                                 "likelihood does not identify the model parameter")
    masks = data.masks if data.masks is not None else [None] * len(data)
    clean = []
    for k, (g, spec, m) in enumerate(zip(data.graphs, data.specs, masks)):
        if m is None:
            clean.append(None)
            continue
        obs = _as_observed(m, spec.n)
        if obs.shape != (spec.n, spec.n):
            raise ValueError(f"mask {k} does not match its network")
        clean.append(obs)
    if all(m is not None and not np.any(np.triu(m & spec.free_mask, 1))
           for m, spec in zip(clean, data.specs)):
        raise AllMissing("no dyad is observed in any network")
    # unobserved dyads carry no information, so only observed edges are used
    graphs = [g if m is None else ObservationMask(m).apply(g) for g, m in zip(data.graphs, clean)]
    work = E.NetworkData(graphs, data.specs, clean)
    if method == "auto":
        small = all(len(s.free_dyads) <= _exact.max_dyads(cap) for s in data.specs)
        method = "exact" if small else "mcmle"
    if method == "exact":
        return E.fit_exact(work, theta0=theta0, cap=cap)
    if method == "mcmle":
        return E.mcmle(work, theta0=theta0, cfg=cfg, **kw)
    raise ValueError(f"unknown method {method!r}")
