"""Metropolis-Hastings simulation of graphs, unconditional and conditional on observed dyads."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from . import _kernels as K
from .graph import Graph
from .model import ModelSpec

PROPOSALS = {"uniform-dyad": K.UNIFORM, "tie-no-tie": K.TIE_NO_TIE}


@dataclass(frozen=True)
class McmcConfig:
    """Chain settings.  ``burnin``/``interval`` default to ``10 d`` and ``d`` for ``d`` free dyads."""

    burnin: int | None = None
    interval: int | None = None
    draws: int = 1000
    proposal: str = "tie-no-tie"
    p_tie: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.burnin is not None and self.burnin < 0:
            raise ValueError("burnin must be >= 0")
        if self.interval is not None and self.interval < 1:
            raise ValueError("interval must be >= 1")
        if self.draws < 1:
            raise ValueError("draws must be >= 1")
        if self.proposal not in PROPOSALS:
            raise ValueError(f"unknown proposal {self.proposal!r}")
        if not 0.0 < self.p_tie < 1.0:
            raise ValueError("p_tie must lie in (0, 1)")

    def resolved(self, d: int) -> tuple[int, int]:
        d = max(int(d), 1)
        burnin = 10 * d if self.burnin is None else self.burnin
        interval = d if self.interval is None else self.interval
        return burnin, interval

    def with_(self, **kw) -> "McmcConfig":
        return replace(self, **kw)


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Philox generator for the stream ``(seed, *stream)``; streams are independent."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


_THREADS = 1


def set_threads(k: int) -> None:
    """Cap the number of chains advanced concurrently (the kernels release the GIL)."""
    global _THREADS
    if k < 1:
        raise ValueError("thread count must be >= 1")
    _THREADS = int(k)


def map_chains(fn, items: list) -> list:
    """``[fn(x) for x in items]``, concurrently when more than one thread is allowed.

    Every chain owns its generator, so results do not depend on the thread count.
    """
    if _THREADS <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(_THREADS, len(items))) as ex:
        return list(ex.map(fn, items))


@lru_cache(maxsize=256)
def _encoded(spec: ModelSpec):
    return K.encode_terms(spec)


class Chain:
    """A persistent Markov chain over the free dyads of ``spec``.

    ``free`` optionally restricts the chain further (boolean ``n x n``
    matrix, e.g. the unobserved dyads); dyads outside it never change.
    """

    def __init__(self, spec: ModelSpec, start: Graph | None = None, free: np.ndarray | None = None,
                 rng: np.random.Generator | None = None):
        self.spec = spec
        n = spec.n
        start = Graph(n) if start is None else start
        if start.n != n:
            raise ValueError(f"start graph has {start.n} nodes, model expects {n}")
        mask = spec.free_mask
        if free is not None:
            free = np.asarray(free, dtype=bool)
            if free.shape != (n, n):
                raise ValueError("free-dyad mask does not match model size")
            mask = mask & free & free.T
        iu, ju = np.nonzero(np.triu(mask, 1))
        self.fi = iu.astype(np.int64)
        self.fj = ju.astype(np.int64)
        g = spec.restrict(start)
        self.A = np.ascontiguousarray(g.adjacency())
        self.deg, self.nbr, self.pos = K.neighbor_arrays(self.A)
        on = self.A[self.fi, self.fj].astype(bool)
        self.perm = np.concatenate([np.nonzero(on)[0], np.nonzero(~on)[0]]).astype(np.int64)
        self.ppos = np.empty_like(self.perm)
        self.ppos[self.perm] = np.arange(len(self.perm))
        self.n_on = int(on.sum())
        self.stats = spec.stats(g)
        self.rng = make_rng(0) if rng is None else rng
        self.accepted = 0
        self.steps = 0

    @property
    def n_free(self) -> int:
        return len(self.fi)

    def run(self, theta, burnin: int, interval: int, draws: int, proposal: str = "tie-no-tie",
            p_tie: float = 0.5, record_graphs: bool = False, eta: np.ndarray | None = None):
        """Advance the chain; return ``(stats, graphs)`` for the retained draws."""
        eta = self.spec.eta(theta) if eta is None else np.asarray(eta, dtype=np.float64)
        codes, args, matidx, mats, flags = _encoded(self.spec)
        out, graphs, acc, n_on = K.mh_run(
            self.A, self.deg, self.nbr, self.pos, self.fi, self.fj, self.perm, self.ppos,
            self.n_on, codes, args, matidx, mats, flags, eta, self.stats, self.rng,
            int(burnin), int(interval), int(draws), PROPOSALS[proposal], float(p_tie),
            bool(record_graphs))
        self.n_on = int(n_on)
        self.accepted += int(acc)
        self.steps += int(burnin) + int(interval) * int(draws)
        return out, graphs

    def run_cfg(self, theta, cfg: McmcConfig, record_graphs: bool = False, burnin: int | None = None,
                eta: np.ndarray | None = None):
        b, interval = cfg.resolved(self.n_free)
        return self.run(theta, b if burnin is None else burnin, interval, cfg.draws, cfg.proposal,
                        cfg.p_tie, record_graphs, eta)

    def graph(self) -> Graph:
        return Graph.from_adjacency(self.A)

    def graphs_from_rows(self, rows: np.ndarray) -> list[Graph]:
        base = self.A.copy()
        out = []
        for r in rows:
            base[self.fi, self.fj] = r
            base[self.fj, self.fi] = r
            out.append(Graph.from_adjacency(base))
        return out

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.steps if self.steps else float("nan")


def mh_sample(spec: ModelSpec, theta, cfg: McmcConfig = McmcConfig(), start: Graph | None = None,
              chain_id: int = 0) -> list[tuple[Graph, np.ndarray]]:
    """Draws from the model as ``(graph, statistics)`` pairs."""
    chain = Chain(spec, start, rng=make_rng(cfg.seed, chain_id))
    stats, rows = chain.run_cfg(theta, cfg, record_graphs=True)
    return list(zip(chain.graphs_from_rows(rows), stats))


def simulate_stats(spec: ModelSpec, theta, cfg: McmcConfig = McmcConfig(), start: Graph | None = None,
                   chain_id: int = 0) -> np.ndarray:
    """Statistic rows only (``draws x q``); no graphs are materialised."""
    chain = Chain(spec, start, rng=make_rng(cfg.seed, chain_id))
    stats, _ = chain.run_cfg(theta, cfg)
    return stats


def _observed_matrix(mask, n: int) -> np.ndarray:
    obs = np.asarray(getattr(mask, "observed", mask), dtype=bool)
    if obs.shape != (n, n):
        raise ValueError(f"mask is {obs.shape}, graph has {n} nodes")
    return obs


def conditional_sample(spec: ModelSpec, theta, y_obs: Graph, mask, cfg: McmcConfig = McmcConfig(),
                       chain_id: int = 0) -> list[Graph]:
    """Completions of ``y_obs`` drawn from the model given the observed dyads.

    Only unobserved dyads are proposed, so observed dyads keep the values
    they have in ``y_obs`` in every draw.
    """
    if y_obs.n != spec.n:
        raise ValueError("graph and model sizes differ")
    obs = _observed_matrix(mask, spec.n)
    chain = Chain(spec, y_obs, free=~obs, rng=make_rng(cfg.seed, chain_id))
    _, rows = chain.run_cfg(theta, cfg, record_graphs=True)
    return chain.graphs_from_rows(rows)


def independent_log_odds(spec: ModelSpec, theta) -> tuple[np.ndarray, np.ndarray]:
    """Free dyads and their edge log-odds for a dyad-independent model."""
    if not spec.dyad_independent:
        raise ValueError("model has dyad-dependent terms")
    codes, args, matidx, mats, flags = _encoded(spec)
    fd = spec.free_dyads
    A = np.zeros((spec.n, spec.n), dtype=np.uint8)
    delta, _ = K.dyad_change_matrix(A, fd[:, 0].copy(), fd[:, 1].copy(), codes, args, matidx, mats, flags)
    return fd, delta @ spec.eta(theta)


def sample_independent(spec: ModelSpec, theta, draws: int, rng: np.random.Generator) -> list[Graph]:
    """Exact independent draws from a dyad-independent model (no Markov chain)."""
    fd, lo = independent_log_odds(spec, theta)
    p = 1.0 / (1.0 + np.exp(-lo))
    out = []
    for _ in range(draws):
        on = rng.random(len(p)) < p
        out.append(Graph(spec.n, map(tuple, fd[on])))
    return out
