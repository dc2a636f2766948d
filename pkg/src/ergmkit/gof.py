"""Goodness of fit by simulation, and scans for near-degenerate parameter regions."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .estimate import NetworkData, _batch_var_of_mean
from .graph import UNREACHABLE, Graph
from .model import ModelSpec, ModelTemplate
from .sampler import Chain, McmcConfig, make_rng, map_chains
from .terms import degree_histogram, esp_histogram, triangle_count

FAMILIES = ("degree", "esp", "geodesic", "triangles")
ENVELOPE = (0.025, 0.5, 0.975)


@dataclass(frozen=True)
class GofSummary:
    """Statistic families aggregated over networks; histograms map bin -> count."""

    degree: dict
    esp: dict
    geodesic: dict
    triangles: int

    def family(self, name: str) -> dict:
        if name == "triangles":
            return {"total": self.triangles}
        return getattr(self, name)


def _nonzero_hist(h: np.ndarray) -> Counter:
    return Counter({int(k): int(v) for k, v in enumerate(h) if v})


def _geodesic_hist(A: np.ndarray) -> Counter:
    n = A.shape[0]
    if n < 2:
        return Counter()
    dist = shortest_path(A.astype(np.float64), method="D", directed=False, unweighted=True)
    d = dist[np.triu_indices(n, 1)]
    out = Counter()
    finite = np.isfinite(d)
    vals, counts = np.unique(d[finite].astype(np.int64), return_counts=True)
    out.update({int(v): int(c) for v, c in zip(vals, counts)})
    if np.any(~finite):
        out[UNREACHABLE] = int(np.count_nonzero(~finite))
    return out


def _summarise_adjacency(mats: Sequence[np.ndarray]) -> GofSummary:
    deg, esp, geo = Counter(), Counter(), Counter()
    tri = 0
    for A in mats:
        deg.update(_nonzero_hist(degree_histogram(A)))
        # bin 0 counts edges without shared partners; non-edges never enter
        esp.update(_nonzero_hist(esp_histogram(A)))
        geo.update(_geodesic_hist(A))
        tri += triangle_count(A)
    return GofSummary(dict(sorted(deg.items())), dict(sorted(esp.items())),
                      dict(sorted(geo.items(), key=_geo_key)), int(tri))


def _geo_key(kv):
    k = kv[0]
    return (1, 0) if k == UNREACHABLE else (0, k)


def gof_summary(networks: Sequence[Graph]) -> GofSummary:
    """Degree, edgewise shared partner and geodesic histograms plus total triangles, summed over networks."""
    networks = list(networks)
    if not networks:
        raise ValueError("at least one network is required")
    return _summarise_adjacency([g.adjacency() for g in networks])


@dataclass(frozen=True)
class FamilyEnvelope:
    bins: tuple
    observed: np.ndarray
    simulated: np.ndarray  # draws x bins
    lower: np.ndarray
    median: np.ndarray
    upper: np.ndarray

    @property
    def outside(self) -> np.ndarray:
        return (self.observed < self.lower) | (self.observed > self.upper)


@dataclass(frozen=True)
class GofReport:
    families: dict
    draws: int
    seed: int
    theta: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __getitem__(self, name: str) -> FamilyEnvelope:
        return self.families[name]

    def flagged(self) -> list[tuple[str, object]]:
        return [(name, b) for name, env in self.families.items()
                for b, out in zip(env.bins, env.outside) if out]

    def rows(self) -> list[tuple]:
        """``(family, bin, observed, lower, median, upper, outside)`` per bin."""
        out = []
        for name, env in self.families.items():
            for k, b in enumerate(env.bins):
                out.append((name, b, float(env.observed[k]), float(env.lower[k]), float(env.median[k]),
                            float(env.upper[k]), bool(env.outside[k])))
        return out


def _envelope(observed: dict, simulated: list[dict], key=None) -> FamilyEnvelope:
    bins = set(observed)
    for s in simulated:
        bins |= set(s)
    bins = tuple(sorted(bins, key=key)) if key else tuple(sorted(bins))
    obs = np.array([observed.get(b, 0) for b in bins], dtype=np.float64)
    sim = np.array([[s.get(b, 0) for b in bins] for s in simulated], dtype=np.float64).reshape(len(simulated), len(bins))
    lo, med, hi = np.quantile(sim, ENVELOPE, axis=0) if len(bins) else (np.zeros(0),) * 3
    return FamilyEnvelope(bins, obs, sim, lo, med, hi)


def gof_compare(data: NetworkData, theta_hat, draws: int = 100, cfg: McmcConfig = McmcConfig(),
                seed: int | None = None) -> GofReport:
    """Simulate ``draws`` replicate network sets at ``theta_hat`` and build 95% envelopes.

    Each replicate holds one simulated network per observed network (same
    model instantiation).  Chains start at the observed graphs and are
    thinned by the configured interval.
    """
    if draws < 1:
        raise ValueError("gof needs at least one simulated draw")
    seed = cfg.seed if seed is None else seed
    theta_hat = np.asarray(theta_hat, dtype=np.float64)
    groups = data.groups()

    def simulate(item):
        g_idx, (spec, members) = item
        chain = Chain(spec, data.graphs[members[0]], rng=make_rng(seed, 7000 + g_idx))
        burnin, interval = cfg.resolved(chain.n_free)
        _, rows = chain.run(theta_hat, burnin, interval, draws * len(members), cfg.proposal, cfg.p_tie,
                            record_graphs=True)
        base = chain.A.copy()
        mats = []
        for r in rows:
            base[chain.fi, chain.fj] = r
            base[chain.fj, chain.fi] = r
            mats.append(base.copy())
        return mats

    per_group = map_chains(simulate, list(enumerate(groups)))
    replicates = []
    for d in range(draws):
        mats = []
        for (spec, members), gm in zip(groups, per_group):
            mats.extend(gm[d * len(members):(d + 1) * len(members)])
        replicates.append(_summarise_adjacency(mats))
    observed = gof_summary([spec.restrict(g) for g, spec in zip(data.graphs, data.specs)])
    fams = {}
    for name in FAMILIES:
        key = (lambda b: _geo_key((b, None))) if name == "geodesic" else None
        fams[name] = _envelope(observed.family(name), [r.family(name) for r in replicates], key)
    return GofReport(fams, draws, seed, theta_hat)


# -- degeneracy ------------------------------------------------------------------

@dataclass(frozen=True)
class ScanPoint:
    theta: np.ndarray
    mean_density: float
    sd_density: float
    mc_se: float
    bimodality_gap: float
    seed: int
    densities: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))


@dataclass(frozen=True)
class ScanReport:
    points: tuple

    def __len__(self) -> int:
        return len(self.points)

    @property
    def mean_density(self) -> np.ndarray:
        return np.array([p.mean_density for p in self.points])

    @property
    def bimodality_gap(self) -> np.ndarray:
        return np.array([p.bimodality_gap for p in self.points])

    def max_density_jump(self) -> float:
        m = self.mean_density
        return float(np.max(np.abs(np.diff(m)))) if len(m) > 1 else 0.0


def bimodality_gap(densities: np.ndarray, bins: int = 20, min_share: float = 0.05) -> float:
    """Distance between the two tallest local maxima of the density histogram on [0, 1].

    Maxima holding less than ``min_share`` of the draws are ignored; a
    unimodal sample gives 0.
    """
    h, edges = np.histogram(densities, bins=bins, range=(0.0, 1.0))
    centres = 0.5 * (edges[:-1] + edges[1:])
    padded = np.concatenate([[-1], h, [-1]])
    peaks = [k for k in range(bins) if padded[k + 1] > padded[k] and padded[k + 1] >= padded[k + 2]
             and h[k] >= min_share * len(densities)]
    if len(peaks) < 2:
        return 0.0
    top = sorted(peaks, key=lambda k: h[k], reverse=True)[:2]
    return float(abs(centres[top[0]] - centres[top[1]]))


def degeneracy_scan(model: ModelSpec | ModelTemplate, grid: Sequence, n: int | None = None,
                    cfg: McmcConfig = McmcConfig(draws=2000)) -> ScanReport:
    """Long-run density summaries at each grid point; every chain starts from the empty graph."""
    grid = [np.asarray(t, dtype=np.float64) for t in grid]
    if not grid:
        raise ValueError("grid must be non-empty")
    spec = model if isinstance(model, ModelSpec) else model.instantiate(n)
    if n is not None and spec.n != n:
        raise ValueError("model size does not match n")
    dyads = max(len(spec.free_dyads), 1)
    e_col = [k for k, t in enumerate(spec.terms) if type(t).__name__ == "Edges"]

    def run(item):
        k, theta = item
        chain = Chain(spec, None, rng=make_rng(cfg.seed, 9000 + k))
        if e_col:
            st, _ = chain.run_cfg(theta, cfg)
            dens = st[:, e_col[0]] / dyads
        else:
            _, rows = chain.run_cfg(theta, cfg, record_graphs=True)
            dens = rows.sum(axis=1) / dyads
        se = float(np.sqrt(_batch_var_of_mean(dens[:, None])[0, 0]))
        return ScanPoint(theta, float(dens.mean()), float(dens.std(ddof=1)) if len(dens) > 1 else 0.0,
                         se, bimodality_gap(dens), cfg.seed, dens)

    return ScanReport(tuple(map_chains(run, list(enumerate(grid)))))
