"""Likelihood-based estimation for single and pooled networks.

* :func:`mple` - maximum pseudo-likelihood; a baseline and initialiser only.
* :func:`mcmle` - Monte Carlo maximum likelihood with importance-sampled
  log-likelihood ratios and partial stepping.
* :func:`stochastic_approximation` - Robbins-Monro moment matching.
* :func:`fit_exact` - enumeration-based maximum likelihood for tiny graphs.
* :func:`standard_errors` - inverse curved Fisher information.

Pooled data share one parameter vector; networks with identical model
instantiations share one simulated sample per Monte Carlo step since their
normalising constants are identical.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.special import logsumexp

from . import _kernels as K
from . import exact as _exact
from ._optim import newton_ascent
from .errors import ESSDegenerate, MLENonexistent, PseudoSeparation
from .graph import BlockStructure, Graph, NodeAttributes
from .model import Edges, GwespCurved, IdentifiabilityWarning, Linear, ModelSpec, ModelTemplate, check_theta
from .sampler import Chain, McmcConfig, _encoded, make_rng, map_chains

DIVERGENCE_CAP = 50.0
MPLE_CAVEAT = "not likelihood-based: pseudo-likelihood ignores dependence between dyads"


@dataclass(frozen=True)
class FitResult:
    theta: np.ndarray
    std_errors: np.ndarray
    covariance: np.ndarray
    method: str
    param_names: tuple[str, ...]
    converged: bool
    iterations: int
    grad_norm: float
    ess: float | None = None
    loglik: float | None = None
    seed: int | None = None
    config: dict = field(default_factory=dict)
    history: list = field(default_factory=list)
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        # a fit without a usable covariance is never reported as converged
        if self.converged and not np.all(np.isfinite(self.covariance)):
            object.__setattr__(self, "converged", False)
            object.__setattr__(self, "notes", (*self.notes, "information singular at the estimate"))

    def table(self) -> list[tuple[str, float, float]]:
        return list(zip(self.param_names, self.theta.tolist(), self.std_errors.tolist()))


@dataclass
class NetworkData:
    """Independent networks sharing one parameter vector.

    ``specs[k]`` is the model instantiated for ``graphs[k]``; identical
    instantiations are the same object so that work can be shared.
    ``masks[k]`` is ``None`` for fully observed networks.
    """

    graphs: list[Graph]
    specs: list[ModelSpec]
    masks: list | None = None

    def __post_init__(self):
        if not self.graphs:
            raise ValueError("at least one network is required")
        if len(self.graphs) != len(self.specs):
            raise ValueError("one model instantiation per network is required")
        p = {s.p for s in self.specs}
        if len(p) != 1:
            raise ValueError("all networks must share the parameter dimension")
        for g, s in zip(self.graphs, self.specs):
            if g.n != s.n:
                raise ValueError("graph and model sizes differ")
        if self.masks is not None and len(self.masks) != len(self.graphs):
            raise ValueError("one mask per network is required")

    @classmethod
    def from_template(cls, template: ModelTemplate, graphs: Sequence[Graph],
                      attributes: Sequence[NodeAttributes | None] | None = None,
                      blocks: Sequence[BlockStructure | None] | None = None,
                      masks: Sequence | None = None) -> "NetworkData":
        graphs = list(graphs)
        attributes = [None] * len(graphs) if attributes is None else list(attributes)
        blocks = [None] * len(graphs) if blocks is None else list(blocks)
        cache: dict = {}
        specs = []
        for g, a, b in zip(graphs, attributes, blocks):
            key = (g.n, id(a), b)
            if key not in cache:
                cache[key] = template.instantiate(g.n, a, b)
            specs.append(cache[key])
        return cls(graphs, specs, None if masks is None else list(masks))

    @classmethod
    def single(cls, spec: ModelSpec, graph: Graph, mask=None) -> "NetworkData":
        return cls([graph], [spec], None if mask is None else [mask])

    def subset(self, idx: Sequence[int]) -> "NetworkData":
        idx = list(idx)
        return NetworkData([self.graphs[i] for i in idx], [self.specs[i] for i in idx],
                           None if self.masks is None else [self.masks[i] for i in idx])

    @property
    def p(self) -> int:
        return self.specs[0].p

    @property
    def param_names(self) -> tuple[str, ...]:
        return self.specs[0].param_names

    def __len__(self) -> int:
        return len(self.graphs)

    def groups(self) -> list[tuple[ModelSpec, list[int]]]:
        out: dict[int, tuple[ModelSpec, list[int]]] = {}
        for k, s in enumerate(self.specs):
            out.setdefault(id(s), (s, []))[1].append(k)
        return list(out.values())

    def observed_matrix(self, k: int) -> np.ndarray | None:
        """Observed-dyad indicator of network ``k`` or ``None`` when nothing relevant is missing."""
        if self.masks is None or self.masks[k] is None:
            return None
        obs = np.asarray(getattr(self.masks[k], "observed", self.masks[k]), dtype=bool)
        if obs.shape != (self.specs[k].n,) * 2:
            raise ValueError(f"mask {k} does not match its network")
        if np.all(obs | ~self.specs[k].free_mask):
            return None
        return obs


def _as_data(data, graph=None) -> NetworkData:
    if isinstance(data, NetworkData):
        return data
    if isinstance(data, ModelSpec) and graph is not None:
        return NetworkData.single(data, graph)
    raise TypeError("expected NetworkData (or a spec and a graph)")


# -- pseudo-likelihood ---------------------------------------------------------------

def _mple_rows(data: NetworkData) -> list[tuple[ModelSpec, np.ndarray, np.ndarray, np.ndarray]]:
    """Per model instantiation: distinct change-statistic rows, their dyad counts and edge counts."""
    per: dict[int, tuple[ModelSpec, list]] = {}
    for k, (g, spec) in enumerate(zip(data.graphs, data.specs)):
        codes, args, matidx, mats, flags = _encoded(spec)
        A = spec.restrict(g).adjacency()
        fd = spec.free_dyads
        obs = data.observed_matrix(k)
        if obs is not None:
            fd = fd[obs[fd[:, 0], fd[:, 1]]]
            A = A * obs.astype(np.uint8)
        if len(fd) == 0:
            continue
        delta, y = K.dyad_change_matrix(A, fd[:, 0].copy(), fd[:, 1].copy(), codes, args, matidx,
                                        mats, flags)
        per.setdefault(id(spec), (spec, []))[1].append(np.column_stack([delta, y]))
    if not per:
        raise ValueError("no observed dyads")
    out = []
    for spec, blocks in per.values():
        uniq, counts = np.unique(np.vstack(blocks), axis=0, return_counts=True)
        x, y = uniq[:, :-1], uniq[:, -1]
        # merge rows that differ only in the response
        xu, xinv = np.unique(x, axis=0, return_inverse=True)
        xinv = np.asarray(xinv).reshape(-1)
        out.append((spec, xu, np.bincount(xinv, weights=counts), np.bincount(xinv, weights=counts * y)))
    return out


def _separated(x: np.ndarray, n_rows: np.ndarray, ones: np.ndarray) -> bool:
    """Linear-programming test for (quasi-)complete separation of grouped binary data."""
    all1 = ones >= n_rows
    all0 = ones <= 0
    mixed = ~(all1 | all0)
    if np.all(mixed):
        return False
    sign = np.where(all1, 1.0, -1.0)
    p = x.shape[1]
    c = -(sign[~mixed, None] * x[~mixed]).sum(axis=0)
    a_ub = -(sign[~mixed, None] * x[~mixed])
    a_eq = x[mixed] if np.any(mixed) else None
    res = linprog(c, A_ub=a_ub, b_ub=np.zeros(a_ub.shape[0]),
                  A_eq=a_eq, b_eq=None if a_eq is None else np.zeros(a_eq.shape[0]),
                  bounds=[(-1, 1)] * p, method="highs")
    return bool(res.status == 0 and -res.fun > 1e-7)


def _offset_free_density_start(data: NetworkData) -> np.ndarray:
    spec = data.specs[0]
    theta = _exact.default_start(spec)
    edges = [e for e in spec.param_map if isinstance(e, Linear) and isinstance(spec.terms[e.coord], Edges)]
    if edges:
        tot = sum(g_spec.restrict(g).edge_count for g, g_spec in zip(data.graphs, data.specs))
        dyads = sum(len(s.free_dyads) for s in data.specs)
        dens = min(max(tot / max(dyads, 1), 0.5 / max(dyads, 1)), 1 - 0.5 / max(dyads, 1))
        off = 0.0
        for c in spec.offset_coords:
            off += float(np.mean(spec.terms[c].values[np.triu_indices(spec.n, 1)]))
        theta[edges[0].theta] = math.log(dens / (1 - dens)) - off
    return theta


def mple(data: NetworkData, theta0=None, tol: float = 1e-10, max_iter: int = 200) -> FitResult:
    """Maximum pseudo-likelihood estimate.

    The conditional log-odds of each dyad is ``<eta(theta), change>``; the
    pseudo-likelihood multiplies these conditionals as if dyads were
    independent, which is exact only for dyad-independent models.
    """
    data = _as_data(data)
    groups = _mple_rows(data)
    spec = data.specs[0]
    if not spec.is_curved:
        zero = np.zeros(spec.p)
        z = np.vstack([x @ g.eta_jacobian(zero) for g, x, _, _ in groups])
        if _separated(z, np.concatenate([r[2] for r in groups]), np.concatenate([r[3] for r in groups])):
            raise PseudoSeparation("pseudo-likelihood data are separated; MPLE does not exist")

    def objective(theta):
        ll = 0.0
        grad = np.zeros(len(theta))
        info = np.zeros((len(theta), len(theta)))
        curv = np.zeros_like(info)
        for g, x, n_rows, ones in groups:
            lo = x @ g.eta(theta)
            ll += float(ones @ lo - n_rows @ np.logaddexp(0.0, lo))
            prob = 0.5 * (1.0 + np.tanh(0.5 * lo))
            resid = ones - n_rows * prob
            z = x @ g.eta_jacobian(theta)
            grad += z.T @ resid
            info += (z * (n_rows * prob * (1 - prob))[:, None]).T @ z
            if g.is_curved:
                curv += np.einsum("a,abc->bc", x.T @ resid, g.eta_hessian(theta))
        return ll, grad, info, curv - info

    start = _exact.default_start(spec) if theta0 is None else np.asarray(theta0, dtype=np.float64)
    try:
        theta, ll, grad, info, it, conv = newton_ascent(objective, start, tol=tol, max_iter=max_iter,
                                                        divergence_cap=DIVERGENCE_CAP)
    except MLENonexistent as exc:
        raise PseudoSeparation(f"pseudo-likelihood diverged: {exc}") from None
    cov, se = _invert(info, spec.param_names)
    return FitResult(theta, se, cov, "mple", spec.param_names, conv, it, float(np.max(np.abs(grad))),
                     loglik=ll, notes=(MPLE_CAVEAT,))


def _invert(info: np.ndarray, names: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    info = 0.5 * (info + info.T)
    w = np.linalg.eigvalsh(info)
    if w.size and (w[0] <= 1e-10 * max(w[-1], 1e-300) or w[0] <= 0):
        warnings.warn(f"information matrix is singular (eigenvalues {w[0]:.3g} .. {w[-1]:.3g}); "
                      f"parameters {list(names)} not all identifiable; standard errors undefined",
                      IdentifiabilityWarning, stacklevel=3)
        nan = np.full(info.shape, np.nan)
        return nan, np.full(info.shape[0], np.nan)
    cov = np.linalg.inv(info)
    cov = 0.5 * (cov + cov.T)
    return cov, np.sqrt(np.diag(cov))


# -- exact -------------------------------------------------------------------------

def fit_exact(data: NetworkData, theta0=None, cap: int = _exact.DEFAULT_CAP) -> FitResult:
    data = _as_data(data)
    masks = None if data.masks is None else [data.observed_matrix(k) for k in range(len(data))]
    theta, info = _exact.exact_fit(data.specs, data.graphs, masks, theta0=theta0, cap=cap)
    inf = _exact_information(data, theta, cap)
    cov, se = _invert(inf, data.param_names)
    return FitResult(theta, se, cov, "exact", data.param_names, info["converged"], info["iterations"],
                     float(np.max(np.abs(info["score"]))), loglik=info["loglik"])


def _exact_information(data: NetworkData, theta, cap: int) -> np.ndarray:
    out = np.zeros((data.p, data.p))
    for k, (g, spec) in enumerate(zip(data.graphs, data.specs)):
        jac = spec.eta_jacobian(theta)
        eta = spec.eta(theta)
        cov = _exact.enumerate_stats(spec, cap=cap).moments(eta).covariance
        obs = data.observed_matrix(k)
        if obs is not None:
            cov = cov - _exact.enumerate_stats(spec, base=g, free=~obs, cap=cap).moments(eta).covariance
        out += jac.T @ cov @ jac
    return out


# -- Monte Carlo machinery -------------------------------------------------------------

def _weights(stats: np.ndarray, deta: np.ndarray):
    lw = stats @ deta
    lse = logsumexp(lw)
    w = np.exp(lw - lse)
    return lse - math.log(len(lw)), w


def _ess(w: np.ndarray) -> float:
    return float(1.0 / np.sum(w * w))


def _batch_var_of_mean(x: np.ndarray, batches: int = 20) -> np.ndarray:
    """Covariance of the sample mean of rows of ``x`` by non-overlapping batch means."""
    m = x.shape[0]
    if m < 2 * batches:
        c = np.atleast_2d(np.cov(x, rowvar=False)) if m > 1 else np.zeros((x.shape[1],) * 2)
        return c / max(m, 1)
    b = m // batches
    means = x[: b * batches].reshape(batches, b, -1).mean(axis=1)
    return np.atleast_2d(np.cov(means, rowvar=False)) / batches


@dataclass
class _Unconditional:
    spec: ModelSpec
    K: int
    chain: Chain
    s_obs: np.ndarray
    stats: np.ndarray | None = None
    shift: np.ndarray | None = None
    active: np.ndarray | None = None
    sub: np.ndarray | None = None


@dataclass
class _Conditional:
    group: int
    chain: Chain
    stats: np.ndarray | None = None
    sub: np.ndarray | None = None


class _LikelihoodRatio:
    """Importance-sampled log-likelihood ratio around the parameter of the current samples.

    Every group of networks sharing one model instantiation has its own
    unconditional chain; masked networks add a conditional chain each.
    Contributions are mapped to parameter space group by group, so networks
    of different sizes pool correctly.  Only statistic columns that are
    nonzero somewhere in the data or the samples enter the computation.
    """

    def __init__(self, data: NetworkData, cfg: McmcConfig, cond_cfg: McmcConfig | None):
        self.data = data
        self.cfg = cfg
        self.cond_cfg = cond_cfg
        self.uncond: list[_Unconditional] = []
        self.cond: list[_Conditional] = []
        seed = cfg.seed if cond_cfg is None else cond_cfg.seed
        for gi, (spec, members) in enumerate(data.groups()):
            s_obs = np.zeros(spec.q)
            for k in members:
                obs = data.observed_matrix(k)
                if obs is None:
                    s_obs += spec.stats(data.graphs[k])
                else:
                    ch = Chain(spec, data.graphs[k], free=~obs, rng=make_rng(seed, 1000 + k))
                    self.cond.append(_Conditional(gi, ch))
            chain = Chain(spec, data.graphs[members[0]], rng=make_rng(cfg.seed, gi))
            self.uncond.append(_Unconditional(spec, len(members), chain, s_obs, shift=np.zeros(spec.q)))
        self.theta0 = None

    def resample(self, theta: np.ndarray) -> None:
        self.theta0 = np.asarray(theta, dtype=np.float64).copy()
        cc = self.cond_cfg

        def advance(job):
            if isinstance(job, _Unconditional):
                return job.chain.run_cfg(theta, self.cfg)[0]
            burnin, interval = cc.resolved(job.chain.n_free)
            return job.chain.run(theta, burnin, interval, cc.draws, cc.proposal, cc.p_tie)[0]

        jobs = [*self.uncond, *self.cond]
        for job, st in zip(jobs, map_chains(advance, jobs)):
            job.stats = st
        for gi, u in enumerate(self.uncond):
            used = (u.s_obs != 0) | np.any(u.stats != 0, axis=0)
            for c in self.cond:
                if c.group == gi:
                    used |= np.any(c.stats != 0, axis=0)
            u.active = np.flatnonzero(used)
            u.sub = u.stats[:, u.active]
            u.shift[:] = 0.0
        for c in self.cond:
            c.sub = c.stats[:, self.uncond[c.group].active]

    def _geometry(self, theta: np.ndarray, want_hessian: bool):
        out = []
        for u in self.uncond:
            a = u.active
            deta = (u.spec.eta(theta) - u.spec.eta(self.theta0))[a]
            jac = u.spec.eta_jacobian(theta)[a]
            hess = u.spec.eta_hessian(theta)[a] if want_hessian and u.spec.is_curved else None
            out.append((deta, jac, hess))
        return out

    def evaluate(self, theta: np.ndarray, want_hessian: bool = True):
        p = len(theta)
        geo = self._geometry(theta, want_hessian)
        val = 0.0
        grad = np.zeros(p)
        info = np.zeros((p, p))
        cond_info = np.zeros((p, p))
        curv = np.zeros((p, p))
        ess, cond_ess = [], []
        for u, (deta, jac, hess) in zip(self.uncond, geo):
            a = u.active
            target = u.s_obs[a] + u.shift[a]
            lme, w = _weights(u.sub, deta)
            mu = w @ u.sub
            cen = u.sub - mu
            resid = target - u.K * mu
            val += float(target @ deta) - u.K * lme
            grad += jac.T @ resid
            info += u.K * jac.T @ ((cen * w[:, None]).T @ cen) @ jac
            if hess is not None:
                curv += np.einsum("a,abc->bc", resid, hess)
            ess.append(_ess(w) / len(w))
        for c in self.cond:
            deta, jac, hess = geo[c.group]
            lme, w = _weights(c.sub, deta)
            mu = w @ c.sub
            cen = c.sub - mu
            val += lme
            grad += jac.T @ mu
            cond_info += jac.T @ ((cen * w[:, None]).T @ cen) @ jac
            if hess is not None:
                curv += np.einsum("a,abc->bc", mu, hess)
            cond_ess.append(_ess(w) / len(w))
        self.last_ess = min(ess) if ess else 1.0
        self.last_cond_ess = min(cond_ess) if cond_ess else 1.0
        self.last_missing_info = info - cond_info
        hess_out = -(info - cond_info) + curv if want_hessian else None
        return val, grad, info, hess_out

    def _projections(self):
        jacs = [u.spec.eta_jacobian(self.theta0)[u.active] for u in self.uncond]
        return jacs, [u.sub @ j for u, j in zip(self.uncond, jacs)], [c.sub @ jacs[c.group] for c in self.cond]

    def score_z(self) -> tuple[np.ndarray, np.ndarray]:
        """Monte Carlo score at the sampling parameter and its standard errors."""
        p = len(self.theta0)
        jacs, uproj, cproj = self._projections()
        score = np.zeros(p)
        var = np.zeros((p, p))
        for u, jac, proj in zip(self.uncond, jacs, uproj):
            score += jac.T @ u.s_obs[u.active] - u.K * proj.mean(axis=0)
            var += u.K ** 2 * _batch_var_of_mean(proj)
        for proj in cproj:
            score += proj.mean(axis=0)
            var += _batch_var_of_mean(proj)
        return score, np.sqrt(np.maximum(np.diag(var), 1e-300))

    def set_target_fraction(self, shrink: float = 0.95) -> float:
        """Pull the observed statistic towards the sample mean until it sits inside the sample hull.

        Returns the largest ``gamma`` in [0, 1] such that ``gamma * t_obs +
        (1 - gamma) * mean``, pushed out by ``1 / shrink``, lies in the convex
        hull of the simulated totals (projected onto the parameter space).
        The surrogate then targets that point instead of ``t_obs``.
        """
        jacs, uproj, cproj = self._projections()
        total = sum(u.K * proj for u, proj in zip(self.uncond, uproj))
        t_obs = sum(jac.T @ u.s_obs[u.active] for u, jac in zip(self.uncond, jacs))
        t_obs = t_obs + sum(proj.mean(axis=0) for proj in cproj)
        gamma = _hull_fraction(total, total.mean(axis=0), t_obs, shrink)
        for gi, u in enumerate(self.uncond):
            a = u.active
            completed = u.s_obs[a] + sum(c.sub.mean(axis=0) for c in self.cond if c.group == gi)
            u.shift[:] = 0.0
            u.shift[a] = (1.0 - gamma) * (u.K * u.sub.mean(axis=0) - completed)
        return gamma

    def clear_target(self) -> None:
        for u in self.uncond:
            u.shift[:] = 0.0

    def ess_ok(self, theta, frac: float) -> bool:
        self.evaluate(theta, want_hessian=False)
        return self.last_ess >= frac and self.last_cond_ess >= frac


def _hull_fraction(points: np.ndarray, centre: np.ndarray, target: np.ndarray, shrink: float) -> float:
    """Largest ``g`` in [0, 1] with ``centre + g (target - centre) / shrink`` in the hull of ``points``."""
    pts = np.unique(np.round(points, 9), axis=0)
    d = (target - centre) / shrink
    if np.allclose(d, 0.0):
        return 1.0
    U, k = pts.shape
    # variables: lam (U), g; maximise g
    c = np.zeros(U + 1)
    c[-1] = -1.0
    a_eq = np.zeros((k + 1, U + 1))
    a_eq[:k, :U] = pts.T
    a_eq[:k, -1] = -d
    a_eq[k, :U] = 1.0
    b_eq = np.append(centre, 1.0)
    res = linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=[(0, None)] * U + [(0.0, 1.0)], method="highs")
    if res.status != 0:
        return 0.0
    g = float(res.x[-1])
    return 1.0 if g > 1.0 - 1e-9 else g


def _check_sample_support(lr: _LikelihoodRatio) -> None:
    """Raise when the observed statistic is on the boundary of the simulated ones.

    For a canonical model fitted to fully observed networks sharing one
    instantiation, the importance-sampled ratio has a maximiser only if the
    mean observed statistic lies in the relative interior of the convex hull
    of the sample; on the boundary the estimate runs off to infinity.
    """
    spec = lr.data.specs[0]
    if spec.is_curved or lr.cond or len(lr.uncond) != 1:
        return
    u = lr.uncond[0]
    free = [e.coord for e in spec.param_map if isinstance(e, Linear)]
    pts = np.unique(np.round(u.stats[:, free], 9), axis=0)
    target = u.s_obs[free] / u.K
    if np.linalg.matrix_rank(pts - pts.mean(axis=0), tol=1e-9) < len(free):
        raise MLENonexistent("simulated statistics are degenerate (they span fewer dimensions than "
                             "the parameter); the estimate is diverging towards a boundary")
    if not _exact.in_relative_interior(np.vstack([pts, target]), target):
        raise MLENonexistent("observed statistic lies on the boundary of the convex hull of "
                             "simulated statistics; the estimate diverges")


def _default_cond_cfg(cfg: McmcConfig) -> McmcConfig:
    return McmcConfig(burnin=None, interval=None, draws=max(50, min(cfg.draws, 200)),
                      proposal=cfg.proposal, p_tie=cfg.p_tie, seed=cfg.seed)


DECAY_START_RANGE = (-0.5, 5.0)
MIN_START_FRACTION = 0.05


def _initial_theta(data: NetworkData) -> tuple[np.ndarray, str]:
    """MPLE, or a density-matched start when the MPLE does not exist.

    A pseudo-likelihood decay far outside ``DECAY_START_RANGE`` sits on the flat
    plateau of the curved likelihood where Monte Carlo steps stall, so it is
    reset to the default decay.
    """
    try:
        theta = mple(data).theta
    except (MLENonexistent, np.linalg.LinAlgError):
        if data.specs[0].dyad_independent:
            # dyads are independent, so the pseudo-likelihood is the likelihood
            raise MLENonexistent("observed statistic lies on the boundary of the convex hull "
                                 "(separated dyad data in a dyad-independent model)") from None
        return _offset_free_density_start(data), "density"
    default = _exact.default_start(data.specs[0])
    for e in data.specs[0].param_map:
        if isinstance(e, GwespCurved) and not DECAY_START_RANGE[0] <= theta[e.decay] <= DECAY_START_RANGE[1]:
            theta[e.decay] = default[e.decay]
            return theta, "mple-decay-reset"
    return theta, "mple"


def mcmle(data: NetworkData, theta0=None, cfg: McmcConfig = McmcConfig(), max_iter: int = 60,
          ess_frac: float = 0.1, z_tol: float = 3.0, cond_cfg: McmcConfig | None = None,
          divergence_cap: float = DIVERGENCE_CAP, trust_radius: float = 3.0,
          strict_identifiability: bool = False) -> FitResult:
    """Monte Carlo maximum likelihood (complete or incomplete data).

    Each iteration simulates at the current parameter, maximises the
    importance-sampled log-likelihood ratio and, if the optimum would push
    the effective sample size of the importance weights below
    ``ess_frac * draws``, halves the step until it does not.  Iteration stops
    once every component of the Monte Carlo score at the current parameter is
    within ``z_tol`` of its Monte Carlo standard error; the returned
    estimate maximises that final ratio.  Networks with a mask use
    conditional simulation of their unobserved dyads.  The inner maximisation
    stays within ``trust_radius`` (sup norm) of the sampling parameter because
    the importance-sampled ratio is unreliable far from it, and flat curved
    directions would otherwise run off.
    """
    data = _as_data(data)
    init = "given"
    if theta0 is None:
        theta0, init = _initial_theta(data)
    theta = np.asarray(theta0, dtype=np.float64).copy()
    check_theta(data.specs[0], theta, strict=strict_identifiability)
    if cond_cfg is None and data.masks is not None:
        cond_cfg = _default_cond_cfg(cfg)
    lr = _LikelihoodRatio(data, cfg, cond_cfg)
    history = []
    converged = False
    stalled = 0
    it = 0
    for it in range(1, max_iter + 1):
        lr.resample(theta)
        gamma = lr.set_target_fraction()
        if it == 1 and init.startswith("mple") and gamma < MIN_START_FRACTION:
            # the pseudo-likelihood start simulates graphs nowhere near the data
            theta = _offset_free_density_start(data)
            init = "density-after-mple"
            lr.resample(theta)
            gamma = lr.set_target_fraction()
        score, se = lr.score_z()
        z = np.abs(score) / se
        score_ok = bool(np.all(z < z_tol))
        try:
            target, val, grad, info, _, _ = newton_ascent(
                lambda t: lr.evaluate(t), theta, tol=1e-8, max_iter=100, divergence_cap=float("inf"),
                accept=lambda c: np.max(np.abs(c - theta)) <= trust_radius)
        except np.linalg.LinAlgError:
            target = theta
        step = target - theta
        frac = 1.0
        for _ in range(30):
            if lr.ess_ok(theta + frac * step, ess_frac):
                break
            frac *= 0.5
        stalled = stalled + 1 if frac < 2.0 ** -20 else 0
        if stalled >= 3:
            raise ESSDegenerate(f"importance weights degenerate for every step size at iteration {it}; "
                                "increase draws or start closer to the estimate")
        new = theta + frac * step
        gain = lr.evaluate(new, want_hessian=False)[0]
        history.append({"iteration": it, "theta": new.copy(), "step_fraction": frac,
                        "ess": lr.last_ess, "cond_ess": lr.last_cond_ess, "max_score_z": float(z.max()),
                        "target_fraction": gamma, "gain": float(gain)})
        if not np.all(np.isfinite(new)) or np.max(np.abs(new)) > divergence_cap:
            raise MLENonexistent(f"Monte Carlo MLE diverged at iteration {it} "
                                 f"(|theta|_inf = {np.max(np.abs(new)):.1f}); observed statistics "
                                 "are on or near the boundary of the convex hull")
        theta = new
        if score_ok and frac == 1.0 and gamma == 1.0:
            converged = True
            break
    lr.clear_target()
    _check_sample_support(lr)
    lr.evaluate(theta)
    ess = lr.last_ess
    info = lr.last_missing_info if lr.cond else lr.evaluate(theta)[2]
    names = data.param_names
    cov, se_out = _invert(info, names)
    score, mcse = lr.score_z()
    method = "mcmle" if not lr.cond else "mcmle-missing"
    return FitResult(theta, se_out, cov, method, names, converged, it, float(np.max(np.abs(score))),
                     ess=ess * cfg.draws, seed=cfg.seed,
                     config={"burnin": cfg.burnin, "interval": cfg.interval, "draws": cfg.draws,
                             "proposal": cfg.proposal, "p_tie": cfg.p_tie, "ess_frac": ess_frac,
                             "init": init, "cond_ess": lr.last_cond_ess},
                     history=history)


# -- stochastic approximation --------------------------------------------------------------

@dataclass(frozen=True)
class GainSchedule:
    """Gains ``a0 * t0 / (t + t0)`` within each phase; ``a0`` halves from phase to phase."""

    a0: float = 0.5
    t0: float = 100.0
    phases: int = 4
    iterations: int = 200
    growth: float = 1.5

    def phase_lengths(self) -> list[int]:
        return [int(round(self.iterations * self.growth ** k)) for k in range(self.phases)]

    def gain(self, phase: int, t: int) -> float:
        return self.a0 * 0.5 ** phase * self.t0 / (t + self.t0)


def stochastic_approximation(data: NetworkData, theta0=None, cfg: McmcConfig = McmcConfig(),
                             gains: GainSchedule = GainSchedule(), warmup_draws: int = 200,
                             divergence_cap: float = DIVERGENCE_CAP) -> FitResult:
    """Robbins-Monro iteration ``theta += a_t D^-1 J^T (s(y) - s(Y_t))``.

    ``D`` is the curved information estimated by a short simulation at the
    starting value; each iteration advances every group's chain by one
    sampling interval.  The estimate averages the iterates of the last phase.
    """
    data = _as_data(data)
    if data.masks is not None and any(data.observed_matrix(k) is not None for k in range(len(data))):
        raise ValueError("stochastic approximation supports fully observed networks only")
    if theta0 is None:
        theta0, _ = _initial_theta(data)
    theta = np.asarray(theta0, dtype=np.float64).copy()
    groups = data.groups()
    chains = [Chain(spec, data.graphs[m[0]], rng=make_rng(cfg.seed, g))
              for g, (spec, m) in enumerate(groups)]
    s_obs = [sum(data.specs[k].stats(data.graphs[k]) for k in members) for _, members in groups]
    # warm-up: scaling matrix at the starting value
    info = np.zeros((len(theta), len(theta)))
    for ch, (spec, members) in zip(chains, groups):
        burnin, interval = cfg.resolved(ch.n_free)
        st, _ = ch.run(theta, burnin, interval, warmup_draws, cfg.proposal, cfg.p_tie)
        jac = spec.eta_jacobian(theta)
        info += len(members) * jac.T @ np.atleast_2d(np.cov(st, rowvar=False)) @ jac
    d_inv = np.linalg.pinv(info + 1e-8 * np.eye(len(theta)) * max(1.0, np.trace(info)))
    trajectory = []
    final = []
    for phase, length in enumerate(gains.phase_lengths()):
        for t in range(length):
            score = np.zeros_like(theta)
            for ch, (spec, members), obs in zip(chains, groups, s_obs):
                _, interval = cfg.resolved(ch.n_free)
                st, _ = ch.run(theta, 0, interval, 1, cfg.proposal, cfg.p_tie)
                score += spec.eta_jacobian(theta).T @ (obs - len(members) * st[0])
            theta = theta + gains.gain(phase, t) * d_inv @ score
            if not np.all(np.isfinite(theta)) or np.max(np.abs(theta)) > divergence_cap:
                raise MLENonexistent(f"stochastic approximation diverged in phase {phase + 1}")
            trajectory.append(theta.copy())
            if phase == gains.phases - 1:
                final.append(theta.copy())
    estimate = np.mean(final, axis=0)
    se_cfg = cfg.with_(seed=cfg.seed + 1)
    cov, se = standard_errors(data, estimate, se_cfg)
    return FitResult(estimate, se, cov, "stochastic-approx", data.param_names, True, len(trajectory),
                     float("nan"), seed=cfg.seed,
                     config={"a0": gains.a0, "t0": gains.t0, "phases": gains.phases,
                             "iterations": gains.iterations, "draws_for_se": cfg.draws},
                     history=[{"theta": th} for th in trajectory])


# -- standard errors and dispatch ----------------------------------------------------------

def standard_errors(data: NetworkData, theta_hat, cfg: McmcConfig = McmcConfig(),
                    cap: int = _exact.DEFAULT_CAP) -> tuple[np.ndarray, np.ndarray]:
    """Covariance and standard errors from the inverse curved Fisher information.

    Exact moments are used when every network is small enough to enumerate;
    otherwise the covariance of the statistics is simulated at ``theta_hat``.
    """
    data = _as_data(data)
    theta_hat = np.asarray(theta_hat, dtype=np.float64)
    if all(len(s.free_dyads) <= _exact.max_dyads(cap) for s in data.specs):
        info = _exact_information(data, theta_hat, cap)
    else:
        info = np.zeros((data.p, data.p))
        for g, (spec, members) in enumerate(data.groups()):
            ch = Chain(spec, data.graphs[members[0]], rng=make_rng(cfg.seed, 500 + g))
            st, _ = ch.run_cfg(theta_hat, cfg)
            jac = spec.eta_jacobian(theta_hat)
            info += len(members) * jac.T @ np.atleast_2d(np.cov(st, rowvar=False)) @ jac
    return _invert(info, data.param_names)


def fit_pooled(data: NetworkData, method: str = "mcmle", cfg: McmcConfig = McmcConfig(), **kw) -> FitResult:
    """Single parameter estimate maximising the sum of per-network log-likelihoods."""
    data = _as_data(data)
    if method == "mple":
        return mple(data, **kw)
    if method == "mcmle":
        return mcmle(data, cfg=cfg, **kw)
    if method in ("sa", "stochastic-approx"):
        return stochastic_approximation(data, cfg=cfg, **kw)
    if method == "exact":
        return fit_exact(data, **kw)
    raise ValueError(f"unknown method {method!r}")
