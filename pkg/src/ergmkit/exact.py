"""Exact computation by enumerating every graph on the free dyads.

Used as the oracle behind the tests and for genuinely tiny problems.  All
operations refuse (``CapExceeded``) once the number of enumerated dyads
exceeds that of the complete graph on ``cap`` nodes (default 7, i.e. 2^21
graphs); nothing here ever falls back to an approximation.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.special import logsumexp

from . import _kernels as K
from ._optim import newton_ascent
from .errors import CapExceeded, MLENonexistent
from .graph import Graph, dyad_count
from .model import GwespCurved, ModelSpec
from .sampler import _encoded

DEFAULT_CAP = 7
DIVERGENCE_CAP = 50.0


@dataclass(frozen=True)
class ExactMoments:
    log_normalizer: float
    mean: np.ndarray
    covariance: np.ndarray


@dataclass(frozen=True)
class Enumeration:
    """Distinct statistic vectors over an enumerated set of graphs, with multiplicities."""

    stats: np.ndarray
    log_counts: np.ndarray

    def log_partition(self, eta: np.ndarray) -> float:
        return float(logsumexp(self.stats @ eta + self.log_counts))

    def moments(self, eta: np.ndarray) -> ExactMoments:
        logw = self.stats @ eta + self.log_counts
        psi = float(logsumexp(logw))
        w = np.exp(logw - psi)
        mean = w @ self.stats
        centred = self.stats - mean
        cov = (centred * w[:, None]).T @ centred
        return ExactMoments(psi, mean, 0.5 * (cov + cov.T))


_CACHE: "OrderedDict[tuple, tuple[ModelSpec, Enumeration]]" = OrderedDict()
_CACHE_SIZE = 64


def max_dyads(cap: int = DEFAULT_CAP) -> int:
    return dyad_count(cap)


def enumerate_stats(spec: ModelSpec, base: Graph | None = None, free: np.ndarray | None = None,
                    cap: int = DEFAULT_CAP) -> Enumeration:
    """Enumerate all settings of the free dyads (optionally only those in ``free``).

    Dyads outside the enumerated set keep their value in ``base`` (default
    empty).  Gray-code order lets each step reuse a single change statistic.
    """
    n = spec.n
    mask = spec.free_mask
    if free is not None:
        free = np.asarray(free, dtype=bool)
        mask = mask & free & free.T
    iu, ju = np.nonzero(np.triu(mask, 1))
    if len(iu) > max_dyads(cap):
        raise CapExceeded(f"{len(iu)} dyads to enumerate exceeds the cap of {max_dyads(cap)} "
                          f"(complete graph on {cap} nodes)")
    A = np.zeros((n, n), dtype=np.uint8) if base is None else spec.restrict(base).adjacency()
    A[iu, ju] = 0
    A[ju, iu] = 0
    key = (id(spec), A.tobytes(), iu.tobytes(), ju.tobytes())
    hit = _CACHE.get(key)
    if hit is not None and hit[0] is spec:
        _CACHE.move_to_end(key)
        return hit[1]
    stats0 = spec.stats(Graph.from_adjacency(A))
    codes, args, matidx, mats, flags = _encoded(spec)
    rows = K.gray_enumerate(A, iu.astype(np.int64), ju.astype(np.int64), stats0, codes, args,
                            matidx, mats, flags)
    # round off accumulated floating drift so equal vectors collapse
    _, first, counts = np.unique(np.round(rows, 9), axis=0, return_index=True, return_counts=True)
    enum = Enumeration(rows[first], np.log(counts.astype(np.float64)))
    _CACHE[key] = (spec, enum)
    if len(_CACHE) > _CACHE_SIZE:
        _CACHE.popitem(last=False)
    return enum


def log_normalizer(spec: ModelSpec, theta, cap: int = DEFAULT_CAP) -> float:
    return enumerate_stats(spec, cap=cap).log_partition(spec.eta(theta))


def exact_moments(spec: ModelSpec, theta, cap: int = DEFAULT_CAP) -> ExactMoments:
    return enumerate_stats(spec, cap=cap).moments(spec.eta(theta))


def exact_loglik(spec: ModelSpec, theta, y: Graph, cap: int = DEFAULT_CAP) -> float:
    eta = spec.eta(theta)
    return float(eta @ spec.stats(y)) - enumerate_stats(spec, cap=cap).log_partition(eta)


def exact_incomplete_loglik(spec: ModelSpec, theta, y_obs: Graph, mask, cap: int = DEFAULT_CAP) -> float:
    """Log-probability of the observed dyads: sum over completions of the unobserved ones."""
    obs = np.asarray(getattr(mask, "observed", mask), dtype=bool)
    if obs.shape != (spec.n, spec.n) or y_obs.n != spec.n:
        raise ValueError("mask, graph and model sizes differ")
    eta = spec.eta(theta)
    num = enumerate_stats(spec, base=y_obs, free=~obs, cap=cap).log_partition(eta)
    return num - enumerate_stats(spec, cap=cap).log_partition(eta)


# -- exact maximum likelihood ----------------------------------------------------

@dataclass
class _Network:
    spec: ModelSpec
    observed: Enumeration  # completions consistent with the data (one row if fully observed)
    full: Enumeration


def _networks(specs: Sequence[ModelSpec], graphs: Sequence[Graph], masks, cap: int) -> list[_Network]:
    if masks is None:
        masks = [None] * len(graphs)
    out = []
    for spec, g, m in zip(specs, graphs, masks):
        full = enumerate_stats(spec, cap=cap)
        if m is None:
            s = spec.stats(g)
            observed = Enumeration(s[None, :], np.zeros(1))
        else:
            obs = np.asarray(getattr(m, "observed", m), dtype=bool)
            observed = enumerate_stats(spec, base=g, free=~obs, cap=cap)
        out.append(_Network(spec, observed, full))
    return out


def _loglik_parts(nets: list[_Network], theta: np.ndarray, want_hessian: bool = False):
    """Log-likelihood, score, Fisher-type information and (optionally) the exact Hessian."""
    ll = 0.0
    p = len(theta)
    score = np.zeros(p)
    info = np.zeros((p, p))
    hess = np.zeros((p, p))
    for net in nets:
        spec = net.spec
        eta = spec.eta(theta)
        jac = spec.eta_jacobian(theta)
        full = net.full.moments(eta)
        obs = net.observed.moments(eta)
        ll += obs.log_normalizer - full.log_normalizer
        resid = obs.mean - full.mean
        score += jac.T @ resid
        info += jac.T @ full.covariance @ jac
        if want_hessian:
            h = -jac.T @ (full.covariance - obs.covariance) @ jac
            if spec.is_curved:
                h += np.einsum("a,abc->bc", resid, spec.eta_hessian(theta))
            hess += h
    return ll, score, info, hess


def in_relative_interior(points: np.ndarray, target: np.ndarray, tol: float = 1e-9) -> bool:
    """Whether ``target`` lies in the relative interior of the convex hull of ``points``.

    Solves ``max eps`` subject to ``target = sum_u lam_u points_u``,
    ``sum_u lam_u = 1`` and ``lam_u >= eps`` over the distinct points;
    interior iff ``eps > 0``.
    """
    points = np.unique(np.asarray(points, dtype=np.float64), axis=0)
    U = points.shape[0]
    if U == 1:
        return bool(np.allclose(points[0], target))
    # lam = mu + eps with mu >= 0 keeps the constraint matrix at (d + 1) x (U + 1)
    c = np.zeros(U + 1)
    c[-1] = -1.0
    a_eq = np.zeros((points.shape[1] + 1, U + 1))
    a_eq[:-1, :U] = points.T
    a_eq[:-1, U] = points.sum(axis=0)
    a_eq[-1, :U] = 1.0
    a_eq[-1, U] = U
    b_eq = np.append(np.asarray(target, dtype=np.float64), 1.0)
    res = linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=[(0, None)] * U + [(None, 1.0)], method="highs")
    return bool(res.status == 0 and -res.fun > tol)


def _check_existence(nets: list[_Network]) -> None:
    """Exact nonexistence test for canonical models on fully observed networks."""
    spec = nets[0].spec
    if spec.is_curved or any(net.observed.stats.shape[0] != 1 for net in nets):
        return
    if any(net.full is not nets[0].full for net in nets):
        return
    jac = spec.eta_jacobian(np.zeros(spec.p))
    target = np.mean([net.observed.stats[0] for net in nets], axis=0) @ jac
    if not in_relative_interior(nets[0].full.stats @ jac, target):
        raise MLENonexistent("observed statistic lies on the boundary of the convex hull "
                             "of attainable statistics")


def default_start(spec: ModelSpec) -> np.ndarray:
    theta = np.zeros(spec.p)
    for e in spec.param_map:
        if isinstance(e, GwespCurved):
            theta[e.base] = 0.1
            theta[e.decay] = 0.5
    return theta


def exact_fit(specs: Sequence[ModelSpec], graphs: Sequence[Graph], masks=None, theta0=None,
              tol: float = 1e-8, max_iter: int = 500, cap: int = DEFAULT_CAP,
              divergence_cap: float = DIVERGENCE_CAP) -> tuple[np.ndarray, dict]:
    """Maximise the exact (possibly incomplete-data, pooled) log-likelihood.

    Newton steps with the exact Hessian when it is negative definite, Fisher
    scoring otherwise, and step halving until the log-likelihood increases.
    Returns ``(theta_hat, info)`` where ``info`` carries the final
    log-likelihood, score, information matrix and iteration count.
    """
    nets = _networks(specs, graphs, masks, cap)
    _check_existence(nets)
    theta0 = default_start(specs[0]) if theta0 is None else np.asarray(theta0, dtype=np.float64)
    try:
        theta, ll, score, info, it, conv = newton_ascent(
            lambda t: _loglik_parts(nets, t, want_hessian=True), theta0, tol=tol, max_iter=max_iter,
            divergence_cap=divergence_cap)
    except MLENonexistent as exc:
        raise MLENonexistent(f"{exc}; observed statistic lies on the boundary of the convex hull") from None
    return theta, {"loglik": ll, "score": score, "information": info, "iterations": it,
                   "converged": conv}


def exact_mle(spec: ModelSpec, y: Graph, theta0=None, **kw) -> np.ndarray:
    theta, info = exact_fit([spec], [y], theta0=theta0, **kw)
    return theta
