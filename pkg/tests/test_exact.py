import itertools
import math

import numpy as np
import pytest
from scipy.optimize import minimize
from scipy.special import logsumexp

from ergmkit.errors import CapExceeded, MLENonexistent
from ergmkit.exact import (enumerate_stats, exact_fit, exact_incomplete_loglik, exact_loglik, exact_mle,
                           exact_moments, log_normalizer)
from ergmkit.graph import BlockStructure, Graph, all_dyads, build_graph
from ergmkit.missing import ObservationMask
from ergmkit.model import ModelSpec
from ergmkit.terms import Edges, Offset, Triangles


def all_graphs(n):
    dy = all_dyads(n)
    for bits in range(2 ** len(dy)):
        yield build_graph(n, [d for b, d in enumerate(dy) if bits >> b & 1])


def brute_psi(spec, theta):
    return logsumexp([spec.log_weight(theta, g) for g in all_graphs(spec.n)])


def test_normalizer_examples():
    assert log_normalizer(ModelSpec.linear(3, (Edges(),)), [0.0]) == pytest.approx(3 * math.log(2), abs=1e-14)
    et = ModelSpec.linear(3, (Edges(), Triangles()))
    assert log_normalizer(et, [0.0, math.log(2)]) == pytest.approx(math.log(9), abs=1e-14)
    off = ModelSpec.linear(3, (Edges(), Offset.sparse(3)))
    assert log_normalizer(off, [0.0]) == pytest.approx(3 * math.log(4 / 3), abs=1e-14)


def test_moment_examples():
    m = exact_moments(ModelSpec.linear(3, (Edges(),)), [0.0])
    assert m.mean[0] == pytest.approx(1.5) and m.covariance[0, 0] == pytest.approx(0.75)
    m = exact_moments(ModelSpec.linear(4, (Edges(),)), [math.log(0.2 / 0.8)])
    assert m.mean[0] == pytest.approx(1.2)
    m = exact_moments(ModelSpec.linear(3, (Edges(), Triangles())), [0.0, math.log(2)])
    assert m.mean[1] == pytest.approx(2 / 9)


def test_normalizer_matches_brute_force_with_curved_terms():
    spec = ModelSpec.with_gwesp(5, (Edges(), Triangles()), shifted=True)
    theta = np.array([-0.5, 0.2, 0.3, -0.1, 0.6, 0.8])
    assert log_normalizer(spec, theta) == pytest.approx(brute_psi(spec, theta), abs=1e-12)


def test_cap_refuses():
    with pytest.raises(CapExceeded):
        log_normalizer(ModelSpec.linear(8, (Edges(),)), [0.0])
    with pytest.raises(CapExceeded):
        log_normalizer(ModelSpec.linear(5, (Edges(),)), [0.0], cap=4)


def test_edges_mle_examples():
    spec = ModelSpec.linear(4, (Edges(),))
    theta = exact_mle(spec, build_graph(4, [(0, 1), (1, 2), (2, 3)]))
    assert theta[0] == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(MLENonexistent):
        exact_mle(spec, build_graph(4))


def test_triangle_mle_matches_independent_optimiser():
    spec = ModelSpec.linear(6, (Edges(), Triangles()))
    y = build_graph(6, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (1, 5)])
    stats = np.array([[g.edge_count, spec.stats(g)[1]] for g in all_graphs(6)])
    sy = spec.stats(y)

    def negll(t):
        return -(t @ sy - logsumexp(stats @ t))

    grid = [(a, b) for a in np.linspace(-3, 3, 25) for b in np.linspace(-3, 3, 25)]
    start = min(grid, key=lambda t: negll(np.array(t)))
    ref = minimize(negll, start, method="Nelder-Mead", options={"xatol": 1e-9, "fatol": 1e-13}).x
    np.testing.assert_allclose(exact_mle(spec, y), ref, atol=1e-4)


def test_mean_value_property_canonical():
    spec = ModelSpec.linear(5, (Edges(), Triangles()))
    y = build_graph(5, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4)])
    theta = exact_mle(spec, y)
    np.testing.assert_allclose(exact_moments(spec, theta).mean, spec.stats(y), atol=1e-6)


def test_curved_score_at_mle():
    spec = ModelSpec.with_gwesp(6)
    y = build_graph(6, [(0, 2), (0, 3), (0, 5), (1, 2), (2, 3), (2, 4), (3, 4), (3, 5)])
    theta, info = exact_fit([spec], [y])
    score = spec.eta_jacobian(theta).T @ (spec.stats(y) - exact_moments(spec, theta).mean)
    assert np.max(np.abs(score)) < 1e-6
    assert info["converged"]


def test_incomplete_examples():
    spec = ModelSpec.linear(3, (Edges(),))
    y = build_graph(3, [(0, 1)])
    mask = ObservationMask.from_unobserved(3, [(1, 2)])
    assert exact_incomplete_loglik(spec, [0.0], y, mask) == pytest.approx(math.log(2 / 8), abs=1e-14)
    full = ObservationMask.full(3)
    assert exact_incomplete_loglik(spec, [0.3], y, full) == pytest.approx(exact_loglik(spec, [0.3], y), abs=1e-14)
    assert exact_incomplete_loglik(spec, [0.3], y, ObservationMask.empty(3)) == pytest.approx(0.0, abs=1e-14)


def test_marginal_coherence():
    spec = ModelSpec.linear(4, (Edges(), Triangles()))
    theta = [-0.4, 0.7]
    mask = ObservationMask.from_unobserved(4, [(0, 1), (2, 3), (1, 3)])
    obs_dyads = [d for d in all_dyads(4) if mask.observed[d]]
    total = 0.0
    for bits in range(2 ** len(obs_dyads)):
        y = build_graph(4, [d for b, d in enumerate(obs_dyads) if bits >> b & 1])
        total += math.exp(exact_incomplete_loglik(spec, theta, y, mask))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_block_factorisation():
    b = BlockStructure((0, 0, 0, 1, 1, 1, 1))
    spec = ModelSpec.linear(7, (Edges(), Triangles()), blocks=b)
    theta = [-0.3, 0.4]
    parts = [log_normalizer(ModelSpec.linear(k, (Edges(), Triangles())), theta) for k in (3, 4)]
    assert log_normalizer(spec, theta) == pytest.approx(sum(parts), abs=1e-12)


def test_enumeration_counts_every_graph():
    enum = enumerate_stats(ModelSpec.linear(5, (Edges(), Triangles())))
    assert np.exp(enum.log_counts).sum() == pytest.approx(2 ** 10)
    counts = {}
    for g in all_graphs(5):
        key = (g.edge_count, ModelSpec.linear(5, (Edges(), Triangles())).stats(g)[1])
        counts[key] = counts.get(key, 0) + 1
    got = {tuple(s): round(math.exp(c)) for s, c in zip(enum.stats, enum.log_counts)}
    assert got == counts


def test_pooled_exact_fit_uses_sum_of_statistics():
    spec = ModelSpec.linear(4, (Edges(),))
    g1 = build_graph(4, [(0, 1)])
    g2 = build_graph(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)])
    theta, _ = exact_fit([spec, spec], [g1, g2])
    assert theta[0] == pytest.approx(0.0, abs=1e-9)
    assert isinstance(g1, Graph)


def test_brute_force_oracle_self_check():
    spec = ModelSpec.linear(3, (Edges(), Triangles()))
    values = sorted(math.exp(spec.log_weight([0.0, math.log(2)], g)) for g in all_graphs(3))
    assert values == [1] * 7 + [pytest.approx(2.0)]
    assert len(list(itertools.islice(all_graphs(3), 100))) == 8
