import itertools
import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import logsumexp

from ergmkit import _kernels as K
from ergmkit.exact import exact_incomplete_loglik, exact_loglik, exact_moments, log_normalizer
from ergmkit.graph import Graph, all_dyads, build_graph, toggle
from ergmkit.missing import ObservationMask, ego_mask
from ergmkit.model import ModelSpec, gwesp_added_value, gwesp_eta
from ergmkit.sampler import _encoded
from ergmkit.terms import DegreeCount, Edges, Esp, TwoPaths, Triangles, change_vector, stat_vector

TERMS = (Edges(), DegreeCount(0), DegreeCount(2), TwoPaths(), Triangles(), Esp(1), Esp(2))


@st.composite
def graphs(draw, max_n=8, min_n=2):
    n = draw(st.integers(min_n, max_n))
    dy = all_dyads(n)
    bits = draw(st.lists(st.booleans(), min_size=len(dy), max_size=len(dy)))
    return build_graph(n, [d for d, b in zip(dy, bits) if b])


@st.composite
def graph_and_dyad(draw, max_n=8):
    g = draw(graphs(max_n, min_n=4))
    i = draw(st.integers(0, g.n - 1))
    j = draw(st.integers(0, g.n - 1).filter(lambda x: x != i))
    return g, (i, j)


@given(graph_and_dyad())
def test_toggle_is_an_involution(gd):
    g, d = gd
    h = toggle(g, d)
    assert h.has_edge(*d) != g.has_edge(*d)
    assert abs(h.edge_count - g.edge_count) == 1
    assert toggle(h, d) == g
    h.check_invariants()


@given(graph_and_dyad())
def test_change_vector_equals_recount(gd):
    g, d = gd
    on = g.copy()
    on.set_edge(*d, True)
    off = g.copy()
    off.set_edge(*d, False)
    np.testing.assert_allclose(change_vector(TERMS, g, None, d), stat_vector(TERMS, on) - stat_vector(TERMS, off))


@given(graph_and_dyad())
def test_kernel_change_matches_reference(gd):
    g, (i, j) = gd
    spec = ModelSpec.linear(g.n, TERMS)
    codes, args, matidx, mats, flags = _encoded(spec)
    A = np.ascontiguousarray(g.adjacency())
    delta, y = K.dyad_change_matrix(A, np.array([min(i, j)]), np.array([max(i, j)]), codes, args, matidx,
                                    mats, flags)
    np.testing.assert_allclose(delta[0], change_vector(TERMS, g, None, (i, j)))
    assert y[0] == g.has_edge(i, j)


@given(graphs(10, min_n=3))
def test_fast_statistics_equal_reference(g):
    spec = ModelSpec.with_gwesp(g.n, (Edges(), TwoPaths(), DegreeCount(1)), shifted=True)
    np.testing.assert_allclose(spec.stats(g), spec.stats_reference(g))


@settings(max_examples=1000)
@given(st.floats(-5, 5), st.floats(-3, 5), st.integers(2, 60))
def test_gwesp_telescoping(base, decay, m):
    eta = gwesp_eta(base, decay, np.array([m - 1, m]))
    lhs = eta[1] - eta[0]
    rhs = base * (1 - math.exp(-decay)) ** (m - 1)
    assert math.isclose(lhs, rhs, rel_tol=1e-9, abs_tol=1e-12)


@given(st.floats(0.01, 5), st.floats(0.01, 5), st.integers(1, 40))
def test_gwesp_added_values_decrease(base, decay, m):
    a, b = gwesp_added_value(base, decay, m), gwesp_added_value(base, decay, m + 1)
    assert b < a or (b == a and (1 - math.exp(-decay)) ** m == 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4), st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_probabilities_sum_to_one(n, theta):
    spec = ModelSpec.linear(n, (Edges(), TwoPaths(), Triangles()))
    psi = log_normalizer(spec, theta)
    dy = all_dyads(n)
    lw = [spec.log_weight(theta, build_graph(n, [d for b, d in enumerate(dy) if s >> b & 1]))
          for s in range(2 ** len(dy))]
    assert abs(math.exp(logsumexp(lw) - psi) - 1.0) < 1e-12


@settings(max_examples=30, deadline=None)
@given(graphs(5), st.lists(st.floats(-2, 2), min_size=2, max_size=2), st.data())
def test_incomplete_loglik_bounds(g, theta, data):
    spec = ModelSpec.linear(g.n, (Edges(), Triangles()))
    dy = all_dyads(g.n)
    hidden = data.draw(st.lists(st.sampled_from(dy), unique=True, max_size=min(len(dy), 8)))
    mask = ObservationMask.from_unobserved(g.n, hidden)
    y = mask.apply(g)
    ll = exact_incomplete_loglik(spec, theta, y, mask)
    assert ll <= 1e-12
    assert ll >= exact_loglik(spec, theta, y) - 1e-12


@given(graphs(8), st.sets(st.integers(0, 7)), st.sets(st.integers(0, 7)))
def test_mask_union_and_idempotence(g, a, b):
    a = {x for x in a if x < g.n}
    b = {x for x in b if x < g.n}
    ma, mb = ego_mask(g.n, a), ego_mask(g.n, b)
    assert ma.union(mb) == ego_mask(g.n, a | b)
    assert ma.apply(ma.apply(g)) == ma.apply(g)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-1.5, 1.5), min_size=2, max_size=2))
def test_covariance_is_positive_semidefinite(theta):
    m = exact_moments(ModelSpec.linear(4, (Edges(), Triangles())), theta)
    np.testing.assert_allclose(m.covariance, m.covariance.T)
    assert np.linalg.eigvalsh(m.covariance).min() > -1e-10


def test_graph_strategy_covers_edges():
    assert isinstance(build_graph(2, [(0, 1)]), Graph)
    assert list(itertools.islice(all_dyads(3), 3)) == [(0, 1), (0, 2), (1, 2)]
