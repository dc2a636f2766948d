import math
import warnings

import numpy as np
import pytest

from ergmkit.graph import BlockStructure, all_dyads, build_graph
from ergmkit.model import (BRAIN13_SE, BRAIN13_THETA, DegeneracyWarning, FixedOffset, GwespCurved,
                           GwespDecl, IdentifiabilityWarning, Linear, ModelSpec, TermDecl,
                           brain13_template, check_theta, gwesp_added_value, gwesp_eta, log_weight,
                           template)
from ergmkit.terms import Edges, Esp, Offset, Triangles

K3 = build_graph(3, all_dyads(3))


def test_gwesp_eta_examples():
    assert gwesp_eta(1.0, 0.0, 3) == pytest.approx(1.0)
    assert gwesp_eta(1.0, 1.0, 2) == pytest.approx(math.e * (1 - (1 - math.exp(-1)) ** 2))
    assert gwesp_eta(1.0, 1.0, 2) == pytest.approx(1.63212, abs=1e-5)


def test_added_value_examples():
    assert gwesp_added_value(1, 1, 1) == pytest.approx(1.0)
    assert gwesp_added_value(1, 1, 2) == pytest.approx(0.63212, abs=1e-5)
    assert gwesp_added_value(1, 0.5, 3) == pytest.approx(0.15482, abs=1e-5)
    with pytest.raises(ValueError):
        gwesp_added_value(1, 1, 0)


def test_shifted_with_zero_shifts_equals_unshifted():
    a = ModelSpec.with_gwesp(7)
    b = ModelSpec.with_gwesp(7, shifted=True)
    np.testing.assert_allclose(b.eta([-1.0, 0.0, 0.0, 0.8, 0.4]), a.eta([-1.0, 0.8, 0.4]))
    eta = b.eta([-1.0, 0.3, -0.2, 0.8, 0.4])
    np.testing.assert_allclose(eta[1:3] - a.eta([-1.0, 0.8, 0.4])[1:3], [0.3, -0.2])


def test_linear_jacobian_is_identity():
    spec = ModelSpec.linear(5, (Edges(), Triangles()))
    np.testing.assert_array_equal(spec.eta_jacobian([0.3, -1.0]), np.eye(2))


def test_jacobian_base_column_at_zero_decay():
    spec = ModelSpec.with_gwesp(6)
    jac = spec.eta_jacobian([0.0, 0.7, 0.0])
    np.testing.assert_allclose(jac[1:, 1], 1.0)


@pytest.mark.parametrize("shifted", [False, True])
def test_jacobian_and_hessian_match_finite_differences(shifted):
    spec = ModelSpec.with_gwesp(9, shifted=shifted)
    rng = np.random.default_rng(0)
    h = 1e-6
    for _ in range(10):
        theta = rng.normal(size=spec.p)
        jac = spec.eta_jacobian(theta)
        hess = spec.eta_hessian(theta)
        for b in range(spec.p):
            e = np.zeros(spec.p)
            e[b] = h
            fd = (spec.eta(theta + e) - spec.eta(theta - e)) / (2 * h)
            np.testing.assert_allclose(jac[:, b], fd, rtol=1e-5, atol=1e-7)
            fdj = (spec.eta_jacobian(theta + e) - spec.eta_jacobian(theta - e)) / (2 * h)
            np.testing.assert_allclose(hess[:, :, b], fdj, rtol=1e-4, atol=1e-6)


def test_log_weight_examples():
    spec = ModelSpec.linear(3, (Edges(),))
    assert log_weight(spec, [0.0], K3) == 0.0
    assert log_weight(spec, [1.0], K3) == pytest.approx(3.0)
    sparse = ModelSpec.linear(3, (Edges(), Offset.sparse(3)))
    assert sparse.p == 1
    assert log_weight(sparse, [0.0], K3) == pytest.approx(-3 * math.log(3))
    with pytest.raises(ValueError):
        log_weight(spec, [0.0], build_graph(4))


def test_eta_dimension_mismatch():
    with pytest.raises(ValueError):
        ModelSpec.linear(4, (Edges(),)).eta([0.0, 1.0])


def test_spec_invariants_enforced():
    with pytest.raises(ValueError):  # coordinate mapped twice
        ModelSpec(3, (Edges(),), (Linear(0, 0), Linear(1, 0)), ("a", "b"))
    with pytest.raises(ValueError):  # unmapped coordinate
        ModelSpec(3, (Edges(), Triangles()), (Linear(0, 0),), ("a",))
    with pytest.raises(ValueError):  # unused theta index
        ModelSpec(3, (Edges(),), (Linear(1, 0),), ("a", "b"))
    with pytest.raises(ValueError):  # gwesp must cover 1..n-2
        ModelSpec(5, (Edges(), Esp(1), Esp(2)), (Linear(0, 0), GwespCurved(1, 2, (1, 2))), ("e", "b", "d"))
    spec = ModelSpec(4, (Edges(), Offset.sparse(4)), (Linear(0, 0), FixedOffset(1)), ("edges",))
    np.testing.assert_array_equal(spec.eta([2.0]), [2.0, 1.0])


def test_check_theta_warnings():
    spec = ModelSpec.with_gwesp(6)
    with pytest.warns(IdentifiabilityWarning):
        check_theta(spec, [0.0, 0.0, 1.0])
    with pytest.raises(ValueError):
        check_theta(spec, [0.0, 0.0, 1.0], strict=True)
    with pytest.warns(DegeneracyWarning, match="log 2"):
        check_theta(spec, [0.0, 1.0, -1.0])
    with pytest.warns(DegeneracyWarning):
        check_theta(spec, [0.0, 1.0, -0.2])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        check_theta(spec, [0.0, 1.0, 0.5])


def test_brain13_dimensions():
    spec = brain13_template().instantiate(56)
    assert spec.p == 13
    assert spec.q == 9 + 54
    assert len(BRAIN13_THETA) == 13 and len(BRAIN13_SE) == 13
    assert spec.param_names[:2] == ("edges", "degree0")
    assert spec.param_names[8:] == ("twopaths", "gwesp.shift1", "gwesp.shift2", "gwesp.base", "gwesp.decay")


def test_template_validation():
    with pytest.raises(ValueError, match="same natural statistic"):
        template(TermDecl("edges", 0), TermDecl("edges", 1))
    with pytest.raises(ValueError, match="mapped twice"):
        template(TermDecl("edges", 0), TermDecl("triangles", 0))
    with pytest.raises(ValueError, match="collide"):
        template(TermDecl("edges", 0), TermDecl("esp", 1, (("m", 1),)), GwespDecl(2, 3))
    with pytest.raises(ValueError, match="1-based"):
        template(TermDecl("edges", 0), TermDecl("triangles", 2))


def test_blocks_restrict_free_dyads():
    b = BlockStructure.equal_blocks(2, 3)
    spec = ModelSpec.linear(6, (Edges(),), blocks=b)
    assert len(spec.free_dyads) == 6
    g = build_graph(6, [(0, 1), (2, 3), (4, 5)])
    np.testing.assert_array_equal(spec.stats(g), [2])


def test_stats_fast_equals_reference():
    spec = brain13_template().instantiate(12)
    rng = np.random.default_rng(5)
    for _ in range(10):
        g = build_graph(12, [d for d in all_dyads(12) if rng.random() < 0.3])
        np.testing.assert_allclose(spec.stats(g), spec.stats_reference(g))
