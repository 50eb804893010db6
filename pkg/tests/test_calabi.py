import math

import numpy as np
import pytest

from calabigeo.calabi import (
    SingularTransform,
    apply_affine,
    geometry_report,
    halton_points,
    verify_function,
)
from calabigeo.decompose import analyze
from calabigeo.expr import evaluate, jet4, parse
from calabigeo.tensors import NotPositiveDefinite

from oracles import curvature_from_metric, loop_contract_vec

Q12 = "-ln(x1)+x2^2/2"


def report(text, point, n=None):
    n = n or len(point)
    return geometry_report(jet4(parse(text, n), point, n))


def test_paraboloid_report_is_flat_and_cubic_free():
    r = report("x1^2/2+x2^2/2", [0.4, -0.7])
    assert np.array_equal(r.metric, np.eye(2))
    assert not r.cubic.any() and not r.riemann_lc.any() and not r.tchebychev.any()
    assert r.pick_J == 0.0 and r.scalar == 0.0


def test_q12_hand_values():
    r = report(Q12, [1.0, 0.0])
    assert np.allclose(r.metric, np.eye(2))
    assert r.cubic[0, 0, 0] == 1.0
    assert np.count_nonzero(r.cubic) == 1
    assert r.christoffel[0, 0, 0] == -1.0
    assert not r.riemann_lc.any() and not r.riemann_gauss.any()
    assert r.pick_J == pytest.approx(0.5, abs=1e-15)
    assert r.tcheb_norm2 == pytest.approx(0.25, abs=1e-15)
    assert r.scalar == 0.0
    assert not r.weingarten.any()


def test_q_family_closed_form_at_other_points():
    # for -c ln x1 + x2^2/2: G11 = c/x1^2, A111 = c/x1^3, J = 1/(2c), |T|^2 = 1/(4c)
    for c, x1 in [(1.0, 2.0), (3.0, 0.5), (0.25, 1.7)]:
        r = report(f"-{c}*ln(x1)+x2^2/2", [x1, 0.3])
        assert r.metric[0, 0] == pytest.approx(c / x1**2, rel=1e-14)
        assert r.cubic[0, 0, 0] == pytest.approx(c / x1**3, rel=1e-14)
        assert r.pick_J == pytest.approx(1 / (2 * c), rel=1e-12)
        assert r.tcheb_norm2 == pytest.approx(1 / (4 * c), rel=1e-12)


def test_log_quadric_scalar_curvature():
    r = report("-1/2*ln(x3^2-x1^2-x2^2)", [0.0, 0.0, 2.0])
    assert r.scalar == pytest.approx(-2.0, abs=1e-12)


@pytest.mark.parametrize(
    "text, point",
    [
        ("-1/2*ln(x3^2-x1^2-x2^2)", [0.2, -0.1, 1.8]),
        ("x1^2/2 + x1^4/12 + x2^2/2 + x1*x2/5 + exp(x2)/3", [0.3, -0.4]),
        ("-ln(x1) - 2*ln(x2) + x1*x2/10 + x3^2/2 + x3^4/20", [1.2, 0.8, 0.5]),
    ],
)
def test_curvature_matches_metric_only_oracle(text, point):
    n = len(point)
    e = parse(text, n)
    r = geometry_report(jet4(e, point, n))
    gam, R = curvature_from_metric(lambda y: jet4(e, y, n).hessian(), point)
    scale = max(1.0, np.max(np.abs(R)))
    assert np.max(np.abs(r.christoffel - gam)) <= 1e-7 * max(1.0, np.max(np.abs(gam)))
    assert np.max(np.abs(r.riemann_lc - R)) <= 1e-5 * scale
    assert np.max(np.abs(r.riemann_gauss - R)) <= 1e-5 * scale


def test_tchebychev_matches_loop_oracle():
    r = report("-ln(x1) - 2*ln(x2) + x1*x2/10 + x3^2/2", [1.2, 0.8, 0.5])
    T_lower = loop_contract_vec(r.cubic, r.metric_inv) / 3
    assert np.allclose(r.tchebychev, r.metric_inv @ T_lower, rtol=1e-13, atol=1e-15)


def test_non_parallel_quartic_closed_form():
    # f = x^2/2 + x^4/12: A = -x, Gamma = x/(1+x^2), nabla A = -1 + 3x^2/(1+x^2)
    for x in (-0.7, 0.0, 0.4, 1.0):
        r = report("x1^2/2 + x1^4/12 + x2^2/2", [x, 0.2])
        assert r.nabla_cubic[0, 0, 0, 0] == pytest.approx(-1 + 3 * x * x / (1 + x * x), abs=1e-14)


def test_not_positive_definite_propagates():
    with pytest.raises(NotPositiveDefinite):
        report("ln(x1)", [1.0])


def test_one_dimensional_pick_invariant_is_undefined():
    r = report("-ln(x1)", [2.0])
    assert math.isnan(r.pick_J)
    assert r.to_json()["pick_J"] is None


def test_json_fields():
    doc = report(Q12, [1.0, 0.0]).to_json()
    for key in ("point", "metric", "fubini_pick", "nabla_A_max", "riemann_max", "codazzi_max",
                "gauss_gap_max", "scalar_R", "pick_J", "tcheb_norm2"):
        assert key in doc


# --------------------------------------------------------------------------
# verification over boxes


def test_verify_q_family_is_canonical():
    rep = verify_function(parse("-2*ln(x1)-3*ln(x2)+x3^2/2+x4^2/2", 4), [(1, 2)] * 4, 32, 0)
    assert rep.verdicts["parallel"] and rep.verdicts["flat"] and rep.verdicts["convex"]
    assert all(v < 1e-8 for v in rep.max_residuals().values())
    assert len(rep.points) == 32


def test_verify_quartic_perturbation_is_codazzi_but_not_parallel():
    rep = verify_function(parse("x1^2/2 + x1^4/12 + x2^2/2", 2), [(-1, 1)] * 2)
    assert rep.verdicts["codazzi"] is True
    assert rep.verdicts["parallel"] is False


def test_verify_paraboloid_exact_zero():
    rep = verify_function(parse("x1^2/2+x2^2/2+x3^2/2", 3), [(-1, 1)] * 3)
    assert all(rep.verdicts.values())
    assert all(v == 0.0 for v in rep.max_residuals().values())


def test_verify_flags_degenerate_point():
    rep = verify_function(parse("x1^4", 1), [(-1, 1)])
    assert rep.verdicts["convex"] is False
    assert rep.rejected and rep.rejected[0][0][0] == 0.0


def test_verify_everything_rejected():
    rep = verify_function(parse("-x1^2", 1), [(1, 2)], samples=4)
    assert not rep.points and not rep.strictly_convex
    assert "not strictly convex" in rep.message
    assert len(rep.rejected) == 40


def test_verify_domain_rejections_are_resampled():
    rep = verify_function(parse("-ln(x1)", 1), [(-1, 1)], samples=8)
    assert len(rep.points) == 8
    assert all(x[0] > 0 for x in rep.points)
    assert rep.verdicts["convex"] is False


def test_verify_is_deterministic():
    e = parse("-1/2*ln(x3^2-x1^2-x2^2)", 3)
    box = [(-0.5, 0.5), (-0.5, 0.5), (1.5, 2.5)]
    a = verify_function(e, box, 16, 5).to_json()
    b = verify_function(e, box, 16, 5).to_json()
    assert a == b
    c = verify_function(e, box, 16, 6).to_json()
    assert c["points"][0]["point"] != a["points"][0]["point"]


def test_verify_argument_checks():
    with pytest.raises(ValueError):
        verify_function(parse("x1^2", 1), [(0, 1)], samples=0)
    with pytest.raises(ValueError):
        verify_function(parse("x1^2", 1), [(0, 1)], tol=0.0)


def test_halton_points_stay_in_box():
    pts = halton_points([(1, 2), (-3, -1)], 50, 0)
    assert pts.shape == (50, 2)
    assert np.all((pts[:, 0] >= 1) & (pts[:, 0] <= 2) & (pts[:, 1] >= -3) & (pts[:, 1] <= -1))


# --------------------------------------------------------------------------
# affine action


def _invariants(text_or_expr, point, n):
    e = parse(text_or_expr, n) if isinstance(text_or_expr, str) else text_or_expr
    r = geometry_report(jet4(e, point, n))
    a = analyze(r)
    return r, a


def test_affine_constant_shift_keeps_invariants():
    f = parse(Q12, 2)
    g = apply_affine(f, np.eye(2), None, 5.0)
    for x in ([1.0, 0.0], [1.7, -0.4]):
        r0, a0 = _invariants(f, x, 2)
        r1, a1 = _invariants(g, x, 2)
        assert r1.pick_J == pytest.approx(r0.pick_J, rel=1e-12)
        assert r1.scalar == pytest.approx(r0.scalar, abs=1e-12)
        assert r1.tcheb_norm2 == pytest.approx(r0.tcheb_norm2, rel=1e-12)
        assert a1.basis.mu1 == pytest.approx(a0.basis.mu1, rel=1e-10)


def test_affine_scaling_keeps_case_and_invariants():
    f = parse(Q12, 2)
    M = np.diag([2.0, 1.0])
    g = apply_affine(f, M)
    x = np.array([1.3, 0.2])
    r0, a0 = _invariants(f, x, 2)
    r1, a1 = _invariants(g, M @ x, 2)
    assert a1.basis.label == a0.basis.label == "C_1"
    assert r1.pick_J == pytest.approx(r0.pick_J, rel=1e-12)
    assert r1.scalar == pytest.approx(r0.scalar, abs=1e-12)


def test_affine_graph_identity():
    f = parse("-1/2*ln(x3^2-x1^2-x2^2) + x1/3", 3)
    rng = np.random.default_rng(4)
    M = np.eye(3) + 0.3 * rng.standard_normal((3, 3))
    a, b, c = rng.standard_normal(3), 0.7, rng.standard_normal(3)
    g = apply_affine(f, M, a, b, shift=c)
    for x in halton_points([(-0.4, 0.4), (-0.4, 0.4), (1.5, 2.5)], 5, 1):
        lhs = evaluate(g, M @ x + c)
        rhs = evaluate(f, x) + a @ x + b
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_affine_singular_matrix():
    with pytest.raises(SingularTransform):
        apply_affine(parse(Q12, 2), np.array([[1.0, 2.0], [2.0, 4.0]]))
