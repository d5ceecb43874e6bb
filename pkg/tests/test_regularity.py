import json
import math

import pytest

from proxlab import (EstimationPlan, NeedsReference, audit_implications,
                     estimate_constants, find_suboptimal_stationary_points,
                     make_benchmark, plan_for, verify_weak_convexity)

from oracles import bisect_root


def rel_close(value, target, tol=0.05):
    return abs(value - target) <= tol * abs(target)


def test_quad1d_recovers_documented_constants(quad1d):
    report = estimate_constants(quad1d, plan_for(quad1d))
    assert rel_close(report.mu_s, 1.0)
    assert rel_close(report.mu_r, 2.0)
    assert rel_close(report.mu_e, 0.5)
    assert rel_close(report.mu_p, 4.0)
    assert rel_close(report.mu_q, 1.0)
    assert not report.pl_fails_globally and not report.eb_fails_globally
    assert all(e.bound_direction == "exact" for e in report.estimates.values())


def test_wc_piecewise_recovers_constants(wc_piecewise):
    report = estimate_constants(wc_piecewise, plan_for(wc_piecewise))
    assert rel_close(report.mu_q, 3.0)
    assert rel_close(report.mu_e, 0.5)
    assert rel_close(report.mu_p, 4.0 / 3.0)
    assert rel_close(report.mu_r, 2.0)
    assert report.mu_s == 0.0  # nonconvex: no secant lower bound survives


def test_sine_quad_global_failure(sine_quad):
    report = estimate_constants(sine_quad, plan_for(sine_quad))
    assert report.mu_q >= 1.0 - 1e-3
    assert report.mu_p == 0.0
    assert report.pl_fails_globally and report.eb_fails_globally
    assert report.mu_e == math.inf


def test_estimate_requires_reference(lasso_toy):
    with pytest.raises(NeedsReference):
        estimate_constants(lasso_toy, EstimationPlan(sampling="random", count=200))


def test_svm_estimates_tagged_approximate(svm_toy_ref):
    plan = EstimationPlan(sampling="random", count=400, radius=0.8, seed=2, nu=math.inf)
    report = estimate_constants(svm_toy_ref, plan)
    assert report.estimates["mu_e"].bound_direction == "overestimate"
    assert report.estimates["mu_p"].bound_direction == "underestimate"
    assert report.mu_q > 0.0


def test_nu_monotonicity(quad1d):
    wide = estimate_constants(quad1d, plan_for(quad1d, nu=1.0))
    narrow = estimate_constants(quad1d, plan_for(quad1d, nu=0.25))
    assert narrow.mu_q >= wide.mu_q - 1e-12
    assert narrow.mu_p >= wide.mu_p - 1e-12
    assert narrow.mu_r >= wide.mu_r - 1e-12
    assert narrow.mu_e <= wide.mu_e + 1e-12


def test_grid_refinement_stability():
    for name in ("quad1d", "wc_piecewise", "quad_quartic"):
        p = make_benchmark(name)
        a = estimate_constants(p, plan_for(p, count=10_001))
        b = estimate_constants(p, plan_for(p, count=20_001))
        for key in ("mu_r", "mu_e", "mu_p", "mu_q"):
            va, vb = a.estimates[key].value, b.estimates[key].value
            if va > 0 and math.isfinite(va):
                assert abs(vb - va) / va < 0.02, (name, key)


def test_audit_passes_on_convex_benchmarks():
    for name in ("quad1d", "quad_quartic"):
        p = make_benchmark(name)
        report = estimate_constants(p, plan_for(p))
        checks = audit_implications(report, p.weak_convexity)
        assert len(checks) == 6
        assert all(c.status == "pass" for c in checks), name


def test_audit_weakly_convex_growth_branch(wc_piecewise):
    report = estimate_constants(wc_piecewise, plan_for(wc_piecewise))
    checks = audit_implications(report, rho=2.0)
    by_name = {c.relation: c for c in checks}
    growth = by_name["mu_r >= mu_q - rho/2"]
    assert growth.status == "pass"  # mu_q ~ 3 > rho/2 = 1 fires the branch
    assert growth.expected == pytest.approx(2.0, rel=0.05)


def test_audit_degenerate_on_sine(sine_quad):
    report = estimate_constants(sine_quad, plan_for(sine_quad))
    checks = audit_implications(report, rho=10.0)
    by_name = {c.relation: c.status for c in checks}
    assert by_name["mu_e <= 1/mu_r"] == "degenerate"
    assert by_name["mu_p >= 2/(2 mu_e + rho mu_e^2)"] == "degenerate"
    assert by_name["mu_e <= 2/mu_p"] == "degenerate"
    assert by_name["mu_q >= 1/(4 mu_e)"] == "degenerate"
    assert by_name["mu_r >= mu_q - rho/2"] == "skipped"  # mu_q ~ 1 < rho/2


def test_quarter_relation_arithmetic(quad1d):
    report = estimate_constants(quad1d, plan_for(quad1d))
    # mu_q = 1 >= 1/(4 mu_e) = 0.5 with mu_e = 0.5.
    assert report.mu_q >= 1.0 / (4.0 * report.mu_e) * 0.9


def test_stationary_points_sine(sine_quad):
    pts = find_suboptimal_stationary_points(sine_quad, (1.0, 3.0))
    assert len(pts) >= 1
    # Oracle: the derivative zero of x + 3 sin 2x in (2.5, 2.8).
    root = bisect_root(lambda t: t + 3.0 * math.sin(2.0 * t), 2.5, 2.8)
    assert any(abs(float(x[0]) - root) < 1e-6 for x in pts)
    for x in pts:
        assert float(sine_quad.value(x)) > 1e-6  # strictly suboptimal


def test_stationary_points_empty_when_unique(quad1d, wc_piecewise):
    assert find_suboptimal_stationary_points(quad1d, (-1.0, 1.0)) == []
    assert find_suboptimal_stationary_points(wc_piecewise, (-2.0, 0.5)) == []


def test_verify_weak_convexity(quad1d, wc_piecewise):
    ok, witness = verify_weak_convexity(wc_piecewise, 2.0, samples=800)
    assert ok and witness is None
    ok, witness = verify_weak_convexity(wc_piecewise, 1.0, samples=800)
    assert not ok
    x, y, lam = witness
    mid = float((lam * x + (1 - lam) * y)[0])
    assert -1.0 < mid < -0.5  # violation sits on the concave cap
    assert verify_weak_convexity(quad1d, 0.0, samples=400)[0]


def test_report_json_shape(quad1d):
    report = estimate_constants(quad1d, plan_for(quad1d))
    body = report.to_json()
    assert set(body["constants"]) == {"mu_s", "mu_r", "mu_e", "mu_p", "mu_q"}
    for entry in body["constants"].values():
        assert {"value", "witness", "bound_direction"} <= set(entry)
    json.dumps(body)  # serializable end to end
    inf_report = estimate_constants(make_benchmark("sine_quad"),
                                    plan_for(make_benchmark("sine_quad")))
    assert inf_report.to_json()["constants"]["mu_e"]["value"] == "inf"


def test_plan_validation():
    with pytest.raises(ValueError):
        EstimationPlan(count=10)
    with pytest.raises(ValueError):
        EstimationPlan(sampling="sobol")
    with pytest.raises(ValueError):
        EstimationPlan(sampling="grid", bracket=None)
