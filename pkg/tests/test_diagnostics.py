import math

import numpy as np
import pytest

from vbpg.bregman import descent_case, descent_constants
from vbpg.core import KernelSpec, SolverConfig
from vbpg.diagnostics import (DegenerateSampleError, SliceEmptyError,
                              SublevelGrid, check_critical_value_consistency,
                              check_gap_condition_links, check_kl_exponent_map,
                              check_level_set_rate_certificates,
                              check_step_containment,
                              check_subdiff_implies_prox_eb,
                              check_value_proximity, certify_growth_conditions,
                              check_luo_tseng_bound, critical_points,
                              estimate_level_set_rate, estimate_q_linear_rate,
                              fit_error_bound, grid_min_F, kl_exponent_sweep,
                              make_slice, probe_slice, sublevel_projection)
from vbpg.problems import ProblemSpec, lasso_spec
from vbpg.solver import vbpg_run

from conftest import build_campaign

EUC = KernelSpec.euclidean()


def square_problem():
    return ProblemSpec("sq", "scalar_profile", {"id": "square"},
                       "zero", {}, 1).build()


class TestSublevelProjection:
    def test_parabola_right(self):
        d, proj = sublevel_projection(square_problem(), 1.0, [2.0])
        assert d == pytest.approx(1.0, abs=1e-6)
        assert proj[0] == pytest.approx(1.0, abs=1e-6)

    def test_parabola_left(self):
        d, proj = sublevel_projection(square_problem(), 1.0, [-3.0])
        assert d == pytest.approx(2.0, abs=1e-6)
        assert proj[0] == pytest.approx(-1.0, abs=1e-6)

    def test_boundary_value_check(self):
        p = square_problem()
        _, proj = sublevel_projection(p, 1.0, [2.5])
        assert abs(p.F(proj) - 1.0) <= 1e-6

    def test_inside_sublevel_returns_zero(self):
        grid = SublevelGrid(square_problem(), np.zeros(1), 3.0)
        d, proj = grid.project(1.0, np.array([0.5]))
        assert d == 0.0 and proj[0] == 0.5

    def test_two_resolution_consistency(self):
        p = lasso_spec("l", np.eye(2), [1.0, 0.8], 0.5).build()
        F_bar = p.F(np.array([0.6, 0.35]))
        x = np.array([1.1, 0.9])
        d1, _ = sublevel_projection(p, F_bar, x, resolution=0.01, halfwidth=2.0)
        d2, _ = sublevel_projection(p, F_bar, x, resolution=0.002, halfwidth=2.0)
        assert abs(d1 - d2) <= 2 * 0.01

    def test_empty_sublevel_raises(self):
        with pytest.raises(SliceEmptyError):
            sublevel_projection(square_problem(), -1.0, [2.0], halfwidth=3.0)

    def test_grid_min(self):
        p = lasso_spec("l", np.eye(2), [1.0, 0.8], 0.5).build()
        F_star = grid_min_F(p, np.zeros(2), 2.0)
        assert F_star == pytest.approx(p.F(np.array([0.5, 0.3])), abs=1e-9)


class TestProbeSlice:
    def test_jump_distances_exact(self, jump_campaign):
        for s in jump_campaign["samples"]:
            assert s.dist_level == abs(s.x[0])
            assert s.dist_subdiff == abs(s.x[0])
            assert s.property_A

    def test_quadratic_at_minimum_property_A(self, profile_campaigns):
        camp = profile_campaigns["square"]
        assert all(s.property_A for s in camp["samples"])
        for s in camp["samples"]:
            assert 0 < s.value_gap < camp["slice"].value_band_nu
            assert s.dist_level > 0 and s.dist_prox >= 0

    def test_empty_band_raises(self):
        p = ProblemSpec("jump", "zero", {}, "jump_quadratic", {"xbar": 0.0},
                        1).build()
        sl = make_slice(p, [0.0], 0.5, 0.5)  # band narrower than the jump
        grid = SublevelGrid(p, np.zeros(1), 2.0)
        with pytest.raises(SliceEmptyError):
            probe_slice(p, EUC, 0.5, sl, 50, 0, grid=grid,
                        crit_points=np.zeros((1, 1)), max_draws=20000)

    def test_membership_predicate(self, lasso_campaign):
        sl = lasso_campaign["slice"]
        p = lasso_campaign["problem"]
        for s in lasso_campaign["samples"][:50]:
            assert sl.contains(p, s.x)
        assert not sl.contains(p, sl.center + 10.0)


class TestCriticalPoints:
    def test_finds_unique_minimizer(self):
        p = lasso_spec("l", np.eye(2), [1.0, 0.8], 0.5).build()
        crit = critical_points(p, EUC, 0.5, np.zeros(2), 2.0, seeds_per_axis=5)
        assert crit.shape[0] == 1
        assert np.allclose(crit[0], [0.5, 0.3], atol=1e-7)

    def test_value_consistency_check(self, lasso_campaign):
        rep = check_critical_value_consistency(
            lasso_campaign["problem"], lasso_campaign["slice"].center,
            lasso_campaign["crit"], delta=1.0)
        assert rep["ok"]


class TestFits:
    def test_square_kl_and_sharpness(self, profile_campaigns):
        samples = profile_campaigns["square"]["samples"]
        kl = fit_error_bound(samples, "kl")
        sharp = fit_error_bound(samples, "sharpness")
        assert kl.exponent == pytest.approx(0.5, abs=0.02)
        assert sharp.exponent == pytest.approx(0.5, abs=0.02)
        assert kl.violated_fraction <= 0.02
        assert kl.n_samples >= 30

    def test_flat_residual_reports_unit_exponent(self):
        # F = |x|: the subdifferential distance is identically 1 off the
        # kink, so the exponent is unidentifiable and defaults to 1
        p = ProblemSpec("abs", "zero", {}, "l1", {"lam": 1.0}, 1).build()
        cfg = SolverConfig.constant(0.5, EUC, max_iters=60)
        camp = build_campaign(p, cfg, [0.7], eta=0.5, nu=0.6, n=120, seed=3,
                              halfwidth=2.0, center=[0.0])
        fit = fit_error_bound(camp["samples"], "level_subdiff")
        assert fit.exponent == 1.0
        assert fit.r_squared == 0.0
        assert fit.violated_fraction == 0.0
        assert fit.constant <= 0.5 + 1e-9  # envelope max |x| inside the slice

    def test_jump_certifies_subdiff_eb_but_fails_kl(self, jump_campaign):
        fit = fit_error_bound(jump_campaign["samples"], "level_subdiff")
        assert fit.exponent == pytest.approx(1.0, abs=1e-6)
        assert fit.constant == pytest.approx(1.0, abs=1e-6)
        assert fit.violated_fraction == 0.0
        sweep = kl_exponent_sweep(jump_campaign["samples"],
                                  [0.1, 0.3, 0.5, 0.7, 0.9])
        assert all(row["violated_fraction"] >= 0.99 for row in sweep)

    def test_kl_sweep_detects_exponent_threshold(self, profile_campaigns):
        # x^2 has KL exponent 1/2: alpha below fails, at/above holds
        samples = profile_campaigns["square"]["samples"]
        rows = {row["alpha"]: row["violated_fraction"]
                for row in kl_exponent_sweep(samples, [0.3, 0.5, 0.7])}
        assert rows[0.3] >= 0.99
        assert rows[0.5] <= 0.02
        assert rows[0.7] <= 0.02

    def test_requires_thirty_samples(self, lasso_campaign):
        with pytest.raises(ValueError):
            fit_error_bound(lasso_campaign["samples"][:10], "kl")

    def test_degenerate_sample_error(self, lasso_campaign):
        import dataclasses
        dead = [dataclasses.replace(s, dist_level=0.0)
                for s in lasso_campaign["samples"]]
        with pytest.raises(DegenerateSampleError):
            fit_error_bound(dead, "level_subdiff")

    def test_unknown_kind(self, lasso_campaign):
        with pytest.raises(ValueError):
            fit_error_bound(lasso_campaign["samples"], "nope")

    def test_holdout_stability_gate(self, lasso_campaign, profile_campaigns,
                                    jump_campaign):
        # fits that train clean stay clean on the held-out half
        for camp in (lasso_campaign, profile_campaigns["square"],
                     jump_campaign):
            for kind in ("level_subdiff", "kl", "sharpness"):
                fit = fit_error_bound(camp["samples"], kind)
                if fit.r_squared > 0.95:
                    assert fit.violated_fraction <= 0.02, (kind, fit)


class TestExponentMaps:
    def test_formula_cases(self):
        from vbpg.diagnostics import EBFit

        def fit_with(kind, exponent):
            return EBFit(bound_kind=kind, exponent=exponent, constant=1.0,
                         r_squared=1.0, n_samples=100, violated_fraction=0.0)

        rep = check_kl_exponent_map(fit_with("kl", 0.5),
                                    fit_with("level_subdiff", 1.0))
        assert rep["ok"] and rep["gamma_from_alpha"] == pytest.approx(1.0)
        rep2 = check_kl_exponent_map(fit_with("kl", 2.0 / 3.0),
                                     fit_with("level_subdiff", 2.0))
        assert rep2["ok"] and rep2["gamma_from_alpha"] == pytest.approx(2.0)

    def test_power_profile_exponents(self, profile_campaigns):
        # analytic kl exponents: x^2 -> 1/2, |x|^1.5 -> 1/3, x^4 -> 3/4
        targets = {"square": (0.5, 1.0), 1.5: (1.0 / 3.0, 0.5),
                   4.0: (0.75, 3.0)}
        for key, (alpha_t, gamma_t) in targets.items():
            samples = profile_campaigns[key]["samples"]
            kl = fit_error_bound(samples, "kl")
            eb = fit_error_bound(samples, "level_subdiff")
            sharp = fit_error_bound(samples, "sharpness")
            assert kl.exponent == pytest.approx(alpha_t, abs=0.05), key
            assert eb.exponent == pytest.approx(gamma_t, abs=0.1), key
            rep = check_kl_exponent_map(kl, eb, sharp)
            assert rep["ok"], (key, rep)

    @pytest.mark.parametrize("key,gamma_t,p_t", [
        (1.5, 0.5, 1.0), ("square", 1.0, 1.0), (3.0, 2.0, 2.0)])
    def test_subdiff_implies_prox_eb_map(self, profile_campaigns, key,
                                         gamma_t, p_t):
        camp = profile_campaigns.get(key) or profile_campaigns[key]
        samples, sl = camp["samples"], camp["slice"]
        p = camp["problem"]
        fit = fit_error_bound(samples, "level_subdiff")
        assert fit.exponent == pytest.approx(gamma_t, abs=0.1)
        rep = check_subdiff_implies_prox_eb(
            samples, sl, fit, p.f.lipschitz_L, 1.0, 1.0,
            camp["eps"], camp["eps"])
        assert not rep["gated"]
        assert rep["p"] == pytest.approx(p_t, abs=0.1)
        assert rep["n_checked"] > 0
        assert rep["n_violations"] == 0

    def test_lasso_prox_eb_zero_violations(self, lasso_campaign):
        fit = fit_error_bound(lasso_campaign["samples"], "level_subdiff")
        p = lasso_campaign["problem"]
        rep = check_subdiff_implies_prox_eb(
            lasso_campaign["samples"], lasso_campaign["slice"], fit,
            p.f.lipschitz_L, 1.0, 1.0, 0.5, 0.5)
        assert rep["n_violations"] == 0


class TestValueProximity:
    def test_lasso_zero_violations(self, lasso_campaign):
        p = lasso_campaign["problem"]
        rep = check_value_proximity(lasso_campaign["samples"],
                                    lasso_campaign["slice"].F_bar,
                                    p.f.lipschitz_L, 1.0, 0.5)
        assert rep["min_slack_envelope_vs_proxF"] >= -1e-8
        assert rep["min_slack_c0_bound"] >= -1e-8

    def test_mcp_instance(self, rng):
        spec = ProblemSpec("qmcp", "quadratic",
                           {"Q": [[2.0, 0.3], [0.3, 1.0]], "b": [0.5, -0.4]},
                           "mcp", {"lam": 0.6, "gamma": 4.0}, 2)
        p = spec.build()
        cfg = SolverConfig.constant(0.4, EUC, max_iters=800, step_tol=1e-11)
        camp = build_campaign(p, cfg, [1.5, 1.0], eta=0.5, nu=0.1, n=120,
                              seed=11, halfwidth=2.0, resolution=0.005)
        rep = check_value_proximity(camp["samples"], camp["slice"].F_bar,
                                    p.f.lipschitz_L, 1.0, 0.4)
        assert rep["min_slack_envelope_vs_proxF"] >= -1e-8
        assert rep["min_slack_c0_bound"] >= -1e-8

    def test_boundary_point_bounds_trivially(self):
        # at dist 0 with F(x) = Fbar both sides of the chain are <= 0
        from vbpg.diagnostics import ProbeSample
        s = ProbeSample(x=np.zeros(1), dist_level=0.0, dist_subdiff=0.0,
                        value_gap=0.0, dist_prox=0.0, dist_crit=0.0,
                        property_A=True, gap_value=0.0, envelope_value=0.0,
                        prox_F=0.0)
        rep = check_value_proximity([s], F_bar=0.0, L=1.0, M=1.0, eps_lo=0.5)
        assert rep["min_slack_envelope_vs_proxF"] >= 0.0
        assert rep["min_slack_c0_bound"] >= 0.0

    def test_step_containment(self, lasso_campaign):
        p = lasso_campaign["problem"]
        rep = check_step_containment(lasso_campaign["samples"],
                                     lasso_campaign["slice"], 1.0,
                                     p.f.lipschitz_L, 0.5)
        assert rep["n_checked"] > 0
        assert rep["n_violations"] == 0


class TestGapConditionLinks:
    def test_lasso_both_directions(self, lasso_campaign):
        fit = fit_error_bound(lasso_campaign["samples"], "level_bregman")
        rep = check_gap_condition_links(lasso_campaign["samples"], fit,
                                        1.0, 0.5, 0.0)
        assert not rep["gated"]
        assert rep["q"] == 1.0  # p ~ 1 maps to q = 1
        assert rep["mu_envelope"] > 0
        assert rep["n_violations"] == 0
        # gap-condition exponent q maps to KL exponent q/2, consistent with
        # the independent KL fit up to fit tolerance
        kl = fit_error_bound(lasso_campaign["samples"], "kl")
        assert abs(rep["kl_exponent"] - kl.exponent) <= 0.1

    def test_gated_without_semiconvexity(self, jump_campaign):
        fit = fit_error_bound(jump_campaign["samples"], "level_bregman")
        rep = check_gap_condition_links(jump_campaign["samples"], fit,
                                        1.0, 0.5, math.inf)
        assert rep["gated"]


class TestRates:
    def test_gradient_descent_exact_ratio(self):
        p = ProblemSpec("gd", "quadratic", {"Q": [[1.0]], "b": [0.0]},
                        "zero", {}, 1).build()
        cfg = SolverConfig.constant(0.3, EUC, max_iters=60, step_tol=0.0)
        trace = vbpg_run(p, cfg, np.array([2.0]))
        beta, window = estimate_q_linear_rate(trace, 0.0)
        assert beta == pytest.approx((1 - 0.3) ** 2, abs=1e-12)
        assert window[1] > window[0]

    def test_empty_window_raises(self):
        p = ProblemSpec("gd", "quadratic", {"Q": [[1.0]], "b": [0.0]},
                        "zero", {}, 1).build()
        cfg = SolverConfig.constant(0.3, EUC, max_iters=5)
        trace = vbpg_run(p, cfg, np.zeros(1))
        with pytest.raises(ValueError):
            estimate_q_linear_rate(trace, 0.0)

    def test_float_exhaustion_truncates(self):
        p = ProblemSpec("gd", "quadratic", {"Q": [[1.0]], "b": [0.0]},
                        "zero", {}, 1).build()
        cfg = SolverConfig.constant(0.9, EUC, max_iters=500, step_tol=0.0)
        trace = vbpg_run(p, cfg, np.array([2.0]))
        beta, window = estimate_q_linear_rate(trace, 0.0)
        assert beta == pytest.approx(0.01, abs=1e-6)

    def test_r_linear_envelope_on_gradient_descent(self):
        from vbpg.diagnostics import r_linear_envelope
        p = ProblemSpec("gd", "quadratic", {"Q": [[1.0]], "b": [0.0]},
                        "zero", {}, 1).build()
        cfg = SolverConfig.constant(0.3, EUC, max_iters=40, step_tol=0.0)
        trace = vbpg_run(p, cfg, np.array([2.0]))
        beta, _ = estimate_q_linear_rate(trace, 0.0)
        C = r_linear_envelope(trace, beta)
        # iterates contract at exactly sqrt(beta), so the envelope equals
        # the initial distance to the final iterate and dominates the tail
        assert C == pytest.approx(2.0, rel=1e-5)
        root = np.sqrt(beta)
        for x, k in zip(trace.iterates, trace.iterate_indices):
            d = abs(x[0] - trace.final_x[0])
            assert d <= C * root ** k * (1 + 1e-12)

    def test_level_set_rate_matches_iterate_contraction(self):
        # convex quadratic, g = 0: sublevel sets are balls around the
        # minimizer, so the distance ratio equals the iterate ratio
        p = ProblemSpec("q", "quadratic", {"Q": [[1.0, 0.0], [0.0, 1.0]],
                                           "b": [-1.0, -1.0]},
                        "zero", {}, 2).build()
        cfg = SolverConfig.constant(0.4, EUC, max_iters=40, step_tol=0.0)
        trace = vbpg_run(p, cfg, np.array([3.0, 2.0]))
        grid = SublevelGrid(p, np.ones(2), 3.0, resolution=0.005,
                            extra_points=[np.ones(2)])
        rep = estimate_level_set_rate(trace, p, p.F(np.ones(2)), grid)
        assert rep["beta_levelset"] == pytest.approx(0.6, abs=0.01)

    def test_level_set_rate_converged_report(self, jump_campaign):
        rep = estimate_level_set_rate(jump_campaign["trace"],
                                      jump_campaign["problem"], -1.0,
                                      jump_campaign["grid"])
        assert rep["converged"]
        assert math.isnan(rep["beta_levelset"])


class TestRateCertificates:
    def test_forward_window_and_reverse_bound(self):
        # strong curvature + near-isotropic kernel puts theta' inside the
        # admissible window, so both certificate directions are exercised
        p = ProblemSpec("q10", "quadratic",
                        {"Q": [[10.0, 0.0], [0.0, 10.0]], "b": [-10.0, -10.0]},
                        "zero", {}, 2).build()
        K = KernelSpec.diagonal([1.0, 1.001])
        cfg = SolverConfig.constant(0.05, K, max_iters=60, step_tol=0.0)
        camp = build_campaign(p, cfg, [3.0, 2.5], eta=0.4, nu=0.5, n=100,
                              seed=13, halfwidth=3.5, resolution=0.005,
                              center=[1.0, 1.0])
        rep_rate = estimate_level_set_rate(camp["trace"], p,
                                           camp["slice"].F_bar, camp["grid"])
        beta = rep_rate["beta_levelset"]
        assert beta < 1.0
        refit = max(s.dist_level / s.dist_subdiff for s in camp["samples"])
        cc = descent_constants(descent_case(p), K.m, K.M, p.f.lipschitz_L,
                               0.05, 0.05)
        rep = check_level_set_rate_certificates(
            beta, refit, cc.b_frak, cc.c_frak, p.f.lipschitz_L, K.M,
            0.05, 0.05, K.m, p.g.semiconvex_rho)
        assert "forward_beta_bound" in rep
        assert rep["forward_ok"]
        assert rep["reverse_ok"]

    def test_forward_gated_when_b_at_most_one(self):
        rep = check_level_set_rate_certificates(
            0.5, 1.0, b_frak=1.0, c_frak=0.5, L=1.0, M=1.0,
            eps_lo=0.5, eps_hi=0.5, m=1.0, rho=0.0)
        assert "forward_gated" in rep
        assert rep["reverse_ok"]  # reverse direction still evaluated


class TestGrowthConditions:
    def test_strongly_convex_all_certify(self):
        p = ProblemSpec("iso", "quadratic", {"Q": [[1.0, 0.0], [0.0, 1.0]],
                                             "b": [0.0, 0.0]},
                        "zero", {}, 2).build()
        sl = make_slice(p, [0.0, 0.0], 1.5, 10.0)
        crit = np.zeros((1, 2))
        rep = certify_growth_conditions(p, sl, crit, seed=1)
        mus = rep["mu"]
        assert mus["lsc"] == pytest.approx(1.0, abs=1e-6)
        for name in ("lesc", "lwsc", "lqgg", "lrsi"):
            assert mus[name] >= 1.0 - 1e-6, name
        assert mus["lpl"] >= 1.0 - 1e-6

    def test_pl_profile_nonconvex(self):
        p = ProblemSpec("pl", "scalar_profile", {"id": "pl_nonconvex"},
                        "zero", {}, 1).build()
        sl = make_slice(p, [0.0], 2.5, 100.0)
        crit = np.zeros((1, 1))
        rep = certify_growth_conditions(p, sl, crit, seed=2, n=800)
        assert rep["mu"]["lpl"] > 0.0
        assert rep["mu"]["lsc"] == 0.0  # concave stretch defeats convexity

    def test_weak_subreg_conclusion_on_probe(self, lasso_campaign):
        rep = certify_growth_conditions(
            lasso_campaign["problem"], lasso_campaign["slice"],
            lasso_campaign["crit"], seed=3,
            samples=lasso_campaign["samples"])
        assert not rep["weak_subreg"]["gated"]
        assert rep["weak_subreg"]["n_violations"] == 0

    def test_gated_when_mu_below_rho(self):
        spec = ProblemSpec("weak", "quadratic", {"Q": [[0.3]], "b": [0.0]},
                           "mcp", {"lam": 0.3, "gamma": 2.0}, 1)
        p = spec.build()
        sl = make_slice(p, [0.0], 0.5, 1.0)
        crit = critical_points(p, EUC, 0.5, np.zeros(1), 1.0, seeds_per_axis=5)
        rep = certify_growth_conditions(p, sl, crit, seed=4)
        assert rep["weak_subreg"]["gated"]
        assert "rho" in rep["weak_subreg"]["reason"]


class TestLuoTseng:
    def test_lasso_fit_and_bound(self, lasso_campaign):
        rep = check_luo_tseng_bound(lasso_campaign["problem"],
                                    lasso_campaign["samples"], 0.5, 0.5,
                                    lasso_campaign["crit"])
        assert not rep["gated"]
        assert math.isfinite(rep["c6"]) and rep["c6"] > 0
        assert rep["n_violations"] == 0

    def test_residual_filter_semantics(self, lasso_campaign):
        rep = check_luo_tseng_bound(lasso_campaign["problem"],
                                    lasso_campaign["samples"], 0.5, 0.12,
                                    lasso_campaign["crit"])
        assert rep["n_excluded"] > 0

    def test_critical_point_both_sides_zero(self, lasso_campaign):
        p = lasso_campaign["problem"]
        xhat = lasso_campaign["trace"].final_x
        ones = np.ones(p.dim)
        prox_pt, _ = p.g.scaled_prox(xhat, p.f.gradient(xhat), ones, 0.5)
        assert np.linalg.norm(xhat - prox_pt) <= 1e-8
        assert min(np.linalg.norm(lasso_campaign["crit"] - xhat, axis=1)) <= 1e-7

    def test_diagonal_kernel_probe_still_certifies(self):
        # the residual bound is stated through the euclidean prox-gradient
        # map; probing under a different kernel must not poison the check
        p = ProblemSpec("box", "quadratic",
                        {"Q": [[1.2, 0.4], [0.4, 0.9]], "b": [1.0, -1.5],
                         }, "box", {"lo": -1.0, "hi": 1.0}, 2).build()
        K = KernelSpec.diagonal([1.5, 1.0])
        cfg = SolverConfig.constant(0.6, K, max_iters=600, step_tol=1e-10)
        camp = build_campaign(p, cfg, [0.2, 0.9], eta=0.4, nu=0.2, n=120,
                              seed=3, halfwidth=1.8, resolution=0.005)
        rep = check_luo_tseng_bound(p, camp["samples"], 0.6, 0.5,
                                    camp["crit"])
        assert not rep["gated"]
        assert rep["n_violations"] == 0

    def test_gated_for_nonconvex_g(self, rng):
        spec = ProblemSpec("qmcp", "quadratic",
                           {"Q": [[1.0]], "b": [0.0]},
                           "mcp", {"lam": 0.5, "gamma": 3.0}, 1)
        p = spec.build()
        rep = check_luo_tseng_bound(p, [], 0.3, 0.5, np.zeros((1, 1)))
        assert rep["gated"]
