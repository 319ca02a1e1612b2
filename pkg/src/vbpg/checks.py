"""Machine-checkable invariant suite over the shipped instances.

Each check returns a record {name, instance, passed, worst, detail}; the
suite is what the ``check`` CLI subcommand runs.  ``worst`` is oriented so
negative means a violation (slack-style) or is the worst observed error
for approximation checks; tolerances mirror the contracts asserted in the
test suite.
"""

from __future__ import annotations

import math

import numpy as np

from .bregman import (check_descent_inequality, descent_case,
                      descent_constants, envelope_gap, prox_map,
                      prox_subgradient, residual_bound)
from .core import sample_box
from .diagnostics import check_semiconvex_gap_bounds, grid_min_F
from .problems import GridProxOracle, ShippedInstance, shipped_instances
from .solver import vbpg_run


def _record(name, instance, passed, worst, detail=""):
    return {"name": name, "instance": instance, "passed": bool(passed),
            "worst": float(worst), "detail": detail}


def _finite_samples(problem, rng, n, center, halfwidth):
    X = sample_box(rng, 2 * n, center, halfwidth)
    keep = np.isfinite(problem.F_batch(X))
    return X[keep][:n]


def check_gradient_lipschitz(inst: ShippedInstance, rng, n=1000):
    problem = inst.problem()
    L = problem.f.lipschitz_L
    X = sample_box(rng, n, inst.box_center(), inst.sample_halfwidth)
    Y = sample_box(rng, n, inst.box_center(), inst.sample_halfwidth)
    worst = 0.0
    for x, y in zip(X, Y):
        dxy = float(np.linalg.norm(x - y))
        if dxy < 1e-12:
            continue
        ratio = float(np.linalg.norm(problem.f.gradient(x)
                                     - problem.f.gradient(y))) / dxy
        worst = max(worst, ratio)
    ok = worst <= L * (1.0 + 1e-9) + 1e-12
    return _record("gradient_lipschitz_ratio", inst.spec.name, ok, L - worst,
                   f"max ratio {worst:.6g} vs L={L:g}")


def check_kernel_bounds(inst: ShippedInstance, rng, n=500):
    problem = inst.problem()
    worst = math.inf
    for K in inst.config.kernels:
        X = sample_box(rng, n, inst.box_center(), inst.sample_halfwidth)
        Y = sample_box(rng, n, inst.box_center(), inst.sample_halfwidth)
        for x, y in zip(X, Y):
            r2 = float((x - y) @ (x - y))
            D = K.distance(x, y)
            worst = min(worst, D - 0.5 * K.m * r2, 0.5 * K.M * r2 - D)
            gy = float(np.linalg.norm(K.grad_y(x, y)))
            worst = min(worst, K.M * math.sqrt(r2) * (1 + 1e-9) - gy)
    return _record("kernel_distance_bounds", inst.spec.name,
                   worst >= -1e-10, worst)


def check_gap_identity(inst: ShippedInstance, rng, n=300):
    problem = inst.problem()
    K = inst.config.kernel_at(0)
    eps = inst.config.eps_at(0)
    X = _finite_samples(problem, rng, n, inst.box_center(), inst.sample_halfwidth)
    worst = 0.0
    for x in X:
        E, G, _ = envelope_gap(problem, K, eps, x)
        Fx = problem.F(x)
        worst = max(worst, abs(Fx - E - eps * G) / (1.0 + abs(Fx)))
        if G < -1e-12 or E > Fx + 1e-10 * (1 + abs(Fx)):
            worst = max(worst, 1.0)
    return _record("gap_identity", inst.spec.name, worst <= 1e-10, 1e-10 - worst,
                   f"max relative identity error {worst:.3g}")


def check_descent(inst: ShippedInstance, rng, n=300):
    problem = inst.problem()
    K = inst.config.kernel_at(0)
    eps = inst.config.eps_at(0)
    consts = descent_constants(descent_case(problem), K.m, K.M,
                               problem.f.lipschitz_L, eps, eps)
    X = _finite_samples(problem, rng, n, inst.box_center(), inst.sample_halfwidth)
    U = _finite_samples(problem, rng, n, inst.box_center(), inst.sample_halfwidth)
    worst = math.inf
    for x, u in zip(X, U):
        slack = check_descent_inequality(problem, K, eps, x, u, consts)
        if math.isfinite(slack):
            worst = min(worst, slack)
    return _record("descent_inequality", inst.spec.name, worst >= -1e-8, worst,
                   f"case {consts.case_id}")


def check_envelope_decrease(inst: ShippedInstance, rng, n=300):
    problem = inst.problem()
    K = inst.config.kernel_at(0)
    eps = inst.config.eps_at(0)
    a = 0.5 * (K.m / eps - problem.f.lipschitz_L)
    X = _finite_samples(problem, rng, n, inst.box_center(), inst.sample_halfwidth)
    worst = math.inf
    for x in X:
        E, G, prox = envelope_gap(problem, K, eps, x)
        t = prox.minimizer
        r2 = float((x - t) @ (x - t))
        Ft, Fx = problem.F(t), problem.F(x)
        worst = min(worst, E - a * r2 - Ft, Fx - a * r2 - Ft)
    return _record("envelope_value_decrease", inst.spec.name,
                   worst >= -1e-8, worst)


def check_residual_bound(inst: ShippedInstance, rng, n=300):
    problem = inst.problem()
    K = inst.config.kernel_at(0)
    eps = inst.config.eps_at(0)
    bound = residual_bound(problem.f.lipschitz_L, K.M, eps)
    X = _finite_samples(problem, rng, n, inst.box_center(), inst.sample_halfwidth)
    worst = math.inf
    for x in X:
        prox = prox_map(problem, K, eps, x)
        t = prox.minimizer
        xi = prox_subgradient(problem, K, eps, x, t, check=False)
        worst = min(worst, bound * float(np.linalg.norm(x - t)) * (1 + 1e-9)
                    - float(np.linalg.norm(xi)))
    return _record("prox_subgradient_bound", inst.spec.name,
                   worst >= -1e-12, worst)


def check_prox_vs_grid(inst: ShippedInstance, rng, n=60):
    problem = inst.problem()
    g = problem.g
    oracle = GridProxOracle(g, -10.0, 10.0, 1e-4)
    worst_arg = worst_val = 0.0
    for _ in range(n):
        v = float(rng.uniform(-6, 6))
        w = float(rng.uniform(0.5, 2.0))
        eps = float(rng.uniform(0.2, 1.0))
        t, _ = g.prox1d(v, w, eps)
        tg, hg = oracle.argmin(v, w, eps)
        hval = g.value1d(t) + 0.5 * (w / eps) * (t - v) ** 2
        worst_arg = max(worst_arg, abs(t - tg))
        worst_val = max(worst_val, hval - hg)
    ok = worst_arg <= 2e-4 and worst_val <= 1e-8
    return _record("prox_matches_grid_oracle", inst.spec.name, ok,
                   2e-4 - worst_arg, f"value slack {worst_val:.3g}")


def check_semiconvex_midpoint(inst: ShippedInstance, rng, n=400):
    problem = inst.problem()
    rho = problem.g.semiconvex_rho
    if not math.isfinite(rho):
        return None
    worst = math.inf
    phi = lambda u: problem.g.value1d(u) + 0.5 * rho * u * u
    for _ in range(n):
        s, t = rng.uniform(-8, 8, size=2)
        lhs = phi(0.5 * (s + t))
        rhs = 0.5 * (phi(s) + phi(t))
        if not math.isfinite(rhs):
            continue  # extended-value convexity is vacuous here
        worst = min(worst, rhs - lhs)
    return _record("semiconvex_midpoint", inst.spec.name, worst >= -1e-10, worst,
                   f"rho={rho:g}")


def check_solver_run(inst: ShippedInstance, rng):
    problem = inst.problem()
    if not problem.level_bounded:
        return None
    config = inst.config
    trace = vbpg_run(problem, config, inst.start())
    fv = np.array(trace.f_values)
    mono_ok = True
    for k in range(len(fv) - 1):
        if fv[k + 1] > fv[k] + 1e-12 * (1.0 + abs(fv[k])):
            mono_ok = False
        if (trace.step_norms[k] >= 1e-7 * (1.0 + np.linalg.norm(trace.final_x))
                and not fv[k + 1] < fv[k]):
            mono_ok = False
    a = 0.5 * (config.m / config.eps_hi - problem.f.lipschitz_L)
    ss = float(np.sum(np.square(trace.step_norms)))
    if problem.dim <= 3:
        F_star = grid_min_F(problem, inst.box_center(),
                            max(inst.sample_halfwidth, 2.0))
        bound = (fv[0] - F_star) / a
        summ_ok = ss <= bound + 1e-6
        detail = f"sum sq steps {ss:.3g} <= {bound:.3g}"
    else:
        # no grid oracle above dimension 3: F* is the best value over 50
        # random restarts and the bound is only as good as that estimate
        best = math.inf
        for _ in range(50):
            s = rng.uniform(inst.box_center() - inst.sample_halfwidth,
                            inst.box_center() + inst.sample_halfwidth)
            if not math.isfinite(problem.F(s)):
                continue
            best = min(best, vbpg_run(problem, config, s).final_F)
        bound = (fv[0] - best) / a
        summ_ok = ss <= bound + 1e-6
        detail = (f"sum sq steps {ss:.3g} <= {bound:.3g} "
                  "(conditional: restart-based F*)")
    res_ok = True
    if trace.terminated_reason in ("step_tol", "critical_point") and trace.residuals:
        lim = residual_bound(problem.f.lipschitz_L, config.M, config.eps_lo)
        res_ok = trace.final_residual <= lim * trace.step_norms[-1] * (1 + 1e-9) + 1e-15
    ok = mono_ok and summ_ok and res_ok
    return _record("solver_monotone_summable", inst.spec.name, ok,
                   0.0 if ok else -1.0,
                   detail + f"; reason={trace.terminated_reason}")


def check_level_boundedness(inst: ShippedInstance, rng):
    """Desk-scale scan: the sublevel set {F <= F(x0)} inside a doubled
    sampling box must stay clear of the box boundary."""
    problem = inst.problem()
    if not problem.level_bounded or problem.dim > 3:
        return None
    hw = 2.0 * inst.sample_halfwidth + 1.0
    c = inst.box_center()
    axes = [np.linspace(c[i] - hw, c[i] + hw, 41) for i in range(problem.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    vals = problem.F_batch(pts)
    level = problem.F(inst.start())
    inside = vals <= level
    on_boundary = np.any(np.abs(pts - c[None, :]) >= hw - 1e-9, axis=1)
    leak = int(np.sum(inside & on_boundary))
    return _record("level_boundedness_scan", inst.spec.name, leak == 0,
                   -float(leak), f"level={level:.4g}, halfwidth={hw:g}")


def check_semiconvex_suite(inst: ShippedInstance, rng, n=200):
    problem = inst.problem()
    rho = problem.g.semiconvex_rho
    if not (math.isfinite(rho) and rho > 0):
        return None
    K = inst.config.kernel_at(0)
    eps = inst.config.eps_at(0)
    if not eps < min(K.m / max(problem.f.lipschitz_L, 1e-300), K.m / rho):
        return None
    X = _finite_samples(problem, rng, n, inst.box_center(), inst.sample_halfwidth)
    rep = check_semiconvex_gap_bounds(problem, K, eps, X, eps)
    worst = min(rep["min_slack"].values())
    return _record("semiconvex_gap_bounds", inst.spec.name, worst >= -1e-8,
                   worst)


_CHECKS = [check_gradient_lipschitz, check_kernel_bounds, check_gap_identity,
           check_descent, check_envelope_decrease, check_residual_bound,
           check_prox_vs_grid, check_semiconvex_midpoint,
           check_level_boundedness, check_solver_run, check_semiconvex_suite]


def run_invariant_suite(instances=None, seed: int = 0) -> list:
    """All invariant checks over the given (default: shipped) instances."""
    if instances is None:
        instances = shipped_instances()
    records = []
    for name, inst in instances.items():
        for check in _CHECKS:
            rng = np.random.default_rng(seed)
            rec = check(inst, rng)
            if rec is not None:
                records.append(rec)
    return records
