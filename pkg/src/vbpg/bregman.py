"""Kernel-induced proximal machinery for composite objectives.

For a problem F = f + g, a kernel distance D and a step size eps, the
central objects are

    prox subproblem    min_y  <grad f(x), y - x> + g(y) + D(x, y) / eps
    prox map  T(x)     its minimizer set (a representative is returned)
    envelope  E(x)     f(x) + optimal subproblem value
    gap       G(x)     (F(x) - E(x)) / eps  >=  0

G vanishes exactly at proximal critical points when g is semiconvex and
the step size is admissible, which makes it the merit function used by
the diagnostics layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Array, KernelSpec, Problem, as_vector


class ProxError(RuntimeError):
    """Inner subproblem solve failed to converge."""


@dataclass(frozen=True, eq=False)
class ProxResult:
    """One representative minimizer of the prox subproblem.

    ``subproblem_value`` is <grad f(x), t - x> + g(t) + D(x, t)/eps at the
    returned t (it excludes f(x)).  ``multivalued_flag`` is set when the
    coordinatewise candidate enumeration found two global minimizers
    tying within 1e-10; ties are resolved toward smaller |t|.
    """

    minimizer: Array
    subproblem_value: float
    inner_iterations: int
    multivalued_flag: bool


def distance(K: KernelSpec, x: Array, y: Array) -> float:
    """Kernel distance D(x, y) = K(y) - K(x) - <grad K(x), y - x>."""
    x = as_vector(x)
    return K.distance(x, as_vector(y, dim=x.size))


def _subproblem_value(problem: Problem, K: KernelSpec, eps: float,
                      x: Array, grad_x: Array, t: Array) -> float:
    return (float(grad_x @ (t - x)) + problem.g.value(t)
            + K.distance(x, t) / eps)


def prox_map(problem: Problem, K: KernelSpec, eps: float, x: Array,
             warm_start: Array | None = None, inner_tol: float | None = None,
             inner_max: int = 10000, strict: bool = False) -> ProxResult:
    """Solve the prox subproblem at x.

    Separable fast path (euclidean/diagonal kernels, coordinatewise g):
    exact per-coordinate minimization through the regularizer's candidate
    enumeration.  General quadratic kernels: proximal-gradient iterations
    on the subproblem with step 1/(M/eps + L), run from ``warm_start``
    (default x) until the inner step norm falls below
    ``inner_tol`` (default 1e-10 (1 + ||x||)).
    """
    x = as_vector(x, dim=problem.dim)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if strict:
        L = problem.f.lipschitz_L
        if L > 0 and not eps < K.m / L:
            raise ValueError(f"eps={eps:g} outside (0, m/L)=(0, {K.m / L:g})")
    grad_x = problem.f.gradient(x)

    weights = K.diag_weights(problem.dim)
    if weights is not None:
        t, tied = problem.g.scaled_prox(x, grad_x, weights, eps)
        val = _subproblem_value(problem, K, eps, x, grad_x, t)
        return ProxResult(minimizer=t, subproblem_value=val,
                          inner_iterations=0, multivalued_flag=tied)

    # strongly convex inner problem: smooth part <grad_x, y> + D(x, y)/eps
    tol = inner_tol if inner_tol is not None else 1e-10 * (1.0 + float(np.linalg.norm(x)))
    step = 1.0 / (K.M / eps + problem.f.lipschitz_L)
    ones = np.ones(problem.dim)
    y = x.copy() if warm_start is None else as_vector(warm_start, dim=problem.dim)
    for it in range(1, inner_max + 1):
        grad_smooth = grad_x + K.grad_y(x, y) / eps
        y_next, _ = problem.g.scaled_prox(y - step * grad_smooth,
                                          np.zeros(problem.dim), ones, step)
        move = float(np.linalg.norm(y_next - y))
        y = y_next
        if move <= tol:
            val = _subproblem_value(problem, K, eps, x, grad_x, y)
            return ProxResult(minimizer=y, subproblem_value=val,
                              inner_iterations=it, multivalued_flag=False)
    raise ProxError(f"inner prox solve did not converge in {inner_max} iterations")


def envelope(problem: Problem, K: KernelSpec, eps: float, x: Array,
             prox: ProxResult | None = None) -> float:
    """E(x) = f(x) + optimal subproblem value; satisfies E(x) <= F(x)."""
    if prox is None:
        prox = prox_map(problem, K, eps, x)
    return problem.f.value(as_vector(x)) + prox.subproblem_value


def gap(problem: Problem, K: KernelSpec, eps: float, x: Array,
        prox: ProxResult | None = None) -> float:
    """G(x) = (F(x) - E(x)) / eps = (g(x) - subproblem value) / eps >= 0."""
    if prox is None:
        prox = prox_map(problem, K, eps, x)
    return (problem.g.value(as_vector(x)) - prox.subproblem_value) / eps


def envelope_gap(problem: Problem, K: KernelSpec, eps: float, x: Array,
                 prox: ProxResult | None = None) -> tuple[float, float, ProxResult]:
    """(E(x), G(x), prox result) from a single subproblem solve."""
    x = as_vector(x, dim=problem.dim)
    if prox is None:
        prox = prox_map(problem, K, eps, x)
    E = problem.f.value(x) + prox.subproblem_value
    G = (problem.g.value(x) - prox.subproblem_value) / eps
    return E, G, prox


def prox_subgradient(problem: Problem, K: KernelSpec, eps: float, x: Array,
                     t: Array, check: bool = True) -> Array:
    """Subgradient certificate at a prox output t of x:

        xi = grad f(t) - grad f(x) - grad_y D(x, t) / eps

    xi lies in the proximal subdifferential of F at t, with
    ||xi|| <= (L + M/eps_lo) ||x - t||.
    """
    x = as_vector(x, dim=problem.dim)
    t = as_vector(t, dim=problem.dim)
    grad_x = problem.f.gradient(x)
    if check:
        # t must do at least as well as the feasible candidate y = x
        val_t = _subproblem_value(problem, K, eps, x, grad_x, t)
        val_x = problem.g.value(x)
        if val_t > val_x + 1e-8 * (1.0 + abs(val_x)):
            raise ValueError("t is not a prox output for x "
                             "(subproblem optimality violated)")
    return problem.f.gradient(t) - grad_x - K.grad_y(x, t) / eps


def residual_bound(L: float, M: float, eps_lo: float) -> float:
    """Certified ratio bound ||xi|| / ||x - t|| = L + M / eps_lo."""
    return L + M / eps_lo


def residual_upper_estimate(problem: Problem, K: KernelSpec, eps: float,
                            x: Array) -> tuple[float, float]:
    """(||xi||, ||x - T(x)||) at the prox point of x.

    Fallback estimate of dist(0, subdiff F) for regularizers without an
    analytic subdifferential: xi is a genuine subgradient at T(x), so at
    near-fixed points (small second component) its norm upper-estimates
    the subdifferential distance at x up to the move to T(x)."""
    x = as_vector(x, dim=problem.dim)
    t = prox_map(problem, K, eps, x).minimizer
    xi = prox_subgradient(problem, K, eps, x, t, check=False)
    return float(np.linalg.norm(xi)), float(np.linalg.norm(x - t))


@dataclass(frozen=True)
class DescentConstants:
    """Coefficients (a, b, c) of the generalized descent inequality

        a [F(t) - F(u)] <= b ||u - x||^2 - ||u - t||^2 - c ||x - t||^2

    valid for every prox output t of x and every u.  The row depends on
    which of f, g are convex (case 1: neither, 2: f only, 3: g only,
    4: both).
    """

    a_frak: float
    b_frak: float
    c_frak: float
    case_id: int


def descent_case(problem: Problem) -> int:
    if problem.f.convex and problem.g.convex:
        return 4
    if problem.g.convex:
        return 3
    if problem.f.convex:
        return 2
    return 1


def descent_constants(case_id: int, m: float, M: float, L: float,
                      eps_lo: float, eps_hi: float) -> DescentConstants:
    if case_id == 1:
        a, b, c = 2.0, M / eps_lo + 2.0 + 3.0 * L, m / eps_hi - (L + 2.0)
    elif case_id == 2:
        a, b, c = 2.0, M / eps_lo + 2.0, m / eps_hi - (L + 2.0)
    elif case_id == 3:
        a = 2.0 * eps_hi / m
        b = M / m + 3.0 * L * eps_hi / m
        c = 1.0 - L * eps_hi / m
    elif case_id == 4:
        a, b, c = 2.0 * eps_hi / m, M / m, 1.0 - L * eps_hi / m
    else:
        raise ValueError("case_id must be 1..4")
    return DescentConstants(a_frak=a, b_frak=b, c_frak=c, case_id=case_id)


def check_descent_inequality(problem: Problem, K: KernelSpec, eps: float,
                             x: Array, u: Array, constants: DescentConstants,
                             prox: ProxResult | None = None) -> float:
    """Slack of the generalized descent inequality at (x, u).

    Returns b||u-x||^2 - ||u-t||^2 - c||x-t||^2 - a[F(t) - F(u)], which is
    nonnegative (up to roundoff) whenever the constants match the
    problem's convexity pattern and eps lies within the schedule bounds.
    """
    x = as_vector(x, dim=problem.dim)
    u = as_vector(u, dim=problem.dim)
    if prox is None:
        prox = prox_map(problem, K, eps, x)
    t = prox.minimizer
    Ft, Fu = problem.F(t), problem.F(u)
    if math.isinf(Fu):
        return math.inf  # u outside dom F: inequality is vacuous
    return (constants.b_frak * float((u - x) @ (u - x))
            - float((u - t) @ (u - t))
            - constants.c_frak * float((x - t) @ (x - t))
            - constants.a_frak * (Ft - Fu))
