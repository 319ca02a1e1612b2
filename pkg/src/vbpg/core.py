"""Core domain types and validation for composite-objective solvers.

A problem is a pair F = f + g: a smooth term f (value, gradient,
gradient-Lipschitz constant L) plus a regularizer g (possibly nonsmooth,
nonconvex, extended-real valued).  Proximity between points is measured by
a kernel-induced distance

    D(x, y) = K(y) - K(x) - <grad K(x), y - x>

for a strongly convex kernel K.  A kernel is certified by a pair (m, M):
m is its strong-convexity modulus, M the Lipschitz modulus of its
gradient, so that (m/2)||x-y||^2 <= D(x, y) <= (M/2)||x-y||^2.

All types here are immutable after construction and their evaluations are
pure, so problems and kernels can be shared freely across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

Array = np.ndarray


def as_vector(x, dim: Optional[int] = None) -> Array:
    """Coerce to a finite 1-D float array, validating dimension if given."""
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise ValueError(f"expected a vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    if dim is not None and v.size != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {v.size}")
    return v


@dataclass(frozen=True, eq=False)
class SmoothObjective:
    """Smooth part f of a composite objective.

    ``lipschitz_L`` certifies ||grad f(x) - grad f(y)|| <= L ||x - y||;
    it is supplied analytically by the problem builders (largest singular
    value of the Hessian for quadratics, spectral bound for logistic
    losses).  ``value_batch`` evaluates f on the rows of an (n, dim)
    array; it exists so grid oracles stay vectorized.
    """

    value: Callable[[Array], float]
    gradient: Callable[[Array], Array]
    lipschitz_L: float
    convex: bool
    value_batch: Optional[Callable[[Array], Array]] = None

    def __post_init__(self):
        if self.lipschitz_L < 0:
            raise ValueError("lipschitz_L must be nonnegative")

    def batch(self, X: Array) -> Array:
        if self.value_batch is not None:
            return self.value_batch(X)
        return np.array([self.value(row) for row in X])


class Regularizer:
    """Base class for regularizers g.

    Concrete regularizers are coordinate-separable: they provide a scalar
    prox through :meth:`prox1d` and an exact scalar subdifferential
    distance through :meth:`subdiff_dist1d`.  Values may be +inf
    (indicator-type penalties); arithmetic with the +inf sentinel never
    produces NaN because the quadratic model added to g is always finite.

    Attributes
    ----------
    kind : str
        Short identifier ("l1", "mcp", ...).
    convex : bool
    semiconvex_rho : float
        Smallest rho >= 0 such that g + (rho/2)||.||^2 is convex; +inf if
        no such modulus is known.
    continuous : bool
        True if g is real valued and continuous on all of R^n.
    """

    kind: str = "abstract"
    convex: bool = False
    semiconvex_rho: float = math.inf
    continuous: bool = True

    def value1d(self, t: float) -> float:
        raise NotImplementedError

    def prox1d(self, v: float, weight: float, eps: float) -> tuple[float, bool]:
        """Global minimizer of g(t) + (weight/(2 eps)) (t - v)^2.

        Returns ``(t, tied)`` where ``tied`` flags a near-tie between
        distinct global minimizers (resolved toward smaller |t|).
        """
        raise NotImplementedError

    def subdiff_dist1d(self, t: float, grad_f_t: float) -> float:
        """dist(0, grad_f_t + subdiff g(t)); +inf outside dom g."""
        raise NotImplementedError

    def value(self, x: Array) -> float:
        return float(sum(self.value1d(float(t)) for t in x))

    def value_batch(self, X: Array) -> Array:
        out = np.zeros(X.shape[0])
        for j in range(X.shape[1]):
            out += np.array([self.value1d(float(t)) for t in X[:, j]])
        return out

    def scaled_prox(self, anchor: Array, linear: Array, weights: Array,
                    eps: float) -> tuple[Array, bool]:
        """Coordinatewise minimizer of <linear, y-anchor> + g(y) + sum_i
        weights_i (y_i - anchor_i)^2 / (2 eps)."""
        v = anchor - eps * linear / weights
        out = np.empty_like(anchor)
        tied = False
        for i in range(anchor.size):
            out[i], tie = self.prox1d(float(v[i]), float(weights[i]), eps)
            tied = tied or tie
        return out, tied

    def subdiff_dist(self, x: Array, grad_f: Array) -> float:
        """dist(0, grad f(x) + subdiff g(x)) for separable g."""
        parts = [self.subdiff_dist1d(float(t), float(c))
                 for t, c in zip(x, grad_f)]
        if any(math.isinf(p) for p in parts):
            return math.inf
        return float(np.linalg.norm(parts))


@dataclass(frozen=True, eq=False)
class Problem:
    """A composite instance F = f + g in fixed dimension."""

    f: SmoothObjective
    g: Regularizer
    dim: int
    name: str = "problem"
    optimal_value_hint: Optional[float] = None
    level_bounded: bool = True

    def F(self, x: Array) -> float:
        return self.f.value(x) + self.g.value(x)

    def F_batch(self, X: Array) -> Array:
        return self.f.batch(X) + self.g.value_batch(X)

    @property
    def F_is_continuous(self) -> bool:
        return self.g.continuous


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """Certified strongly convex kernel inducing the proximity D(x, y).

    kind is one of "euclidean" (D = ||x-y||^2 / 2), "diagonal" with
    positive weights d (D = sum d_i (x_i-y_i)^2 / 2), or "quadratic" with
    a symmetric positive-definite matrix A (D = (x-y)' A (x-y) / 2).
    The certified moduli satisfy m <= M and
    (m/2)||x-y||^2 <= D(x, y) <= (M/2)||x-y||^2.
    """

    kind: str
    d: Optional[Array] = None
    A: Optional[Array] = None
    m: float = field(init=False, default=1.0)
    M: float = field(init=False, default=1.0)

    def __post_init__(self):
        if self.kind == "euclidean":
            m = M = 1.0
        elif self.kind == "diagonal":
            d = as_vector(self.d)
            if np.any(d <= 0):
                raise ValueError("diagonal kernel weights must be positive")
            object.__setattr__(self, "d", d)
            m, M = float(d.min()), float(d.max())
        elif self.kind == "quadratic":
            A = np.asarray(self.A, dtype=float)
            if A.ndim != 2 or A.shape[0] != A.shape[1]:
                raise ValueError("quadratic kernel needs a square matrix")
            if not np.allclose(A, A.T, atol=1e-12):
                raise ValueError("quadratic kernel matrix must be symmetric")
            eigs = np.linalg.eigvalsh(A)
            if eigs[0] <= 0:
                raise ValueError("quadratic kernel matrix must be positive definite")
            object.__setattr__(self, "A", A)
            m, M = float(eigs[0]), float(eigs[-1])
        else:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "M", M)

    @staticmethod
    def euclidean() -> "KernelSpec":
        return KernelSpec(kind="euclidean")

    @staticmethod
    def diagonal(d) -> "KernelSpec":
        return KernelSpec(kind="diagonal", d=np.asarray(d, dtype=float))

    @staticmethod
    def quadratic(A) -> "KernelSpec":
        return KernelSpec(kind="quadratic", A=np.asarray(A, dtype=float))

    def distance(self, x: Array, y: Array) -> float:
        if x.shape != y.shape:
            raise ValueError("dimension mismatch in kernel distance")
        r = y - x
        if self.kind == "euclidean":
            return 0.5 * float(r @ r)
        if self.kind == "diagonal":
            return 0.5 * float((self.d * r) @ r)
        return 0.5 * float(r @ (self.A @ r))

    def grad_y(self, x: Array, y: Array) -> Array:
        """Gradient of D(x, .) at y, i.e. grad K(y) - grad K(x)."""
        r = y - x
        if self.kind == "euclidean":
            return r
        if self.kind == "diagonal":
            return self.d * r
        return self.A @ r

    def diag_weights(self, dim: int) -> Optional[Array]:
        """Per-coordinate weights if D is separable, else None.

        A quadratic kernel whose matrix is exactly diagonal is separable
        and qualifies for the coordinatewise prox fast path.
        """
        if self.kind == "euclidean":
            return np.ones(dim)
        if self.kind == "diagonal":
            return self.d.copy()
        if np.count_nonzero(self.A - np.diag(np.diagonal(self.A))) == 0:
            return np.diagonal(self.A).copy()
        return None

    def label(self) -> str:
        return self.kind


@dataclass(frozen=True, eq=False)
class SolverConfig:
    """Step-size and kernel schedules plus stopping parameters.

    Schedules are given as tuples and repeat cyclically over iterations,
    so a single entry means a constant schedule.  Bounds
    0 < eps_lo <= eps^k <= eps_hi are taken over the whole cycle.
    """

    epsilons: tuple
    kernels: tuple
    max_iters: int = 500
    step_tol: Optional[float] = None
    trace_every: int = 1

    def __post_init__(self):
        if len(self.epsilons) == 0 or len(self.kernels) == 0:
            raise ValueError("schedules must be nonempty")
        if any(e <= 0 for e in self.epsilons):
            raise ValueError("step sizes must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.trace_every < 1:
            raise ValueError("trace_every must be >= 1")

    @staticmethod
    def constant(eps: float, kernel: KernelSpec, **kw) -> "SolverConfig":
        return SolverConfig(epsilons=(float(eps),), kernels=(kernel,), **kw)

    def eps_at(self, k: int) -> float:
        return self.epsilons[k % len(self.epsilons)]

    def kernel_at(self, k: int) -> KernelSpec:
        return self.kernels[k % len(self.kernels)]

    @property
    def eps_lo(self) -> float:
        return min(self.epsilons)

    @property
    def eps_hi(self) -> float:
        return max(self.epsilons)

    @property
    def m(self) -> float:
        return min(K.m for K in self.kernels)

    @property
    def M(self) -> float:
        return max(K.M for K in self.kernels)

    def resolved_step_tol(self, x0: Array) -> float:
        if self.step_tol is not None:
            return self.step_tol
        return 1e-10 * (1.0 + float(np.linalg.norm(x0)))


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple
    checked: tuple

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": list(self.violations),
                "checked": list(self.checked)}


def validate_config(problem: Problem, config: SolverConfig) -> ValidationReport:
    """Report-only admissibility check of a (problem, config) pairing.

    Each clause is evaluated independently: the step-size cap against
    m/L (prox nonemptiness) and, when g carries a finite semiconvexity
    modulus rho > 0, the cap against m/rho (single-valued prox).
    """
    violations = []
    checked = []
    m, M = config.m, config.M
    L = problem.f.lipschitz_L
    eps_hi = config.eps_hi

    checked.append("m <= M")
    if m > M:
        violations.append("m <= M violated")

    lim = m / L if L > 0 else math.inf
    checked.append("eps_max < m/L (prox nonemptiness)")
    if not eps_hi < lim:
        violations.append(f"eps_max < m/L violated ({eps_hi:g} >= {lim:g})")

    rho = problem.g.semiconvex_rho
    if math.isfinite(rho) and rho > 0:
        lim_rho = m / rho
        checked.append("eps_max < m/rho (single-valued prox for semiconvex g)")
        if not eps_hi < lim_rho:
            violations.append(
                f"eps_max < m/rho violated ({eps_hi:g} >= {lim_rho:g})")

    return ValidationReport(ok=not violations, violations=tuple(violations),
                            checked=tuple(checked))


def finite_diff_grad_check(f: SmoothObjective, x: Array, h: float = 1e-5) -> float:
    """Max relative error of central differences against f's gradient.

    Returns max_i |cd_i - grad_i| / (1 + |grad_i|); +inf when f evaluates
    non-finite at any probe point (reported as a failed check, not raised).
    """
    if h <= 0:
        raise ValueError("h must be positive")
    x = as_vector(x)
    g = f.gradient(x)
    worst = 0.0
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        fp, fm = f.value(x + e), f.value(x - e)
        if not (math.isfinite(fp) and math.isfinite(fm)):
            return math.inf
        cd = (fp - fm) / (2 * h)
        worst = max(worst, abs(cd - g[i]) / (1.0 + abs(g[i])))
    return worst


def power_iteration_norm(A: Array, iters: int = 200, seed: int = 0) -> float:
    """Spectral-norm estimate of a symmetric matrix by power iteration."""
    A = np.asarray(A, dtype=float)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = A @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        lam = nw
        v = w / nw
    return float(lam)


def sample_ball(rng: np.random.Generator, n: int, center: Array,
                radius: float) -> Array:
    """n points uniform in the open ball B(center, radius)."""
    dim = center.size
    u = rng.standard_normal((n, dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    r = radius * rng.random(n) ** (1.0 / dim)
    return center[None, :] + u * r[:, None]


def sample_box(rng: np.random.Generator, n: int, center: Array,
               halfwidth: float) -> Array:
    return center[None, :] + rng.uniform(-halfwidth, halfwidth,
                                         size=(n, center.size))
