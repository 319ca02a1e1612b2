"""Test-problem zoo: smooth objectives, separable regularizers with
closed-form scaled proxes and certified semiconvexity moduli, and the
jump counterexample used by the level-set diagnostics.

Scaled proxes for the folded-concave penalties (SCAD, MCP) enumerate the
stationary point of every quadratic piece clipped to its piece, plus the
piece boundaries, and pick the global minimum by direct evaluation; ties
within 1e-10 are broken toward the candidate of smaller |t| and flagged.
This avoids the sign errors that plague published closed forms and is
verified against a dense grid oracle in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (Array, KernelSpec, Problem, Regularizer, SmoothObjective,
                   SolverConfig, as_vector)

_TIE_TOL = 1e-10
_TIE_SEP = 1e-9


def _pick_candidate(values, cands):
    """Global minimum with ties (within 1e-10) broken toward small |t|."""
    best = min(values)
    tol = _TIE_TOL * (1.0 + abs(best))
    tied = [t for t, v in zip(cands, values) if v <= best + tol]
    t_star = min(tied, key=lambda t: (abs(t), t))
    multi = max(tied) - min(tied) > _TIE_SEP
    return float(t_star), bool(multi)


# ---------------------------------------------------------------------------
# regularizers
# ---------------------------------------------------------------------------

class ZeroRegularizer(Regularizer):
    kind = "zero"
    convex = True
    semiconvex_rho = 0.0

    def value1d(self, t):
        return 0.0

    def value(self, x):
        return 0.0

    def value_batch(self, X):
        return np.zeros(X.shape[0])

    def prox1d(self, v, weight, eps):
        return v, False

    def subdiff_dist1d(self, t, grad_f_t):
        return abs(grad_f_t)


class L1Regularizer(Regularizer):
    """g(t) = lam |t| with the soft-threshold prox."""

    kind = "l1"
    convex = True
    semiconvex_rho = 0.0

    def __init__(self, lam: float):
        if lam < 0:
            raise ValueError("l1 weight must be nonnegative")
        self.lam = float(lam)

    def value1d(self, t):
        return self.lam * abs(t)

    def value_batch(self, X):
        return self.lam * np.sum(np.abs(X), axis=1)

    def prox1d(self, v, weight, eps):
        thr = self.lam * eps / weight
        return math.copysign(max(abs(v) - thr, 0.0), v), False

    def subdiff_dist1d(self, t, grad_f_t):
        if t == 0.0:
            return max(abs(grad_f_t) - self.lam, 0.0)
        return abs(grad_f_t + self.lam * math.copysign(1.0, t))


class SquaredL2Regularizer(Regularizer):
    """g(t) = (lam/2) t^2 per coordinate (ridge)."""

    kind = "sq_l2"
    convex = True
    semiconvex_rho = 0.0

    def __init__(self, lam: float):
        if lam < 0:
            raise ValueError("ridge weight must be nonnegative")
        self.lam = float(lam)

    def value1d(self, t):
        return 0.5 * self.lam * t * t

    def value_batch(self, X):
        return 0.5 * self.lam * np.sum(X * X, axis=1)

    def prox1d(self, v, weight, eps):
        kappa = weight / eps
        return kappa * v / (self.lam + kappa), False

    def subdiff_dist1d(self, t, grad_f_t):
        return abs(grad_f_t + self.lam * t)


class BoxRegularizer(Regularizer):
    """Indicator of the box [lo, hi] per coordinate."""

    kind = "box"
    convex = True
    semiconvex_rho = 0.0
    continuous = False  # extended real valued off the box

    def __init__(self, lo: float, hi: float):
        if not lo < hi:
            raise ValueError("box requires lo < hi")
        self.lo, self.hi = float(lo), float(hi)

    def value1d(self, t):
        return 0.0 if self.lo <= t <= self.hi else math.inf

    def value_batch(self, X):
        inside = np.all((X >= self.lo) & (X <= self.hi), axis=1)
        return np.where(inside, 0.0, math.inf)

    def prox1d(self, v, weight, eps):
        return min(max(v, self.lo), self.hi), False

    def subdiff_dist1d(self, t, grad_f_t):
        if t < self.lo or t > self.hi:
            return math.inf
        if t == self.lo:
            # normal cone (-inf, 0]: criticality needs grad_f_t >= 0
            return max(-grad_f_t, 0.0)
        if t == self.hi:
            return max(grad_f_t, 0.0)
        return abs(grad_f_t)


class ScadRegularizer(Regularizer):
    """Smoothly clipped absolute deviation penalty.

    g(t) = lam |t| on |t| <= lam, a quadratic blend on lam < |t| <= a lam,
    and the constant lam^2 (a+1)/2 beyond.  The middle piece has second
    derivative -1/(a-1), so g + (rho/2) t^2 is convex with
    rho = 1/(a-1).
    """

    kind = "scad"
    convex = False

    def __init__(self, lam: float, a: float):
        if lam <= 0 or a <= 2:
            raise ValueError("scad requires lam > 0 and a > 2")
        self.lam, self.a = float(lam), float(a)
        self.semiconvex_rho = 1.0 / (a - 1.0)

    def value1d(self, t):
        lam, a = self.lam, self.a
        u = abs(t)
        if u <= lam:
            return lam * u
        if u <= a * lam:
            return (2 * a * lam * u - u * u - lam * lam) / (2 * (a - 1))
        return 0.5 * lam * lam * (a + 1)

    def value_batch(self, X):
        lam, a = self.lam, self.a
        U = np.abs(X)
        inner = lam * U
        mid = (2 * a * lam * U - U * U - lam * lam) / (2 * (a - 1))
        outer = 0.5 * lam * lam * (a + 1)
        vals = np.where(U <= lam, inner, np.where(U <= a * lam, mid, outer))
        return np.sum(vals, axis=1)

    def prox1d(self, v, weight, eps):
        lam, a = self.lam, self.a
        kappa = weight / eps
        cands = [0.0, lam, -lam, a * lam, -a * lam]
        # piece |t| <= lam: kink at 0 handled by the 0 candidate
        cands.append(min(max(v - lam / kappa, 0.0), lam))
        cands.append(min(max(v + lam / kappa, -lam), 0.0))
        # middle pieces: stationary point of the blended quadratic
        den = kappa - 1.0 / (a - 1.0)
        if den != 0.0:
            t_mid = (kappa * v - a * lam / (a - 1.0)) / den
            cands.append(min(max(t_mid, lam), a * lam))
            t_mid_neg = (kappa * v + a * lam / (a - 1.0)) / den
            cands.append(min(max(t_mid_neg, -a * lam), -lam))
        # flat tails
        if v >= a * lam:
            cands.append(v)
        if v <= -a * lam:
            cands.append(v)
        vals = [self.value1d(t) + 0.5 * kappa * (t - v) ** 2 for t in cands]
        return _pick_candidate(vals, cands)

    def _deriv(self, t):
        lam, a = self.lam, self.a
        u, s = abs(t), math.copysign(1.0, t)
        if u <= lam:
            return s * lam
        if u <= a * lam:
            return s * (a * lam - u) / (a - 1)
        return 0.0

    def subdiff_dist1d(self, t, grad_f_t):
        if t == 0.0:
            return max(abs(grad_f_t) - self.lam, 0.0)
        return abs(grad_f_t + self._deriv(t))


class McpRegularizer(Regularizer):
    """Minimax concave penalty: g(t) = lam|t| - t^2/(2 gamma) clipped to the
    constant gamma lam^2 / 2 for |t| > gamma lam.  Semiconvex with
    rho = 1/gamma."""

    kind = "mcp"
    convex = False

    def __init__(self, lam: float, gamma: float):
        if lam <= 0 or gamma <= 1:
            raise ValueError("mcp requires lam > 0 and gamma > 1")
        self.lam, self.gamma = float(lam), float(gamma)
        self.semiconvex_rho = 1.0 / gamma

    def value1d(self, t):
        lam, gamma = self.lam, self.gamma
        u = abs(t)
        if u <= gamma * lam:
            return lam * u - u * u / (2 * gamma)
        return 0.5 * gamma * lam * lam

    def value_batch(self, X):
        lam, gamma = self.lam, self.gamma
        U = np.abs(X)
        inner = lam * U - U * U / (2 * gamma)
        vals = np.where(U <= gamma * lam, inner, 0.5 * gamma * lam * lam)
        return np.sum(vals, axis=1)

    def prox1d(self, v, weight, eps):
        lam, gamma = self.lam, self.gamma
        kappa = weight / eps
        cands = [0.0, gamma * lam, -gamma * lam]
        den = kappa - 1.0 / gamma
        if den != 0.0:
            cands.append(min(max((kappa * v - lam) / den, 0.0), gamma * lam))
            cands.append(min(max((kappa * v + lam) / den, -gamma * lam), 0.0))
        if abs(v) >= gamma * lam:
            cands.append(v)
        vals = [self.value1d(t) + 0.5 * kappa * (t - v) ** 2 for t in cands]
        return _pick_candidate(vals, cands)

    def subdiff_dist1d(self, t, grad_f_t):
        if t == 0.0:
            return max(abs(grad_f_t) - self.lam, 0.0)
        lam, gamma = self.lam, self.gamma
        u = abs(t)
        d = math.copysign(max(lam - u / gamma, 0.0), t)
        return abs(grad_f_t + d)


class PowerRegularizer(Regularizer):
    """Convex power penalty g(t) = |t|^p for p in {1.5, 2, 3, 4}.

    Scaled proxes are closed form (quadratic in sqrt(t) for p = 1.5,
    quadratic formula for p = 3, Cardano for p = 4).  These penalties are
    C^1 with derivative p sign(t) |t|^(p-1), so the subdifferential is a
    singleton everywhere.  They back the scalar exponent-fit profiles
    |x|^1.5, |x|^3 and x^4.
    """

    kind = "power"
    convex = True
    semiconvex_rho = 0.0
    _SUPPORTED = (1.5, 2.0, 3.0, 4.0)

    def __init__(self, p: float):
        if float(p) not in self._SUPPORTED:
            raise ValueError(f"power penalty supports p in {self._SUPPORTED}")
        self.p = float(p)

    def value1d(self, t):
        return abs(t) ** self.p

    def value_batch(self, X):
        return np.sum(np.abs(X) ** self.p, axis=1)

    def prox1d(self, v, weight, eps):
        kappa = weight / eps
        p = self.p
        s = math.copysign(1.0, v)
        u = abs(v)
        if u == 0.0:
            return 0.0, False
        if p == 2.0:
            t = kappa * u / (2.0 + kappa)
        elif p == 1.5:
            # kappa r^2 + 1.5 r - kappa u = 0 in r = sqrt(t)
            r = (-1.5 + math.sqrt(2.25 + 4 * kappa * kappa * u)) / (2 * kappa)
            t = r * r
        elif p == 3.0:
            # 3 t^2 + kappa t - kappa u = 0
            t = (-kappa + math.sqrt(kappa * kappa + 12 * kappa * u)) / 6.0
        else:  # p == 4: 4 t^3 + kappa t - kappa u = 0, unique real root
            pc = kappa / 4.0
            qc = -kappa * u / 4.0
            disc = math.sqrt(qc * qc / 4.0 + pc ** 3 / 27.0)
            t = np.cbrt(-qc / 2.0 + disc) + np.cbrt(-qc / 2.0 - disc)
        return s * max(t, 0.0), False

    def subdiff_dist1d(self, t, grad_f_t):
        d = self.p * math.copysign(abs(t) ** (self.p - 1.0), t) if t != 0.0 else 0.0
        return abs(grad_f_t + d)


class JumpQuadraticRegularizer(Regularizer):
    """Half-quadratic with a downward jump at xbar:

        g(t) = (t - xbar)^2 / 2   for t != xbar,      g(xbar) = -1.

    The sublevel set [g <= g(xbar)] is the singleton {xbar}, the
    subdifferential at any t != xbar is {t - xbar}, and the
    subdifferential at xbar is all of R (the jump makes every slope a
    proximal minorant).  A level-set subdifferential error bound holds at
    xbar with exponent 1 and constant 1, while no Kurdyka-Lojasiewicz
    inequality can hold there: the value gap stays >= 1 as the residual
    vanishes.
    """

    kind = "jump_quadratic"
    convex = False
    semiconvex_rho = math.inf  # the jump defeats any quadratic correction
    continuous = False

    def __init__(self, xbar: float = 0.0):
        self.xbar = float(xbar)

    def value1d(self, t):
        if t == self.xbar:
            return -1.0
        return 0.5 * (t - self.xbar) ** 2

    def value_batch(self, X):
        R = X - self.xbar
        vals = np.where(R == 0.0, -1.0, 0.5 * R * R)
        return np.sum(vals, axis=1)

    def prox1d(self, v, weight, eps):
        kappa = weight / eps
        cands = [self.xbar, (self.xbar + kappa * v) / (1.0 + kappa)]
        vals = [self.value1d(t) + 0.5 * kappa * (t - v) ** 2 for t in cands]
        return _pick_candidate(vals, cands)

    def subdiff_dist1d(self, t, grad_f_t):
        if t == self.xbar:
            return 0.0
        return abs(grad_f_t + (t - self.xbar))


# ---------------------------------------------------------------------------
# smooth objectives
# ---------------------------------------------------------------------------

def quadratic_objective(Q, b, L_override: Optional[float] = None) -> SmoothObjective:
    """f(x) = x'Qx/2 + b'x with L equal to the spectral norm of Q.

    For indefinite Q the gradient-Lipschitz constant is the largest
    eigenvalue magnitude, not the largest signed eigenvalue.
    """
    Q = np.asarray(Q, dtype=float)
    b = as_vector(b)
    if not np.allclose(Q, Q.T, atol=1e-12):
        raise ValueError("Q must be symmetric")
    eigs = np.linalg.eigvalsh(Q)
    L = float(np.max(np.abs(eigs))) if L_override is None else float(L_override)
    convex = bool(eigs[0] >= -1e-12)

    def value(x):
        return 0.5 * float(x @ (Q @ x)) + float(b @ x)

    def gradient(x):
        return Q @ x + b

    def value_batch(X):
        return 0.5 * np.einsum("ij,jk,ik->i", X, Q, X) + X @ b

    return SmoothObjective(value=value, gradient=gradient, lipschitz_L=L,
                           convex=convex, value_batch=value_batch)


def zero_objective(dim: int) -> SmoothObjective:
    return SmoothObjective(value=lambda x: 0.0,
                           gradient=lambda x: np.zeros(dim),
                           lipschitz_L=0.0, convex=True,
                           value_batch=lambda X: np.zeros(X.shape[0]))


def logistic_objective(A, labels) -> SmoothObjective:
    """f(x) = sum_i log(1 + exp(-y_i a_i'x)), with L = lam_max(A'A)/4."""
    A = np.asarray(A, dtype=float)
    y = as_vector(labels)
    if set(np.unique(y)) - {-1.0, 1.0}:
        raise ValueError("labels must be +-1")
    Ay = A * y[:, None]
    L = float(np.linalg.eigvalsh(A.T @ A)[-1]) / 4.0

    def value(x):
        z = Ay @ x
        return float(np.sum(np.logaddexp(0.0, -z)))

    def gradient(x):
        z = Ay @ x
        sig = 1.0 / (1.0 + np.exp(z))  # = exp(-z) / (1 + exp(-z))
        return -(Ay.T @ sig)

    def value_batch(X):
        Z = X @ Ay.T
        return np.sum(np.logaddexp(0.0, -Z), axis=1)

    return SmoothObjective(value=value, gradient=gradient, lipschitz_L=L,
                           convex=True, value_batch=value_batch)


def scalar_profile_objective(profile_id: str) -> SmoothObjective:
    """1-D smooth profiles with certified global L.

    "square":        f(x) = x^2                 (convex, L = 2)
    "pl_nonconvex":  f(x) = x^2 + 3 sin(x)^2    (gradient-dominated but
                     nonconvex; f'' = 2 + 6 cos(2x) in [-4, 8], so L = 8)
    """
    if profile_id == "square":
        return SmoothObjective(
            value=lambda x: float(x[0] ** 2),
            gradient=lambda x: np.array([2.0 * x[0]]),
            lipschitz_L=2.0, convex=True,
            value_batch=lambda X: X[:, 0] ** 2)
    if profile_id == "pl_nonconvex":
        return SmoothObjective(
            value=lambda x: float(x[0] ** 2 + 3.0 * math.sin(x[0]) ** 2),
            gradient=lambda x: np.array([2.0 * x[0] + 3.0 * math.sin(2.0 * x[0])]),
            lipschitz_L=8.0, convex=False,
            value_batch=lambda X: X[:, 0] ** 2 + 3.0 * np.sin(X[:, 0]) ** 2)
    raise ValueError(f"unknown scalar profile {profile_id!r}")


def generate_logistic_data(n_rows: int, dim: int, data_seed: int):
    """Deterministic synthetic classification data keyed by data_seed."""
    rng = np.random.default_rng(data_seed)
    A = rng.standard_normal((n_rows, dim))
    w = rng.standard_normal(dim)
    y = np.sign(A @ w + 0.3 * rng.standard_normal(n_rows))
    y[y == 0] = 1.0
    return A, y


# ---------------------------------------------------------------------------
# specs and builders
# ---------------------------------------------------------------------------

_G_BUILDERS = {
    "zero": lambda p: ZeroRegularizer(),
    "l1": lambda p: L1Regularizer(p["lam"]),
    "sq_l2": lambda p: SquaredL2Regularizer(p["lam"]),
    "box": lambda p: BoxRegularizer(p["lo"], p["hi"]),
    "scad": lambda p: ScadRegularizer(p["lam"], p["a"]),
    "mcp": lambda p: McpRegularizer(p["lam"], p["gamma"]),
    "power": lambda p: PowerRegularizer(p["p"]),
    "jump_quadratic": lambda p: JumpQuadraticRegularizer(p.get("xbar", 0.0)),
}


def build_regularizer(g_kind: str, params: Optional[dict] = None) -> Regularizer:
    params = params or {}
    if g_kind not in _G_BUILDERS:
        raise ValueError(f"unknown regularizer kind {g_kind!r}")
    return _G_BUILDERS[g_kind](params)


@dataclass(frozen=True)
class ProblemSpec:
    """Declarative description of a composite instance."""

    name: str
    f_kind: str           # quadratic | logistic | scalar_profile | zero
    f_params: dict
    g_kind: str
    g_params: dict
    dimension: int

    def build(self) -> Problem:
        return build_problem(self)


def build_problem(spec: ProblemSpec) -> Problem:
    if spec.f_kind == "quadratic":
        f = quadratic_objective(spec.f_params["Q"], spec.f_params["b"],
                                L_override=spec.f_params.get("L_override"))
        dim = len(spec.f_params["b"])
    elif spec.f_kind == "logistic":
        p = spec.f_params
        if "A" in p:
            A, y = np.asarray(p["A"], dtype=float), as_vector(p["labels"])
        else:
            A, y = generate_logistic_data(p["n_rows"], spec.dimension,
                                          p.get("data_seed", 7))
        f = logistic_objective(A, y)
        dim = A.shape[1]
    elif spec.f_kind == "scalar_profile":
        f = scalar_profile_objective(spec.f_params["id"])
        dim = 1
    elif spec.f_kind == "zero":
        dim = spec.dimension
        f = zero_objective(dim)
    else:
        raise ValueError(f"unknown smooth kind {spec.f_kind!r}")
    if dim != spec.dimension:
        raise ValueError("declared dimension disagrees with f parameters")
    if "L_override" in spec.f_params and spec.f_kind != "quadratic":
        f = SmoothObjective(value=f.value, gradient=f.gradient,
                            lipschitz_L=float(spec.f_params["L_override"]),
                            convex=f.convex, value_batch=f.value_batch)
    g = build_regularizer(spec.g_kind, spec.g_params)
    level_bounded = spec.g_kind != "jump_quadratic" or spec.f_kind == "zero"
    return Problem(f=f, g=g, dim=dim, name=spec.name,
                   level_bounded=level_bounded)


def lasso_spec(name: str, A, b, lam: float) -> ProblemSpec:
    """Least squares ||Ax - b||^2 / 2 plus lam ||x||_1 as a quadratic spec."""
    A = np.asarray(A, dtype=float)
    b = as_vector(b)
    Q = A.T @ A
    c = -(A.T @ b)
    return ProblemSpec(name=name, f_kind="quadratic",
                       f_params={"Q": Q, "b": c}, g_kind="l1",
                       g_params={"lam": lam}, dimension=A.shape[1])


def jump_spec(xbar: float = 0.0) -> ProblemSpec:
    return ProblemSpec(name="jump_counterexample", f_kind="zero", f_params={},
                       g_kind="jump_quadratic", g_params={"xbar": xbar},
                       dimension=1)


def power_profile_spec(p: float) -> ProblemSpec:
    return ProblemSpec(name=f"profile_pow{p:g}", f_kind="zero", f_params={},
                       g_kind="power", g_params={"p": p}, dimension=1)


# functional wrappers matching the public per-coordinate surface ----------

def prox_1d(g: Regularizer, v: float, weight: float, eps: float) -> float:
    """Global minimizer of g(t) + (weight/(2 eps))(t - v)^2."""
    if weight <= 0 or eps <= 0:
        raise ValueError("weight and eps must be positive")
    t, _ = g.prox1d(float(v), float(weight), float(eps))
    return t


def subdiff_dist_1d(g: Regularizer, t: float, grad_f_t: float) -> float:
    return g.subdiff_dist1d(float(t), float(grad_f_t))


# ---------------------------------------------------------------------------
# grid oracle for scalar proxes
# ---------------------------------------------------------------------------

class GridProxOracle:
    """Brute-force argmin of g(t) + (w/(2 eps))(t - v)^2 over a dense grid.

    Penalty values over the grid are precomputed once, so repeated queries
    with fresh (v, weight, eps) triples stay cheap.  Used as the
    independent reference for every closed-form scalar prox.
    """

    def __init__(self, g: Regularizer, lo: float = -10.0, hi: float = 10.0,
                 resolution: float = 1e-4):
        n = int(round((hi - lo) / resolution)) + 1
        self.grid = np.linspace(lo, hi, n)
        self.gvals = g.value_batch(self.grid[:, None])
        self.resolution = resolution

    def argmin(self, v: float, weight: float, eps: float) -> tuple[float, float]:
        h = self.gvals + (weight / (2.0 * eps)) * (self.grid - v) ** 2
        j = int(np.argmin(h))
        return float(self.grid[j]), float(h[j])


# ---------------------------------------------------------------------------
# shipped desk-scale instances
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShippedInstance:
    """A level-bounded instance with an admissible default configuration."""

    spec: ProblemSpec
    config: SolverConfig
    x0: tuple
    sample_halfwidth: float
    sample_center: tuple = ()

    def problem(self) -> Problem:
        return self.spec.build()

    def start(self) -> Array:
        return np.array(self.x0, dtype=float)

    def box_center(self) -> Array:
        if self.sample_center:
            return np.array(self.sample_center, dtype=float)
        return np.zeros(self.spec.dimension)


def shipped_instances() -> dict[str, ShippedInstance]:
    """Registry used by the invariant suite and the acceptance tests."""
    euclid = KernelSpec.euclidean()
    reg: dict[str, ShippedInstance] = {}

    # LASSO, both coordinates active at the solution x* = (0.5, 0.3)
    reg["lasso2"] = ShippedInstance(
        spec=lasso_spec("lasso2", np.eye(2), [1.0, 0.8], 0.5),
        config=SolverConfig.constant(0.5, euclid, max_iters=400),
        x0=(3.0, -2.0), sample_halfwidth=2.0)

    # convex quadratic + MCP (L ~= 2.08, rho = 0.25)
    reg["quad_conv_mcp"] = ShippedInstance(
        spec=ProblemSpec("quad_conv_mcp", "quadratic",
                         {"Q": [[2.0, 0.3], [0.3, 1.0]], "b": [0.5, -0.4]},
                         "mcp", {"lam": 0.6, "gamma": 4.0}, 2),
        config=SolverConfig.constant(0.4, euclid, max_iters=600),
        x0=(1.5, 1.0), sample_halfwidth=2.0)

    # convex quadratic + SCAD (L ~= 1.57, rho = 1/2.7)
    reg["quad_conv_scad"] = ShippedInstance(
        spec=ProblemSpec("quad_conv_scad", "quadratic",
                         {"Q": [[1.0, 0.2], [0.2, 1.5]], "b": [-0.3, 0.2]},
                         "scad", {"lam": 0.5, "a": 3.7}, 2),
        config=SolverConfig.constant(0.5, euclid, max_iters=600),
        x0=(-1.0, 1.2), sample_halfwidth=2.0)

    # box-constrained convex quadratic under a diagonal kernel
    reg["box_quad"] = ShippedInstance(
        spec=ProblemSpec("box_quad", "quadratic",
                         {"Q": [[1.2, 0.4], [0.4, 0.9]], "b": [1.0, -1.5]},
                         "box", {"lo": -1.0, "hi": 1.0}, 2),
        config=SolverConfig(epsilons=(0.6,),
                            kernels=(KernelSpec.diagonal([1.5, 1.0]),),
                            max_iters=600),
        x0=(0.2, 0.9), sample_halfwidth=0.98)

    # logistic regression + l1, seeded synthetic data; the step size is
    # derived from the certified L of the generated instance
    logit_spec = ProblemSpec("logistic_l1", "logistic",
                             {"n_rows": 12, "data_seed": 7},
                             "l1", {"lam": 0.15}, 2)
    logit_L = logit_spec.build().f.lipschitz_L
    reg["logistic_l1"] = ShippedInstance(
        spec=logit_spec,
        config=SolverConfig.constant(0.8 / logit_L, euclid, max_iters=800),
        x0=(0.5, -0.5), sample_halfwidth=2.0)

    # gradient-dominated but nonconvex scalar profile, g = 0
    reg["pl_profile"] = ShippedInstance(
        spec=ProblemSpec("pl_profile", "scalar_profile",
                         {"id": "pl_nonconvex"}, "zero", {}, 1),
        config=SolverConfig.constant(0.1, euclid, max_iters=800),
        x0=(2.5,), sample_halfwidth=3.0)

    # jump counterexample: solve is trivial, shipped for the probe layer
    reg["jump"] = ShippedInstance(
        spec=jump_spec(0.0),
        config=SolverConfig.constant(0.5, euclid, max_iters=50),
        x0=(0.8,), sample_halfwidth=0.9)

    # convex power profiles for exponent fits; the quartic's prox sequence
    # decays only polynomially near its flat minimizer, so its stopping
    # tolerance is looser
    reg["pow15"] = ShippedInstance(
        spec=power_profile_spec(1.5),
        config=SolverConfig.constant(0.5, euclid, max_iters=400),
        x0=(1.0,), sample_halfwidth=1.5)
    reg["pow4"] = ShippedInstance(
        spec=power_profile_spec(4.0),
        config=SolverConfig.constant(0.5, euclid, max_iters=6000,
                                     step_tol=1e-6),
        x0=(1.0,), sample_halfwidth=1.5)

    return reg


def descent_case_fixtures() -> dict[int, ProblemSpec]:
    """One instance per convexity pattern of the descent-constant table.

    The indefinite instances are not level bounded (an indefinite
    quadratic dominates any bounded or 1-homogeneous penalty at infinity),
    so they are used only for per-point inequality checks, never for
    solver runs.
    """
    q_indef = {"Q": [[2.0, 1.5], [1.5, 1.0]], "b": [0.2, -0.1]}
    q_conv = {"Q": [[2.0, 0.3], [0.3, 1.0]], "b": [0.5, -0.4]}
    return {
        1: ProblemSpec("case1_indef_mcp", "quadratic", q_indef,
                       "mcp", {"lam": 0.8, "gamma": 2.5}, 2),
        2: ProblemSpec("case2_conv_mcp", "quadratic", q_conv,
                       "mcp", {"lam": 0.6, "gamma": 4.0}, 2),
        3: ProblemSpec("case3_indef_l1", "quadratic", q_indef,
                       "l1", {"lam": 0.7}, 2),
        4: ProblemSpec("case4_lasso", "quadratic",
                       {"Q": np.eye(2), "b": [-1.0, -0.8]},
                       "l1", {"lam": 0.5}, 2),
    }
