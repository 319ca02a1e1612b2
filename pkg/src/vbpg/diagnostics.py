"""Empirical verification of level-set error bounds, exponent fitting,
rate certification, and the implication relationships connecting them.

The test domain of every bound is a level slice

    B(xbar; eta, nu) = { x : ||x - xbar|| < eta, Fbar < F(x) < Fbar + nu }

around a reference point xbar with Fbar = F(xbar).  Probes sample the
slice and annotate each point with the distances entering the bounds:

    dist_level    dist(x, [F <= Fbar])       (grid + bisection oracle)
    dist_subdiff  dist(0, subdiff F(x))      (analytic, coordinatewise)
    dist_prox     dist(x, T(x))              (prox residual)
    dist_crit     dist(x, critical set)      (desk-scale approximation)

Exponent fits are two stage: ordinary least squares on the log-log cloud
for the exponent, then a max-ratio envelope for the constant, because the
bounds are one-sided inequalities with an existential constant, not
regressions.  Violations are counted on a held-out half ordered by the
bound's target quantity (the sublevel distance, the value gap, or the
critical-set distance): constants are calibrated on the far half and
checked on the near half, because the defining inequalities are
statements about behavior as x approaches the target set — a genuine
failure shows up as envelope ratios collapsing there, while a bound that
merely has direction-dependent constants does not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (Array, KernelSpec, Problem, SolverConfig, as_vector,
                   sample_ball)
from .bregman import envelope_gap, prox_map
from .solver import Trace, vbpg_run

# violation margin for one-sided inequality checks: wide enough to absorb
# solver/projection-oracle noise on exactly-tight ratios, far below any
# genuine failure (those are off by orders of magnitude)
_REL_TOL = 1e-6


class SliceEmptyError(RuntimeError):
    """Rejection sampling exhausted its draw budget without filling a slice."""


class DegenerateSampleError(ValueError):
    """All left-hand quantities vanished; no exponent is identifiable."""


# ---------------------------------------------------------------------------
# level slices and probe samples
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LevelSlice:
    center: Array
    radius_eta: float
    value_band_nu: float
    F_bar: float

    def contains(self, problem: Problem, x: Array) -> bool:
        if float(np.linalg.norm(x - self.center)) >= self.radius_eta:
            return False
        Fx = problem.F(x)
        return self.F_bar < Fx < self.F_bar + self.value_band_nu


def make_slice(problem: Problem, center, eta: float, nu: float) -> LevelSlice:
    c = as_vector(center, dim=problem.dim)
    return LevelSlice(center=c, radius_eta=float(eta), value_band_nu=float(nu),
                      F_bar=problem.F(c))


@dataclass
class ProbeSample:
    """One slice point with every distance a level-set bound consumes.

    ``gap_value``, ``envelope_value`` and ``prox_F`` (G(x), E(x), F(T(x)))
    are carried along because the value-proximity and gap-condition
    checks need them; the CSV serialization keeps only the documented
    columns."""

    x: Array
    dist_level: float
    dist_subdiff: float
    value_gap: float
    dist_prox: float
    dist_crit: float
    property_A: bool
    gap_value: float
    envelope_value: float
    prox_F: float


# ---------------------------------------------------------------------------
# sublevel projection oracle
# ---------------------------------------------------------------------------

_DEFAULT_RESOLUTION = {1: 1e-4, 2: 5e-3, 3: 0.05}


class SublevelGrid:
    """Dense-grid projection oracle onto sublevel sets, dimension <= 3.

    Projection of x onto [F <= Fbar]: nearest grid point in the sublevel
    set (the slice center is always seeded as a candidate, so singleton
    sublevel sets at a minimizer are handled exactly), refined by
    bisection along the segment from x, which pins the boundary point
    where F crosses Fbar.
    """

    def __init__(self, problem: Problem, center, halfwidth: float,
                 resolution: Optional[float] = None, extra_points=()):
        if problem.dim > 3:
            raise ValueError("projection oracle requires dimension <= 3")
        self.problem = problem
        self.resolution = resolution or _DEFAULT_RESOLUTION[problem.dim]
        c = as_vector(center, dim=problem.dim)
        axes = []
        for i in range(problem.dim):
            lo, hi = c[i] - halfwidth, c[i] + halfwidth
            n = int(round((hi - lo) / self.resolution)) + 1
            axes.append(np.linspace(lo, hi, n))
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        seeds = [np.atleast_2d(as_vector(p, dim=problem.dim))
                 for p in ([c] + list(extra_points))]
        self.points = np.vstack([pts] + seeds)
        self.values = problem.F_batch(self.points)

    def project(self, F_bar: float, x: Array,
                boundary_check: bool = True) -> tuple[float, Array]:
        x = as_vector(x, dim=self.problem.dim)
        Fx = self.problem.F(x)
        if Fx <= F_bar:
            return 0.0, x.copy()
        mask = self.values <= F_bar
        if not np.any(mask):
            raise SliceEmptyError("sublevel set empty in the search box")
        cand = self.points[mask]
        j = int(np.argmin(np.sum((cand - x[None, :]) ** 2, axis=1)))
        target = cand[j]
        # bisection on the predicate F <= Fbar along [x, target]
        lo_t, hi_t = 0.0, 1.0
        for _ in range(60):
            mid = 0.5 * (lo_t + hi_t)
            if self.problem.F(x + mid * (target - x)) <= F_bar:
                hi_t = mid
            else:
                lo_t = mid
        proj = x + hi_t * (target - x)
        if boundary_check and self.problem.F_is_continuous:
            if abs(self.problem.F(proj) - F_bar) > 1e-6 * (1.0 + abs(F_bar)):
                raise RuntimeError("projection boundary check failed: "
                                   "F(projection) != F_bar within 1e-6")
        return float(np.linalg.norm(x - proj)), proj

    def min_value(self) -> float:
        return float(np.min(self.values))


def sublevel_projection(problem: Problem, F_bar: float, x,
                        resolution: Optional[float] = None,
                        halfwidth: float = 6.0,
                        center=None) -> tuple[float, Array]:
    """One-shot projection onto [F <= Fbar]; precondition F(x) > Fbar."""
    x = as_vector(x, dim=problem.dim)
    c = x if center is None else as_vector(center, dim=problem.dim)
    grid = SublevelGrid(problem, c, halfwidth, resolution)
    return grid.project(F_bar, x)


def grid_min_F(problem: Problem, center, halfwidth: float,
               resolution: float = 0.02, zooms: int = 3) -> float:
    """Desk-scale global-minimum estimate by nested grid scans."""
    c = as_vector(center, dim=problem.dim)
    hw, res = halfwidth, resolution
    best_val, best_pt = math.inf, c
    for _ in range(zooms):
        axes = [np.linspace(c[i] - hw, c[i] + hw,
                            int(round(2 * hw / res)) + 1)
                for i in range(problem.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        vals = problem.F_batch(pts)
        j = int(np.argmin(vals))
        if vals[j] < best_val:
            best_val, best_pt = float(vals[j]), pts[j]
        c = best_pt
        hw = 2.0 * res
        res = res / 50.0
    return best_val


# ---------------------------------------------------------------------------
# critical-set approximation
# ---------------------------------------------------------------------------

def critical_points(problem: Problem, K: KernelSpec, eps: float, center,
                    halfwidth: float, seeds_per_axis: int = 7,
                    max_iters: int = 3000, tol: float = 1e-8) -> Array:
    """Prox fixed points found by grid-seeded runs, dimension <= 3.

    Each candidate is validated by ||x - T(x)|| <= tol and the list is
    deduplicated at 1e-6."""
    c = as_vector(center, dim=problem.dim)
    axes = [np.linspace(c[i] - halfwidth, c[i] + halfwidth, seeds_per_axis)
            for i in range(problem.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    seeds = np.stack([m.ravel() for m in mesh], axis=1)
    config = SolverConfig.constant(eps, K, max_iters=max_iters, step_tol=1e-12)
    found = []
    for s in seeds:
        if not math.isfinite(problem.F(s)):
            continue
        trace = vbpg_run(problem, config, s)
        xf = trace.final_x
        res = float(np.linalg.norm(xf - prox_map(problem, K, eps, xf).minimizer))
        if res <= tol:
            if not any(np.linalg.norm(xf - p) <= 1e-6 for p in found):
                found.append(xf)
    if not found:
        raise RuntimeError("critical set approximation came up empty")
    return np.array(found)


def dist_to_set(x: Array, points: Array) -> float:
    return float(np.min(np.linalg.norm(points - x[None, :], axis=1)))


# ---------------------------------------------------------------------------
# probing
# ---------------------------------------------------------------------------

_DRAW_CHUNK = 1024  # fixed so the random stream is batch-layout independent


def _chunked_F(problem: Problem, X: Array, chunk: Optional[int]) -> Array:
    if not chunk or chunk >= X.shape[0]:
        return problem.F_batch(X)
    parts = [problem.F_batch(X[i:i + chunk])
             for i in range(0, X.shape[0], chunk)]
    return np.concatenate(parts)


def probe_slice(problem: Problem, K: KernelSpec, eps: float,
                slice_: LevelSlice, n: int, seed: int,
                grid: Optional[SublevelGrid] = None,
                crit_points: Optional[Array] = None,
                max_draws: int = 10 ** 6,
                eval_chunk: Optional[int] = None) -> list:
    """n points uniform in the slice, each fully annotated.

    Samples failing Property (A) (F at the prox point dropping below
    Fbar) are flagged, not discarded.  Raises SliceEmptyError when the
    draw budget is exhausted before n acceptances.  ``eval_chunk`` caps
    the vectorized F-evaluation batch (parallelism knob); it cannot
    affect which points are drawn, as draws come in fixed-size chunks
    from the seeded generator."""
    rng = np.random.default_rng(seed)
    if grid is None:
        grid = SublevelGrid(problem, slice_.center,
                            max(4.0 * slice_.radius_eta, 1.0),
                            extra_points=[slice_.center])
    if crit_points is None:
        crit_points = critical_points(problem, K, eps, slice_.center,
                                      max(2.0 * slice_.radius_eta, 1.0),
                                      seeds_per_axis=5)
    accepted = []
    drawn = 0
    while len(accepted) < n:
        if drawn >= max_draws:
            raise SliceEmptyError(
                f"slice produced {len(accepted)}/{n} samples after {drawn} draws")
        m = min(_DRAW_CHUNK, max_draws - drawn)
        X = sample_ball(rng, m, slice_.center, slice_.radius_eta)
        drawn += m
        FX = _chunked_F(problem, X, eval_chunk)
        ok = (FX > slice_.F_bar) & (FX < slice_.F_bar + slice_.value_band_nu)
        for x, Fx in zip(X[ok], FX[ok]):
            accepted.append((x, float(Fx)))
            if len(accepted) == n:
                break

    samples = []
    for x, Fx in accepted:
        E, G, prox = envelope_gap(problem, K, eps, x)
        t = prox.minimizer
        Ft = problem.F(t)
        d_level, _ = grid.project(slice_.F_bar, x)
        d_sub = problem.g.subdiff_dist(x, problem.f.gradient(x))
        samples.append(ProbeSample(
            x=x,
            dist_level=d_level,
            dist_subdiff=d_sub,
            value_gap=Fx - slice_.F_bar,
            dist_prox=float(np.linalg.norm(x - t)),
            dist_crit=dist_to_set(x, crit_points),
            property_A=bool(Ft >= slice_.F_bar - 1e-12 * (1.0 + abs(slice_.F_bar))),
            gap_value=G,
            envelope_value=E,
            prox_F=Ft))
    return samples


def samples_to_csv_lines(samples: Sequence[ProbeSample]) -> list:
    dim = samples[0].x.size if samples else 0
    header = [f"x{i}" for i in range(dim)] + [
        "dist_level", "dist_subdiff", "value_gap", "dist_prox",
        "dist_crit", "property_A"]
    lines = [",".join(header)]
    for s in samples:
        row = [f"{v:.17g}" for v in s.x]
        row += [f"{v:.17g}" for v in (s.dist_level, s.dist_subdiff,
                                      s.value_gap, s.dist_prox, s.dist_crit)]
        row.append("1" if s.property_A else "0")
        lines.append(",".join(row))
    return lines


# ---------------------------------------------------------------------------
# exponent fitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EBFit:
    bound_kind: str
    exponent: float
    constant: float
    r_squared: float
    n_samples: int
    violated_fraction: float

    def to_dict(self) -> dict:
        return {"bound_kind": self.bound_kind, "exponent": self.exponent,
                "constant": self.constant, "r_squared": self.r_squared,
                "n_samples": self.n_samples,
                "violated_fraction": self.violated_fraction}


# each bound reads "residual >= C * target^e": (target, residual) per sample
_BOUND_PAIRS = {
    "level_subdiff": lambda s: (s.dist_level, s.dist_subdiff),
    "level_bregman": lambda s: (s.dist_level, s.dist_prox),
    "kl": lambda s: (s.value_gap, s.dist_subdiff),
    "sharpness": lambda s: (s.dist_level, s.value_gap),
    "gap_condition": lambda s: (s.value_gap, s.gap_value),
    "weak_subreg": lambda s: (s.dist_crit, s.dist_subdiff),
    "luo_tseng": lambda s: (s.dist_crit, s.dist_prox),
}


def _ols_loglog(a: Array, b: Array) -> tuple[float, float]:
    """Slope and r^2 of log b against log a.

    A flat response (log-spread of b below 1e-6) makes the exponent
    unidentifiable: any exponent admits an envelope constant.  The
    canonical linear exponent 1 is reported with r^2 = 0."""
    la, lb = np.log(a), np.log(b)
    if lb.max() - lb.min() < 1e-6:
        return 1.0, 0.0
    var_a = float(np.var(la))
    if var_a == 0.0:
        return 1.0, 0.0
    slope = float(np.cov(la, lb, bias=True)[0, 1] / var_a)
    resid = lb - (lb.mean() + slope * (la - la.mean()))
    ss_tot = float(np.sum((lb - lb.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 0.0
    return slope, r2


def _split_by_target(a: Array, validate_fraction: float = 0.5):
    """Calibration indices (far from the target set) and validation
    indices (near it), ordered by the target quantity a."""
    order = np.argsort(-a, kind="stable")
    n_val = max(1, int(len(order) * validate_fraction))
    return order[:len(order) - n_val], order[len(order) - n_val:]


def fit_error_bound(samples: Sequence[ProbeSample], bound_kind: str) -> EBFit:
    """Two-stage fit of one level-set bound.

    Exponent by log-log least squares over samples with both quantities
    strictly positive; constant as the envelope over the calibration half
    far from the target set (so it yields zero violations there by
    construction); violated_fraction counted on the held-out near half.
    The reported (exponent, constant) are in the bound's native
    orientation:

        level_subdiff   d^gamma <= c3 r         gamma = slope, c3 = 1/C
        level_bregman   d^p     <= theta r      p = slope, theta = 1/C
        kl              r >= c1 gap^alpha       alpha = slope, c1 = C
        sharpness       d <= c2 gap^beta        beta = 1/slope, c2 = C^-beta
        gap_condition   G >= mu gap^q           q = slope, mu = C
        weak_subreg     r >= c5 d_crit          c5 = C
        luo_tseng       d_crit <= c6 r          c6 = 1/C

    where C is the fitted lower-envelope constant of residual >= C target^e.
    """
    if bound_kind not in _BOUND_PAIRS:
        raise ValueError(f"unknown bound kind {bound_kind!r}")
    pair = _BOUND_PAIRS[bound_kind]
    pts = np.array([pair(s) for s in samples], dtype=float)
    pos = (pts[:, 0] > 0) & (pts[:, 1] > 0) & np.isfinite(pts).all(axis=1)
    a, b = pts[pos, 0], pts[pos, 1]
    if a.size == 0:
        raise DegenerateSampleError(f"{bound_kind}: no strictly positive samples")
    if a.size < 30:
        raise ValueError(f"{bound_kind}: need >= 30 positive samples, got {a.size}")

    slope, r2 = _ols_loglog(a, b)
    cal, val = _split_by_target(a)
    C = float(np.min(b[cal] / a[cal] ** slope))
    violated = b[val] < C * a[val] ** slope * (1.0 - _REL_TOL)
    vfrac = float(np.mean(violated))

    if bound_kind in ("level_subdiff", "level_bregman", "luo_tseng"):
        exponent, constant = slope, 1.0 / C
    elif bound_kind == "sharpness":
        exponent = 1.0 / slope if slope != 0 else math.inf
        constant = C ** (-exponent) if math.isfinite(exponent) else math.nan
    else:  # kl, gap_condition, weak_subreg
        exponent, constant = slope, C
    return EBFit(bound_kind=bound_kind, exponent=float(exponent),
                 constant=float(constant), r_squared=float(r2),
                 n_samples=int(a.size), violated_fraction=vfrac)


def kl_exponent_sweep(samples: Sequence[ProbeSample],
                      alphas: Sequence[float]) -> list:
    """Falsification sweep of dist(0, subdiff F) >= c (F - Fbar)^alpha.

    For each alpha the constant is calibrated as the envelope over the
    half of the slice with the largest value gaps and the inequality is
    checked on the quarter nearest the reference value — the regime an
    existential constant must survive.  A healthy exponent yields ~0
    violations; a genuine failure (residual vanishing while the value
    gap stays put) flags essentially every near-reference sample.  The
    certificate is direction-uniform: at weak sharp minima, where the
    local constant varies strongly by direction, small exponents may be
    flagged conservatively even though some constant exists."""
    pts = np.array([(s.value_gap, s.dist_subdiff) for s in samples])
    pos = (pts[:, 0] > 0) & (pts[:, 1] > 0)
    a, b = pts[pos, 0], pts[pos, 1]
    if a.size < 8:
        raise DegenerateSampleError("kl sweep needs >= 8 positive samples")
    order = np.argsort(-a, kind="stable")
    cal = order[:len(order) // 2]
    val = order[-max(1, len(order) // 4):]
    out = []
    for alpha in alphas:
        c1 = float(np.min(b[cal] / a[cal] ** alpha))
        viol = b[val] < c1 * a[val] ** alpha * (1.0 - _REL_TOL)
        out.append({"alpha": float(alpha), "constant": c1,
                    "violated_fraction": float(np.mean(viol))})
    return out


# ---------------------------------------------------------------------------
# implication and certificate checks
# ---------------------------------------------------------------------------

def lemma_sample_count(m: float, L: float, eps_hi: float, eta: float,
                       nu: float) -> float:
    """Band divisor N >= (2 eps_hi nu / (m - eps_hi L)) / (eta/2)^2 that
    keeps prox steps inside the half-radius slice."""
    return (2.0 * eps_hi * nu / (m - eps_hi * L)) / (eta / 2.0) ** 2


def check_step_containment(samples: Sequence[ProbeSample], slice_: LevelSlice,
                           m: float, L: float, eps_hi: float) -> dict:
    """Property-(A) samples in the shrunken slice keep their prox point
    within eta/2 of themselves and inside the eta-ball around the center
    (checked through ||x - T(x)|| + ||x - center|| <= eta)."""
    N = max(lemma_sample_count(m, L, eps_hi, slice_.radius_eta,
                               slice_.value_band_nu), 1.0)
    checked = violations = 0
    for s in samples:
        d_center = float(np.linalg.norm(s.x - slice_.center))
        inner = (d_center < slice_.radius_eta / 2
                 and s.value_gap < slice_.value_band_nu / N)
        if not (inner and s.property_A):
            continue
        checked += 1
        if s.dist_prox > slice_.radius_eta / 2 * (1.0 + _REL_TOL):
            violations += 1
        elif s.dist_prox + d_center > slice_.radius_eta * (1.0 + _REL_TOL):
            violations += 1
    return {"check": "prox_step_containment", "n_checked": checked,
            "n_violations": violations, "band_divisor": N}


def check_subdiff_implies_prox_eb(samples: Sequence[ProbeSample],
                                  slice_: LevelSlice, fit: EBFit,
                                  L: float, M: float, m: float,
                                  eps_lo: float, eps_hi: float) -> dict:
    """Level-set subdifferential EB (exponent gamma, constant c3) implies
    the prox-residual EB dist^p(x, [F<=Fbar]) <= theta dist(x, T(x)) on
    the half-radius slice, with

        p = 1 / min(1/gamma, 1)
        theta1 = 1 + (c3 (L + M/eps_lo))^(1/gamma) (eta/2)^(1/gamma - 1)
        theta2 = (eta/2)^(1 - 1/gamma) + (c3 (L + M/eps_lo))^(1/gamma)

    using theta1 for gamma <= 1 and theta2 beyond."""
    gamma, c3 = fit.exponent, fit.constant
    if not (gamma > 0 and math.isfinite(gamma)):
        return {"check": "subdiff_implies_prox_eb", "gated": True,
                "reason": "gamma fit not in (0, inf)"}
    p = gamma if gamma > 1 else 1.0
    eta2 = slice_.radius_eta / 2.0
    core = (c3 * (L + M / eps_lo)) ** (1.0 / gamma)
    theta1 = 1.0 + core * eta2 ** (1.0 / gamma - 1.0)
    theta2 = eta2 ** (1.0 - 1.0 / gamma) + core
    theta = theta1 if gamma <= 1 else theta2
    N = max(lemma_sample_count(m, L, eps_hi, slice_.radius_eta,
                               slice_.value_band_nu), 1.0)
    checked = violations = 0
    for s in samples:
        inner = (np.linalg.norm(s.x - slice_.center) < eta2
                 and s.value_gap < slice_.value_band_nu / N)
        if not inner:
            continue
        checked += 1
        if s.dist_level > theta * s.dist_prox ** (1.0 / p) * (1.0 + 1e-6) + 1e-12:
            violations += 1
    return {"check": "subdiff_implies_prox_eb", "gated": False, "p": p,
            "theta": theta, "theta1": theta1, "theta2": theta2,
            "n_checked": checked, "n_violations": violations}


def check_value_proximity(samples: Sequence[ProbeSample], F_bar: float,
                          L: float, M: float, eps_lo: float) -> dict:
    """Value-proximity chain on a slice:

        F(T(x)) - Fbar  <=  E(x) - Fbar  <=  c0 dist^2(x, [F <= Fbar])

    with c0 = 3L/2 + M/(2 eps_lo).  Reports the worst violation of each
    link (negative slack means a violation)."""
    c0 = 1.5 * L + M / (2.0 * eps_lo)
    worst_left = math.inf   # E(x) - F(T(x)) >= 0
    worst_right = math.inf  # c0 d^2 - (E(x) - Fbar) >= 0
    for s in samples:
        worst_left = min(worst_left, s.envelope_value - s.prox_F)
        worst_right = min(worst_right,
                          c0 * s.dist_level ** 2 - (s.envelope_value - F_bar))
    return {"check": "value_proximity", "c0": c0,
            "min_slack_envelope_vs_proxF": worst_left,
            "min_slack_c0_bound": worst_right,
            "n_checked": len(samples)}


def check_kl_exponent_map(kl_fit: EBFit, eb_fit: EBFit,
                          sharp_fit: Optional[EBFit] = None,
                          tol: float = 0.1) -> dict:
    """gamma ~= alpha/(1 - alpha) and (optionally) sharpness ~= 1 - alpha.

    The gamma comparison scales the tolerance by the map's local
    derivative 1/(1-alpha)^2, since fit noise in alpha is amplified by
    exactly that factor."""
    alpha = kl_fit.exponent
    gamma_target = alpha / (1.0 - alpha) if alpha < 1 else math.inf
    gamma_tol = tol * max(1.0, (1.0 - alpha) ** -2 if alpha < 1 else math.inf)
    ok = abs(eb_fit.exponent - gamma_target) <= gamma_tol
    out = {"check": "kl_exponent_map", "alpha": alpha,
           "gamma": eb_fit.exponent, "gamma_from_alpha": gamma_target,
           "gamma_tol": gamma_tol, "ok": bool(ok)}
    if sharp_fit is not None:
        beta_target = 1.0 - alpha
        out["sharpness_beta"] = sharp_fit.exponent
        out["beta_from_alpha"] = beta_target
        out["sharpness_ok"] = bool(abs(sharp_fit.exponent - beta_target) <= tol)
        out["ok"] = bool(out["ok"] and out["sharpness_ok"])
    return out


def check_gap_condition_links(samples: Sequence[ProbeSample],
                              bregman_fit: EBFit, m: float, eps_hi: float,
                              rho: float) -> dict:
    """Both directions of the gap-condition bridge for semiconvex g.

    (i) a prox-residual EB with exponent p yields G >= mu (F - Fbar)^q
    with q = 1/min(1/p, 1) and mu the sampled envelope; (ii) a gap
    condition with (q, mu) forces the subdifferential lower bound
    dist(0, subdiff F) >= sqrt(2 (m - eps_hi rho) mu) (F - Fbar)^(q/2)."""
    if not math.isfinite(rho):
        return {"check": "gap_condition_links", "gated": True,
                "reason": "g is not semiconvex"}
    p = bregman_fit.exponent
    q = p if p > 1 else 1.0
    pts = np.array([(s.value_gap, s.gap_value, s.dist_subdiff)
                    for s in samples])
    pos = (pts[:, 0] > 0) & (pts[:, 1] > 0)
    gaps, Gs, subs = pts[pos, 0], pts[pos, 1], pts[pos, 2]
    mu = float(np.min(Gs / gaps ** q))
    coeff = math.sqrt(2.0 * (m - eps_hi * rho) * mu) if mu > 0 else 0.0
    viol = int(np.sum(subs < coeff * gaps ** (q / 2.0) * (1.0 - _REL_TOL)))
    return {"check": "gap_condition_links", "gated": False, "p": p, "q": q,
            "mu_envelope": mu, "kl_coeff": coeff,
            "kl_exponent": q / 2.0, "n_checked": int(len(gaps)),
            "n_violations": viol}


def check_semiconvex_gap_bounds(problem: Problem, K: KernelSpec, eps: float,
                                X: Array, eps_hi: float) -> dict:
    """Sampled envelope/gap/residual inequalities for semiconvex g under
    an admissible step size; returns the most negative slack per bound.

    With rho the semiconvexity modulus and eps_hi < min(m/L, m/rho):
      (i)   E(x) <= F(x) - (m/eps_hi - rho)/2 ||x - T(x)||^2
      (ii)  (m - eps_hi rho)/(2 eps_hi^2) ||x - T(x)||^2 <= G(x)
      (iii) G(x) <= dist^2(0, subdiff F(x)) / (2 (m - eps_hi rho))
      (iv)  ||x - T(x)|| <= eps_hi/(m - eps_hi rho) dist(0, subdiff F(x))
    """
    rho = problem.g.semiconvex_rho
    m = K.m
    slacks = {"i": math.inf, "ii": math.inf, "iii": math.inf, "iv": math.inf}
    for x in X:
        if not math.isfinite(problem.F(x)):
            continue
        E, G, prox = envelope_gap(problem, K, eps, x)
        r = float(np.linalg.norm(x - prox.minimizer))
        dsub = problem.g.subdiff_dist(x, problem.f.gradient(x))
        Fx = problem.F(x)
        slacks["i"] = min(slacks["i"],
                          Fx - 0.5 * (m / eps_hi - rho) * r * r - E)
        slacks["ii"] = min(slacks["ii"],
                           G - (m - eps_hi * rho) / (2 * eps_hi ** 2) * r * r)
        if math.isfinite(dsub):
            slacks["iii"] = min(slacks["iii"],
                                dsub * dsub / (2 * (m - eps_hi * rho)) - G)
            slacks["iv"] = min(slacks["iv"],
                               eps_hi / (m - eps_hi * rho) * dsub - r)
    return {"check": "semiconvex_gap_bounds", "min_slack": slacks}


# ---------------------------------------------------------------------------
# rate estimation
# ---------------------------------------------------------------------------

def estimate_q_linear_rate(trace: Trace, F_bar: float, window: int = 10,
                           floor: float = 1e-14) -> tuple[float, tuple]:
    """Largest successive value-gap ratio over the stable tail.

    Gaps below floor*(1+|Fbar|) are float-exhausted and truncate the
    window.  Raises ValueError when no ratio survives."""
    gaps = np.array(trace.f_values, dtype=float) - F_bar
    scale = floor * (1.0 + abs(F_bar))
    if np.any(gaps < -1e-9 * (1.0 + abs(F_bar))):
        raise ValueError("F_bar exceeds recorded F values")
    valid = np.where(gaps > scale)[0]
    # keep the maximal leading run of valid indices
    k_end = 0
    while k_end < len(gaps) and gaps[k_end] > scale:
        k_end += 1
    if k_end < 2:
        raise ValueError("empty rate window: no positive value gaps")
    ratios = gaps[1:k_end] / gaps[:k_end - 1]
    w = min(window, len(ratios))
    tail = ratios[-w:]
    return float(np.max(tail)), (int(k_end - w), int(k_end - 1))


def certified_q_rate(a: float, kappa_prime: float) -> float:
    """Certified ratio 1 / (1 + a/kappa') from the decrease constant a and
    the value-proximity constant kappa' = c0 theta^2."""
    return 1.0 / (1.0 + a / kappa_prime)


def r_linear_envelope(trace: Trace, beta: float) -> float:
    """Smallest C with ||x^k - x_final|| <= C (sqrt(beta))^k along the
    stored iterates (geometric envelope of the iterate tail)."""
    xf = trace.final_x
    root = math.sqrt(beta)
    C = 0.0
    for x, k in zip(trace.iterates[:-1], trace.iterate_indices[:-1]):
        d = float(np.linalg.norm(x - xf))
        C = max(C, d / root ** k)
    return C


def estimate_level_set_rate(trace: Trace, problem: Problem, F_bar: float,
                            grid: SublevelGrid,
                            min_dist: Optional[float] = None) -> dict:
    """Max successive ratio of sublevel-set distances along the iterates.

    Distances below ``min_dist`` (default 10x the grid resolution) are
    dominated by oracle error and are excluded; an iterate already inside
    [F <= Fbar] ends the usable window (reported as converged)."""
    if min_dist is None:
        min_dist = 10.0 * grid.resolution
    dists = []
    for x, k in zip(trace.iterates, trace.iterate_indices):
        if problem.F(x) <= F_bar:
            dists.append(0.0)
            break
        d, _ = grid.project(F_bar, x, boundary_check=False)
        dists.append(d)
    ratios = []
    for d0, d1 in zip(dists[:-1], dists[1:]):
        if d0 >= min_dist and d1 >= min_dist:
            ratios.append(d1 / d0)
    converged = bool(dists and dists[-1] < min_dist)
    out = {"check": "level_set_rate", "distances": dists,
           "n_ratios": len(ratios), "converged": converged}
    out["beta_levelset"] = float(np.max(ratios)) if ratios else math.nan
    return out


def check_level_set_rate_certificates(beta_levelset: float, refit_c3: float,
                                      b_frak: float, c_frak: float,
                                      L: float, M: float, eps_lo: float,
                                      eps_hi: float, m: float,
                                      rho: float) -> dict:
    """Both directions of the linear-convergence certificate relative to a
    sublevel set.

    Forward: a strong subdifferential EB with constant c3' gives the
    kernel-EB constant theta' = 1 + c3'(L + M/eps_lo) and, when theta'
    falls in (sqrt(c/b), sqrt(c/(b-1))) (undefined unless b > 1), the
    contraction bound beta <= sqrt(b - c/theta'^2).  Reverse: observed
    contraction beta < 1 with semiconvex g bounds the refit constant by
    c3' <= eps_hi / ((1 - beta)(m - eps_hi rho))."""
    out = {"check": "level_set_rate_certificates",
           "beta_levelset": beta_levelset, "refit_c3prime": refit_c3}
    theta_p = 1.0 + refit_c3 * (L + M / eps_lo)
    out["theta_prime"] = theta_p
    if b_frak > 1.0 and c_frak > 0.0:
        lo, hi = math.sqrt(c_frak / b_frak), math.sqrt(c_frak / (b_frak - 1.0))
        out["theta_window"] = [lo, hi]
        if lo < theta_p < hi:
            bound = math.sqrt(b_frak - c_frak / theta_p ** 2)
            out["forward_beta_bound"] = bound
            out["forward_ok"] = bool(beta_levelset <= bound * 1.05)
        else:
            out["forward_gated"] = "theta_prime outside admissible window"
    else:
        out["forward_gated"] = "requires b > 1 and c > 0"
    if math.isfinite(rho) and beta_levelset < 1.0:
        c3_bound = eps_hi / ((1.0 - beta_levelset) * (m - eps_hi * rho))
        out["reverse_c3_bound"] = c3_bound
        out["reverse_ok"] = bool(refit_c3 <= c3_bound * 1.05)
    else:
        out["reverse_gated"] = "needs semiconvex g and beta < 1"
    return out


# ---------------------------------------------------------------------------
# growth-condition certification
# ---------------------------------------------------------------------------

def certify_growth_conditions(problem: Problem, slice_: LevelSlice,
                              crit_points: Array, seed: int = 0,
                              n: int = 400,
                              samples: Optional[Sequence[ProbeSample]] = None
                              ) -> dict:
    """Largest zero-violation modulus for each local growth condition.

    Conditions on the eta-ball around the slice center (f only):
      lsc   f(y) >= f(x) + <grad f(x), y-x> + (mu/2)||y-x||^2, all pairs
      lesc  same, restricted to pairs sharing a projection onto the
            critical set
      lwsc  same, with y the projection of x
      lqgg  <grad f(x) - grad f(xp), x - xp> >= mu ||x - xp||^2
    and with g identically zero additionally
      lrsi  <grad f(x), x - xp> >= mu ||x - xp||^2
      lpl   ||grad f(x)||^2 / 2 >= mu (f(x) - f(center))

    The certified modulus is the sampled infimum clipped at zero.  When
    lwsc or lqgg certifies with mu above g's semiconvexity modulus rho,
    the weak-subregularity conclusion dist(0, subdiff F) >=
    ((mu - rho)/2) dist(x, crit set) is checked on the probe samples."""
    rng = np.random.default_rng(seed)
    eta = slice_.radius_eta
    X = sample_ball(rng, n, slice_.center, eta)
    Y = sample_ball(rng, n, slice_.center, eta)
    f = problem.f

    def proj_crit(x):
        j = int(np.argmin(np.linalg.norm(crit_points - x[None, :], axis=1)))
        return crit_points[j]

    lsc_r, lesc_r, lwsc_r, lqgg_r = [], [], [], []
    lrsi_r, lpl_r = [], []
    f_center = f.value(slice_.center)
    for x, y in zip(X, Y):
        dxy = float(np.linalg.norm(y - x))
        gx = f.gradient(x)
        if dxy > 1e-10:
            quad = 2.0 * (f.value(y) - f.value(x) - float(gx @ (y - x))) / dxy ** 2
            lsc_r.append(quad)
        xp, yp = proj_crit(x), proj_crit(y)
        if dxy > 1e-10 and np.linalg.norm(xp - yp) <= 1e-8:
            quad = 2.0 * (f.value(y) - f.value(x) - float(gx @ (y - x))) / dxy ** 2
            lesc_r.append(quad)
        dxp = float(np.linalg.norm(xp - x))
        if dxp > 1e-8:
            lwsc_r.append(2.0 * (f.value(xp) - f.value(x)
                                 - float(gx @ (xp - x))) / dxp ** 2)
            lqgg_r.append(float((gx - f.gradient(xp)) @ (x - xp)) / dxp ** 2)
            if problem.g.kind == "zero":
                lrsi_r.append(float(gx @ (x - xp)) / dxp ** 2)
        if problem.g.kind == "zero":
            fgap = f.value(x) - f_center
            if fgap > 1e-12:
                lpl_r.append(0.5 * float(gx @ gx) / fgap)

    def certify(ratios):
        if not ratios:
            return None
        return max(min(ratios), 0.0)

    mus = {"lsc": certify(lsc_r), "lesc": certify(lesc_r),
           "lwsc": certify(lwsc_r), "lqgg": certify(lqgg_r),
           "lrsi": certify(lrsi_r), "lpl": certify(lpl_r)}
    out = {"check": "growth_conditions", "mu": mus}

    rho = problem.g.semiconvex_rho
    mu_best = max([v for k, v in mus.items() if k in ("lwsc", "lqgg")
                   and v is not None], default=None)
    if mu_best is None or not math.isfinite(rho):
        out["weak_subreg"] = {"gated": True,
                              "reason": "needs lwsc/lqgg and semiconvex g"}
        return out
    if mu_best <= rho:
        out["weak_subreg"] = {"gated": True,
                              "reason": f"mu={mu_best:g} <= rho={rho:g}"}
        return out
    if samples is None:
        out["weak_subreg"] = {"gated": True, "reason": "no probe samples"}
        return out
    coeff = 0.5 * (mu_best - rho)
    viol = sum(1 for s in samples
               if s.dist_subdiff < coeff * s.dist_crit * (1.0 - _REL_TOL))
    out["weak_subreg"] = {"gated": False, "mu": mu_best, "rho": rho,
                          "coefficient": coeff, "n_checked": len(samples),
                          "n_violations": viol}
    return out


def check_luo_tseng_bound(problem: Problem, samples: Sequence[ProbeSample],
                          eps: float, sigma: float,
                          crit_points: Array) -> dict:
    """Residual error bound dist(x, crit set) <= c6 ||x - p(x)|| with p(x)
    the euclidean prox-gradient update, over samples whose residual stays
    below sigma (the definition's domain).

    The implication being certified is that the residual bound transfers
    to a prox-map error bound with the same constant for the euclidean
    kernel (the map the bound's residual is built from), so c6 is fitted
    as the envelope over the half of the filtered samples farthest from
    the critical set and verified on the near half."""
    if not problem.g.convex:
        return {"check": "luo_tseng", "gated": True, "reason": "g not convex"}
    ones = np.ones(problem.dim)
    rows = []
    for s in samples:
        p, _ = problem.g.scaled_prox(s.x, problem.f.gradient(s.x), ones, eps)
        r = float(np.linalg.norm(s.x - p))
        rows.append((s, r))
    kept = [(s, r) for s, r in rows if r <= sigma and r > 0]
    n_excluded = len(rows) - len(kept)
    if len(kept) < 5:
        return {"check": "luo_tseng", "gated": True,
                "reason": "too few samples below the residual threshold",
                "n_excluded": n_excluded}
    d = np.array([s.dist_crit for s, _ in kept])
    r = np.array([r for _, r in kept])
    cal, val = _split_by_target(d)
    c6 = float(np.max(d[cal] / r[cal]))
    viol = int(np.sum(d[val] > c6 * r[val] * (1.0 + _REL_TOL) + 1e-12))
    return {"check": "luo_tseng", "gated": False, "c6": c6,
            "sigma": sigma, "n_kept": len(kept), "n_excluded": n_excluded,
            "n_checked": int(len(val)), "n_violations": viol}


def check_critical_value_consistency(problem: Problem, x_bar: Array,
                                     crit_points: Array, delta: float,
                                     tol: float = 1e-8) -> dict:
    """F(y) <= F(x_bar) for approximate critical points y within delta of
    x_bar; a precondition of the implication checks that use the critical
    set as the target."""
    F_bar = problem.F(x_bar)
    fails = []
    for y in crit_points:
        if float(np.linalg.norm(y - x_bar)) <= delta:
            if problem.F(y) > F_bar + tol * (1.0 + abs(F_bar)):
                fails.append([float(v) for v in y])
    return {"check": "critical_value_consistency", "ok": not fails,
            "n_failures": len(fails), "failures": fails}
