"""Empirical estimation of the five regularity constants and their audit.

Constants are extremal ratios over a sampled sublevel region: secant growth
(mu_s) and restricted secant (mu_r) are infima, the subdifferential error
bound (mu_e) is a supremum, gradient dominance (mu_p) and quadratic growth
(mu_q) are infima.  The audit replays the implication chain between them
with a sampling tolerance, which is a direct numerical witness of their
equivalence on convex (and growth-dominated weakly convex) problems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NeedsReference
from .problem import ProblemSpec, as_point, distance_to_solution, min_norm_subgradient

EB_CAP = 1e12
STATIONARY_NORM = 1e-8
SUBOPTIMAL_GAP = 1e-6


@dataclass(frozen=True)
class EstimationPlan:
    """Where and how densely to sample.

    Grid sampling needs a bracket and suits dimension <= 2; random sampling
    draws seeded Gaussians of scale ``radius`` around a solution point.
    Points with gap < tau_s or dist < sqrt(tau_s) are excluded from ratio
    denominators (estimator bias of order sqrt(tau_s)).
    """

    nu: float = math.inf
    sampling: str = "grid"
    bracket: tuple[float, float] | None = None
    count: int = 10_001
    radius: float = 1.0
    seed: int = 0
    tau_s: float = 1e-9
    pair_thin: int = 200

    def __post_init__(self):
        if self.count < 100:
            raise ValueError("need at least 100 samples")
        if self.sampling not in ("grid", "random"):
            raise ValueError(f"unknown sampling {self.sampling!r}")
        if self.sampling == "grid" and self.bracket is None:
            raise ValueError("grid sampling needs a bracket")


def plan_for(p: ProblemSpec, count: int = 10_001, nu: float | None = None) -> EstimationPlan:
    """Default plan from benchmark metadata (bracket and sublevel radius)."""
    md = p.metadata
    bracket = md.get("bracket")
    if bracket is None:
        return EstimationPlan(nu=nu if nu is not None else math.inf,
                              sampling="random", count=count)
    return EstimationPlan(nu=nu if nu is not None else md.get("nu", math.inf),
                          sampling="grid", bracket=tuple(bracket), count=count)


@dataclass(frozen=True)
class ConstantEstimate:
    value: float
    witness: tuple[float, ...] | None
    bound_direction: str  # "exact" | "overestimate" | "underestimate" | "approximate"


@dataclass
class RegularityReport:
    estimates: dict[str, ConstantEstimate]
    pl_fails_globally: bool
    eb_fails_globally: bool
    nu: float
    n_samples: int
    plan: EstimationPlan | None = field(default=None, repr=False)

    def __getattr__(self, name):
        if name in ("mu_s", "mu_r", "mu_e", "mu_p", "mu_q"):
            return self.estimates[name].value
        raise AttributeError(name)

    def to_json(self) -> dict:
        body = {}
        for key, est in self.estimates.items():
            body[key] = {
                "value": est.value if math.isfinite(est.value) else "inf",
                "witness": list(est.witness) if est.witness is not None else None,
                "bound_direction": est.bound_direction,
            }
        return {
            "constants": body,
            "flags": {"pl_fails_globally": self.pl_fails_globally,
                      "eb_fails_globally": self.eb_fails_globally},
            "nu": self.nu if math.isfinite(self.nu) else "inf",
            "n_samples": self.n_samples,
        }


def _sample_points(p: ProblemSpec, plan: EstimationPlan) -> list[np.ndarray]:
    if plan.sampling == "grid":
        lo, hi = plan.bracket
        if p.dimension == 1:
            return [np.array([t]) for t in np.linspace(lo, hi, plan.count)]
        if p.dimension == 2:
            side = max(int(math.isqrt(plan.count)), 10)
            axis = np.linspace(lo, hi, side)
            return [np.array([a, b]) for a in axis for b in axis]
        raise ValueError("grid sampling supports dimension <= 2")
    rng = np.random.default_rng(plan.seed)
    center = as_point(p.project_solution(np.zeros(p.dimension)))
    return [center + plan.radius * rng.standard_normal(p.dimension)
            for _ in range(plan.count)]


def estimate_constants(p: ProblemSpec, plan: EstimationPlan) -> RegularityReport:
    """Extremal empirical ratios over the sampled sublevel region."""
    if p.f_star is None or p.project_solution is None:
        raise NeedsReference("estimation needs f_star and a solution oracle")
    fs = p.f_star
    points = _sample_points(p, plan)
    if p.dimension == 1 and plan.sampling == "grid":
        # Sharpen the sample with bisection-refined stationary points so a
        # dominance failure shows up as an exact zero ratio, not a near-zero.
        points += find_suboptimal_stationary_points(p, plan.bracket)

    admitted: list[tuple[np.ndarray, float, float, np.ndarray, float]] = []
    for x in points:
        fx = float(p.value(x))
        if fx - fs > plan.nu or fx == math.inf:
            continue
        info = min_norm_subgradient(p, x)
        admitted.append((x, fx, distance_to_solution(p, x), info.element, info.norm))
    exact = p.min_norm_subgradient is not None and p.min_norm_exact

    inf_init = (math.inf, None)
    mu_r, mu_p, mu_q = inf_init, inf_init, inf_init
    mu_e = (0.0, None)
    pl_fail = eb_fail = False
    included = []
    for x, fx, dist, g, gnorm in admitted:
        gap = fx - fs
        if gap < plan.tau_s or dist < math.sqrt(plan.tau_s):
            continue
        included.append((x, fx, g))
        if gnorm < STATIONARY_NORM and gap > SUBOPTIMAL_GAP:
            pl_fail = eb_fail = True
        ratio_q = gap / dist ** 2
        if ratio_q < mu_q[0]:
            mu_q = (ratio_q, x)
        proj = as_point(p.project_solution(x))
        ratio_r = float(np.dot(g, x - proj)) / dist ** 2
        if ratio_r < mu_r[0]:
            mu_r = (ratio_r, x)
        ratio_p = gnorm ** 2 / gap
        if ratio_p < mu_p[0]:
            mu_p = (ratio_p, x)
        ratio_e = dist / gnorm if gnorm > 0 else math.inf
        if ratio_e > mu_e[0]:
            mu_e = (ratio_e, x)
    if mu_e[0] > EB_CAP:
        mu_e = (math.inf, mu_e[1])
        eb_fail = True
    if pl_fail:
        # A sampled suboptimal stationary point refutes every positive
        # dominance constant; report the failure as an exact zero.
        mu_p = (0.0, mu_p[1])
    if mu_r[0] < 0.0:
        mu_r = (0.0, mu_r[1])  # a negative ratio refutes every positive constant

    # Secant growth over ordered pairs from a thinned subset.
    thin = max(1, len(included) // plan.pair_thin)
    subset = included[::thin][:plan.pair_thin]
    mu_s = (math.inf, None)
    for xi, fi, gi in subset:
        for xj, fj, _ in subset:
            sq = float(np.dot(xj - xi, xj - xi))
            if sq < plan.tau_s:
                continue
            ratio = (fj - fi - float(np.dot(gi, xj - xi))) / sq
            if ratio < mu_s[0]:
                mu_s = (ratio, xi)
    mu_s = (max(mu_s[0], 0.0) if mu_s[0] < math.inf else 0.0, mu_s[1])

    def est(pair, direction_exact, direction_approx):
        value, witness = pair
        if value == math.inf and witness is None:
            value = 0.0
        return ConstantEstimate(
            value=value,
            witness=tuple(float(v) for v in witness) if witness is not None else None,
            bound_direction=direction_exact if exact else direction_approx)

    estimates = {
        "mu_s": est(mu_s, "exact", "approximate"),
        "mu_r": est(mu_r, "exact", "approximate"),
        "mu_e": est(mu_e, "exact", "overestimate"),
        "mu_p": est(mu_p, "exact", "underestimate"),
        "mu_q": est(mu_q, "exact", "exact"),
    }
    return RegularityReport(estimates=estimates, pl_fails_globally=pl_fail,
                            eb_fails_globally=eb_fail, nu=plan.nu,
                            n_samples=len(included), plan=plan)


@dataclass(frozen=True)
class ImplicationCheck:
    relation: str
    expected: float
    observed: float
    status: str  # "pass" | "fail" | "degenerate" | "skipped"

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def audit_implications(report: RegularityReport, rho: float,
                       tol: float = 0.10) -> list[ImplicationCheck]:
    """Replay the constant relations implied by the implication chain.

    Each derived constant must be met by the directly estimated one within a
    multiplicative sampling tolerance.  Degenerate constants (a zero growth
    constant or an unbounded error-bound ratio) mark their relations as
    unauditable rather than failed; the growth-only branch is skipped unless
    the problem is convex or mu_q > rho/2.
    """
    mu_s, mu_r = report.mu_s, report.mu_r
    mu_e, mu_p, mu_q = report.mu_e, report.mu_p, report.mu_q
    out = []

    def check(relation, observed, expected, kind, degenerate=False):
        if degenerate:
            out.append(ImplicationCheck(relation, expected, observed, "degenerate"))
            return
        if kind == "ge":
            good = observed >= expected * (1.0 - tol)
        else:
            good = observed <= expected * (1.0 + tol)
        out.append(ImplicationCheck(relation, expected, observed,
                                    "pass" if good else "fail"))

    eb_bad = not (0.0 < mu_e < math.inf)
    pl_bad = mu_p <= 0.0
    check("mu_r >= mu_s", mu_r, mu_s, "ge")
    check("mu_e <= 1/mu_r", mu_e, 1.0 / mu_r if mu_r > 0 else math.inf, "le",
          degenerate=eb_bad or mu_r <= 0)
    check("mu_p >= 2/(2 mu_e + rho mu_e^2)", mu_p,
          2.0 / (2.0 * mu_e + rho * mu_e ** 2) if not eb_bad else 0.0, "ge",
          degenerate=eb_bad or pl_bad)
    check("mu_e <= 2/mu_p", mu_e, 2.0 / mu_p if not pl_bad else math.inf, "le",
          degenerate=eb_bad or pl_bad)
    check("mu_q >= 1/(4 mu_e)", mu_q, 1.0 / (4.0 * mu_e) if not eb_bad else 0.0, "ge",
          degenerate=eb_bad)
    if rho == 0.0 or mu_q > 0.5 * rho:
        check("mu_r >= mu_q - rho/2", mu_r, mu_q - 0.5 * rho, "ge")
    else:
        out.append(ImplicationCheck("mu_r >= mu_q - rho/2", math.nan, mu_r, "skipped"))
    return out


def find_suboptimal_stationary_points(p: ProblemSpec, bracket,
                                      scan: int = 4096) -> list[np.ndarray]:
    """Roots of the signed min-norm subgradient that are not minimizers.

    Sign-change bisection over the bracket; keeps points with
    dist(0, subdifferential) < 1e-8 and value gap > 1e-6.
    """
    if p.dimension != 1:
        raise ValueError("stationary-point scan is one-dimensional")
    if p.f_star is None:
        raise NeedsReference("needs f_star to classify stationary points")
    lo, hi = float(bracket[0]), float(bracket[1])

    def signed(x: float) -> float:
        return float(min_norm_subgradient(p, [x]).element[0])

    xs = np.linspace(lo, hi, scan)
    vals = [signed(x) for x in xs]
    roots: list[float] = []
    for i in range(scan - 1):
        a, b, va, vb = xs[i], xs[i + 1], vals[i], vals[i + 1]
        if va == 0.0:
            roots.append(float(a))
            continue
        if va * vb >= 0.0:
            continue
        for _ in range(80):
            mid = 0.5 * (a + b)
            vm = signed(mid)
            if vm == 0.0:
                a = b = mid
                break
            if va * vm < 0.0:
                b, vb = mid, vm
            else:
                a, va = mid, vm
        roots.append(0.5 * (a + b))
    if vals[-1] == 0.0:
        roots.append(float(xs[-1]))

    out, seen = [], []
    for r in roots:
        if any(abs(r - s) < 1e-6 for s in seen):
            continue
        seen.append(r)
        info = min_norm_subgradient(p, [r])
        gap = float(p.value(np.array([r]))) - p.f_star
        if info.norm < STATIONARY_NORM and gap > SUBOPTIMAL_GAP:
            out.append(np.array([r]))
    return out


def verify_weak_convexity(p: ProblemSpec, rho_claim: float, samples: int = 500,
                          seed: int = 0, bracket=None, atol: float = 1e-9):
    """Secant test of rho-weak convexity on seeded triples (x, y, lambda).

    Returns (True, None) when every triple satisfies the rho-relaxed secant
    inequality, else (False, witness_triple).
    """
    rng = np.random.default_rng(seed)
    if bracket is None:
        bracket = p.metadata.get("bracket", (-1.0, 1.0))
    lo, hi = bracket
    for _ in range(samples):
        x = lo + (hi - lo) * rng.random(p.dimension)
        y = lo + (hi - lo) * rng.random(p.dimension)
        lam = float(rng.random())
        mid = lam * x + (1.0 - lam) * y
        lhs = float(p.value(mid))
        rhs = (lam * float(p.value(x)) + (1.0 - lam) * float(p.value(y))
               + 0.5 * rho_claim * lam * (1.0 - lam) * float(np.dot(x - y, x - y)))
        if lhs > rhs + atol:
            return False, (x, y, lam)
    return True, None
