"""Inexact proximal point iteration under the four inexactness rules.

The primed rules bound the certificate residual and are what production runs
use.  The unprimed rules reference the unknown exact prox, so they exist only
in test mode: each step computes a tight reference prox and perturbs it by a
seeded direction scaled to satisfy the requested rules exactly.  That makes
the inexactness adversarial-but-admissible, which is what the contraction
checkers need to be a meaningful audit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CriterionUnverifiable
from .ppm import BoundCheck, IterationTrace, StepSchedule, _constants
from .problem import ProblemSpec, as_point
from .prox import InnerTolerance, prox, residual_certificate

PRIMED = ("A'", "B'")
UNPRIMED = ("A", "B")
_ALIASES = {"aprime": "A'", "bprime": "B'", "a'": "A'", "b'": "B'", "a": "A", "b": "B"}


def _canonical_kind(kind: str) -> str:
    k = _ALIASES.get(kind.strip().lower())
    if k is None:
        raise ValueError(f"unknown criterion kind {kind!r}")
    return k


@dataclass(frozen=True)
class InexactCriterion:
    """One inexactness rule with its geometric tolerance sequence.

    A / A': absolute budgets eps_k = eps0 * gamma^k (summable);
    B / B': relative budgets delta_k = delta0 * gamma^k.
    """

    kind: str
    eps0: float = 0.1
    delta0: float = 0.5
    gamma: float = 0.7

    def __post_init__(self):
        object.__setattr__(self, "kind", _canonical_kind(self.kind))
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1) for summability")
        if self.eps0 < 0 or self.delta0 < 0:
            raise ValueError("tolerance scales must be nonnegative")

    @property
    def implementable(self) -> bool:
        return self.kind in PRIMED

    @property
    def absolute(self) -> bool:
        return self.kind in ("A", "A'")

    def eps(self, k: int) -> float:
        return self.eps0 * self.gamma ** k

    def delta(self, k: int) -> float:
        return self.delta0 * self.gamma ** k

    @property
    def eps_sum(self) -> float:
        return self.eps0 / (1.0 - self.gamma)


@dataclass(frozen=True)
class InexactRateBound:
    """Distance contraction factor under relative inexactness."""

    theta: float
    delta: float

    @property
    def theta_hat(self) -> float:
        return (self.theta + 2.0 * self.delta) / (1.0 - self.delta)


def run_ippm(p: ProblemSpec, x0, sched: StepSchedule,
             crit: InexactCriterion | Sequence[InexactCriterion],
             max_iter: int = 500, test_mode: bool = False, seed: int = 0,
             stop_gap: float = 1e-10, stop_residual: float = 1e-10,
             reference_target: float = 1e-12,
             max_inner: int = 100_000) -> IterationTrace:
    """Inexact proximal point run under one or several criteria.

    Primed criteria drive the inner solver's stopping rule directly.  The
    unprimed ones require ``test_mode`` (they compare against the true prox);
    the step is then a seeded perturbation of a tight reference prox, kept
    inside every requested budget.
    """
    crits = (crit,) if isinstance(crit, InexactCriterion) else tuple(crit)
    if not crits:
        raise ValueError("need at least one criterion")
    unprimed = [c for c in crits if not c.implementable]
    if unprimed and not test_mode:
        raise CriterionUnverifiable(
            f"criteria {[c.kind for c in unprimed]} reference the exact prox; "
            "enable test_mode")
    if unprimed and any(c.implementable for c in crits):
        raise ValueError("cannot mix primed and unprimed criteria in one run")
    if sched.kind == "geometric" and sched.growth < 1.0:
        raise ValueError("inexact runs need steps bounded away from zero; "
                         "a decaying geometric schedule is not")
    x = as_point(x0)
    sched.validate(p, max_iter)
    rng = np.random.default_rng(seed)
    eps_logged = any(c.absolute for c in crits)
    delta_logged = any(not c.absolute for c in crits)
    trace = IterationTrace(problem=p)
    trace.points.append(x)
    trace.values.append(float(p.value(x)))

    def log_step(c, eps_k, delta_k, resid, ok, ref_point):
        trace.steps.append(c)
        trace.residuals.append(resid)
        trace.eps.append(eps_k if eps_logged else None)
        trace.deltas.append(delta_k if delta_logged else None)
        trace.criterion_ok.append(ok)
        trace.ref_prox_points.append(ref_point)

    for k in range(max_iter):
        c = sched.at(k)
        eps_k = min((cr.eps(k) for cr in crits if cr.absolute), default=None)
        delta_k = min((cr.delta(k) for cr in crits if not cr.absolute), default=None)
        if not unprimed:
            x_next, resid, ok = _primed_step(p, x, c, eps_k, delta_k, max_inner)
            ref_point = None
        else:
            x_next, resid, ref_point = _test_mode_step(
                p, x, c, eps_k, delta_k, rng, reference_target, max_inner)
            ok = True
        log_step(c, eps_k, delta_k, resid, ok, ref_point)
        trace.points.append(x_next)
        trace.values.append(float(p.value(x_next)))
        outer_residual = float(np.linalg.norm(x_next - x)) / c + resid
        x = x_next
        if p.f_star is not None and trace.values[-1] - p.f_star <= stop_gap:
            trace.stop_reason = "gap"
            break
        if outer_residual <= stop_residual:
            trace.stop_reason = "residual"
            break
    else:
        trace.stop_reason = "max_iter"
    log_step(sched.at(len(trace) - 1), None, None, None, None, None)
    return trace


def _primed_step(p, x, c, eps_k, delta_k, max_inner):
    """One step satisfying A' and/or B' via the inner solver's stop rule."""
    target = eps_k / c if eps_k is not None else math.inf

    def accept(w, rn):
        if rn > target:
            return False
        if delta_k is not None:
            # Relative rule couples the candidate to its own bound; zero
            # movement is acceptable only with a zero residual.
            return rn <= (delta_k / c) * float(np.linalg.norm(w - x))
        return True

    tol = InnerTolerance(target_residual=max(target, 1e-300) if target < math.inf else 1e-10,
                         max_inner_iterations=max_inner)
    result = prox(p, x, c, tol, stop_rule=accept)
    return result.point, result.residual_norm, True


def _test_mode_step(p, x, c, eps_k, delta_k, rng, reference_target, max_inner):
    """Perturb a tight reference prox inside every requested budget."""
    tol = InnerTolerance(target_residual=reference_target, max_inner_iterations=max_inner)
    ref = prox(p, x, c, tol)
    p_k = ref.point
    radius = eps_k if eps_k is not None else math.inf
    if delta_k is not None:
        # Safe radius: r <= delta ||p_k + r u - x|| holds whenever
        # r <= delta ||p_k - x|| / (1 + delta).
        radius = min(radius, delta_k * float(np.linalg.norm(p_k - x)) / (1.0 + delta_k))
    if not math.isfinite(radius):
        radius = 0.0
    if radius <= 0.0:
        x_next = p_k
    else:
        direction = rng.standard_normal(p.dimension)
        norm = float(np.linalg.norm(direction))
        direction = direction / norm if norm > 0 else np.zeros(p.dimension)
        x_next = p_k + radius * direction
        for _ in range(60):  # recheck the coupled budgets on the realized point
            gap = float(np.linalg.norm(x_next - p_k))
            ok = (eps_k is None or gap <= eps_k) and (
                delta_k is None or gap <= delta_k * float(np.linalg.norm(x_next - x)))
            if ok:
                break
            radius *= 0.5
            x_next = p_k + radius * direction
        else:
            x_next = p_k
    _, resid = residual_certificate(p, x_next, x, c)
    return x_next, resid, p_k


def check_ippm_sublinear(trace: IterationTrace, dist0: float | None = None,
                         atol: float = 1e-9) -> BoundCheck:
    """Best-iterate envelope with the diameter-weighted error budget.

    min_{j<=k} f(x_j) - f_star <= (dist^2(x_0,S) + 2 D sum eps_j) / (2 sum c_j),
    evaluated with the running diameter D_k.
    """
    if trace.f_star is None:
        raise ValueError("f_star required")
    if any(e is None for e in trace.eps[:-1]):
        raise ValueError("trace has no absolute (A-type) budgets logged")
    if dist0 is None:
        from .problem import distance_to_solution
        dist0 = distance_to_solution(trace.problem, trace.points[0])
    gaps = trace.gaps()
    diam = trace.running_diameter()
    indices, ok, lhs, rhs = [], [], [], []
    csum = esum = 0.0
    best = gaps[0]
    for k in range(1, len(trace)):
        csum += trace.steps[k - 1]
        esum += trace.eps[k - 1]
        best = min(best, gaps[k])
        bound = (dist0 ** 2 + 2.0 * diam[k] * esum) / (2.0 * csum) + atol
        indices.append(k)
        lhs.append(best)
        rhs.append(bound)
        ok.append(best <= bound)
    return BoundCheck("ippm_best_iterate", indices, ok, lhs, rhs)


def check_ippm_linear(trace: IterationTrace, report, nu: float,
                      atol: float = 1e-9) -> BoundCheck:
    """Eventual distance contraction dist_{k+1} <= theta_hat_k dist_k.

    theta_hat_k = (theta_k + 2 delta_k) / (1 - delta_k) with
    theta_k = 1/sqrt(2 c_k beta + 1), beta = mu_q - rho/2.  Gated at
    k_bar = max(sublevel entry, first k with delta_k < 1).
    """
    _, mu_q, _ = _constants(report)
    beta = mu_q - 0.5 * trace.problem.weak_convexity
    if beta <= 0:
        raise ValueError("need mu_q > rho/2 for the distance contraction")
    if any(d is None for d in trace.deltas[:-1]):
        raise ValueError("trace has no relative (B-type) budgets logged")
    k_entry = trace.entry_index(nu)
    if k_entry is None:
        return BoundCheck("ippm_linear_dist", [], [], [], [])
    k_delta = next((k for k in range(len(trace) - 1) if trace.deltas[k] < 1.0), None)
    if k_delta is None:
        return BoundCheck("ippm_linear_dist", [], [], [], [])
    k_bar = max(k_entry, k_delta)
    dists = trace.dists()
    indices, ok, lhs, rhs = [], [], [], []
    for k in range(k_bar, len(trace) - 1):
        if dists[k] is None or dists[k] <= 1e-14:
            continue
        theta = 1.0 / math.sqrt(2.0 * trace.steps[k] * beta + 1.0)
        hat = InexactRateBound(theta, trace.deltas[k]).theta_hat
        indices.append(k)
        lhs.append(dists[k + 1])
        rhs.append(hat * dists[k] + atol)
        ok.append(lhs[-1] <= rhs[-1])
    return BoundCheck("ippm_linear_dist", indices, ok, lhs, rhs)


def check_inexact_one_step(trace: IterationTrace, atol: float = 1e-9) -> BoundCheck:
    """Test-mode audit of the inexact distance inequality.

    (1 - delta_k) dist(x_{k+1},S) <= 2 delta_k dist(x_k,S) + dist(prox(x_k),S)
    for every step with delta_k < 1 and a logged reference prox.
    """
    from .problem import distance_to_solution
    if trace.problem.project_solution is None:
        raise ValueError("need a solution oracle")
    dists = trace.dists()
    indices, ok, lhs, rhs = [], [], [], []
    for k in range(len(trace) - 1):
        ref = trace.ref_prox_points[k]
        delta_k = trace.deltas[k]
        if ref is None or delta_k is None or delta_k >= 1.0:
            continue
        ref_dist = distance_to_solution(trace.problem, ref)
        indices.append(k)
        lhs.append((1.0 - delta_k) * dists[k + 1])
        rhs.append(2.0 * delta_k * dists[k] + ref_dist + atol)
        ok.append(lhs[-1] <= rhs[-1])
    return BoundCheck("inexact_one_step", indices, ok, lhs, rhs)


@dataclass(frozen=True)
class AveragedIterates:
    plain: np.ndarray
    weighted: np.ndarray
    plain_gap: float
    weighted_gap: float
    plain_bound: float  # mean of the per-iterate gaps (convexity bound)
    weighted_bound: float


def averaged_iterates(trace: IterationTrace) -> AveragedIterates:
    """Plain and step-weighted iterate averages with their cost-gap bounds."""
    if len(trace) < 2:
        raise ValueError("need at least one step")
    if trace.f_star is None:
        raise ValueError("f_star required for cost gaps")
    pts = trace.points
    fs = trace.f_star
    plain = np.mean(pts[1:], axis=0)
    weights = np.asarray(trace.steps[:len(pts) - 1])
    weighted = np.average(pts[1:], axis=0, weights=weights)
    gaps = [v - fs for v in trace.values[1:]]
    return AveragedIterates(
        plain=plain,
        weighted=weighted,
        plain_gap=float(trace.problem.value(plain)) - fs,
        weighted_gap=float(trace.problem.value(weighted)) - fs,
        plain_bound=float(np.mean(gaps)),
        weighted_bound=float(np.average(gaps, weights=weights)),
    )
