"""Exact proximal point iteration and the bound checkers attached to it.

``run_ppm`` iterates x_{k+1} = prox_{c_k,f}(x_k) and logs everything a bound
check needs: values, distances, certificate residuals, steps.  The checkers
replay the sublinear envelope, the per-step improvement and the linear
contraction factors against a trace and report the first violation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import StepTooLarge
from .problem import ProblemSpec, as_point, distance_to_solution
from .prox import InnerTolerance, ProxResult, prox


@dataclass(frozen=True)
class StepSchedule:
    """Positive prox steps c_k: constant, explicit list, or geometric."""

    kind: str = "constant"
    value: float = 1.0
    values: tuple[float, ...] = ()
    c0: float = 1.0
    growth: float = 1.0

    @staticmethod
    def constant(c: float) -> "StepSchedule":
        return StepSchedule(kind="constant", value=float(c))

    @staticmethod
    def from_sequence(values: Sequence[float]) -> "StepSchedule":
        return StepSchedule(kind="sequence", values=tuple(float(v) for v in values))

    @staticmethod
    def geometric(c0: float, growth: float) -> "StepSchedule":
        return StepSchedule(kind="geometric", c0=float(c0), growth=float(growth))

    def at(self, k: int) -> float:
        if self.kind == "constant":
            return self.value
        if self.kind == "sequence":
            # Runs longer than the list repeat the final step.
            return self.values[min(k, len(self.values) - 1)]
        if self.kind == "geometric":
            return self.c0 * self.growth ** k
        raise ValueError(f"unknown schedule kind {self.kind!r}")

    def validate(self, p: ProblemSpec, horizon: int) -> None:
        for k in range(horizon):
            c = self.at(k)
            if c <= 0:
                raise StepTooLarge(f"c_{k} = {c:g} is not positive")
            if p.weak_convexity > 0 and 1.0 / c <= p.weak_convexity:
                raise StepTooLarge(
                    f"1/c_{k} = {1.0 / c:g} must exceed rho = {p.weak_convexity:g}")

    def min_over(self, horizon: int) -> float:
        # Infimum over the realized horizon (growing schedules have no global min).
        return min(self.at(k) for k in range(max(horizon, 1)))


@dataclass
class IterationTrace:
    """Per-iteration log of one solver run.

    Row k holds the state at iterate x_k; the transition fields (step, the
    certificate residual, the inexactness budgets and the criterion flag)
    describe the move from x_k to x_{k+1} and are None on the final row.
    """

    problem: ProblemSpec
    points: list[np.ndarray] = field(default_factory=list)
    values: list[float] = field(default_factory=list)
    steps: list[float] = field(default_factory=list)
    residuals: list[float | None] = field(default_factory=list)
    eps: list[float | None] = field(default_factory=list)
    deltas: list[float | None] = field(default_factory=list)
    criterion_ok: list[bool | None] = field(default_factory=list)
    ref_prox_points: list[np.ndarray | None] = field(default_factory=list)
    stop_reason: str = ""

    def __len__(self) -> int:
        return len(self.points)

    @property
    def f_star(self) -> float | None:
        return self.problem.f_star

    def gaps(self) -> list[float | None]:
        fs = self.f_star
        return [None if fs is None else v - fs for v in self.values]

    def dists(self) -> list[float | None]:
        if self.problem.project_solution is None:
            return [None] * len(self)
        return [distance_to_solution(self.problem, x) for x in self.points]

    def running_diameter(self) -> list[float]:
        """D_k = max pairwise distance among x_0 .. x_k (monotone in k)."""
        out, d = [], 0.0
        for k, x in enumerate(self.points):
            for j in range(k):
                d = max(d, float(np.linalg.norm(x - self.points[j])))
            out.append(d)
        return out

    def entry_index(self, nu: float) -> int | None:
        """First k with f(x_k) <= f_star + nu (empirical sublevel entry)."""
        fs = self.f_star
        if fs is None:
            return None
        for k, v in enumerate(self.values):
            if v <= fs + nu:
                return k
        return None

    def k0_apriori(self, nu: float, dist0: float | None = None) -> float:
        """Worst-case sublevel entry bound dist^2(x_0,S) / (2 nu min_k c_k)."""
        if dist0 is None:
            dist0 = distance_to_solution(self.problem, self.points[0])
        cmin = min(self.steps)
        return dist0 ** 2 / (2.0 * nu * cmin)


@dataclass
class BoundCheck:
    """Outcome of replaying one inequality along a trace."""

    name: str
    indices: list[int]
    ok: list[bool]
    lhs: list[float]
    rhs: list[float]

    @property
    def all_ok(self) -> bool:
        return all(self.ok)

    @property
    def first_violation(self) -> int | None:
        for i, good in zip(self.indices, self.ok):
            if not good:
                return i
        return None


@dataclass(frozen=True)
class RateBounds:
    """Per-step contraction factors built from regularity constants.

    omega bounds the cost-gap ratio, theta the distance ratio.  For a
    rho-weakly convex problem the growth constant is beta = mu_q - rho/2.
    The distance factor from the error bound follows the firmly-nonexpansive
    chain: dist^2 shrinks by 1/(1 + c^2/mu_e^2).
    """

    mu_p: float
    mu_q: float
    mu_e: float
    rho: float = 0.0

    @property
    def beta(self) -> float:
        return self.mu_q - 0.5 * self.rho

    def omega(self, c: float) -> float:
        return 2.0 / (2.0 + self.mu_p * c)

    def theta(self, c: float) -> float:
        branches = []
        if self.beta > 0:
            branches.append(1.0 / math.sqrt(2.0 * c * self.beta + 1.0))
        if 0.0 < self.mu_e < math.inf:
            branches.append(1.0 / math.sqrt(1.0 + c * c / self.mu_e ** 2))
        if not branches:
            return math.inf
        return min(branches)


def _constants(report) -> tuple[float, float, float]:
    """Pull (mu_p, mu_q, mu_e) from a RegularityReport, mapping or metadata."""
    if isinstance(report, Mapping):
        return float(report["mu_p"]), float(report["mu_q"]), float(report["mu_e"])
    return float(report.mu_p), float(report.mu_q), float(report.mu_e)


def run_ppm(p: ProblemSpec, x0, sched: StepSchedule, max_iter: int = 500,
            inner_tol: InnerTolerance = InnerTolerance(),
            stop_gap: float = 1e-10, stop_residual: float = 1e-10) -> IterationTrace:
    """Exact proximal point method; stops on max_iter, tiny gap or tiny residual."""
    x = as_point(x0)
    sched.validate(p, max_iter)
    trace = IterationTrace(problem=p)
    trace.points.append(x)
    trace.values.append(float(p.value(x)))
    for k in range(max_iter):
        c = sched.at(k)
        result: ProxResult = prox(p, x, c, inner_tol)
        x_next = result.point
        trace.steps.append(c)
        trace.residuals.append(result.residual_norm)
        trace.eps.append(None)
        trace.deltas.append(None)
        trace.criterion_ok.append(None)
        trace.ref_prox_points.append(None)
        trace.points.append(x_next)
        trace.values.append(float(p.value(x_next)))
        outer_residual = float(np.linalg.norm(x_next - x)) / c + result.residual_norm
        x = x_next
        if p.f_star is not None and trace.values[-1] - p.f_star <= stop_gap:
            trace.stop_reason = "gap"
            break
        if outer_residual <= stop_residual:
            trace.stop_reason = "residual"
            break
    else:
        trace.stop_reason = "max_iter"
    trace.steps.append(sched.at(len(trace) - 1))
    trace.residuals.append(None)
    trace.eps.append(None)
    trace.deltas.append(None)
    trace.criterion_ok.append(None)
    trace.ref_prox_points.append(None)
    return trace


def check_sublinear_bound(trace: IterationTrace, dist0: float | None = None,
                          atol: float = 1e-9) -> BoundCheck:
    """Replay the envelope f(x_k) - f_star <= dist^2(x_0,S) / (2 sum c_t).

    Inexact inner solves widen the envelope by their certified residuals
    (the same diameter-weighted term as the best-iterate bound).
    """
    if trace.f_star is None:
        raise ValueError("f_star required for the sublinear envelope")
    if dist0 is None:
        dist0 = distance_to_solution(trace.problem, trace.points[0])
    gaps = trace.gaps()
    diam = trace.running_diameter()
    indices, ok, lhs, rhs = [], [], [], []
    csum, slack_sum = 0.0, 0.0
    for k in range(1, len(trace)):
        c_prev = trace.steps[k - 1]
        csum += c_prev
        r_prev = trace.residuals[k - 1] or 0.0
        slack_sum += c_prev * r_prev
        bound = (dist0 ** 2 + 2.0 * diam[k] * slack_sum) / (2.0 * csum) + atol
        indices.append(k)
        lhs.append(gaps[k])
        rhs.append(bound)
        ok.append(gaps[k] <= bound)
    return BoundCheck("sublinear_envelope", indices, ok, lhs, rhs)


def check_one_step(trace: IterationTrace, x_star=None, atol: float = 1e-9) -> BoundCheck:
    """Per-step improvement 2 c_k (f(x_{k+1}) - f_star) <= |x_k-x*|^2 - |x_{k+1}-x*|^2.

    Holds for any minimizer x*; inexact steps contribute slack
    2 c_k r_k ||x_{k+1} - x*|| with r_k the certificate residual.
    """
    p = trace.problem
    if x_star is None:
        if p.project_solution is None:
            raise ValueError("need a solution oracle or explicit x_star")
        x_star = as_point(p.project_solution(trace.points[0]))
    else:
        x_star = as_point(x_star)
    f_star_val = float(p.value(x_star))
    indices, ok, lhs, rhs = [], [], [], []
    for k in range(len(trace) - 1):
        c = trace.steps[k]
        r = trace.residuals[k] or 0.0
        x_k, x_n = trace.points[k], trace.points[k + 1]
        d_next = float(np.linalg.norm(x_n - x_star))
        left = 2.0 * c * (trace.values[k + 1] - f_star_val)
        right = (float(np.linalg.norm(x_k - x_star)) ** 2 - d_next ** 2
                 + 2.0 * c * r * d_next + atol)
        indices.append(k)
        lhs.append(left)
        rhs.append(right)
        ok.append(left <= right)
    return BoundCheck("one_step_improvement", indices, ok, lhs, rhs)


def check_linear_rates(trace: IterationTrace, report, nu: float,
                       atol: float = 1e-9) -> tuple[BoundCheck, BoundCheck]:
    """Cost and distance contraction checks, gated on sublevel-set entry.

    Uses omega_k = 2/(2 + mu_p c_k) for the cost gap and the two-branch
    theta_k for distances, with beta = mu_q - rho/2 on weakly convex
    problems.  Steps before the empirical entry index are skipped.
    """
    mu_p, mu_q, mu_e = _constants(report)
    bounds = RateBounds(mu_p=mu_p, mu_q=mu_q, mu_e=mu_e, rho=trace.problem.weak_convexity)
    k0 = trace.entry_index(nu)
    gaps = trace.gaps()
    dists = trace.dists()
    cost = BoundCheck("linear_cost", [], [], [], [])
    dist = BoundCheck("linear_dist", [], [], [], [])
    if k0 is None:
        return cost, dist
    for k in range(k0, len(trace) - 1):
        c = trace.steps[k]
        r = trace.residuals[k] or 0.0
        if gaps[k] is not None and gaps[k] > 1e-14:
            cost.indices.append(k)
            cost.lhs.append(gaps[k + 1])
            cost.rhs.append(bounds.omega(c) * gaps[k] + atol + c * r)
            cost.ok.append(cost.lhs[-1] <= cost.rhs[-1])
        th = bounds.theta(c)
        if dists[k] is not None and dists[k] > 1e-14 and th < math.inf:
            dist.indices.append(k)
            dist.lhs.append(dists[k + 1])
            dist.rhs.append(th * dists[k] + atol + c * r)
            dist.ok.append(dist.lhs[-1] <= dist.rhs[-1])
    return cost, dist


def reference_solution(p: ProblemSpec, effort: int = 400, c_ref: float = 1.0,
                       inner_target: float = 1e-12) -> ProblemSpec:
    """High-accuracy solve installing f_star (and, if unique, the minimizer).

    Runs the exact method with a tight inner target for up to ``effort``
    iterations.  Strong convexity certifies a unique minimizer, so the
    solution oracle becomes "distance to the reference point"; otherwise only
    f_star is installed and distances stay unavailable.
    """
    if p.weak_convexity > 0:
        c_ref = min(c_ref, 0.5 / p.weak_convexity)
    sched = StepSchedule.constant(c_ref)
    tol = InnerTolerance(target_residual=inner_target, max_inner_iterations=200_000)
    trace = run_ppm(p, np.zeros(p.dimension), sched, max_iter=effort,
                    inner_tol=tol, stop_gap=0.0, stop_residual=inner_target * 10)
    x_ref = trace.points[-1]
    f_ref = trace.values[-1]
    tail = float(np.linalg.norm(trace.points[-1] - trace.points[-2])) / c_ref \
        if len(trace) > 1 else 0.0
    project = None
    if p.strong_convexity > 0:
        project = lambda x: x_ref
    return p.with_reference(f_ref, project=project,
                            reference_point=tuple(float(v) for v in x_ref),
                            reference_residual=tail,
                            reference_iterations=len(trace) - 1)
