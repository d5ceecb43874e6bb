"""Gradient descent with contraction-factor verification.

With step t = mu / L^2 the iterates contract by omega_1 = sqrt(1 - mu^2/L^2)
in distance and the cost gaps by omega_2 = (L^3 - 2 mu L beta + mu^2 beta)/L^3,
where mu is the secant-growth constant and beta the gradient-dominance
constant of the smooth objective.  Custom steps in (0, 2/L) get the
step-dependent factors sqrt(1 - 2 t mu + t^2 L^2) and 1 + (-2t + L t^2) beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotSmooth
from .ppm import BoundCheck, IterationTrace
from .problem import ProblemSpec, as_point

_REL = 1e-12


@dataclass(frozen=True)
class GDParams:
    """Smoothness / growth constants and the step rule.

    ``step=None`` selects t = mu / L^2.  Feasibility of the constants is
    validated: mu <= L always, and beta <= L^3 / (2 mu L - mu^2), otherwise
    the cost factor would be negative while gaps are nonnegative.
    """

    lipschitz: float
    mu: float
    beta: float
    step: float | None = None

    def __post_init__(self):
        if min(self.lipschitz, self.mu, self.beta) <= 0:
            raise ValueError("constants must be positive")
        if self.mu > self.lipschitz * (1.0 + _REL):
            raise ValueError(f"mu={self.mu:g} cannot exceed L={self.lipschitz:g}")
        beta_cap = self.lipschitz ** 3 / (2 * self.mu * self.lipschitz - self.mu ** 2)
        if self.beta > beta_cap * (1.0 + _REL):
            raise ValueError(f"beta={self.beta:g} exceeds its cap {beta_cap:g}")
        if self.step is not None and self.step <= 0:
            raise ValueError("step must be positive")

    @property
    def step_size(self) -> float:
        return self.step if self.step is not None else self.mu / self.lipschitz ** 2

    @property
    def step_rule_valid(self) -> bool:
        return 0.0 < self.step_size < 2.0 / self.lipschitz

    @property
    def omega_dist(self) -> float:
        t = self.step_size
        return math.sqrt(max(0.0, 1.0 - 2.0 * t * self.mu + t * t * self.lipschitz ** 2))

    @property
    def omega_cost(self) -> float:
        t = self.step_size
        return 1.0 + (-2.0 * t + self.lipschitz * t * t) * self.beta


def run_gd(p: ProblemSpec, x0, params: GDParams, iters: int = 50) -> IterationTrace:
    """x_{k+1} = x_k - t grad f(x_k); the step column of the trace carries t."""
    if p.smoothness is None:
        raise NotSmooth(f"problem {p.name!r} has no smoothness constant")
    t = params.step_size
    x = as_point(x0)
    trace = IterationTrace(problem=p)
    trace.points.append(x)
    trace.values.append(float(p.value(x)))
    for _ in range(iters):
        grad = np.asarray(p.subgradient(x), dtype=float)
        x = x - t * grad
        trace.steps.append(t)
        trace.residuals.append(None)
        trace.eps.append(None)
        trace.deltas.append(None)
        trace.criterion_ok.append(None)
        trace.ref_prox_points.append(None)
        trace.points.append(x)
        trace.values.append(float(p.value(x)))
    trace.steps.append(t)
    trace.residuals.append(None)
    trace.eps.append(None)
    trace.deltas.append(None)
    trace.criterion_ok.append(None)
    trace.ref_prox_points.append(None)
    trace.stop_reason = "iters"
    return trace


@dataclass
class GDRateCheck:
    dist: BoundCheck
    cost: BoundCheck
    step_rule_valid: bool  # False flags a precondition breach, not a bound violation

    @property
    def all_ok(self) -> bool:
        return self.dist.all_ok and self.cost.all_ok


def verify_gd_rates(trace: IterationTrace, params: GDParams,
                    atol: float = 1e-12) -> GDRateCheck:
    """Per-step distance and cost-gap contraction checks.

    Steps whose denominator is below 1e-14 are skipped (converged); a step
    outside (0, 2/L) marks the result as a precondition breach.
    """
    gaps = trace.gaps()
    dists = trace.dists()
    w1, w2 = params.omega_dist, params.omega_cost
    dist = BoundCheck("gd_dist", [], [], [], [])
    cost = BoundCheck("gd_cost", [], [], [], [])
    for k in range(len(trace) - 1):
        if dists[k] is not None and dists[k] > 1e-14:
            dist.indices.append(k)
            dist.lhs.append(dists[k + 1])
            dist.rhs.append(w1 * dists[k] + atol)
            dist.ok.append(dist.lhs[-1] <= dist.rhs[-1])
        if gaps[k] is not None and gaps[k] > 1e-14:
            cost.indices.append(k)
            cost.lhs.append(gaps[k + 1])
            cost.rhs.append(w2 * gaps[k] + atol)
            cost.ok.append(cost.lhs[-1] <= cost.rhs[-1])
    return GDRateCheck(dist=dist, cost=cost, step_rule_valid=params.step_rule_valid)


def check_gd_descent(trace: IterationTrace, params: GDParams,
                     atol: float = 1e-12) -> BoundCheck:
    """Per-step smooth descent: f(x_{k+1}) - f(x_k) <= ((-2t + L t^2)/2) |grad|^2."""
    p = trace.problem
    t = params.step_size
    coef = 0.5 * (-2.0 * t + params.lipschitz * t * t)
    out = BoundCheck("gd_descent", [], [], [], [])
    for k in range(len(trace) - 1):
        grad = np.asarray(p.subgradient(trace.points[k]), dtype=float)
        out.indices.append(k)
        out.lhs.append(trace.values[k + 1] - trace.values[k])
        out.rhs.append(coef * float(np.dot(grad, grad)) + atol)
        out.ok.append(out.lhs[-1] <= out.rhs[-1])
    return out
