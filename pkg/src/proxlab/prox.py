"""Proximal mapping with residual certificates.

``prox(p, z, c)`` returns the minimizer of ``f(x) + ||x - z||^2 / (2c)``,
either in closed form or through an inner solver, together with an explicit
element of the subproblem subdifferential ``H(x) = partial f(x) + (x - z)/c``
and its norm.  The certificate norm upper-bounds dist(0, H(x)), which is what
the implementable inexactness rules of the outer loop consume; wherever the
subdifferential has box or interval structure the bound is tight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, InnerBudgetExhausted, NotAvailable, StepTooLarge
from .problem import ProblemSpec, as_point
from .zoo import KINK_BAND

# accept(candidate, residual_norm) -> bool; lets the outer loop install
# candidate-dependent acceptance (relative inexactness rules).
StopRule = Callable[[np.ndarray, float], bool]


@dataclass(frozen=True)
class InnerTolerance:
    target_residual: float = 1e-10
    max_inner_iterations: int = 10_000

    def __post_init__(self):
        if self.target_residual <= 0:
            raise ValueError("target_residual must be positive")


@dataclass(frozen=True)
class ProxResult:
    point: np.ndarray
    residual_element: np.ndarray  # explicit element of H(point)
    residual_norm: float
    inner_iterations: int
    exact: bool


def _validate_step(p: ProblemSpec, c: float) -> None:
    if c <= 0:
        raise ValueError(f"prox step must be positive, got {c}")
    if p.weak_convexity > 0 and 1.0 / c <= p.weak_convexity:
        raise StepTooLarge(
            f"1/c = {1.0 / c:g} must exceed the weak convexity modulus {p.weak_convexity:g}")


def residual_certificate(p: ProblemSpec, x, z, c: float):
    """Constructed element of H(x) = partial f(x) + (x - z)/c and its norm.

    Exact (equals dist(0, H(x))) for problems exposing interval or separable
    subdifferential structure; an upper bound otherwise.
    """
    x, z = as_point(x), as_point(z)
    if p.value(x) == math.inf:
        raise DomainError(f"value is +inf at {x}")
    center = (x - z) / c
    if p.interval_1d is not None:
        lo, hi = p.interval_1d(float(x[0]))
        v = min(max(-float(center[0]), lo), hi)
        element = np.array([v]) + center
        return element, float(abs(element[0]))
    if p.composite is not None:
        base = p.composite.grad_smooth(x) + center
        element = base + p.composite.min_norm_h(base, x)
        return element, float(np.linalg.norm(element))
    if p.svm is not None:
        element = _svm_certificate(p, x, center)
        return element, float(np.linalg.norm(element))
    if p.min_norm_subgradient is not None:
        element = np.asarray(p.min_norm_subgradient(x), dtype=float) + center
        return element, float(np.linalg.norm(element))
    element = np.asarray(p.subgradient(x), dtype=float) + center
    return element, float(np.linalg.norm(element))


def _svm_certificate(p: ProblemSpec, x: np.ndarray, center: np.ndarray) -> np.ndarray:
    """Greedy hinge-subgradient selection minimizing the certificate norm."""
    parts = p.svm
    n = parts.labels.size
    ba = parts.labels[:, None] * parts.features
    margins = 1.0 - ba @ x
    base = -ba[margins > KINK_BAND].sum(axis=0) / n + parts.reg * x + center
    kinks = np.flatnonzero(np.abs(margins) <= KINK_BAND)
    r = base.copy()
    if kinks.size:
        t = np.zeros(kinks.size)
        for _ in range(4):
            for j, i in enumerate(kinks):
                row = ba[i] / n
                sq = float(np.dot(row, row))
                if sq == 0.0:
                    continue
                r_wo = r + t[j] * row
                t_new = min(max(float(np.dot(r_wo, row)) / sq, 0.0), 1.0)
                r = r_wo - t_new * row
                t[j] = t_new
    return r


def prox(p: ProblemSpec, z, c: float, tol: InnerTolerance = InnerTolerance(),
         stop_rule: StopRule | None = None) -> ProxResult:
    """Compute prox_{c,f}(z), exactly or to a certified residual target.

    With a closed form the result is exact (zero is then an element of H at
    the minimizer).  Otherwise the structure-matched inner solver runs until
    ``stop_rule`` accepts (default: residual_norm <= tol.target_residual) and
    the certified point is returned.
    """
    z = as_point(z)
    _validate_step(p, c)
    if p.prox_closed_form is not None:
        point = as_point(p.prox_closed_form(z, c))
        return ProxResult(point, np.zeros_like(point), 0.0, 0, True)
    if stop_rule is None:
        stop_rule = lambda w, rn: rn <= tol.target_residual
    if p.composite is not None:
        return _solve_composite(p, z, c, tol, stop_rule)
    if p.svm is not None:
        return _solve_svm_dual(p, z, c, tol, stop_rule)
    if p.dimension == 1 and p.interval_1d is not None:
        return _solve_1d(p, z, c, tol, stop_rule)
    raise NotAvailable(f"no inner solver for problem {p.name!r}")


def inner_solve_composite(p: ProblemSpec, z, c: float, tol: InnerTolerance,
                          stop_rule: StopRule | None = None) -> ProxResult:
    """Accelerated proximal-gradient inner solver (public alias)."""
    if p.composite is None:
        raise NotAvailable("problem has no composite structure")
    z = as_point(z)
    _validate_step(p, c)
    if stop_rule is None:
        stop_rule = lambda w, rn: rn <= tol.target_residual
    return _solve_composite(p, z, c, tol, stop_rule)


def inner_solve_svm_dual(p: ProblemSpec, z, c: float, tol: InnerTolerance,
                         stop_rule: StopRule | None = None) -> ProxResult:
    """Dual coordinate-ascent inner solver for hinge-loss problems (public alias)."""
    if p.svm is None:
        raise NotAvailable("problem has no SVM structure")
    z = as_point(z)
    _validate_step(p, c)
    if stop_rule is None:
        stop_rule = lambda w, rn: rn <= tol.target_residual
    return _solve_svm_dual(p, z, c, tol, stop_rule)


def _solve_composite(p: ProblemSpec, z, c, tol, stop_rule) -> ProxResult:
    """FISTA on F(x) = g(x) + h(x) + ||x - z||^2/(2c), warm-started at z."""
    parts = p.composite
    step = 1.0 / (parts.lipschitz_smooth + 1.0 / c)

    def grad_total(x):
        return parts.grad_smooth(x) + (x - z) / c

    def certified(x):
        base = grad_total(x)
        element = base + parts.min_norm_h(base, x)
        return element, float(np.linalg.norm(element))

    x = z.copy()
    element, rn = certified(x)
    if stop_rule(x, rn):
        return ProxResult(x, element, rn, 0, False)
    y = x.copy()
    t_mom = 1.0
    best = (x, element, rn)
    for it in range(1, tol.max_inner_iterations + 1):
        w = parts.prox_h(y - step * grad_total(y), step)
        element, rn = certified(w)
        if rn < best[2]:
            best = (w, element, rn)
        if stop_rule(w, rn):
            return ProxResult(w, element, rn, it, False)
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_mom * t_mom))
        y = w + ((t_mom - 1.0) / t_next) * (w - x)
        x, t_mom = w, t_next
    raise InnerBudgetExhausted(
        f"composite inner solver: residual {best[2]:.3e} after {tol.max_inner_iterations} iterations",
        best=ProxResult(best[0], best[1], best[2], tol.max_inner_iterations, False))


def _solve_svm_dual(p: ProblemSpec, z, c, tol, stop_rule) -> ProxResult:
    """Coordinate ascent on the box-constrained dual of the hinge subproblem.

    The subproblem min (1/n) sum max(0, 1 - b_i a_i^T x) + (reg/2)||x||^2
    + ||x-z||^2/(2c) is sigma-strongly convex with sigma = reg + 1/c; each
    dual variable alpha_i lives in [0, 1/n] and the primal is recovered as
    x = w0 + (1/sigma) sum alpha_i b_i a_i with w0 = z/(sigma c).
    """
    parts = p.svm
    n = parts.labels.size
    ba = parts.labels[:, None] * parts.features
    q = np.einsum("ij,ij->i", ba, ba)
    sigma = parts.reg + 1.0 / c
    w0 = z / (sigma * c)

    # Warm start: hinge activity pattern at the prox center.
    alpha = np.where(1.0 - ba @ z > 0.0, 1.0 / n, 0.0)
    alpha[q == 0.0] = 1.0 / n  # zero rows contribute nothing; keep t_i valid
    x = w0 + (ba.T @ alpha) / sigma

    def certified(x_cur, alpha_cur):
        margins = 1.0 - ba @ x_cur
        t = np.where(margins > KINK_BAND, 1.0,
                     np.where(margins < -KINK_BAND, 0.0,
                              np.clip(n * alpha_cur, 0.0, 1.0)))
        element = -(ba * t[:, None]).sum(axis=0) / n + parts.reg * x_cur + (x_cur - z) / c
        return element, float(np.linalg.norm(element))

    element, rn = certified(x, alpha)
    if stop_rule(x, rn):
        return ProxResult(x, element, rn, 0, False)
    best = (x.copy(), element, rn)
    for sweep in range(1, tol.max_inner_iterations + 1):
        for i in range(n):
            if q[i] == 0.0:
                continue
            margin = 1.0 - float(np.dot(ba[i], x))
            new = min(max(alpha[i] + sigma * margin / q[i], 0.0), 1.0 / n)
            if new != alpha[i]:
                x = x + ((new - alpha[i]) / sigma) * ba[i]
                alpha[i] = new
        x = w0 + (ba.T @ alpha) / sigma  # refresh against incremental drift
        element, rn = certified(x, alpha)
        if rn < best[2]:
            best = (x.copy(), element, rn)
        if stop_rule(x, rn):
            return ProxResult(x, element, rn, sweep, False)
    raise InnerBudgetExhausted(
        f"svm dual inner solver: residual {best[2]:.3e} after {tol.max_inner_iterations} sweeps",
        best=ProxResult(best[0], best[1], best[2], tol.max_inner_iterations, False))


def _solve_1d(p: ProblemSpec, z, c, tol, stop_rule) -> ProxResult:
    """Monotone-subdifferential bisection for one-dimensional subproblems.

    The subproblem derivative interval at x is [lo, hi] + (x - z)/c; the
    minimizer is the unique point whose interval contains zero (1/c > rho
    makes the subproblem strongly convex).  Breakpoints are tested directly
    because the pointwise residual jumps across a kink minimizer.
    """
    z0 = float(z[0])

    def f_interval(x):
        lo, hi = p.interval_1d(x)
        shift = (x - z0) / c
        return lo + shift, hi + shift

    def certified(x):
        lo, hi = p.interval_1d(x)
        shift = (x - z0) / c
        v = min(max(-shift, lo), hi)
        element = np.array([v + shift])
        return element, abs(v + shift)

    def result(x, iters):
        element, rn = certified(x)
        return ProxResult(np.array([x]), element, rn, iters, False)

    element, rn = certified(z0)
    if stop_rule(np.array([z0]), rn):
        return ProxResult(np.array([z0]), element, rn, 0, False)
    for bp in p.breakpoints_1d:
        lo, hi = f_interval(bp)
        if lo <= 0.0 <= hi:
            return result(bp, 0)

    # Bracket the minimizer: move in the descent direction from z.
    lo_z, hi_z = f_interval(z0)
    span = max(1.0, abs(z0))
    if lo_z > 0.0:  # minimizer to the left
        b, a = z0, z0 - span
        for it in range(tol.max_inner_iterations):
            if f_interval(a)[1] < 0.0:
                break
            b, a = a, a - span * 2.0 ** (it + 1)
        else:
            raise InnerBudgetExhausted("1d bracket expansion failed", best=result(z0, 0))
    else:  # hi_z < 0, minimizer to the right
        a, b = z0, z0 + span
        for it in range(tol.max_inner_iterations):
            if f_interval(b)[0] > 0.0:
                break
            a, b = b, b + span * 2.0 ** (it + 1)
        else:
            raise InnerBudgetExhausted("1d bracket expansion failed", best=result(z0, 0))

    best_x, best_rn = z0, rn
    for it in range(1, tol.max_inner_iterations + 1):
        mid = 0.5 * (a + b)
        lo_m, hi_m = f_interval(mid)
        if lo_m <= 0.0 <= hi_m:
            return result(mid, it)
        if lo_m > 0.0:
            b = mid
        else:
            a = mid
        _, rn = certified(mid)
        if rn < best_rn:
            best_x, best_rn = mid, rn
        if stop_rule(np.array([mid]), rn):
            return result(mid, it)
        if b - a <= 1e-17 * max(1.0, abs(mid)):
            # Width at float resolution: the minimizer is a kink between grid
            # neighbours; report the better endpoint.
            return result(best_x, it)
    raise InnerBudgetExhausted(
        f"1d bisection: residual {best_rn:.3e} after {tol.max_inner_iterations} iterations",
        best=result(best_x, tol.max_inner_iterations))
