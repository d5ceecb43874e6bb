"""Problem abstraction consumed by every solver and estimator.

A problem is a bundle of oracles: value, one subdifferential element,
optionally the exact min-norm element, optionally the nearest minimizer,
optionally a closed-form prox.  Values are extended reals: the value oracle
returns ``math.inf`` outside the effective domain (IEEE infinity is the
tagged "infinite" value; finite sentinels are never used).

All oracles are pure and problems are immutable after construction, so they
are safe to share across threads and concurrent runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping

import numpy as np

from .errors import DomainError, NotAvailable

Vector = np.ndarray

DEFAULT_TOL = 1e-9


def as_point(x) -> Vector:
    """Coerce scalars / lists to a float64 vector and reject non-finite entries."""
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(v)):
        raise ValueError("point has non-finite coordinates")
    return v


@dataclass(frozen=True)
class CompositeParts:
    """Smooth-plus-separable structure f = g + h used by the inner APG solver.

    ``grad_smooth`` and ``lipschitz_smooth`` describe the differentiable part g
    (any quadratic regularizer folded in); ``prox_h(v, t)`` solves
    ``argmin_x h(x) + ||x - v||^2 / (2 t)`` in closed form, and
    ``min_norm_h(base)`` returns the element of ``partial h`` at a point that
    minimizes ``||base + s||`` (coordinate-wise clip for box subdifferentials).
    """

    value_smooth: Callable[[Vector], float]
    grad_smooth: Callable[[Vector], Vector]
    lipschitz_smooth: float
    value_h: Callable[[Vector], float]
    prox_h: Callable[[Vector, float], Vector]
    min_norm_h: Callable[[Vector, Vector], Vector]


@dataclass(frozen=True)
class SvmParts:
    """Hinge-loss structure (1/n) sum max(0, 1 - b_i a_i^T x) + (reg/2)||x||^2."""

    features: np.ndarray  # (n, d)
    labels: np.ndarray  # (n,) in {-1, +1}
    reg: float


@dataclass(frozen=True)
class ProblemSpec:
    """Oracle bundle describing one optimization problem.

    ``weak_convexity`` is the modulus rho (0 for convex problems);
    ``strong_convexity`` is the modulus m of an explicit (m/2)||x||^2 term,
    recorded so reference solves know when the minimizer is unique.
    ``min_norm_exact`` says whether ``min_norm_subgradient`` returns the true
    minimum-norm element or only a constructed upper bound.
    """

    dimension: int
    value: Callable[[Vector], float]
    subgradient: Callable[[Vector], Vector]
    min_norm_subgradient: Callable[[Vector], Vector] | None = None
    min_norm_exact: bool = True
    weak_convexity: float = 0.0
    strong_convexity: float = 0.0
    smoothness: float | None = None
    f_star: float | None = None
    project_solution: Callable[[Vector], Vector] | None = None
    prox_closed_form: Callable[[Vector, float], Vector] | None = None
    # One-sided derivative limits (lo, hi) for 1-d problems; equal when smooth.
    interval_1d: Callable[[float], tuple[float, float]] | None = None
    breakpoints_1d: tuple[float, ...] = ()
    composite: CompositeParts | None = None
    svm: SvmParts | None = None
    metadata: Mapping[str, Any] = field(default_factory=dict)
    name: str = ""

    def value_at(self, x) -> float:
        return float(self.value(as_point(x)))

    def in_domain(self, x) -> bool:
        return self.value_at(x) < math.inf

    def with_reference(self, f_star: float, project=None, **meta) -> "ProblemSpec":
        """Copy of this problem with f_star (and optionally a solution oracle) installed."""
        md = dict(self.metadata)
        md.update(meta)
        return replace(self, f_star=f_star,
                       project_solution=project if project is not None else self.project_solution,
                       metadata=md)


@dataclass(frozen=True)
class SubgradientInfo:
    element: Vector
    norm: float
    exact: bool  # True when norm equals dist(0, subdifferential at x)


def min_norm_subgradient(p: ProblemSpec, x, require_exact: bool = False) -> SubgradientInfo:
    """Minimum-norm subdifferential element at x, or the best constructed one.

    The norm of the exact element equals the slope dist(0, subdifferential).
    Raises DomainError outside the domain and NotAvailable when exactness is
    demanded but only a generic element exists.
    """
    x = as_point(x)
    if p.value(x) == math.inf:
        raise DomainError(f"value is +inf at {x}")
    if p.min_norm_subgradient is not None:
        g = np.asarray(p.min_norm_subgradient(x), dtype=float)
        exact = p.min_norm_exact
        if require_exact and not exact:
            raise NotAvailable("min-norm oracle is a constructed upper bound only")
        return SubgradientInfo(g, float(np.linalg.norm(g)), exact)
    if require_exact:
        raise NotAvailable("no closed-form min-norm subgradient oracle")
    g = np.asarray(p.subgradient(x), dtype=float)
    return SubgradientInfo(g, float(np.linalg.norm(g)), False)


def distance_to_solution(p: ProblemSpec, x) -> float:
    """dist(x, S) via the solution oracle; zero iff x is a minimizer (to 1e-12)."""
    x = as_point(x)
    if p.project_solution is None:
        raise NotAvailable("no solution oracle on this problem")
    return float(np.linalg.norm(x - as_point(p.project_solution(x))))


class Piecewise1D:
    """A 1-d function defined by pieces with explicit breakpoints.

    Each piece is (value, derivative) valid on the open interval between
    neighbouring breakpoints; at a breakpoint the subdifferential is the
    interval hull of the one-sided derivative limits.  Weak convexity forces
    left limit <= right limit at every breakpoint, so the hull is [lo, hi].
    """

    def __init__(self, breakpoints, pieces):
        # pieces[i] applies on (breakpoints[i-1], breakpoints[i]); one more
        # piece than breakpoints, ordered left to right.
        if len(pieces) != len(breakpoints) + 1:
            raise ValueError("need exactly one more piece than breakpoints")
        self.breakpoints = [float(b) for b in breakpoints]
        self.pieces = pieces

    def _index(self, x: float) -> int:
        for i, b in enumerate(self.breakpoints):
            if x < b:
                return i
        return len(self.breakpoints)

    def _at_breakpoint(self, x: float) -> int | None:
        for i, b in enumerate(self.breakpoints):
            if x == b:
                return i
        return None

    def value(self, x: float) -> float:
        i = self._at_breakpoint(x)
        if i is not None:
            return float(self.pieces[i + 1][0](x))  # pieces agree by continuity
        return float(self.pieces[self._index(x)][0](x))

    def interval(self, x: float) -> tuple[float, float]:
        i = self._at_breakpoint(x)
        if i is None:
            d = float(self.pieces[self._index(x)][1](x))
            return d, d
        lo = float(self.pieces[i][1](x))
        hi = float(self.pieces[i + 1][1](x))
        if lo > hi:
            lo, hi = hi, lo
        return lo, hi

    def min_norm(self, x: float) -> float:
        lo, hi = self.interval(x)
        return 0.0 if lo <= 0.0 <= hi else (lo if abs(lo) < abs(hi) else hi)


def problem_from_1d(pw: Piecewise1D, **kwargs) -> ProblemSpec:
    """Wrap a Piecewise1D into a ProblemSpec with interval-aware oracles."""

    def value(x):
        return pw.value(float(np.asarray(x).reshape(-1)[0]))

    def subgrad(x):
        return np.array([pw.min_norm(float(np.asarray(x).reshape(-1)[0]))])

    def min_norm(x):
        return np.array([pw.min_norm(float(np.asarray(x).reshape(-1)[0]))])

    def interval(x):
        return pw.interval(float(x))

    return ProblemSpec(dimension=1, value=value, subgradient=subgrad,
                       min_norm_subgradient=min_norm, interval_1d=interval,
                       breakpoints_1d=tuple(pw.breakpoints), **kwargs)
