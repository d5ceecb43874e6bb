"""Benchmark functions and machine-learning problems with known constants.

Every benchmark ships with its optimal value, a solution oracle and the
regularity constants that hold for it, attached as metadata so tests can
assert against them.  ML problems (hinge-loss SVM, l1 least squares,
l1+l2 least squares) are assembled from data; their reference values get
installed later by a high-accuracy solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadShape, ParseError
from .problem import (CompositeParts, Piecewise1D, ProblemSpec, SvmParts,
                      problem_from_1d)

BENCHMARKS = ("quad1d", "quad_quartic", "sine_quad", "wc_piecewise", "aniso_quad")
CONVEX_BENCHMARKS = ("quad1d", "quad_quartic", "aniso_quad")

# Margin band inside which a hinge term counts as sitting at its kink.
KINK_BAND = 1e-9


def make_benchmark(name: str, aniso_l: float = 9.0) -> ProblemSpec:
    """Construct a benchmark problem by name (see BENCHMARKS)."""
    if name == "quad1d":
        return _quad1d()
    if name == "quad_quartic":
        return _quad_quartic()
    if name == "sine_quad":
        return _sine_quad()
    if name == "wc_piecewise":
        return _wc_piecewise()
    if name == "aniso_quad":
        return _aniso_quad(aniso_l)
    raise ValueError(f"unknown benchmark {name!r}")


def _quad1d() -> ProblemSpec:
    pw = Piecewise1D([], [(lambda x: x * x, lambda x: 2.0 * x)])
    return problem_from_1d(
        pw,
        smoothness=2.0,
        strong_convexity=2.0,
        f_star=0.0,
        project_solution=lambda x: np.zeros(1),
        prox_closed_form=lambda z, c: z / (1.0 + 2.0 * c),
        name="quad1d",
        metadata={"mu_s": 1.0, "mu_r": 2.0, "mu_e": 0.5, "mu_p": 4.0, "mu_q": 1.0,
                  "gd_mu": 2.0, "gd_beta": 2.0, "bracket": (-1.0, 1.0), "nu": 1.0},
    )


def _quad_quartic() -> ProblemSpec:
    quart = (lambda x: 0.5 * x ** 4 + 0.5, lambda x: 2.0 * x ** 3)
    quad = (lambda x: x * x, lambda x: 2.0 * x)
    pw = Piecewise1D([-1.0, 1.0], [quart, quad, quart])
    return problem_from_1d(
        pw,
        f_star=0.0,
        project_solution=lambda x: np.zeros(1),
        name="quad_quartic",
        metadata={"mu_s": 1.0, "mu_r": 2.0, "mu_e": 0.5, "mu_p": 4.0, "mu_q": 1.0,
                  "bracket": (-1.8, 1.8), "nu": math.inf},
    )


def _sine_quad() -> ProblemSpec:
    # f'' = 2 + 12 cos(2x) ranges over [-10, 14]: 10-weakly convex, 14-smooth.
    pw = Piecewise1D([], [(lambda x: x * x + 6.0 * math.sin(x) ** 2,
                           lambda x: 2.0 * x + 6.0 * math.sin(2.0 * x))])
    return problem_from_1d(
        pw,
        weak_convexity=10.0,
        smoothness=14.0,
        f_star=0.0,
        project_solution=lambda x: np.zeros(1),
        name="sine_quad",
        metadata={"mu_q": 1.0, "pl_holds_globally": False, "eb_holds_globally": False,
                  "bracket": (-10.0, 10.0), "nu": math.inf},
    )


def _wc_piecewise() -> ProblemSpec:
    outer = (lambda x: 3.0 * (x + 1.0) ** 2, lambda x: 6.0 * (x + 1.0))
    cap = (lambda x: -x * x + 1.0, lambda x: -2.0 * x)
    pw = Piecewise1D([-1.0, -0.5], [outer, cap, outer])
    return problem_from_1d(
        pw,
        weak_convexity=2.0,
        f_star=0.0,
        project_solution=lambda x: -np.ones(1),
        name="wc_piecewise",
        metadata={"mu_q": 3.0, "mu_e": 0.5, "mu_p": 4.0 / 3.0, "mu_r": 2.0,
                  "bracket": (-2.0, 0.5), "nu": 1.0},
    )


def _aniso_quad(l_param: float) -> ProblemSpec:
    if l_param < 1.0:
        raise ValueError("anisotropy parameter must be >= 1")
    diag = np.array([1.0, l_param])

    return ProblemSpec(
        dimension=2,
        value=lambda x: 0.5 * float(np.dot(diag, np.asarray(x) ** 2)),
        subgradient=lambda x: diag * np.asarray(x, dtype=float),
        min_norm_subgradient=lambda x: diag * np.asarray(x, dtype=float),
        smoothness=float(l_param),
        strong_convexity=1.0,
        f_star=0.0,
        project_solution=lambda x: np.zeros(2),
        prox_closed_form=lambda z, c: np.asarray(z) / (1.0 + c * diag),
        name=f"aniso_quad({l_param:g})",
        metadata={"gd_mu": 1.0, "gd_beta": 1.0, "mu_q": 0.5, "mu_p": 2.0, "mu_e": 1.0,
                  "mu_r": 1.0, "mu_s": 0.5, "bracket": (-1.0, 1.0), "nu": math.inf},
    )


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (n, d)
    labels: np.ndarray  # (n,), entries in {-1, +1}
    source: str = "unknown"

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=float)
        labs = np.asarray(self.labels, dtype=float)
        if feats.ndim != 2 or labs.shape != (feats.shape[0],):
            raise BadShape(f"features {feats.shape} vs labels {labs.shape}")
        if np.isnan(feats).any() or np.isnan(labs).any():
            raise BadShape("NaN entries in dataset")
        if not np.all(np.isin(labs, (-1.0, 1.0))):
            raise BadShape("labels must be -1 or +1")
        feats.setflags(write=False)
        labs.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labs)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


def make_blob_dataset(n: int, d: int, seed: int, separation: float = 2.0) -> Dataset:
    """Two Gaussian blobs at +/- separation/2 along the all-ones direction."""
    rng = np.random.default_rng(seed)
    center = np.full(d, separation / 2.0 / math.sqrt(d))
    n_pos = n // 2
    pos = center + rng.standard_normal((n_pos, d))
    neg = -center + rng.standard_normal((n - n_pos, d))
    feats = np.vstack([pos, neg])
    labels = np.concatenate([np.ones(n_pos), -np.ones(n - n_pos)])
    return Dataset(feats, labels, source=f"synthetic(seed={seed})")


def generate_lasso_data(n: int, m: int, s: int, seed: int):
    """Random sensing matrix and s-sparse-complement target with exact y = A xhat.

    Entries of A and the nonzero entries of xhat are i.i.d. standard normal
    from the seeded generator; exactly s entries of xhat are zero.
    """
    if s >= m:
        raise BadShape(f"need s < m, got s={s}, m={m}")
    rng = np.random.default_rng(seed)
    a_mat = rng.standard_normal((n, m))
    xhat = rng.standard_normal(m)
    zero_idx = rng.choice(m, size=s, replace=False)
    xhat[zero_idx] = 0.0
    y = a_mat @ xhat
    return a_mat, y, xhat


# ---------------------------------------------------------------------------
# ML problems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MLProblemParams:
    kind: str  # "svm" | "lasso" | "elastic_net"
    svm_reg: float = 1.0  # quadratic weight in the SVM objective
    lam: float = 10.0  # l1 weight in lasso / elastic net
    en_reg: float = 1.0  # quadratic weight in elastic net

    def __post_init__(self):
        if self.kind not in ("svm", "lasso", "elastic_net"):
            raise ValueError(f"unknown problem kind {self.kind!r}")
        if min(self.svm_reg, self.lam, self.en_reg) <= 0:
            raise ValueError("regularization weights must be positive")

    @property
    def strongly_convex(self) -> bool:
        return self.kind in ("svm", "elastic_net")


def largest_sq_singular_value(a_mat: np.ndarray, rel_tol: float = 1e-10,
                              max_iter: int = 10_000) -> float:
    """Power iteration estimate of sigma_max(A)^2, inflated for step-size safety."""
    gram = a_mat.T @ a_mat
    v = np.ones(gram.shape[0]) / math.sqrt(gram.shape[0])
    lam = 0.0
    for _ in range(max_iter):
        w = gram @ v
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        v_new = w / norm
        if abs(norm - lam) <= rel_tol * max(norm, 1.0):
            lam = norm
            break
        lam, v = norm, v_new
    return lam * (1.0 + 1e-6)


def _soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _l1_min_norm(base: np.ndarray, x: np.ndarray, lam: float) -> np.ndarray:
    """Element of lam*partial||.||_1 at x minimizing ||base + s|| (box clip)."""
    s = lam * np.sign(x)
    free = x == 0.0
    s[free] = np.clip(-base[free], -lam, lam)
    return s


def make_ml_problem(kind: str, data, params: MLProblemParams) -> ProblemSpec:
    """Assemble a ProblemSpec from data and parameters.

    ``data`` is a Dataset for kind "svm", or an (A, y) pair / (A, y, xhat)
    triple for the regression kinds.  All three problems are convex; the
    reference value is installed later by a high-accuracy solve.
    """
    if params.kind != kind:
        raise BadShape(f"params.kind={params.kind!r} does not match {kind!r}")
    if kind == "svm":
        if not isinstance(data, Dataset):
            raise BadShape("svm expects a Dataset")
        return _svm_problem(data, params.svm_reg)
    if kind in ("lasso", "elastic_net"):
        a_mat = np.asarray(data[0], dtype=float)
        y = np.asarray(data[1], dtype=float)
        if a_mat.ndim != 2 or y.shape != (a_mat.shape[0],):
            raise BadShape(f"A {a_mat.shape} vs y {y.shape}")
        en_reg = params.en_reg if kind == "elastic_net" else 0.0
        return _least_squares_l1_problem(a_mat, y, params.lam, en_reg, kind)
    raise ValueError(f"unknown problem kind {kind!r}")


def _svm_problem(data: Dataset, reg: float) -> ProblemSpec:
    feats, labels, n = data.features, data.labels, data.n_samples
    ba = labels[:, None] * feats  # row i is b_i a_i

    def value(x):
        margins = 1.0 - ba @ x
        return float(np.mean(np.maximum(margins, 0.0)) + 0.5 * reg * np.dot(x, x))

    def subgradient(x):
        x = np.asarray(x, dtype=float)
        active = (1.0 - ba @ x) > 0.0
        return -ba[active].sum(axis=0) / n + reg * x

    def min_norm(x):
        # Constructed upper bound: greedy choice over hinge terms at kinks.
        x = np.asarray(x, dtype=float)
        margins = 1.0 - ba @ x
        base = -ba[margins > KINK_BAND].sum(axis=0) / n + reg * x
        kinks = np.flatnonzero(np.abs(margins) <= KINK_BAND)
        if kinks.size == 0:
            return base
        t = np.zeros(kinks.size)
        r = base.copy()  # maintains r = base - sum_j t_j * ba_j / n
        for _ in range(4):
            for j, i in enumerate(kinks):
                row = ba[i] / n
                r_wo = r + t[j] * row
                sq = float(np.dot(row, row))
                if sq == 0.0:
                    continue
                t_new = min(max(float(np.dot(r_wo, row)) / sq, 0.0), 1.0)
                r = r_wo - t_new * row
                t[j] = t_new
        return r

    return ProblemSpec(
        dimension=data.n_features,
        value=value,
        subgradient=subgradient,
        min_norm_subgradient=min_norm,
        min_norm_exact=False,
        strong_convexity=reg,
        svm=SvmParts(features=feats, labels=labels, reg=reg),
        name=f"svm(n={n},d={data.n_features},reg={reg:g})",
        metadata={"source": data.source},
    )


def _least_squares_l1_problem(a_mat, y, lam, en_reg, kind) -> ProblemSpec:
    lipschitz = largest_sq_singular_value(a_mat) + en_reg

    def value_smooth(x):
        r = a_mat @ x - y
        return 0.5 * float(np.dot(r, r)) + 0.5 * en_reg * float(np.dot(x, x))

    def grad_smooth(x):
        return a_mat.T @ (a_mat @ x - y) + en_reg * np.asarray(x, dtype=float)

    def value(x):
        x = np.asarray(x, dtype=float)
        return value_smooth(x) + lam * float(np.abs(x).sum())

    def subgradient(x):
        x = np.asarray(x, dtype=float)
        return grad_smooth(x) + lam * np.sign(x)

    def min_norm(x):
        x = np.asarray(x, dtype=float)
        base = grad_smooth(x)
        return base + _l1_min_norm(base, x, lam)

    parts = CompositeParts(
        value_smooth=value_smooth,
        grad_smooth=grad_smooth,
        lipschitz_smooth=lipschitz,
        value_h=lambda x: lam * float(np.abs(x).sum()),
        prox_h=lambda v, t: _soft_threshold(v, t * lam),
        min_norm_h=lambda base, x: _l1_min_norm(base, x, lam),
    )
    return ProblemSpec(
        dimension=a_mat.shape[1],
        value=value,
        subgradient=subgradient,
        min_norm_subgradient=min_norm,
        strong_convexity=en_reg,
        composite=parts,
        name=f"{kind}(n={a_mat.shape[0]},m={a_mat.shape[1]},lam={lam:g})",
    )


# ---------------------------------------------------------------------------
# LIBSVM text format
# ---------------------------------------------------------------------------

def load_libsvm(path) -> Dataset:
    """Read a LIBSVM sparse text file into a dense Dataset.

    Lines look like ``label idx:val idx:val ...`` with 1-based indices;
    missing indices are zero.  Raw labels must be -1, 0 or +1; 0 maps to -1
    (the {0,1} convention), anything else raises ParseError with its line.
    """
    rows: list[dict[int, float]] = []
    labels: list[float] = []
    max_idx = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                raw = float(parts[0])
            except ValueError:
                raise ParseError(f"bad label {parts[0]!r}", lineno) from None
            if raw not in (-1.0, 0.0, 1.0):
                raise ParseError(f"label {parts[0]!r} not coercible to -1/+1", lineno)
            labels.append(1.0 if raw > 0 else -1.0)
            entries: dict[int, float] = {}
            for tok in parts[1:]:
                idx_s, _, val_s = tok.partition(":")
                try:
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError:
                    raise ParseError(f"bad feature token {tok!r}", lineno) from None
                if idx < 1:
                    raise ParseError(f"feature index {idx} must be >= 1", lineno)
                entries[idx] = val
                max_idx = max(max_idx, idx)
            rows.append(entries)
    if not rows:
        raise ParseError("empty file", None)
    feats = np.zeros((len(rows), max_idx))
    for i, entries in enumerate(rows):
        for idx, val in entries.items():
            feats[i, idx - 1] = val
    return Dataset(feats, np.asarray(labels), source=f"file({path})")


def save_libsvm(dataset: Dataset, path) -> None:
    """Write a Dataset in LIBSVM text format (inverse of load_libsvm)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row, label in zip(dataset.features, dataset.labels):
            toks = [f"{int(label):+d}"]
            toks += [f"{j + 1}:{v:.17g}" for j, v in enumerate(row) if v != 0.0]
            fh.write(" ".join(toks) + "\n")
