"""Epsilon-insensitive support vector regression with an SMO solver,
inner-cross-validation hyperparameter search, and the leave-one-out
evaluation harness.

The dual is solved over 2n box-constrained variables (the positive and
negative slack multipliers) with sequential maximal-violating-pair
updates; the zero-sum constraint on the dual weights is preserved exactly
by every pairwise step. Features are standardized with train-fold
statistics before the kernel; targets stay in natural units.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit
from sklearn.base import BaseEstimator, RegressorMixin

from .errors import InputError
from .selection import TraitFeatureSelector

KKT_TOLERANCE = 1e-3
MAX_ITERATIONS = 100_000

DEFAULT_C_VALUES = (0.1, 1.0, 10.0, 100.0)
DEFAULT_EPSILON_VALUES = (0.01, 0.1, 1.0)
DEFAULT_GAMMA_MULTIPLIERS = (0.25, 1.0, 4.0)
DEFAULT_INNER_FOLDS = 5

_TAU = 1e-12


@njit(cache=True)
def _smo_solve(K, y, C, eps, tol, max_iter, record):
    n = K.shape[0]
    m2 = 2 * n
    alpha = np.zeros(m2)
    G = np.empty(m2)
    for i in range(n):
        G[i] = eps - y[i]
        G[i + n] = eps + y[i]

    trace = np.empty(max_iter if record else 0)
    obj = 0.0
    it = 0
    converged = False
    while it < max_iter:
        up_val = -1e300
        up_idx = -1
        low_val = 1e300
        low_idx = -1
        for k in range(m2):
            sk = 1.0 if k < n else -1.0
            v = -sk * G[k]
            if (sk > 0.0 and alpha[k] < C) or (sk < 0.0 and alpha[k] > 0.0):
                if v > up_val:
                    up_val = v
                    up_idx = k
            if (sk > 0.0 and alpha[k] > 0.0) or (sk < 0.0 and alpha[k] < C):
                if v < low_val:
                    low_val = v
                    low_idx = k
        if up_idx < 0 or low_idx < 0 or up_val - low_val <= tol:
            converged = True
            break

        i = up_idx
        j = low_idx
        si = 1.0 if i < n else -1.0
        sj = 1.0 if j < n else -1.0
        ri = i if i < n else i - n
        rj = j if j < n else j - n
        kii = K[ri, ri]
        kjj = K[rj, rj]
        kij = K[ri, rj]
        quad = kii + kjj - 2.0 * kij
        if quad <= _TAU:
            quad = _TAU
        old_ai = alpha[i]
        old_aj = alpha[j]

        if si != sj:
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0.0:
                if alpha[j] < 0.0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0.0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0.0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            delta = (G[i] - G[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            else:
                if alpha[j] < 0.0:
                    alpha[j] = 0.0
                    alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            else:
                if alpha[i] < 0.0:
                    alpha[i] = 0.0
                    alpha[j] = total

        dai = alpha[i] - old_ai
        daj = alpha[j] - old_aj
        if record:
            obj += (
                G[i] * dai
                + G[j] * daj
                + 0.5 * (kii * dai * dai + kjj * daj * daj)
                + (si * sj * kij) * dai * daj
            )
            trace[it] = obj
        for k in range(m2):
            rk = k if k < n else k - n
            sk = 1.0 if k < n else -1.0
            G[k] += sk * (si * dai * K[rk, ri] + sj * daj * K[rk, rj])
        it += 1

    # bias from the final gradient: free variables pin it, otherwise the
    # midpoint of the feasible interval.
    up_val = -1e300
    low_val = 1e300
    for k in range(m2):
        sk = 1.0 if k < n else -1.0
        v = -sk * G[k]
        if (sk > 0.0 and alpha[k] < C) or (sk < 0.0 and alpha[k] > 0.0):
            if v > up_val:
                up_val = v
        if (sk > 0.0 and alpha[k] > 0.0) or (sk < 0.0 and alpha[k] < C):
            if v < low_val:
                low_val = v
    if up_val < -1e299:
        up_val = low_val
    if low_val > 1e299:
        low_val = up_val
    b = 0.5 * (up_val + low_val)
    return alpha, G, b, it, converged, trace[:it]


def rbf_kernel(A: np.ndarray, B: np.ndarray | None, gamma: float) -> np.ndarray:
    """exp(-gamma * squared distance); the self-kernel (B is None) is made
    exactly symmetric with a unit diagonal."""
    if B is None:
        sq = (A**2).sum(axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (A @ A.T)
        d2 = np.maximum(d2, 0.0)
        d2 = (d2 + d2.T) / 2.0
        np.fill_diagonal(d2, 0.0)
    else:
        d2 = (A**2).sum(axis=1)[:, None] + (B**2).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
        d2 = np.maximum(d2, 0.0)
    return np.exp(-gamma * d2)


def kernel_matrix(A: np.ndarray, B: np.ndarray | None, kernel: str, gamma: float | None) -> np.ndarray:
    if kernel == "linear":
        return A @ (A if B is None else B).T
    if kernel == "rbf":
        if gamma is None or gamma <= 0:
            raise InputError("rbf kernel needs gamma > 0")
        return rbf_kernel(A, B, gamma)
    raise InputError(f"unknown kernel {kernel!r}")


@dataclass(frozen=True)
class SvrModel:
    """Fitted regressor: support vectors, dual weights, bias, kernel."""

    kernel: str
    gamma: float | None
    C: float
    epsilon: float
    support_vectors: np.ndarray
    coefficients: np.ndarray  # dual weights in [-C, C], zero-sum
    bias: float
    x_mean: np.ndarray
    x_std: np.ndarray
    converged: bool = True
    iterations: int = 0
    dual_objective: float = 0.0

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        Xs = (X - self.x_mean) / self.x_std
        if len(self.coefficients) == 0:
            return np.full(len(Xs), self.bias)
        K = kernel_matrix(self.support_vectors, Xs, self.kernel, self.gamma)
        return self.coefficients @ K + self.bias

    def to_json(self) -> str:
        doc = {
            "version": 1,
            "kind": "svr_model",
            "kernel": self.kernel,
            "gamma": self.gamma,
            "C": self.C,
            "epsilon": self.epsilon,
            "support_vectors": self.support_vectors.tolist(),
            "coefficients": self.coefficients.tolist(),
            "bias": self.bias,
            "x_mean": self.x_mean.tolist(),
            "x_std": self.x_std.tolist(),
            "converged": self.converged,
            "iterations": self.iterations,
            "dual_objective": self.dual_objective,
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SvrModel":
        doc = json.loads(text)
        if doc.get("version") != 1 or doc.get("kind") != "svr_model":
            raise InputError("unrecognized SVR model document")
        return cls(
            kernel=doc["kernel"],
            gamma=doc["gamma"],
            C=doc["C"],
            epsilon=doc["epsilon"],
            support_vectors=np.asarray(doc["support_vectors"], dtype=np.float64).reshape(
                len(doc["coefficients"]), -1
            )
            if doc["coefficients"]
            else np.empty((0, len(doc["x_mean"]))),
            coefficients=np.asarray(doc["coefficients"], dtype=np.float64),
            bias=float(doc["bias"]),
            x_mean=np.asarray(doc["x_mean"], dtype=np.float64),
            x_std=np.asarray(doc["x_std"], dtype=np.float64),
            converged=bool(doc["converged"]),
            iterations=int(doc["iterations"]),
            dual_objective=float(doc["dual_objective"]),
        )


def _resolve_gamma(gamma, n_features: int) -> float:
    if gamma == "scale":
        return 1.0 / max(n_features, 1)
    return float(gamma)


def _constant_model(y0, d, kernel, gamma_val, C, epsilon, x_mean, x_std) -> SvrModel:
    return SvrModel(
        kernel=kernel,
        gamma=gamma_val,
        C=C,
        epsilon=epsilon,
        support_vectors=np.empty((0, d)),
        coefficients=np.empty(0),
        bias=float(y0),
        x_mean=x_mean,
        x_std=x_std,
    )


def _fit_from_kernel(K, y, C, epsilon, tol, max_iter, record, Xs, kernel, gamma_val, x_mean, x_std):
    """Solve on a precomputed kernel; returns (model, full beta, trace)."""
    alpha, G, b, iterations, converged, trace = _smo_solve(
        K,
        np.asarray(y, dtype=np.float64),
        float(C),
        float(epsilon),
        float(tol),
        int(max_iter),
        bool(record),
    )
    n = len(y)
    beta = alpha[:n] - alpha[n:]
    p_lin = np.concatenate([epsilon - y, epsilon + y])
    dual_objective = float(0.5 * (alpha @ (G + p_lin)))
    if not converged:
        warnings.warn(
            f"SMO reached the {max_iter}-iteration cap before KKT tolerance {tol}",
            RuntimeWarning,
            stacklevel=3,
        )
    support = beta != 0.0
    model = SvrModel(
        kernel=kernel,
        gamma=gamma_val,
        C=float(C),
        epsilon=float(epsilon),
        support_vectors=Xs[support],
        coefficients=beta[support],
        bias=float(b),
        x_mean=x_mean,
        x_std=x_std,
        converged=bool(converged),
        iterations=int(iterations),
        dual_objective=dual_objective,
    )
    return model, beta, trace


def svr_train(
    X: np.ndarray,
    y: np.ndarray,
    C: float = 1.0,
    epsilon: float = 0.1,
    kernel: str = "rbf",
    gamma="scale",
    tol: float = KKT_TOLERANCE,
    max_iter: int = MAX_ITERATIONS,
    standardize: bool = True,
    record_objective: bool = False,
):
    """Fit an epsilon-SVR; returns (model, objective trace).

    The trace is empty unless ``record_objective`` is set; it is
    non-increasing because every accepted pairwise step minimizes the dual
    restricted to the selected pair. A constant target short-circuits to
    the exact constant predictor.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(X) != len(y):
        raise InputError("X must be 2-D with one target per row")
    if len(y) < 2:
        raise InputError("SVR needs at least 2 samples")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise InputError("SVR inputs must be finite")
    if C <= 0 or epsilon < 0:
        raise InputError("need C > 0 and epsilon >= 0")

    n, d = X.shape
    if standardize:
        x_mean = X.mean(axis=0)
        x_std = X.std(axis=0)
        x_std = np.where(x_std > 0, x_std, 1.0)
    else:
        x_mean = np.zeros(d)
        x_std = np.ones(d)
    Xs = (X - x_mean) / x_std
    gamma_val = _resolve_gamma(gamma, d) if kernel == "rbf" else None

    if np.all(y == y[0]):
        return _constant_model(y[0], d, kernel, gamma_val, C, epsilon, x_mean, x_std), np.empty(0)

    K = kernel_matrix(Xs, None, kernel, gamma_val)
    model, _, trace = _fit_from_kernel(
        K, y, C, epsilon, tol, max_iter, record_objective, Xs, kernel, gamma_val, x_mean, x_std
    )
    return model, trace


class SmoSvr(BaseEstimator, RegressorMixin):
    """sklearn-style wrapper around the SMO epsilon-SVR."""

    def __init__(
        self,
        C: float = 1.0,
        epsilon: float = 0.1,
        kernel: str = "rbf",
        gamma="scale",
        tol: float = KKT_TOLERANCE,
        max_iter: int = MAX_ITERATIONS,
        standardize: bool = True,
    ):
        self.C = C
        self.epsilon = epsilon
        self.kernel = kernel
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter
        self.standardize = standardize

    def fit(self, X, y):
        self.model_, _ = svr_train(
            X,
            y,
            C=self.C,
            epsilon=self.epsilon,
            kernel=self.kernel,
            gamma=self.gamma,
            tol=self.tol,
            max_iter=self.max_iter,
            standardize=self.standardize,
        )
        return self

    def predict(self, X):
        return self.model_.predict(X)


@dataclass(frozen=True)
class HyperParams:
    kernel: str
    C: float
    epsilon: float
    gamma: float | None = None

    def tie_break_key(self):
        # smaller C, then larger epsilon (simpler model), then smaller gamma
        return (self.C, -self.epsilon, self.gamma if self.gamma is not None else 0.0)


@dataclass(frozen=True)
class GridSpec:
    """Hyperparameter grid template; gamma values are multiples of 1/d."""

    kernel: str = "rbf"
    c_values: tuple[float, ...] = DEFAULT_C_VALUES
    epsilon_values: tuple[float, ...] = DEFAULT_EPSILON_VALUES
    gamma_multipliers: tuple[float, ...] = DEFAULT_GAMMA_MULTIPLIERS

    def materialize(self, n_features: int) -> tuple[HyperParams, ...]:
        gammas = (
            [m / max(n_features, 1) for m in self.gamma_multipliers]
            if self.kernel == "rbf"
            else [None]
        )
        out = []
        for g in gammas:
            for c in self.c_values:
                for e in self.epsilon_values:
                    out.append(HyperParams(kernel=self.kernel, C=c, epsilon=e, gamma=g))
        return tuple(out)


@dataclass(frozen=True)
class CvPlan:
    """Deterministic fold assignment plus the grid to scan."""

    folds: tuple[np.ndarray, ...]
    grid: tuple[HyperParams, ...]
    seed: int


def plan_cv(n: int, grid: tuple[HyperParams, ...], n_folds: int, seed: int) -> CvPlan:
    if not grid:
        raise InputError("hyperparameter grid is empty")
    if n_folds < 2 or n_folds > n:
        raise InputError(f"need 2 <= folds <= {n}, got {n_folds}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    folds = tuple(np.sort(f) for f in np.array_split(perm, n_folds))
    return CvPlan(folds=folds, grid=grid, seed=seed)


def grid_search(
    X: np.ndarray,
    y: np.ndarray,
    grid: tuple[HyperParams, ...],
    n_folds: int = DEFAULT_INNER_FOLDS,
    seed: int = 0,
    tol: float = KKT_TOLERANCE,
    max_iter: int = MAX_ITERATIONS,
):
    """Pick the grid point with the lowest mean validation RMSE.

    Ties go to the smaller C, then the larger epsilon, then the smaller
    gamma. Kernel matrices are shared across the C/epsilon combinations of
    each (fold, gamma) pair.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    plan = plan_cv(len(X), grid, n_folds, seed)
    sum_sq = {hp: 0.0 for hp in plan.grid}
    count = {hp: 0 for hp in plan.grid}

    for fold in plan.folds:
        if len(fold) == 0:
            continue
        mask = np.ones(len(X), dtype=bool)
        mask[fold] = False
        X_tr, y_tr = X[mask], y[mask]
        X_va, y_va = X[fold], y[fold]
        if len(X_tr) < 2:
            continue
        mu = X_tr.mean(axis=0)
        sd = X_tr.std(axis=0)
        sd = np.where(sd > 0, sd, 1.0)
        A = (X_tr - mu) / sd
        B = (X_va - mu) / sd
        constant_target = bool(np.all(y_tr == y_tr[0]))
        kernels: dict = {}
        for hp in plan.grid:
            if constant_target:
                pred = np.full(len(X_va), y_tr[0])
            else:
                key = (hp.kernel, hp.gamma)
                if key not in kernels:
                    kernels[key] = (
                        kernel_matrix(A, None, hp.kernel, hp.gamma),
                        kernel_matrix(A, B, hp.kernel, hp.gamma),
                    )
                K_tr, K_va = kernels[key]
                model, beta, _ = _fit_from_kernel(
                    K_tr, y_tr, hp.C, hp.epsilon, tol, max_iter, False,
                    A, hp.kernel, hp.gamma, mu, sd,
                )
                pred = beta @ K_va + model.bias
            sum_sq[hp] += float(((pred - y_va) ** 2).sum())
            count[hp] += len(y_va)

    results = {
        hp: (float(np.sqrt(sum_sq[hp] / count[hp])) if count[hp] else float("inf"))
        for hp in plan.grid
    }
    best = min(plan.grid, key=lambda hp: (results[hp], hp.tie_break_key()))
    return best, results


@dataclass(frozen=True)
class FoldRecord:
    index: int
    n_selected: int
    hyperparams: HyperParams | None
    error: str | None = None


@dataclass(frozen=True)
class LoocvResult:
    predictions: np.ndarray  # aligned to input order; NaN for failed folds
    target_kind: str
    fold_records: tuple[FoldRecord, ...]

    @property
    def failed(self) -> tuple[int, ...]:
        return tuple(r.index for r in self.fold_records if r.error is not None)


def canonical_order(X: np.ndarray, y: np.ndarray) -> list[int]:
    """A total row order independent of the input permutation.

    Rows are compared by the raw bytes of (features, target); any two
    byte-identical rows are fully interchangeable, so the resulting fit is
    invariant to how the caller happened to order the dataset.
    """
    rows = np.ascontiguousarray(np.hstack([X, y[:, None]]))
    return sorted(range(len(rows)), key=lambda i: rows[i].tobytes())


def loocv(
    X: np.ndarray,
    y: np.ndarray,
    target_kind: str = "pi",
    k_rule="half",
    grid_spec: GridSpec | None = None,
    inner_folds: int = DEFAULT_INNER_FOLDS,
    seed: int = 0,
    tol: float = KKT_TOLERANCE,
    max_iter: int = MAX_ITERATIONS,
) -> LoocvResult:
    """Leave-one-out predictions with the full per-fold pipeline.

    For each held-out sample the PCA basis, the F-test selection
    (K = floor(N/2) for N training samples under the "half" rule), the
    hyperparameter search, and the SVR fit all use the remaining samples
    only. Training rows are canonically reordered inside each fold, so
    predictions do not depend on the dataset ordering.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(y)
    if n < 3:
        raise InputError("LOOCV needs at least 3 samples")
    if X.shape[0] != n:
        raise InputError("X and y lengths differ")
    grid_spec = grid_spec or GridSpec()

    predictions = np.full(n, np.nan)
    records = []
    for i in range(n):
        keep = np.arange(n) != i
        X_tr = X[keep]
        y_tr = y[keep]
        order = canonical_order(X_tr, y_tr)
        X_tr = X_tr[order]
        y_tr = y_tr[order]
        try:
            k = len(y_tr) // 2 if k_rule == "half" else int(k_rule)
            selector = TraitFeatureSelector(k=k, target_kind=target_kind).fit(X_tr, y_tr)
            Z_tr = selector.transform(X_tr)
            d = Z_tr.shape[1]
            if d == 0:
                raise InputError("selection kept no features")
            grid = grid_spec.materialize(d)
            folds = min(inner_folds, len(y_tr))
            best, _ = grid_search(Z_tr, y_tr, grid, n_folds=folds, seed=seed, tol=tol, max_iter=max_iter)
            model, _ = svr_train(
                Z_tr,
                y_tr,
                C=best.C,
                epsilon=best.epsilon,
                kernel=best.kernel,
                gamma=best.gamma if best.kernel == "rbf" else "scale",
                tol=tol,
                max_iter=max_iter,
            )
            predictions[i] = float(model.predict(selector.transform(X[i : i + 1]))[0])
            records.append(FoldRecord(index=i, n_selected=d, hyperparams=best))
        except Exception as exc:  # record the fold, keep going
            records.append(FoldRecord(index=i, n_selected=0, hyperparams=None, error=str(exc)))
    return LoocvResult(
        predictions=predictions,
        target_kind=target_kind,
        fold_records=tuple(records),
    )
