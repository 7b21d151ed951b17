"""Feature conditioning: PCA projection, univariate F-tests, and the
score/label intersection selection scheme, plus IQ-band labelling.

Selection runs in PCA space. For perceived scores the target is used
directly; for measured scores two top-K sets are ranked (regression
F-test against the score, one-way ANOVA F-test against the 7 IQ bands)
and their intersection is kept, falling back to the score-based set when
the intersection is empty.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import AnalysisError, InputError
from .stattests import f_sf

SELECTION_FORMAT_VERSION = 1

#: IQ bands covering the whole real line with half-open boundaries.
MI_BANDS = (
    (130.0, 1, "very superior"),
    (120.0, 2, "superior"),
    (110.0, 3, "high average"),
    (90.0, 4, "average"),
    (80.0, 5, "low average"),
    (70.0, 6, "borderline"),
    (float("-inf"), 7, "low"),
)


@dataclass(frozen=True)
class MiCategory:
    code: int
    label: str


def mi_category(score: float) -> MiCategory:
    """Band of an IQ-point score; every finite score maps to exactly one."""
    score = float(score)
    if not np.isfinite(score):
        raise InputError(f"score must be finite, got {score!r}")
    for lower, code, label in MI_BANDS:
        if score >= lower:
            return MiCategory(code, label)
    return MiCategory(7, "low")


def mi_labels(scores) -> np.ndarray:
    return np.array([mi_category(s).code for s in scores], dtype=np.intp)


@dataclass(frozen=True)
class PcaModel:
    """Orthonormal principal axes of a centered data matrix."""

    mean: np.ndarray
    components: np.ndarray  # (n_components, n_features) rows
    variances: np.ndarray  # non-increasing
    effective_rank: int

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) @ self.components.T

    def inverse_transform(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z) @ self.components + self.mean

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "components": self.components.tolist(),
            "variances": self.variances.tolist(),
            "effective_rank": self.effective_rank,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PcaModel":
        return cls(
            mean=np.asarray(data["mean"], dtype=np.float64),
            components=np.asarray(data["components"], dtype=np.float64),
            variances=np.asarray(data["variances"], dtype=np.float64),
            effective_rank=int(data["effective_rank"]),
        )


def fit_pca(X: np.ndarray, n_components: int | None = None) -> PcaModel:
    """SVD of the centered matrix; components ordered by variance.

    Rank-deficient input yields fewer components than requested; the
    effective rank is reported on the model. Component signs are fixed so
    the largest-magnitude loading of each axis is positive.
    """
    X = np.asarray(X, dtype=np.float64)
    n, m = X.shape
    limit = min(n - 1, m)
    if n < 2:
        raise InputError("PCA needs at least 2 samples")
    if n_components is None:
        n_components = limit
    if not 1 <= n_components <= limit:
        raise InputError(f"n_components must lie in [1, {limit}], got {n_components}")

    mean = X.mean(axis=0)
    _, s, vt = np.linalg.svd(X - mean, full_matrices=False)
    tol = s.max(initial=0.0) * max(n, m) * np.finfo(np.float64).eps
    rank = int((s > tol).sum())
    keep = min(n_components, rank) if rank > 0 else 0

    components = vt[:keep]
    signs = np.sign(components[np.arange(keep), np.abs(components).argmax(axis=1)]) if keep else np.empty(0)
    components = components * signs[:, None] if keep else components
    variances = (s[:keep] ** 2) / (n - 1)
    return PcaModel(
        mean=mean,
        components=components,
        variances=variances,
        effective_rank=rank,
    )


def f_test_regression(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """(F, p) of the correlation-based single-regressor test.

    F = r^2 (n-2) / (1 - r^2) with p from F(1, n-2). A zero-variance
    feature (or target) returns (0, 1) by convention; a perfect
    correlation returns (inf, 0).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(x)
    if n < 3 or len(y) != n:
        raise InputError("f_test_regression needs matched vectors of length >= 3")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt((xc**2).sum() * (yc**2).sum())
    if denom == 0.0:
        return 0.0, 1.0
    r2 = float((xc @ yc) / denom) ** 2
    if r2 >= 1.0:
        return float("inf"), 0.0
    f = r2 * (n - 2) / (1.0 - r2)
    return f, f_sf(f, 1.0, n - 2.0)


def f_test_anova(x: np.ndarray, labels: np.ndarray) -> tuple[float, float]:
    """(F, p) of the classic between/within one-way ANOVA over label groups."""
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels)
    n = len(x)
    if n < 3 or len(labels) != n:
        raise InputError("f_test_anova needs matched vectors of length >= 3")
    groups = [x[labels == lab] for lab in np.unique(labels)]
    k = len(groups)
    if k < 2:
        raise AnalysisError("ANOVA needs at least 2 non-empty categories")
    if n - k < 1:
        raise AnalysisError("ANOVA needs more samples than categories")
    grand = x.mean()
    ss_between = sum(len(g) * (g.mean() - grand) ** 2 for g in groups)
    ss_within = sum(((g - g.mean()) ** 2).sum() for g in groups)
    msb = ss_between / (k - 1)
    msw = ss_within / (n - k)
    if msw == 0.0:
        return (0.0, 1.0) if msb == 0.0 else (float("inf"), 0.0)
    f = float(msb / msw)
    return f, f_sf(f, k - 1.0, n - k)


def _column_tests(X: np.ndarray, test) -> tuple[np.ndarray, np.ndarray]:
    fs = np.empty(X.shape[1])
    ps = np.empty(X.shape[1])
    for j in range(X.shape[1]):
        fs[j], ps[j] = test(X[:, j])
    return fs, ps


def _top_k(fs: np.ndarray, ps: np.ndarray, k: int) -> list[int]:
    """Indices of the k smallest p-values; ties by larger F, then lower index."""
    order = sorted(range(len(ps)), key=lambda j: (ps[j], -fs[j], j))
    return order[:k]


@dataclass(frozen=True)
class SelectionModel:
    """Fitted PCA basis plus the retained component indices."""

    pca: PcaModel
    selected: tuple[int, ...]
    k: int
    target_kind: str = "pi"

    def __post_init__(self):
        if len(set(self.selected)) != len(self.selected):
            raise InputError("selected indices must be unique")
        if len(self.selected) > self.k:
            raise InputError("selection larger than requested K")
        if any(not 0 <= i < self.pca.n_components for i in self.selected):
            raise InputError("selected index out of PCA range")

    def transform(self, X: np.ndarray) -> np.ndarray:
        return self.pca.transform(X)[:, list(self.selected)]

    def to_json(self) -> str:
        doc = {
            "version": SELECTION_FORMAT_VERSION,
            "kind": "selection_model",
            "target_kind": self.target_kind,
            "k": self.k,
            "selected": list(self.selected),
            "pca": self.pca.to_dict(),
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SelectionModel":
        doc = json.loads(text)
        if doc.get("version") != SELECTION_FORMAT_VERSION or doc.get("kind") != "selection_model":
            raise InputError("unrecognized selection model document")
        return cls(
            pca=PcaModel.from_dict(doc["pca"]),
            selected=tuple(int(i) for i in doc["selected"]),
            k=int(doc["k"]),
            target_kind=doc["target_kind"],
        )


def _check_k(k: int, n_columns: int) -> None:
    if not 0 <= k <= n_columns:
        raise InputError(f"K must lie in [0, {n_columns}], got {k}")


def select_pca_columns_by_score(X_pca: np.ndarray, scores: np.ndarray, k: int) -> list[int]:
    """Top-K PCA columns by the regression F-test against the score."""
    X_pca = np.asarray(X_pca, dtype=np.float64)
    _check_k(k, X_pca.shape[1])
    if k == 0:
        return []
    fs, ps = _column_tests(X_pca, lambda col: f_test_regression(col, scores))
    return _top_k(fs, ps, k)


def select_features_pi(pca: PcaModel, X_pca: np.ndarray, scores: np.ndarray, k: int) -> SelectionModel:
    selected = select_pca_columns_by_score(X_pca, scores, k)
    return SelectionModel(pca=pca, selected=tuple(sorted(selected)), k=k, target_kind="pi")


def select_features_mi(
    pca: PcaModel,
    X_pca: np.ndarray,
    scores: np.ndarray,
    labels: np.ndarray,
    k: int,
) -> SelectionModel:
    """Intersection of score-ranked and label-ranked top-K column sets.

    An empty intersection falls back to the score-based set so the
    pipeline never selects nothing.
    """
    X_pca = np.asarray(X_pca, dtype=np.float64)
    _check_k(k, X_pca.shape[1])
    if k == 0:
        return SelectionModel(pca=pca, selected=(), k=0, target_kind="mi")
    by_score = select_pca_columns_by_score(X_pca, scores, k)
    fs, ps = _column_tests(X_pca, lambda col: f_test_anova(col, labels))
    by_label = _top_k(fs, ps, k)
    chosen = set(by_score) & set(by_label)
    if not chosen:
        chosen = set(by_score)
    return SelectionModel(pca=pca, selected=tuple(sorted(chosen)), k=k, target_kind="mi")


class TraitFeatureSelector(BaseEstimator, TransformerMixin):
    """sklearn-style transformer: PCA projection + F-test column selection.

    Parameters
    ----------
    k : int or "half"
        Number of retained components; "half" means floor(n_samples / 2).
    n_components : int, optional
        PCA dimensionality; defaults to min(n_samples - 1, n_features).
    target_kind : "pi" or "mi"
        "mi" ranks by both the raw score and its IQ band and intersects.
    """

    def __init__(self, k="half", n_components=None, target_kind="pi"):
        self.k = k
        self.n_components = n_components
        self.target_kind = target_kind

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if self.target_kind not in ("pi", "mi"):
            raise InputError(f"target_kind must be 'pi' or 'mi', got {self.target_kind!r}")
        n = X.shape[0]
        k = n // 2 if self.k == "half" else int(self.k)
        limit = min(n - 1, X.shape[1])
        n_components = limit if self.n_components is None else min(self.n_components, limit)
        pca = fit_pca(X, n_components)
        Z = pca.transform(X)
        k = min(k, Z.shape[1])
        if self.target_kind == "mi":
            self.model_ = select_features_mi(pca, Z, y, mi_labels(y), k)
        else:
            self.model_ = select_features_pi(pca, Z, y, k)
        return self

    def transform(self, X):
        return self.model_.transform(X)

    def get_support(self) -> tuple[int, ...]:
        return self.model_.selected
