"""Evaluation statistics: rank correlations, error metrics, baselines,
per-feature correlation tables, and the grouped score association analysis.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import AnalysisError, InputError
from .features.schema import (
    GLOBAL_LENGTH,
    LOCAL_GROUPS,
    REPORT_GROUPS,
    face_count_index,
    feature_names,
    group_slices,
)
from .stattests import t_sf_two_sided

SIGNIFICANCE_LEVEL = 0.05
EXACT_PERMUTATION_MAX_N = 8
_PERM_EPS = 1e-12


def _rank_correlation(ra: np.ndarray, rb: np.ndarray) -> float | None:
    """Pearson correlation of rank vectors; None when either is constant.

    Computed as num / sqrt(da * db) in one division so tie-free inputs give
    the correctly rounded rational value.
    """
    ca = ra - ra.mean()
    cb = rb - rb.mean()
    da = float(ca @ ca)
    db = float(cb @ cb)
    if da == 0.0 or db == 0.0:
        return None
    return float(ca @ cb) / math.sqrt(da * db)


def spearman(a, b) -> tuple[float, float]:
    """Rank correlation with average-rank ties and its p-value.

    The p-value uses the t approximation t = rho*sqrt((n-2)/(1-rho^2));
    for n <= 8 the exact two-sided permutation distribution is enumerated
    instead. A zero-variance argument returns (0, 1) by convention.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n = len(a)
    if n < 3 or len(b) != n:
        raise InputError("spearman needs matched vectors of length >= 3")
    ra = rankdata(a)
    rb = rankdata(b)
    rho = _rank_correlation(ra, rb)
    if rho is None:
        return 0.0, 1.0
    if n <= EXACT_PERMUTATION_MAX_N:
        return rho, _exact_permutation_p(ra, rb, rho)
    if abs(rho) >= 1.0:
        return float(np.clip(rho, -1.0, 1.0)), 0.0
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    return rho, t_sf_two_sided(t, n - 2)


def _exact_permutation_p(ra: np.ndarray, rb: np.ndarray, rho_obs: float) -> float:
    n = len(ra)
    threshold = abs(rho_obs) - _PERM_EPS
    hits = 0
    total = 0
    for perm in itertools.permutations(range(n)):
        rho = _rank_correlation(ra, rb[list(perm)])
        if rho is not None and abs(rho) >= threshold:
            hits += 1
        total += 1
    return hits / total


def rmse(pred, actual) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if len(pred) != len(actual) or len(pred) == 0:
        raise InputError("rmse needs matched non-empty vectors")
    return float(np.sqrt(((pred - actual) ** 2).mean()))


def nrmse(pred, actual) -> float:
    """RMSE divided by the range of the actual scores."""
    actual = np.asarray(actual, dtype=np.float64)
    spread = float(actual.max() - actual.min()) if len(actual) else 0.0
    if spread <= 0.0:
        raise AnalysisError("NRMSE undefined: actual scores have zero range")
    return rmse(pred, actual) / spread


@dataclass(frozen=True)
class BaselineBlock:
    """Aggregate metrics of a reference predictor; rho is None when the
    predictor is constant (correlation not applicable)."""

    name: str
    rho: float | None
    rmse: float
    nrmse: float | None
    runs: int = 1
    seed: int | None = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "rho": self.rho,
            "rmse": self.rmse,
            "nrmse": self.nrmse,
            "runs": self.runs,
            "seed": self.seed,
        }


def random_baseline(train_scores, actual_test, runs: int = 10, seed: int = 0) -> BaselineBlock:
    """Gaussian predictions matched to the training mean/variance.

    Each run draws len(actual_test) scores; the block reports the mean
    correlation and mean RMSE over the runs, deterministically for a given
    seed.
    """
    train = np.asarray(train_scores, dtype=np.float64)
    actual = np.asarray(actual_test, dtype=np.float64)
    if len(train) < 2:
        raise InputError("random baseline needs >= 2 training scores")
    mu = train.mean()
    sd = train.std(ddof=1)
    rng = np.random.default_rng(seed)
    rhos = []
    rmses = []
    nrmses = []
    spread = float(actual.max() - actual.min())
    for _ in range(runs):
        draws = rng.normal(mu, sd, size=len(actual)) if sd > 0 else np.full(len(actual), mu)
        rho, _ = spearman(draws, actual)
        rhos.append(rho)
        err = rmse(draws, actual)
        rmses.append(err)
        if spread > 0:
            nrmses.append(err / spread)
    return BaselineBlock(
        name="random",
        rho=float(np.mean(rhos)),
        rmse=float(np.mean(rmses)),
        nrmse=float(np.mean(nrmses)) if nrmses else None,
        runs=runs,
        seed=seed,
    )


def mean_baseline(train_scores, actual_test) -> BaselineBlock:
    """Constant prediction at the training mean; minimizes RMSE among
    constants fitted on training data. Correlation is not applicable."""
    train = np.asarray(train_scores, dtype=np.float64)
    actual = np.asarray(actual_test, dtype=np.float64)
    if len(train) == 0:
        raise InputError("mean baseline needs >= 1 training score")
    constant = float(train.mean())
    pred = np.full(len(actual), constant)
    err = rmse(pred, actual)
    spread = float(actual.max() - actual.min())
    return BaselineBlock(
        name="mean",
        rho=None,
        rmse=err,
        nrmse=err / spread if spread > 0 else None,
    )


def significance_stars(p: float | None) -> str:
    if p is None:
        return ""
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


@dataclass(frozen=True)
class EvaluationReport:
    """Out-of-sample estimation quality for one target kind."""

    target_kind: str
    predictions: np.ndarray
    actual: np.ndarray
    rho: float
    rho_p: float
    rmse: float
    nrmse: float
    random: BaselineBlock
    mean: BaselineBlock
    seed: int
    shuffled_target: bool = False
    failed_folds: tuple[int, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "target_kind": self.target_kind,
            "n": int(len(self.actual)),
            "spearman_rho": self.rho,
            "spearman_p": self.rho_p,
            "rmse": self.rmse,
            "nrmse": self.nrmse,
            "baselines": {"random": self.random.to_dict(), "mean": self.mean.to_dict()},
            "seed": self.seed,
            "shuffled_target": self.shuffled_target,
            "failed_folds": list(self.failed_folds),
            "predictions": [float(v) for v in self.predictions],
            "actual": [float(v) for v in self.actual],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def evaluate_predictions(
    actual,
    predictions,
    target_kind: str,
    seed: int = 0,
    random_runs: int = 10,
    shuffled_target: bool = False,
    failed_folds=(),
) -> EvaluationReport:
    """Assemble the full report: correlation, errors, and both baselines.

    Baselines draw their training statistics from the actual scores, which
    is what every leave-one-out training fold sees up to one sample.
    """
    actual = np.asarray(actual, dtype=np.float64)
    predictions = np.asarray(predictions, dtype=np.float64)
    ok = np.isfinite(predictions)
    if not ok.all():
        actual_used = actual[ok]
        predictions_used = predictions[ok]
    else:
        actual_used = actual
        predictions_used = predictions
    if len(actual_used) < 3:
        raise InputError("evaluation needs at least 3 usable predictions")
    rho, rho_p = spearman(predictions_used, actual_used)
    return EvaluationReport(
        target_kind=target_kind,
        predictions=predictions,
        actual=actual,
        rho=rho,
        rho_p=rho_p,
        rmse=rmse(predictions_used, actual_used),
        nrmse=nrmse(predictions_used, actual_used),
        random=random_baseline(actual_used, actual_used, runs=random_runs, seed=seed),
        mean=mean_baseline(actual_used, actual_used),
        seed=seed,
        shuffled_target=shuffled_target,
        failed_folds=tuple(failed_folds),
    )


def render_report_text(report: EvaluationReport) -> str:
    """Plain-text table in the estimation-results layout."""
    def fmt_rho(rho, p):
        if rho is None:
            return "--"
        return f"{rho:.2f}{significance_stars(p)}"

    def fmt(v):
        return "--" if v is None else f"{v:.2f}"

    lines = [
        f"Estimation results ({report.target_kind.upper()})",
        f"{'':<10}{'Spearman rho':<16}{'RMSE':<10}{'NRMSE':<10}",
        f"{'Computer':<10}{fmt_rho(report.rho, report.rho_p):<16}"
        f"{fmt(report.rmse):<10}{fmt(report.nrmse):<10}",
        f"{'Random':<10}{fmt_rho(report.random.rho, None):<16}"
        f"{fmt(report.random.rmse):<10}{fmt(report.random.nrmse):<10}",
        f"{'Mean':<10}{'--':<16}{fmt(report.mean.rmse):<10}{fmt(report.mean.nrmse):<10}",
    ]
    if report.shuffled_target:
        lines.append("(target was shuffled: leakage control)")
    if report.failed_folds:
        lines.append(f"failed folds: {list(report.failed_folds)}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class TargetCorrelations:
    rho: np.ndarray
    p: np.ndarray
    significant: np.ndarray
    group_ratio: dict
    group_mean_sig_pos: dict
    group_mean_sig_neg: dict


@dataclass(frozen=True)
class FeatureCorrelationTable:
    names: tuple[str, ...]
    group_lengths: dict
    targets: dict

    def to_dict(self) -> dict:
        out = {"groups": {}, "features": {"names": list(self.names)}}
        for target, tc in self.targets.items():
            out["features"][target] = {
                "rho": [float(v) for v in tc.rho],
                "p": [float(v) for v in tc.p],
                "significant": [bool(v) for v in tc.significant],
            }
            out["groups"][target] = {
                g: {
                    "length": self.group_lengths[g],
                    "significant_ratio": tc.group_ratio[g],
                    "mean_significant_positive_rho": tc.group_mean_sig_pos.get(g),
                    "mean_significant_negative_rho": tc.group_mean_sig_neg.get(g),
                }
                for g in REPORT_GROUPS
            }
        return out


def _report_group_columns() -> dict:
    slices = group_slices()
    cols = {"global": np.arange(GLOBAL_LENGTH)}
    for g in LOCAL_GROUPS:
        cols[g] = np.arange(slices[g].start, slices[g].stop)
    return cols


def feature_correlation_table(
    X: np.ndarray,
    targets: dict,
    face_mask: np.ndarray | None = None,
) -> FeatureCorrelationTable:
    """Per-feature rank correlations against each target, with the group
    significant ratios and the local groups' mean significant correlations.

    Body & face columns correlate over face-bearing images only; the mask
    defaults to images whose face-count feature is positive.
    """
    X = np.asarray(X, dtype=np.float64)
    names = feature_names()
    if X.shape[1] != len(names):
        raise InputError(f"feature matrix has {X.shape[1]} columns, expected {len(names)}")
    if face_mask is None:
        face_mask = X[:, face_count_index()] > 0
    body_cols = group_slices()["body_face"]
    body_set = set(range(body_cols.start, body_cols.stop))
    group_cols = _report_group_columns()
    group_lengths = {g: len(c) for g, c in group_cols.items()}

    out_targets = {}
    for target_name, y in targets.items():
        y = np.asarray(y, dtype=np.float64)
        if len(y) != len(X):
            raise InputError(f"target {target_name!r} length mismatch")
        rho = np.zeros(X.shape[1])
        p = np.ones(X.shape[1])
        for j in range(X.shape[1]):
            if j in body_set:
                if face_mask.sum() >= 3:
                    rho[j], p[j] = spearman(X[face_mask, j], y[face_mask])
            else:
                rho[j], p[j] = spearman(X[:, j], y)
        significant = p < SIGNIFICANCE_LEVEL

        ratios = {}
        pos = {}
        neg = {}
        for g, cols in group_cols.items():
            sig = significant[cols]
            ratios[g] = float(sig.mean())
            if g in LOCAL_GROUPS:
                sig_rho = rho[cols][sig]
                pos_vals = sig_rho[sig_rho > 0]
                neg_vals = sig_rho[sig_rho < 0]
                pos[g] = float(pos_vals.mean()) if len(pos_vals) else None
                neg[g] = float(neg_vals.mean()) if len(neg_vals) else None
        out_targets[target_name] = TargetCorrelations(
            rho=rho,
            p=p,
            significant=significant,
            group_ratio=ratios,
            group_mean_sig_pos=pos,
            group_mean_sig_neg=neg,
        )
    return FeatureCorrelationTable(names=names, group_lengths=group_lengths, targets=out_targets)


def render_correlation_text(table: FeatureCorrelationTable) -> str:
    """Plain-text ratios table in the significantly-correlated layout."""
    targets = list(table.targets)
    header = f"{'Feature group':<20}{'Len.':<8}" + "".join(f"{t.upper() + ' ratio':<12}" for t in targets)
    lines = ["Ratios of significantly correlated features (p < 0.05)", header]
    for g in REPORT_GROUPS:
        row = f"{g:<20}{table.group_lengths[g]:<8}"
        for t in targets:
            row += f"{table.targets[t].group_ratio[g] * 100:>6.1f}%     "
        lines.append(row.rstrip())
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class RegressionCoefficient:
    estimate: float
    std_error: float
    t_value: float
    p_value: float


@dataclass(frozen=True)
class GroupedAnalysis:
    """Score association per (rater group x user group) plus the adjusted
    linear regression of the measured score on the perceived score."""

    correlations: dict  # (rater_group, user_group) -> {"rho", "p", "n"}
    regression: dict  # user_group -> {"intercept", "pi", "age": RegressionCoefficient}

    def to_dict(self) -> dict:
        return {
            "correlations": {
                f"{r}|{u}": vals for (r, u), vals in self.correlations.items()
            },
            "regression": {
                group: {name: vars(coef) for name, coef in coefs.items()}
                for group, coefs in self.regression.items()
            },
        }


def ols_with_control(y: np.ndarray, x: np.ndarray, control: np.ndarray) -> dict:
    """OLS of y on [1, x, control] with coefficient t-tests."""
    y = np.asarray(y, dtype=np.float64)
    n = len(y)
    design = np.column_stack([np.ones(n), x, control])
    if n < 4:
        raise AnalysisError("adjusted regression needs at least 4 samples")
    if np.linalg.matrix_rank(design) < 3:
        raise AnalysisError("singular design: the predictor or the control is constant")
    coef, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    dof = n - 3
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.inv(design.T @ design)
    out = {}
    for i, name in enumerate(("intercept", "pi", "age")):
        se = math.sqrt(cov[i, i])
        t = coef[i] / se if se > 0 else math.inf
        out[name] = RegressionCoefficient(
            estimate=float(coef[i]),
            std_error=se,
            t_value=float(t),
            p_value=t_sf_two_sided(t, dof),
        )
    return out


def grouped_trait_analysis(
    mi,
    pi,
    gender,
    age,
    rater_group_pi: dict | None = None,
) -> GroupedAnalysis:
    """Correlations between perceived and measured scores per user-gender
    group, optionally per rater-gender group, plus the age-adjusted OLS.

    ``rater_group_pi`` maps a rater-group name to perceived scores
    aggregated over that rater subset; those rows are never inferred here.
    """
    mi = np.asarray(mi, dtype=np.float64)
    pi = np.asarray(pi, dtype=np.float64)
    age = np.asarray(age, dtype=np.float64)
    gender = np.asarray([str(g) for g in gender])
    n = len(mi)
    if not (len(pi) == len(gender) == len(age) == n):
        raise InputError("mi, pi, gender, and age must be aligned")

    user_groups = {
        "male": gender == "M",
        "female": gender == "F",
        "together": np.ones(n, dtype=bool),
    }
    pi_by_raters = {"together": pi}
    if rater_group_pi:
        for name, values in rater_group_pi.items():
            values = np.asarray(values, dtype=np.float64)
            if len(values) != n:
                raise InputError(f"rater group {name!r} scores length mismatch")
            pi_by_raters[name] = values

    correlations = {}
    for rater_group, pi_values in pi_by_raters.items():
        for user_group, mask in user_groups.items():
            if mask.sum() >= 3:
                rho, p = spearman(pi_values[mask], mi[mask])
                correlations[(rater_group, user_group)] = {
                    "rho": rho,
                    "p": p,
                    "n": int(mask.sum()),
                }

    regression = {}
    for user_group, mask in user_groups.items():
        if mask.sum() >= 4:
            regression[user_group] = ols_with_control(mi[mask], pi[mask], age[mask])
    return GroupedAnalysis(correlations=correlations, regression=regression)


def render_grouped_text(analysis: GroupedAnalysis) -> str:
    """Plain-text correlation grid in the per-group layout."""
    rater_groups = sorted({r for r, _ in analysis.correlations})
    rater_groups = [g for g in rater_groups if g != "together"] + ["together"]
    user_groups = ("male", "female", "together")
    lines = [
        "Correlation between perceived and measured scores",
        f"{'Raters':<18}" + "".join(f"{u + ' users':<16}" for u in user_groups),
    ]
    for r in rater_groups:
        row = f"{r:<18}"
        for u in user_groups:
            entry = analysis.correlations.get((r, u))
            if entry is None:
                row += f"{'--':<16}"
            else:
                row += f"{entry['rho']:.2f}{significance_stars(entry['p']):<12}"
        lines.append(row.rstrip())
    return "\n".join(lines) + "\n"
