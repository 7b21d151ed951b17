"""Rater reliability: z-normalization, one-way ICC, and per-image scores.

The agreement measure is the one-way random-effects, average-of-k ICC:
each rated score is modelled as an image effect plus measurement error,
and the ICC is sigma_r^2 / (sigma_r^2 + sigma_e^2 / k). Agreement bands
follow the usual guideline thresholds (poor/fair/good/excellent).

All statistics run on per-rater z-scores: normalization happens before
any analysis to cancel rater positivity/negativity bias.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import AnalysisError, InputError

RATING_SCALE = (1, 7)

ICC_BANDS = (
    (0.40, "poor"),
    (0.60, "fair"),
    (0.75, "good"),
    (float("inf"), "excellent"),
)


@dataclass(frozen=True)
class Rating:
    rater_id: str
    image_id: str
    score: float
    normalized: float | None = None


@dataclass(frozen=True)
class RatingsTable:
    """Sparse (rater, image, score) records.

    ``strict_scale`` enforces the 1..7 integer survey scale and is on for
    CSV ingestion; synthetic tables for statistical checks may carry
    continuous scores.
    """

    records: tuple[Rating, ...]

    def __post_init__(self):
        seen = set()
        for rec in self.records:
            key = (rec.rater_id, rec.image_id)
            if key in seen:
                raise InputError(f"duplicate rating for rater={rec.rater_id!r} image={rec.image_id!r}")
            seen.add(key)

    @classmethod
    def from_records(cls, triples, strict_scale: bool = False) -> "RatingsTable":
        records = []
        for rater_id, image_id, score in triples:
            score = float(score)
            if strict_scale:
                lo, hi = RATING_SCALE
                if score != int(score) or not lo <= score <= hi:
                    raise InputError(
                        f"score {score!r} for rater={rater_id!r} image={image_id!r} "
                        f"is not an integer in [{lo}, {hi}]"
                    )
            records.append(Rating(str(rater_id), str(image_id), score))
        if not records:
            raise InputError("ratings table is empty")
        return cls(records=tuple(records))

    @property
    def is_normalized(self) -> bool:
        return all(r.normalized is not None for r in self.records)

    def image_ids(self) -> list[str]:
        ordered = []
        seen = set()
        for rec in self.records:
            if rec.image_id not in seen:
                seen.add(rec.image_id)
                ordered.append(rec.image_id)
        return ordered

    def by_image(self, normalized: bool = True) -> dict[str, np.ndarray]:
        """Scores grouped by image, in record order."""
        groups: dict[str, list[float]] = {}
        for rec in self.records:
            value = rec.normalized if normalized else rec.score
            if value is None:
                raise AnalysisError("table has not been z-normalized")
            groups.setdefault(rec.image_id, []).append(value)
        return {k: np.asarray(v) for k, v in groups.items()}


def znormalize_raters(table: RatingsTable) -> RatingsTable:
    """Fill per-rater z-scores: mean 0 and sample std 1 for each rater.

    Raters with fewer than two ratings or zero score variance normalize to
    all zeros instead of being dropped, which keeps image coverage intact.
    """
    by_rater: dict[str, list[int]] = {}
    for i, rec in enumerate(table.records):
        by_rater.setdefault(rec.rater_id, []).append(i)

    normalized = [0.0] * len(table.records)
    for indices in by_rater.values():
        scores = np.array([table.records[i].score for i in indices])
        if len(scores) >= 2:
            std = scores.std(ddof=1)
            if std > 0:
                z = (scores - scores.mean()) / std
                for i, value in zip(indices, z):
                    normalized[i] = float(value)
    records = tuple(
        replace(rec, normalized=normalized[i]) for i, rec in enumerate(table.records)
    )
    return RatingsTable(records=records)


@dataclass(frozen=True)
class IccResult:
    sigma_r2: float
    sigma_e2: float
    k_eff: float
    icc: float
    band: str
    sigma_r2_raw: float
    n0: float
    msb: float
    msw: float
    grand_mean: float
    n_images: int
    n_ratings: int


def classify_icc(value: float) -> str:
    """Agreement band: <0.4 poor, 0.4-0.59 fair, 0.6-0.74 good, >=0.75 excellent."""
    for upper, band in ICC_BANDS:
        if value < upper:
            return band
    return "excellent"


def variance_components(groups: list[np.ndarray]) -> IccResult:
    """One-way random-effects ANOVA over per-image score groups.

    Uses the unbalanced-design effective group size
    n0 = (sum k_i - sum k_i^2 / sum k_i) / (I - 1) and clamps a negative
    between-image component to zero (the raw estimate is retained). The
    average-of-k ICC uses k_eff = mean ratings per image.
    """
    n_images = len(groups)
    sizes = np.array([len(g) for g in groups], dtype=np.float64)
    if n_images < 2 or (sizes < 2).any():
        raise AnalysisError("ICC needs >= 2 images, each rated >= 2 times")
    n_total = sizes.sum()
    scores = np.concatenate(groups)
    grand = scores.mean()
    means = np.array([g.mean() for g in groups])

    ss_between = float((sizes * (means - grand) ** 2).sum())
    ss_within = float(sum(((g - m) ** 2).sum() for g, m in zip(groups, means)))
    msb = ss_between / (n_images - 1)
    msw = ss_within / (n_total - n_images)

    n0 = (n_total - (sizes**2).sum() / n_total) / (n_images - 1)
    sigma_r2_raw = (msb - msw) / n0
    sigma_r2 = max(0.0, sigma_r2_raw)
    sigma_e2 = msw
    k_eff = n_total / n_images

    denom = sigma_r2 + sigma_e2 / k_eff
    icc = sigma_r2 / denom if denom > 0 else 1.0
    return IccResult(
        sigma_r2=sigma_r2,
        sigma_e2=sigma_e2,
        k_eff=float(k_eff),
        icc=float(icc),
        band=classify_icc(icc),
        sigma_r2_raw=float(sigma_r2_raw),
        n0=float(n0),
        msb=float(msb),
        msw=float(msw),
        grand_mean=float(grand),
        n_images=n_images,
        n_ratings=int(n_total),
    )


def icc_one_way(table: RatingsTable) -> IccResult:
    """ICC of a ratings table, z-normalizing first when needed."""
    if not table.is_normalized:
        table = znormalize_raters(table)
    groups = table.by_image(normalized=True)
    return variance_components(list(groups.values()))


def aggregate_pi(table: RatingsTable) -> dict[str, float]:
    """Per-image perceived score: median of the normalized ratings."""
    if not table.is_normalized:
        table = znormalize_raters(table)
    return {
        image_id: float(np.median(scores))
        for image_id, scores in table.by_image(normalized=True).items()
    }


@dataclass(frozen=True)
class RatingSummary:
    median: float
    q1: float
    q3: float
    whisker_lo: float
    whisker_hi: float
    extremes: tuple[float, ...] = field(default_factory=tuple)


def summarize_scores(scores: np.ndarray) -> RatingSummary:
    """Boxplot summary: linear-interpolation quartiles, 1.5*IQR whiskers,
    and the scores falling outside the whiskers."""
    scores = np.asarray(scores, dtype=np.float64)
    q1, med, q3 = np.percentile(scores, [25, 50, 75])
    iqr = q3 - q1
    lo_fence = q1 - 1.5 * iqr
    hi_fence = q3 + 1.5 * iqr
    inside = scores[(scores >= lo_fence) & (scores <= hi_fence)]
    whisker_lo = float(inside.min())
    whisker_hi = float(inside.max())
    extremes = tuple(float(s) for s in np.sort(scores[(scores < whisker_lo) | (scores > whisker_hi)]))
    return RatingSummary(float(med), float(q1), float(q3), whisker_lo, whisker_hi, extremes)


def rating_summary(table: RatingsTable) -> dict[str, RatingSummary]:
    """Boxplot summary of the raw rated scores, per image."""
    return {
        image_id: summarize_scores(scores)
        for image_id, scores in table.by_image(normalized=False).items()
    }
