"""Command-line pipeline: extract, icc, select, evaluate, analyze, synth.

Exit codes: 0 success, 1 input error, 2 analysis error, 3 partial
extraction failure under --strict. Output files carry the seed and the
effective config instead of timestamps, so reruns are byte-identical.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np
import pandas as pd

from . import io as dataio
from .analysis import (
    evaluate_predictions,
    feature_correlation_table,
    grouped_trait_analysis,
    render_correlation_text,
    render_grouped_text,
    render_report_text,
)
from .errors import AnalysisError, InputError, ProfileIqError
from .features import TOTAL_LENGTH, extract_all, load_annotation
from .images import load_image
from .reliability import (
    RatingsTable,
    aggregate_pi,
    icc_one_way,
    rating_summary,
    znormalize_raters,
)
from .selection import TraitFeatureSelector
from .svm import loocv
from .synth import survey_ratings_table, write_image_corpus, write_planted_corpus

EXIT_INPUT_ERROR = 1
EXIT_ANALYSIS_ERROR = 2
EXIT_PARTIAL_FAILURE = 3

MIN_RATINGS_WARNING = 24


def _map_errors(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except InputError as exc:
            click.echo(f"input error: {exc}", err=True)
            sys.exit(EXIT_INPUT_ERROR)
        except AnalysisError as exc:
            click.echo(f"analysis error: {exc}", err=True)
            sys.exit(EXIT_ANALYSIS_ERROR)

    return wrapper


def _load_config(config_path, seed, **overrides):
    config = dataio.load_config(config_path) if config_path else dataio.RunConfig()
    return dataio.apply_overrides(config, seed=seed, **overrides)


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


@click.group()
def main():
    """Trait estimation from profile images."""


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=None)
@click.option("--strict", is_flag=True, help="fail (exit 3) when any image cannot be processed")
@_map_errors
def extract(manifest_path, config_path, out_dir, seed, strict):
    """Extract the feature matrix for every manifest image."""
    config = _load_config(config_path, seed)
    manifest = dataio.load_manifest(manifest_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    kept = []
    failures = []
    smile_degrees = {}
    for _, row in manifest.iterrows():
        image_id = row["image_id"]
        try:
            img = load_image(row["image_path"])
            ann = None
            if row.get("annotation_path"):
                ann = load_annotation(row["annotation_path"])
                if ann.main_face() is not None and ann.main_face().smile_degree is not None:
                    smile_degrees[image_id] = ann.main_face().smile_degree
            rows.append(extract_all(img, ann, working_size=config.working_size))
            kept.append(image_id)
        except ProfileIqError as exc:
            failures.append({"image_id": image_id, "error": str(exc)})

    X = np.vstack(rows) if rows else np.empty((0, TOTAL_LENGTH))
    dataio.save_feature_cache(out / "features.bin", X)
    dataio.save_feature_csv(out / "features.csv", X)
    manifest[manifest["image_id"].isin(kept)].to_csv(out / "manifest.csv", index=False)
    _write_json(
        out / "extract_report.json",
        {
            "config": config.to_dict(),
            "seed": config.seed,
            "n_rows": len(kept),
            "n_columns": TOTAL_LENGTH,
            "image_ids": kept,
            "failures": failures,
            "smile_degrees": smile_degrees,
        },
    )
    for failure in failures:
        click.echo(f"failed: {failure['image_id']}: {failure['error']}", err=True)
    click.echo(f"extracted {len(kept)}/{len(manifest)} images -> {out / 'features.bin'}")
    if failures and strict:
        sys.exit(EXIT_PARTIAL_FAILURE)


@main.command()
@click.option("--ratings", "ratings_path", required=True, type=click.Path(exists=True))
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--raters", "raters_path", type=click.Path(exists=True),
              help="optional rater_id,gender metadata for per-rater-group scores")
@click.option("--out", "out_dir", required=True, type=click.Path())
@_map_errors
def icc(ratings_path, manifest_path, raters_path, out_dir):
    """Rater agreement plus per-image perceived scores, merged into the manifest."""
    manifest = dataio.load_manifest(manifest_path)
    table = dataio.load_ratings_csv(ratings_path)
    known = set(manifest["image_id"])
    for image_id in table.image_ids():
        if image_id not in known:
            raise InputError(f"ratings reference unknown image_id {image_id!r}")

    counts = {img: len(v) for img, v in table.by_image(normalized=False).items()}
    underrated = sorted(img for img, c in counts.items() if c < MIN_RATINGS_WARNING)
    if underrated:
        click.echo(
            f"warning: {len(underrated)} images have fewer than {MIN_RATINGS_WARNING} ratings",
            err=True,
        )

    normalized = znormalize_raters(table)
    result = icc_one_way(normalized)
    pi = aggregate_pi(normalized)
    summaries = rating_summary(normalized)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    merged = manifest.copy()
    merged["pi_score"] = merged["image_id"].map(pi)

    if raters_path:
        genders = dataio.load_rater_genders(raters_path)
        for group, label in (("M", "male"), ("F", "female")):
            rater_ids = {r for r, g in genders.items() if g == group}
            records = [r for r in normalized.records if r.rater_id in rater_ids]
            if records:
                sub_pi = aggregate_pi(RatingsTable(records=tuple(records)))
                merged[f"pi_{label}_raters"] = merged["image_id"].map(sub_pi)

    merged.to_csv(out / "manifest_with_pi.csv", index=False)

    summary_rows = [
        {
            "image_id": image_id,
            "n_ratings": counts[image_id],
            "median": s.median,
            "q1": s.q1,
            "q3": s.q3,
            "whisker_lo": s.whisker_lo,
            "whisker_hi": s.whisker_hi,
            "extremes": ";".join(f"{v:g}" for v in s.extremes),
        }
        for image_id, s in summaries.items()
    ]
    pd.DataFrame(summary_rows).to_csv(out / "rating_summary.csv", index=False)

    _write_json(
        out / "icc_report.json",
        {
            "icc": result.icc,
            "band": result.band,
            "sigma_r2": result.sigma_r2,
            "sigma_r2_raw": result.sigma_r2_raw,
            "sigma_e2": result.sigma_e2,
            "k_eff": result.k_eff,
            "n0": result.n0,
            "msb": result.msb,
            "msw": result.msw,
            "grand_mean": result.grand_mean,
            "n_images": result.n_images,
            "n_ratings": result.n_ratings,
            "underrated_images": underrated,
        },
    )
    click.echo(f"ICC = {result.icc:.4f} ({result.band}); scores for {len(pi)} images")


def _load_aligned_features(features_path, manifest):
    X = dataio.load_feature_matrix(features_path)
    if len(X) != len(manifest):
        raise InputError(
            f"feature matrix has {len(X)} rows but the manifest has {len(manifest)}; "
            "use the filtered manifest written by `extract`"
        )
    return X


def _target_scores(manifest, target: str) -> np.ndarray:
    column = {"mi": "mi_score", "pi": "pi_score"}[target]
    if column not in manifest.columns:
        raise InputError(f"manifest lacks the {column!r} column needed for target {target}")
    values = pd.to_numeric(manifest[column], errors="coerce")
    if values.isna().any():
        missing = manifest.loc[values.isna(), "image_id"].tolist()[:5]
        raise InputError(f"target {target} missing for images {missing}")
    return values.to_numpy(dtype=np.float64)


@main.command()
@click.option("--features", "features_path", required=True, type=click.Path(exists=True))
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--target", type=click.Choice(["mi", "pi"]), default="mi")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=None)
@_map_errors
def select(features_path, manifest_path, target, config_path, out_dir, seed):
    """Fit the PCA + F-test selection model on the whole dataset."""
    config = _load_config(config_path, seed)
    manifest = dataio.load_manifest(manifest_path)
    X = _load_aligned_features(features_path, manifest)
    y = _target_scores(manifest, target)
    k = "half" if config.k_rule == "half" else int(config.k_rule)
    selector = TraitFeatureSelector(k=k, target_kind=target).fit(X, y)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "selection_model.json", "w", encoding="utf-8") as fh:
        fh.write(selector.model_.to_json())
        fh.write("\n")
    click.echo(
        f"selected {len(selector.get_support())} of {selector.model_.pca.n_components} "
        f"components -> {out / 'selection_model.json'}"
    )


@main.command()
@click.option("--features", "features_path", required=True, type=click.Path(exists=True))
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--target", type=click.Choice(["mi", "pi"]), default="mi")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=None)
@click.option("--kernel", type=click.Choice(["rbf", "linear"]), default=None,
              help="override the configured kernel (linear is the ablation)")
@click.option("--shuffle-target", is_flag=True,
              help="permute the target before evaluation (leakage control)")
@_map_errors
def evaluate(features_path, manifest_path, target, config_path, out_dir, seed, kernel, shuffle_target):
    """Leave-one-out estimation of the target plus the full report."""
    config = _load_config(config_path, seed, kernel=kernel)
    manifest = dataio.load_manifest(manifest_path)
    X = _load_aligned_features(features_path, manifest)
    y = _target_scores(manifest, target)
    if len(y) < 3:
        raise InputError("evaluation needs at least 3 rows")

    y_used = y
    if shuffle_target:
        rng = np.random.default_rng(config.seed)
        y_used = y[rng.permutation(len(y))]

    result = loocv(
        X,
        y_used,
        target_kind=target,
        k_rule=config.k_rule,
        grid_spec=config.grid_spec(),
        inner_folds=config.inner_folds,
        seed=config.seed,
    )
    report = evaluate_predictions(
        y_used,
        result.predictions,
        target,
        seed=config.seed,
        random_runs=config.random_runs,
        shuffled_target=shuffle_target,
        failed_folds=result.failed,
    )

    targets = {}
    for name in ("mi", "pi"):
        column = {"mi": "mi_score", "pi": "pi_score"}[name]
        if column in manifest.columns and not pd.to_numeric(manifest[column], errors="coerce").isna().any():
            targets[name] = pd.to_numeric(manifest[column]).to_numpy(dtype=np.float64)
    table = feature_correlation_table(X, targets) if targets else None

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = report.to_dict()
    payload["config"] = config.to_dict()
    payload["fold_hyperparams"] = [
        {
            "index": r.index,
            "n_selected": r.n_selected,
            "error": r.error,
            "kernel": r.hyperparams.kernel if r.hyperparams else None,
            "C": r.hyperparams.C if r.hyperparams else None,
            "epsilon": r.hyperparams.epsilon if r.hyperparams else None,
            "gamma": r.hyperparams.gamma if r.hyperparams else None,
        }
        for r in result.fold_records
    ]
    _write_json(out / f"evaluation_{target}.json", payload)
    with open(out / f"evaluation_{target}.txt", "w", encoding="utf-8") as fh:
        fh.write(render_report_text(report))
        if table is not None:
            fh.write("\n")
            fh.write(render_correlation_text(table))

    pd.DataFrame(
        {
            "image_id": manifest["image_id"],
            "actual": y_used,
            "prediction": result.predictions,
        }
    ).to_csv(out / f"predictions_{target}.csv", index=False)

    if table is not None:
        _write_json(out / "feature_correlations.json", table.to_dict())
        columns = {"feature": list(table.names)}
        for name, tc in table.targets.items():
            columns[f"rho_{name}"] = tc.rho
            columns[f"p_{name}"] = tc.p
            columns[f"significant_{name}"] = tc.significant
        pd.DataFrame(columns).to_csv(out / "feature_correlations.csv", index=False)

    click.echo(render_report_text(report), nl=False)


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@_map_errors
def analyze(manifest_path, out_dir):
    """Grouped perceived/measured association with age control."""
    manifest = dataio.load_manifest(manifest_path)
    for column in ("mi_score", "pi_score", "gender", "age"):
        if column not in manifest.columns:
            raise InputError(f"analyze needs manifest column {column!r}")
    usable = manifest.dropna(subset=["mi_score", "pi_score", "gender", "age"])
    if len(usable) < len(manifest):
        click.echo(f"warning: dropped {len(manifest) - len(usable)} incomplete rows", err=True)

    rater_group_pi = {}
    for column in usable.columns:
        if column.startswith("pi_") and column.endswith("_raters"):
            values = pd.to_numeric(usable[column], errors="coerce")
            if not values.isna().any():
                group = column[len("pi_") : -len("_raters")]
                rater_group_pi[f"{group} raters"] = values.to_numpy(dtype=np.float64)

    analysis = grouped_trait_analysis(
        usable["mi_score"].to_numpy(dtype=np.float64),
        usable["pi_score"].to_numpy(dtype=np.float64),
        usable["gender"].tolist(),
        usable["age"].to_numpy(dtype=np.float64),
        rater_group_pi=rater_group_pi or None,
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "grouped_analysis.json", analysis.to_dict())
    text = render_grouped_text(analysis)
    with open(out / "grouped_analysis.txt", "w", encoding="utf-8") as fh:
        fh.write(text)
    click.echo(text, nl=False)


@main.command()
@click.option("--kind", type=click.Choice(["images", "planted", "ratings"]), required=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--n", type=int, default=20, help="number of images")
@click.option("--seed", type=int, default=0)
@click.option("--size", type=int, default=200, help="synthetic image side length")
@click.option("--snr", type=float, default=4.0, help="planted signal-to-noise variance ratio")
@click.option("--raters", type=int, default=24, help="raters for the ratings table")
@click.option("--subset", type=int, default=None, help="images rated per rater (default: all)")
@click.option("--manifest", "manifest_path", type=click.Path(exists=True),
              help="take image ids from this manifest for the ratings table")
@click.option("--annotations/--no-annotations", default=True)
@_map_errors
def synth(kind, out_dir, n, seed, size, snr, raters, subset, manifest_path, annotations):
    """Generate the seeded synthetic corpora used for desk-scale runs."""
    out = Path(out_dir)
    if kind == "images":
        manifest = write_image_corpus(out, n, seed=seed, size=size, with_annotations=annotations)
        click.echo(f"wrote {n}-image corpus -> {manifest}")
    elif kind == "planted":
        manifest = write_planted_corpus(out, n, seed=seed, size=size, snr=snr)
        click.echo(f"wrote planted corpus (snr={snr}) -> {manifest}")
    else:
        image_ids = None
        n_images = n
        if manifest_path:
            image_ids = dataio.load_manifest(manifest_path)["image_id"].tolist()
            n_images = len(image_ids)
        table = survey_ratings_table(
            n_images, raters, seed=seed, subset_size=subset, image_ids=image_ids
        )
        out.mkdir(parents=True, exist_ok=True)
        dataio.save_ratings_csv(out / "ratings.csv", table)
        click.echo(f"wrote {len(table.records)} ratings -> {out / 'ratings.csv'}")


if __name__ == "__main__":
    main()
