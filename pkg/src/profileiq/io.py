"""Dataset files: manifests, ratings CSVs, feature caches, run config.

Feature matrices persist in two interchangeable forms: a CSV with one
header column per schema name, and a binary cache ("PIQF" magic, u32
version, u64 row/col counts, row-major little-endian float64 payload).
The binary round-trip is exact.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import InputError
from .features.schema import TOTAL_LENGTH, feature_names
from .reliability import RatingsTable
from .svm import (
    DEFAULT_C_VALUES,
    DEFAULT_EPSILON_VALUES,
    DEFAULT_GAMMA_MULTIPLIERS,
    DEFAULT_INNER_FOLDS,
    GridSpec,
)

CACHE_MAGIC = b"PIQF"
CACHE_VERSION = 1

MANIFEST_REQUIRED = ("image_id", "image_path")
MANIFEST_OPTIONAL = ("gender", "age", "mi_score", "pi_score", "annotation_path")
GENDERS = ("M", "F", "unknown")


def save_feature_cache(path, X: np.ndarray) -> None:
    X = np.ascontiguousarray(np.asarray(X, dtype="<f8"))
    if X.ndim != 2:
        raise InputError("feature cache stores a 2-D matrix")
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<I", CACHE_VERSION))
        fh.write(struct.pack("<QQ", X.shape[0], X.shape[1]))
        fh.write(X.tobytes(order="C"))


def load_feature_cache(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CACHE_MAGIC:
            raise InputError(f"{path}: not a feature cache (bad magic {magic!r})")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != CACHE_VERSION:
            raise InputError(f"{path}: unsupported cache version {version}")
        rows, cols = struct.unpack("<QQ", fh.read(16))
        payload = fh.read(rows * cols * 8)
        if len(payload) != rows * cols * 8:
            raise InputError(f"{path}: truncated cache payload")
    return np.frombuffer(payload, dtype="<f8").reshape(rows, cols).copy()


def save_feature_csv(path, X: np.ndarray) -> None:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != TOTAL_LENGTH:
        raise InputError(f"feature CSV stores matrices with {TOTAL_LENGTH} columns")
    header = ",".join(feature_names())
    np.savetxt(path, X, fmt="%.17g", delimiter=",", header=header, comments="")


def load_feature_csv(path) -> np.ndarray:
    X = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if X.shape[1] != TOTAL_LENGTH:
        raise InputError(f"{path}: expected {TOTAL_LENGTH} feature columns, got {X.shape[1]}")
    return X


def load_feature_matrix(path) -> np.ndarray:
    """Dispatch on the file content: binary cache or CSV."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
    return load_feature_cache(path) if magic == CACHE_MAGIC else load_feature_csv(path)


def load_manifest(path) -> pd.DataFrame:
    """Read and validate the dataset manifest.

    Relative image/annotation paths resolve against the manifest's
    directory; resolved paths must exist. Extra columns (e.g. per-rater
    group perceived scores) pass through untouched.
    """
    path = Path(path)
    try:
        df = pd.read_csv(path, dtype={"image_id": str})
    except Exception as exc:
        raise InputError(f"cannot read manifest {path}: {exc}") from exc
    for col in MANIFEST_REQUIRED:
        if col not in df.columns:
            raise InputError(f"manifest {path} lacks required column {col!r}")
    if df["image_id"].duplicated().any():
        dupes = df.loc[df["image_id"].duplicated(), "image_id"].tolist()
        raise InputError(f"manifest has duplicate image_id values: {dupes}")

    base = path.parent

    def resolve(p):
        if pd.isna(p) or p == "":
            return None
        candidate = Path(p)
        if not candidate.is_absolute():
            candidate = base / candidate
        if not candidate.exists():
            raise InputError(f"manifest references missing file {candidate}")
        return str(candidate)

    df = df.copy()
    df["image_path"] = df["image_path"].map(resolve)
    if df["image_path"].isna().any():
        raise InputError("manifest has rows without image_path")
    if "annotation_path" in df.columns:
        df["annotation_path"] = df["annotation_path"].map(resolve)
    else:
        df["annotation_path"] = None
    if "gender" in df.columns:
        bad = set(df["gender"].dropna()) - set(GENDERS)
        if bad:
            raise InputError(f"manifest gender values must be in {GENDERS}, got {sorted(bad)}")
    if "age" in df.columns:
        ages = pd.to_numeric(df["age"], errors="coerce")
        if ((ages <= 0) & df["age"].notna()).any():
            raise InputError("manifest ages must be positive")
    return df


def load_ratings_csv(path) -> RatingsTable:
    """Parse the rater_id,image_id,score CSV into a validated table."""
    triples = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header.split(",")[:3] != ["rater_id", "image_id", "score"]:
            raise InputError(f"{path}:1: header must be rater_id,image_id,score")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise InputError(f"{path}:{lineno}: expected 3 fields, got {len(parts)}")
            rater_id, image_id, score = parts
            try:
                score_val = float(score)
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: score {score!r} is not numeric") from exc
            triples.append((rater_id, image_id, score_val))
    try:
        return RatingsTable.from_records(triples, strict_scale=True)
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from exc


def save_ratings_csv(path, table: RatingsTable) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("rater_id,image_id,score\n")
        for rec in table.records:
            score = int(rec.score) if rec.score == int(rec.score) else rec.score
            fh.write(f"{rec.rater_id},{rec.image_id},{score}\n")


def load_rater_genders(path) -> dict:
    """Optional rater metadata: rater_id,gender rows."""
    df = pd.read_csv(path, dtype=str)
    for col in ("rater_id", "gender"):
        if col not in df.columns:
            raise InputError(f"rater metadata {path} lacks column {col!r}")
    bad = set(df["gender"].dropna()) - set(GENDERS)
    if bad:
        raise InputError(f"rater genders must be in {GENDERS}, got {sorted(bad)}")
    return dict(zip(df["rater_id"], df["gender"]))


@dataclass(frozen=True)
class RunConfig:
    """Validated pipeline settings; every field has a CLI override."""

    working_size: int = 256
    block_grid: int = 4
    k_rule: str = "half"
    kernel: str = "rbf"
    svr_c: tuple = DEFAULT_C_VALUES
    svr_epsilon: tuple = DEFAULT_EPSILON_VALUES
    svr_gamma_multipliers: tuple = DEFAULT_GAMMA_MULTIPLIERS
    inner_folds: int = DEFAULT_INNER_FOLDS
    random_runs: int = 10
    seed: int = 0

    def validate(self) -> "RunConfig":
        if not (64 <= self.working_size <= 1024 and self.working_size % 16 == 0):
            raise InputError("working_size must be a multiple of 16 in [64, 1024]")
        if self.block_grid != 4:
            raise InputError("block_grid must be 4 (the feature schema is fixed)")
        if self.k_rule != "half":
            try:
                k = int(self.k_rule)
            except ValueError as exc:
                raise InputError("k_rule must be 'half' or an integer") from exc
            if k < 0:
                raise InputError("k_rule must be non-negative")
        if self.kernel not in ("rbf", "linear"):
            raise InputError("kernel must be 'rbf' or 'linear'")
        if not self.svr_c or any(v <= 0 for v in self.svr_c):
            raise InputError("svr_c must be a non-empty list of positive numbers")
        if not self.svr_gamma_multipliers or any(v <= 0 for v in self.svr_gamma_multipliers):
            raise InputError("svr_gamma_multipliers must be a non-empty list of positive numbers")
        if not self.svr_epsilon or any(v < 0 for v in self.svr_epsilon):
            raise InputError("svr_epsilon must be a non-empty list of values >= 0")
        if self.inner_folds < 2:
            raise InputError("inner_folds must be >= 2")
        if self.random_runs < 1:
            raise InputError("random_runs must be >= 1")
        if self.seed < 0:
            raise InputError("seed must be a non-negative integer")
        return self

    def grid_spec(self, kernel: str | None = None) -> GridSpec:
        return GridSpec(
            kernel=kernel or self.kernel,
            c_values=tuple(self.svr_c),
            epsilon_values=tuple(self.svr_epsilon),
            gamma_multipliers=tuple(self.svr_gamma_multipliers),
        )

    def to_dict(self) -> dict:
        return {
            "working_size": self.working_size,
            "block_grid": self.block_grid,
            "k_rule": self.k_rule,
            "kernel": self.kernel,
            "svr_c": list(self.svr_c),
            "svr_epsilon": list(self.svr_epsilon),
            "svr_gamma_multipliers": list(self.svr_gamma_multipliers),
            "inner_folds": self.inner_folds,
            "random_runs": self.random_runs,
            "seed": self.seed,
        }


_INT_KEYS = {"working_size", "block_grid", "inner_folds", "random_runs", "seed"}
_LIST_KEYS = {"svr_c", "svr_epsilon", "svr_gamma_multipliers"}
_STR_KEYS = {"k_rule", "kernel"}


def load_config(path) -> RunConfig:
    """Parse the flat ``key = value`` config file; '#' starts a comment."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key in _INT_KEYS:
                try:
                    values[key] = int(value)
                except ValueError as exc:
                    raise InputError(f"{path}:{lineno}: {key} must be an integer") from exc
            elif key in _LIST_KEYS:
                try:
                    values[key] = tuple(float(v) for v in value.split(",") if v.strip())
                except ValueError as exc:
                    raise InputError(f"{path}:{lineno}: {key} must be comma-separated numbers") from exc
            elif key in _STR_KEYS:
                values[key] = value
            else:
                raise InputError(f"{path}:{lineno}: unknown config key {key!r}")
    return RunConfig(**values).validate()


def apply_overrides(config: RunConfig, **overrides) -> RunConfig:
    updates = {k: v for k, v in overrides.items() if v is not None}
    return replace(config, **updates).validate() if updates else config.validate()
