"""Seeded synthetic corpora for desk-scale runs and the acceptance suite.

Everything here is deterministic given the seed: smooth random test
images, a planted-signal corpus whose target is an affine function of
mean brightness plus noise, and ratings tables with known variance
components.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd
from PIL import Image

from .images import bilinear_resize
from .reliability import RatingsTable

DEFAULT_IMAGE_SIZE = 200


def smooth_random_image(rng: np.random.Generator, size: int = DEFAULT_IMAGE_SIZE,
                        brightness: float | None = None, texture: float = 0.5) -> np.ndarray:
    """Low-frequency colour field with optional pinned mean brightness."""
    coarse = rng.random((8, 8, 3))
    img = bilinear_resize(coarse, size, size)
    img += texture * 0.3 * rng.standard_normal((size, size, 3))
    img = np.clip(img, 0.0, 1.0)
    if brightness is not None:
        img = np.clip(img - img.mean() + brightness, 0.0, 1.0)
    return img


def random_annotation(rng: np.random.Generator) -> dict:
    """A plausible detector-output document; sometimes empty."""
    doc: dict = {"faces": [], "bodies": []}
    if rng.random() < 0.7:
        n_faces = int(rng.integers(1, 4))
        for _ in range(n_faces):
            w = float(rng.uniform(0.1, 0.5))
            h = float(rng.uniform(0.1, 0.5))
            face = {
                "bbox": {
                    "x": float(rng.uniform(0, 1 - w)),
                    "y": float(rng.uniform(0, 1 - h)),
                    "w": w,
                    "h": h,
                },
                "pitch": float(rng.uniform(-30, 30)),
                "roll": float(rng.uniform(-30, 30)),
                "yaw": float(rng.uniform(-45, 45)),
                "glasses": str(rng.choice(["none", "normal", "sun"])),
            }
            if rng.random() < 0.5:
                face["smile_degree"] = float(rng.uniform(0, 1))
            doc["faces"].append(face)
    if rng.random() < 0.5:
        w = float(rng.uniform(0.2, 0.8))
        h = float(rng.uniform(0.3, 0.9))
        doc["bodies"].append(
            {"x": float(rng.uniform(0, 1 - w)), "y": float(rng.uniform(0, 1 - h)), "w": w, "h": h}
        )
    return doc


def save_png(path, img: np.ndarray) -> None:
    data = np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(data, mode="RGB").save(path, format="PNG")


def write_image_corpus(
    out_dir,
    n: int,
    seed: int = 0,
    size: int = DEFAULT_IMAGE_SIZE,
    with_annotations: bool = True,
    with_scores: bool = True,
) -> Path:
    """General test corpus: images, optional annotations, manifest."""
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    if with_annotations:
        (out_dir / "annotations").mkdir(exist_ok=True)
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n):
        image_id = f"img{i:04d}"
        img = smooth_random_image(rng, size=size)
        rel_img = f"images/{image_id}.png"
        save_png(out_dir / rel_img, img)
        row = {
            "image_id": image_id,
            "image_path": rel_img,
            "gender": str(rng.choice(["M", "F"])),
            "age": int(rng.integers(16, 65)),
        }
        if with_scores:
            row["mi_score"] = float(np.clip(rng.normal(112.4, 14.5), 65.0, 139.0))
        if with_annotations and rng.random() < 0.8:
            rel_ann = f"annotations/{image_id}.json"
            with open(out_dir / rel_ann, "w", encoding="utf-8") as fh:
                json.dump(random_annotation(rng), fh, sort_keys=True)
            row["annotation_path"] = rel_ann
        rows.append(row)
    manifest = out_dir / "manifest.csv"
    pd.DataFrame(rows).to_csv(manifest, index=False)
    return manifest


def write_planted_corpus(
    out_dir,
    n: int,
    seed: int = 0,
    size: int = DEFAULT_IMAGE_SIZE,
    snr: float = 4.0,
    slope: float = 60.0,
    intercept: float = 100.0,
) -> Path:
    """Corpus whose measured score is affine in mean brightness plus noise.

    The brightness levels are spread uniformly, and the noise standard
    deviation is chosen so var(signal)/var(noise) equals ``snr``.
    """
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    brightness = rng.uniform(0.25, 0.75, size=n)
    signal = slope * (brightness - 0.5)
    noise_sd = float(signal.std() / np.sqrt(snr))
    noise = rng.normal(0.0, noise_sd, size=n)
    rows = []
    for i in range(n):
        image_id = f"img{i:04d}"
        img = smooth_random_image(rng, size=size, brightness=brightness[i], texture=0.4)
        rel_img = f"images/{image_id}.png"
        save_png(out_dir / rel_img, img)
        rows.append(
            {
                "image_id": image_id,
                "image_path": rel_img,
                "gender": str(rng.choice(["M", "F"])),
                "age": int(rng.integers(16, 65)),
                "mi_score": float(intercept + signal[i] + noise[i]),
            }
        )
    manifest = out_dir / "manifest.csv"
    pd.DataFrame(rows).to_csv(manifest, index=False)
    return manifest


def component_ratings_table(
    n_images: int,
    n_raters: int,
    sigma_r: float = 1.0,
    sigma_e: float = 1.0,
    seed: int = 0,
    mean: float = 0.0,
    rater_bias_sd: float = 0.0,
) -> RatingsTable:
    """Balanced continuous table with known variance components."""
    rng = np.random.default_rng(seed)
    image_effect = rng.normal(0.0, sigma_r, size=n_images)
    rater_bias = rng.normal(0.0, rater_bias_sd, size=n_raters) if rater_bias_sd > 0 else np.zeros(n_raters)
    noise = rng.normal(0.0, sigma_e, size=(n_images, n_raters))
    triples = []
    for j in range(n_raters):
        for i in range(n_images):
            score = mean + image_effect[i] + rater_bias[j] + noise[i, j]
            triples.append((f"rater{j:03d}", f"img{i:04d}", score))
    return RatingsTable.from_records(triples)


def survey_ratings_table(
    n_images: int,
    n_raters: int,
    seed: int = 0,
    sigma_r: float = 0.8,
    sigma_e: float = 0.6,
    rater_bias_sd: float = 0.4,
    subset_size: int | None = None,
    image_ids: list[str] | None = None,
) -> RatingsTable:
    """Discrete 1..7 table shaped like the rating survey.

    Each rater scores either every image or a random subset; raw scores
    are the rounded, clipped sum of an image effect, a rater bias, and
    noise around the scale midpoint.
    """
    rng = np.random.default_rng(seed)
    if image_ids is None:
        image_ids = [f"img{i:04d}" for i in range(n_images)]
    if len(image_ids) != n_images:
        raise ValueError("image_ids length must equal n_images")
    image_effect = rng.normal(0.0, sigma_r, size=n_images)
    rater_bias = rng.normal(0.0, rater_bias_sd, size=n_raters)
    triples = []
    for j in range(n_raters):
        if subset_size is None or subset_size >= n_images:
            chosen = range(n_images)
        else:
            chosen = sorted(rng.choice(n_images, size=subset_size, replace=False))
        for i in chosen:
            raw = 4.0 + image_effect[i] + rater_bias[j] + rng.normal(0.0, sigma_e)
            score = int(np.clip(round(raw), 1, 7))
            triples.append((f"rater{j:03d}", image_ids[i], score))
    return RatingsTable.from_records(triples, strict_scale=True)
