"""Body & face features (12 dims) from detector-output annotations.

Detection itself is not performed here: bounding boxes, pose angles, and
glasses labels come from a JSON sidecar produced by external detectors.
Only the skin-pixel ratio is computed from pixels, via a rule-based
RGB/YCbCr chroma classifier.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError

GLASSES_KINDS = ("none", "normal", "sun")


@dataclass(frozen=True)
class BBox:
    """Normalized rectangle: top-left (x, y) plus width/height, all in [0,1]."""

    x: float
    y: float
    w: float
    h: float

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)


@dataclass(frozen=True)
class FaceAnnotation:
    bbox: BBox
    pitch: float = 0.0
    roll: float = 0.0
    yaw: float = 0.0
    glasses: str = "none"
    smile_degree: float | None = None


@dataclass(frozen=True)
class FaceBodyAnnotation:
    faces: tuple[FaceAnnotation, ...] = ()
    bodies: tuple[BBox, ...] = ()
    extras: dict = field(default_factory=dict, compare=False)

    def main_face(self) -> FaceAnnotation | None:
        if not self.faces:
            return None
        return max(self.faces, key=lambda f: f.bbox.area)

    def main_body(self) -> BBox | None:
        if not self.bodies:
            return None
        return max(self.bodies, key=lambda b: b.area)


EMPTY_ANNOTATION = FaceBodyAnnotation()


def _parse_bbox(obj, where: str) -> BBox:
    try:
        box = BBox(float(obj["x"]), float(obj["y"]), float(obj["w"]), float(obj["h"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{where}: bbox must have numeric x/y/w/h") from exc
    eps = 1e-9
    if not (
        -eps <= box.x <= 1 + eps
        and -eps <= box.y <= 1 + eps
        and 0 <= box.w <= 1 + eps
        and 0 <= box.h <= 1 + eps
        and box.x + box.w <= 1 + eps
        and box.y + box.h <= 1 + eps
    ):
        raise InputError(f"{where}: bbox {box} exceeds the normalized frame")
    return box


def parse_annotation(data: dict) -> FaceBodyAnnotation:
    """Validate a decoded annotation document."""
    if not isinstance(data, dict):
        raise InputError("annotation must be a JSON object")
    faces = []
    for i, face in enumerate(data.get("faces", []) or []):
        where = f"faces[{i}]"
        if not isinstance(face, dict):
            raise InputError(f"{where}: expected an object")
        glasses = face.get("glasses", "none")
        if glasses not in GLASSES_KINDS:
            raise InputError(f"{where}: glasses must be one of {GLASSES_KINDS}")
        smile = face.get("smile_degree")
        if smile is not None:
            smile = float(smile)
            if not 0.0 <= smile <= 1.0:
                raise InputError(f"{where}: smile_degree must lie in [0, 1]")
        faces.append(
            FaceAnnotation(
                bbox=_parse_bbox(face.get("bbox", {}), where),
                pitch=float(face.get("pitch", 0.0)),
                roll=float(face.get("roll", 0.0)),
                yaw=float(face.get("yaw", 0.0)),
                glasses=glasses,
                smile_degree=smile,
            )
        )
    bodies = [
        _parse_bbox(b, f"bodies[{i}]") for i, b in enumerate(data.get("bodies", []) or [])
    ]
    known = {"faces", "bodies"}
    extras = {k: v for k, v in data.items() if k not in known}
    return FaceBodyAnnotation(faces=tuple(faces), bodies=tuple(bodies), extras=extras)


def load_annotation(path) -> FaceBodyAnnotation:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read annotation {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed annotation JSON {path!r}: {exc}") from exc
    return parse_annotation(data)


def skin_ratio(img: np.ndarray) -> float:
    """Fraction of pixels inside the skin-chroma box.

    A pixel is skin when it satisfies the classic RGB rule (dominant red,
    sufficient spread) or falls in the YCbCr chroma box Cb in [77, 127],
    Cr in [133, 173] (8-bit scale).
    """
    r = img[..., 0] * 255.0
    g = img[..., 1] * 255.0
    b = img[..., 2] * 255.0
    maxc = np.maximum(np.maximum(r, g), b)
    minc = np.minimum(np.minimum(r, g), b)
    rule_rgb = (
        (r > 95)
        & (g > 40)
        & (b > 20)
        & (maxc - minc > 15)
        & (np.abs(r - g) > 15)
        & (r > g)
        & (r > b)
    )
    cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b
    cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b
    rule_ycbcr = (cb >= 77) & (cb <= 127) & (cr >= 133) & (cr <= 173)
    return float((rule_rgb | rule_ycbcr).mean())


def body_face_features(ann: FaceBodyAnnotation | None, img: np.ndarray) -> np.ndarray:
    """All 12 body & face dims; absent detections yield zeros."""
    if ann is None:
        ann = EMPTY_ANNOTATION
    values = np.zeros(12)
    main_body = ann.main_body()
    if main_body is not None:
        values[0] = 1.0
        values[1] = main_body.area
    values[2] = skin_ratio(img)
    main_face = ann.main_face()
    if main_face is not None:
        values[3] = float(len(ann.faces))
        values[4] = main_face.bbox.area
        values[5], values[6] = main_face.bbox.center
        values[7] = 1.0 if main_face.glasses == "normal" else 0.0
        values[8] = 1.0 if main_face.glasses == "sun" else 0.0
        values[9] = main_face.pitch
        values[10] = main_face.roll
        values[11] = main_face.yaw
    return values
