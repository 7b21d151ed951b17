"""Full-vector extraction and the sklearn-style transformer wrapper."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ..images import bilinear_resize, rgb_to_hsv, to_gray, validate_image
from .bodyface import FaceBodyAnnotation, body_face_features
from .color import colour_features
from .composition import composition_features
from .gabor import oriented_energy_maps
from .local import _local_from_parts
from .schema import TOTAL_LENGTH
from .texture import _texture_from_parts

DEFAULT_WORKING_SIZE = 256


def extract_all(
    img: np.ndarray,
    annotation: FaceBodyAnnotation | None = None,
    working_size: int = DEFAULT_WORKING_SIZE,
) -> np.ndarray:
    """Concatenated 4,111-dim descriptor for one image.

    Colour, composition, and skin statistics use the original pixels; the
    texture and local blocks run at the canonical working size. The result
    depends only on the arguments, so repeated runs are bit-identical.
    """
    img = validate_image(img)
    hsv_orig = rgb_to_hsv(img)

    resized = bilinear_resize(img, working_size, working_size)
    hsv_resized = rgb_to_hsv(resized) if resized is not img else hsv_orig
    gray_resized = to_gray(resized)
    energy_maps = oriented_energy_maps(gray_resized)

    vec = np.concatenate(
        [
            colour_features(img, hsv_orig),
            composition_features(img, hsv_orig),
            _texture_from_parts(hsv_resized, gray_resized, energy_maps),
            body_face_features(annotation, img),
            _local_from_parts(hsv_resized, gray_resized, energy_maps),
        ]
    )
    assert vec.shape == (TOTAL_LENGTH,)
    return vec


class FeatureExtractor(BaseEstimator, TransformerMixin):
    """Stateless transformer: profile images -> 4,111-dim feature rows.

    ``X`` is a sequence of images or of (image, annotation) pairs. The
    transform is embarrassingly parallel across rows and aggregates in
    input order, so the output is independent of scheduling.
    """

    def __init__(self, working_size: int = DEFAULT_WORKING_SIZE):
        self.working_size = working_size

    def fit(self, X=None, y=None):
        return self

    def transform(self, X) -> np.ndarray:
        rows = []
        for item in X:
            if isinstance(item, tuple):
                img, ann = item
            else:
                img, ann = item, None
            rows.append(extract_all(img, ann, working_size=self.working_size))
        return np.vstack(rows) if rows else np.empty((0, TOTAL_LENGTH))
