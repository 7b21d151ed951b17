"""Computational-aesthetics descriptors for profile images."""

from .bodyface import (
    BBox,
    FaceAnnotation,
    FaceBodyAnnotation,
    body_face_features,
    load_annotation,
    parse_annotation,
    skin_ratio,
)
from .color import colour_features
from .composition import composition_features
from .extractor import DEFAULT_WORKING_SIZE, FeatureExtractor, extract_all
from .local import local_features
from .schema import (
    COLOUR_NAMES,
    GROUP_LENGTHS,
    LOCAL_GROUPS,
    REPORT_GROUPS,
    TOTAL_LENGTH,
    face_count_index,
    feature_names,
    group_slices,
)
from .texture import texture_features

__all__ = [
    "BBox",
    "COLOUR_NAMES",
    "DEFAULT_WORKING_SIZE",
    "FaceAnnotation",
    "FaceBodyAnnotation",
    "FeatureExtractor",
    "GROUP_LENGTHS",
    "LOCAL_GROUPS",
    "REPORT_GROUPS",
    "TOTAL_LENGTH",
    "body_face_features",
    "colour_features",
    "composition_features",
    "extract_all",
    "face_count_index",
    "feature_names",
    "group_slices",
    "load_annotation",
    "local_features",
    "parse_annotation",
    "skin_ratio",
    "texture_features",
]
