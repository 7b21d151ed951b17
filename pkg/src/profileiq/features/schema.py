"""Feature vector schema: group order, lengths, and per-dimension names.

The descriptor is a fixed 4,111-dim vector: 95 global dims (colour,
composition, texture, body & face) followed by 4,016 local dims computed
on a 4x4 block grid.
"""

from __future__ import annotations

from functools import lru_cache

COLOUR_NAMES = (
    "black",
    "blue",
    "brown",
    "green",
    "grey",
    "orange",
    "pink",
    "purple",
    "red",
    "white",
    "yellow",
)

GROUP_LENGTHS = (
    ("colour", 22),
    ("composition", 5),
    ("texture", 56),
    ("body_face", 12),
    ("local_colour_hist", 512),
    ("local_lbp", 944),
    ("local_gist", 512),
    ("local_sift", 2048),
)

TOTAL_LENGTH = sum(n for _, n in GROUP_LENGTHS)  # 4111
GLOBAL_LENGTH = 95

#: Table-style reporting groups: the 95 global dims are pooled into one row.
REPORT_GROUPS = (
    "global",
    "local_colour_hist",
    "local_lbp",
    "local_gist",
    "local_sift",
)

LOCAL_GROUPS = ("local_colour_hist", "local_lbp", "local_gist", "local_sift")

BLOCK_GRID = 4
N_BLOCKS = BLOCK_GRID * BLOCK_GRID


def group_slices() -> dict[str, slice]:
    """Column slice of each group within the full vector."""
    out = {}
    start = 0
    for name, length in GROUP_LENGTHS:
        out[name] = slice(start, start + length)
        start += length
    return out


def _colour_feature_names():
    names = [
        "hue_circular_variance",
        "saturation_mean",
        "value_mean",
        "saturation_std",
        "value_std",
        "valence",
        "arousal",
        "dominance",
        "colourfulness",
    ]
    names += [f"name_{c}" for c in COLOUR_NAMES]
    names += ["dark_channel", "colour_sensitivity"]
    return names


def _composition_feature_names():
    return [
        "edge_pixel_ratio",
        "region_count",
        "region_mean_size",
        "symmetry_horizontal",
        "symmetry_vertical",
    ]


def _texture_feature_names():
    names = ["gray_entropy"]
    names += [f"sharpness_{s}" for s in ("mean", "var", "min", "max")]
    for ch in "hsv":
        names += [f"wavelet_{ch}_level{lv}" for lv in (1, 2, 3)]
    names += [f"wavelet_{ch}_sum" for ch in "hsv"]
    names += ["tamura_coarseness", "tamura_contrast", "tamura_directionality"]
    for ch in "hsv":
        names += [f"glcm_{ch}_{p}" for p in ("contrast", "correlation", "energy", "homogeneity")]
    for scale in range(3):
        names += [f"gist_s{scale}_o{o}" for o in range(8)]
    return names


def _body_face_feature_names():
    return [
        "body_present",
        "main_body_proportion",
        "skin_ratio",
        "face_count",
        "main_face_proportion",
        "main_face_center_x",
        "main_face_center_y",
        "glasses_normal",
        "glasses_sun",
        "head_pitch",
        "head_roll",
        "head_yaw",
    ]


def _block_names(prefix: str, per_block: int, tag: str):
    names = []
    for by in range(BLOCK_GRID):
        for bx in range(BLOCK_GRID):
            names += [f"{prefix}_b{by}{bx}_{tag}{i:03d}" for i in range(per_block)]
    return names


@lru_cache(maxsize=1)
def feature_names() -> tuple[str, ...]:
    """Ordered (group, name) labels flattened to 'group.name' strings."""
    per_group = {
        "colour": _colour_feature_names(),
        "composition": _composition_feature_names(),
        "texture": _texture_feature_names(),
        "body_face": _body_face_feature_names(),
        "local_colour_hist": _block_names("hist", 32, "bin"),
        "local_lbp": _block_names("lbp", 59, "u"),
        "local_gist": _block_names("gist", 32, "g"),
        "local_sift": _block_names("sift", 128, "d"),
    }
    labels = []
    for group, length in GROUP_LENGTHS:
        names = per_group[group]
        assert len(names) == length, (group, len(names), length)
        labels += [f"{group}.{n}" for n in names]
    assert len(labels) == TOTAL_LENGTH
    return tuple(labels)


#: Index of the face-count dimension, used to restrict body/face correlation
#: analysis to face-bearing images.
def face_count_index() -> int:
    return feature_names().index("body_face.face_count")
