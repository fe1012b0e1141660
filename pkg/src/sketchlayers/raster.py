"""Raster primitives shared by every pipeline stage.

Conventions used throughout the package:

* A sketch raster is a 2-D ``uint8`` array of shape ``(height, width)``,
  value 0 = black ink, 255 = white ground.
* A mask (ink mask or per-instance mask) is a 2-D ``bool`` array of the
  same shape.
* A scalar field is a 2-D ``float64`` array.
* A label map is a 2-D ``int32`` array, 0 = unassigned/background,
  positive values = instance ids.

All functions here are pure: inputs are never mutated and results are
freshly allocated, so values can be shared freely across threads.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage as ndi

__all__ = [
    "binarize",
    "morphological_close",
    "fill_holes",
    "distance_transform",
    "mask_iou",
    "connected_components",
    "rle_encode",
    "rle_decode",
    "rle_to_string",
    "rle_from_string",
]

# 4-connectivity structuring element, used for flood fill and component
# labelling; watershed neighbour propagation uses 8-connectivity instead
# (see depth.watershed_propagate).
_CROSS = ndi.generate_binary_structure(2, 1)

# Distance value reported for a field with no ink at all; an upper bound
# on any real pixel distance, kept finite so fields stay comparable.
def _max_distance(shape: tuple[int, int]) -> float:
    return float(np.hypot(shape[0], shape[1]))


def binarize(sketch: np.ndarray, threshold: int = 128) -> np.ndarray:
    """Return the ink mask of a grayscale sketch: True where intensity < threshold."""
    if not 0 <= threshold <= 255:
        raise ValueError(f"threshold must be in [0, 255], got {threshold}")
    sketch = np.asarray(sketch)
    if sketch.ndim != 2 or sketch.size == 0:
        raise ValueError(f"sketch must be a nonempty 2-D array, got shape {sketch.shape}")
    return sketch < threshold


def morphological_close(mask: np.ndarray, radius: int) -> np.ndarray:
    """Close a binary mask with a square structuring element of side 2*radius+1.

    Computed on a padded copy so the result matches closing on the
    infinite plane: the operation is extensive (output contains input)
    and idempotent, including at image borders.
    """
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    mask = np.asarray(mask, dtype=bool)
    if radius == 0 or not mask.any():
        return mask.copy()
    r = int(radius)
    se = np.ones((2 * r + 1, 2 * r + 1), dtype=bool)
    padded = np.pad(mask, r, mode="constant", constant_values=False)
    dilated = ndi.binary_dilation(padded, structure=se)
    closed = ndi.binary_erosion(dilated, structure=se, border_value=0)
    return closed[r:-r, r:-r]


def fill_holes(mask: np.ndarray) -> np.ndarray:
    """Fill enclosed background regions: False areas not 4-connected to the border."""
    mask = np.asarray(mask, dtype=bool)
    return ndi.binary_fill_holes(mask, structure=_CROSS)


def distance_transform(mask: np.ndarray) -> np.ndarray:
    """Exact Euclidean distance from each pixel to the nearest True pixel.

    True pixels hold 0. A mask with no True pixel yields a field filled
    with ``hypot(height, width)``, a finite upper bound on any pixel
    distance (the pipeline never reaches this case: empty ink fails
    earlier, at sampling).
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return np.full(mask.shape, _max_distance(mask.shape))
    return ndi.distance_transform_edt(~mask)


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    """Intersection-over-union of two binary masks; 0.0 when both are empty."""
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")
    union = np.count_nonzero(a | b)
    if union == 0:
        return 0.0
    inter = np.count_nonzero(a & b)
    return inter / union


def connected_components(mask: np.ndarray, connectivity: int = 4) -> tuple[np.ndarray, int]:
    """Label connected True regions; returns (int32 labels, component count)."""
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    structure = ndi.generate_binary_structure(2, 1 if connectivity == 4 else 2)
    labels, count = ndi.label(np.asarray(mask, dtype=bool), structure=structure)
    return labels.astype(np.int32), int(count)


def rle_encode(mask: np.ndarray) -> list[int]:
    """Row-major run-length encoding, alternating False/True starting with False.

    The first run counts leading False pixels and may be 0; runs always
    sum to ``height * width``.
    """
    mask = np.asarray(mask, dtype=bool)
    flat = mask.ravel()
    if flat.size == 0:
        return []
    changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], changes, [flat.size]))
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs.insert(0, 0)
    return [int(r) for r in runs]


def rle_decode(runs: list[int], shape: tuple[int, int]) -> np.ndarray:
    """Inverse of :func:`rle_encode`; rejects run lists that do not cover the raster."""
    height, width = shape
    total = height * width
    runs = [int(r) for r in runs]
    if any(r < 0 for r in runs):
        raise ValueError("run lengths must be nonnegative")
    if sum(runs) != total:
        raise ValueError(f"run lengths sum to {sum(runs)}, expected {total} for shape {shape}")
    flat = np.zeros(total, dtype=bool)
    pos = 0
    value = False
    for run in runs:
        if value:
            flat[pos : pos + run] = True
        pos += run
        value = not value
    return flat.reshape(height, width)


def rle_to_string(runs: list[int]) -> str:
    return ",".join(str(r) for r in runs)


def rle_from_string(text: str) -> list[int]:
    text = text.strip()
    if not text:
        return []
    return [int(tok) for tok in text.split(",")]
