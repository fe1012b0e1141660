"""Synthetic scene assembly from an object-sketch library and a layout.

Objects are scaled to fit their target boxes while preserving aspect
ratio and rendered back-to-front by depth rank; nearer placements erase
earlier ink at shared pixels, so the resulting per-instance masks are
disjoint and together cover every scene ink pixel. The composer also
emits a synthetic depth map (one uniform value per instance region,
monotone in rank) so the refinement pipeline can be driven by a
perfectly consistent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .detection import CandidateSet, Detection

__all__ = [
    "LayoutEntry",
    "AnnotatedInstance",
    "SceneAnnotation",
    "ComposedScene",
    "place_object",
    "compose_scene",
    "synthetic_depth_value",
    "oracle_candidates",
]


@dataclass(frozen=True)
class LayoutEntry:
    """One object placement: library key, target box, depth rank (smaller = farther)."""

    key: str
    x: int
    y: int
    w: int
    h: int
    rank: int


@dataclass
class AnnotatedInstance:
    id: int
    box: tuple[int, int, int, int]  # tight around the instance's surviving ink
    mask: np.ndarray
    depth_rank: int


@dataclass
class SceneAnnotation:
    width: int
    height: int
    instances: list[AnnotatedInstance]


@dataclass
class ComposedScene:
    sketch: np.ndarray  # uint8 raster, ink black on white
    ink: np.ndarray  # bool
    depth: np.ndarray  # float in [0, 1], larger = nearer
    annotation: SceneAnnotation
    # layout entries whose ink was fully occluded and dropped
    occluded_keys: list[str]


def place_object(
    object_ink: np.ndarray, box: tuple[int, int, int, int], canvas_shape: tuple[int, int]
) -> np.ndarray:
    """Scale an object mask into a box (aspect preserved) and center it.

    The object is cropped to its tight ink bounds, scaled by
    ``min(box_w/obj_w, box_h/obj_h)`` with nearest-neighbor resampling,
    and centered in the box. Returns a full-canvas mask.
    """
    object_ink = np.asarray(object_ink, dtype=bool)
    if not object_ink.any():
        raise ValueError("object mask is empty")
    x, y, w, h = box
    if w <= 0 or h <= 0:
        raise ValueError(f"degenerate box {box}")
    height, width = canvas_shape
    if x < 0 or y < 0 or x + w > width or y + h > height:
        raise ValueError(f"box {box} does not fit canvas {width}x{height}")

    rows, cols = np.nonzero(object_ink)
    cropped = object_ink[rows.min() : rows.max() + 1, cols.min() : cols.max() + 1]
    obj_h, obj_w = cropped.shape
    scale = min(w / obj_w, h / obj_h)
    target_w = max(1, round(obj_w * scale))
    target_h = max(1, round(obj_h * scale))

    # nearest-neighbor via pixel-center index mapping; exact block
    # replication for integer upscales
    src_rows = np.floor((np.arange(target_h) + 0.5) * obj_h / target_h).astype(int)
    src_cols = np.floor((np.arange(target_w) + 0.5) * obj_w / target_w).astype(int)
    scaled = cropped[np.ix_(src_rows, src_cols)]

    off_x = x + (w - target_w) // 2
    off_y = y + (h - target_h) // 2
    placed = np.zeros(canvas_shape, dtype=bool)
    placed[off_y : off_y + target_h, off_x : off_x + target_w] = scaled
    return placed


def synthetic_depth_value(rank_position: int, total: int, bins: int = 10) -> float:
    """Depth value for the rank_position-th farthest of ``total`` instances.

    Values are bin midpoints so quantization reproduces them exactly;
    they increase strictly with nearness whenever ``total <= bins``.
    """
    bin_index = (bins * (rank_position + 1)) // (total + 1)
    bin_index = min(bin_index, bins - 1)
    return (bin_index + 0.5) / bins


def compose_scene(
    layout: list[LayoutEntry],
    library: Mapping[str, np.ndarray],
    width: int,
    height: int,
    depth_bins: int = 10,
) -> ComposedScene:
    """Render a layout back-to-front and derive ground-truth annotations.

    Ground-truth mask of an instance is its placed ink minus the ink of
    every nearer instance; boxes are recomputed tight around the
    surviving ink. Instances that lose all their ink to occlusion are
    dropped from the annotation and reported.
    """
    ranks = [entry.rank for entry in layout]
    if len(set(ranks)) != len(ranks):
        raise ValueError(f"depth ranks must be unique per scene, got {sorted(ranks)}")
    missing = [entry.key for entry in layout if entry.key not in library]
    if missing:
        raise ValueError(f"layout keys missing from library: {missing}")

    canvas_shape = (height, width)
    order = sorted(range(len(layout)), key=lambda i: layout[i].rank)
    placed = {
        i: place_object(library[layout[i].key], (layout[i].x, layout[i].y, layout[i].w, layout[i].h), canvas_shape)
        for i in order
    }

    ink = np.zeros(canvas_shape, dtype=bool)
    depth = np.zeros(canvas_shape, dtype=float)
    total = len(layout)
    for pos, i in enumerate(order):
        ink |= placed[i]
        depth[placed[i]] = synthetic_depth_value(pos, total, depth_bins)

    instances: list[AnnotatedInstance] = []
    occluded: list[str] = []
    for pos, i in enumerate(order):
        mask = placed[i].copy()
        for j in order[pos + 1 :]:  # nearer instances erase shared pixels
            mask &= ~placed[j]
        if not mask.any():
            occluded.append(layout[i].key)
            continue
        rows, cols = np.nonzero(mask)
        box = (
            int(cols.min()),
            int(rows.min()),
            int(cols.max() - cols.min() + 1),
            int(rows.max() - rows.min() + 1),
        )
        instances.append(
            AnnotatedInstance(id=i + 1, box=box, mask=mask, depth_rank=layout[i].rank)
        )
    instances.sort(key=lambda inst: inst.id)

    sketch = np.full(canvas_shape, 255, dtype=np.uint8)
    sketch[ink] = 0
    return ComposedScene(
        sketch=sketch,
        ink=ink,
        depth=depth,
        annotation=SceneAnnotation(width=width, height=height, instances=instances),
        occluded_keys=occluded,
    )


def oracle_candidates(
    annotation: SceneAnnotation, confidence: float = 0.9
) -> CandidateSet:
    """Turn ground-truth instances into a candidate set for oracle pipeline runs."""
    detections = [
        Detection(
            id=inst.id,
            x=float(inst.box[0]),
            y=float(inst.box[1]),
            w=float(inst.box[2]),
            h=float(inst.box[3]),
            confidence=confidence,
        )
        for inst in annotation.instances
    ]
    masks = [inst.mask for inst in annotation.instances]
    return CandidateSet(detections=detections, masks=masks)
