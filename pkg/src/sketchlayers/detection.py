"""Candidate mask cleanup and mask-aware suppression of redundant detections.

Box IoU is a poor redundancy signal on sketches because objects rarely
fill their boxes. The filter here scores a pair of box-overlapping
detections by the IoU of their masks restricted to ink pixels, and
greedily suppresses the lower-confidence member of every pair scoring
above the threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import fill_holes, mask_iou, morphological_close

__all__ = [
    "Detection",
    "CandidateSet",
    "boxes_intersect",
    "clean_mask",
    "overlap_score",
    "filter_detections",
]


@dataclass(frozen=True)
class Detection:
    """An axis-aligned box with a confidence score and a scene-unique id."""

    id: int
    x: float
    y: float
    w: float
    h: float
    confidence: float

    def __post_init__(self) -> None:
        if self.id < 1:
            raise ValueError(f"detection id must be >= 1 (0 is background), got {self.id}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"detection {self.id}: box must have positive size, got {self.w}x{self.h}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"detection {self.id}: confidence must be in [0, 1], got {self.confidence}")

    @property
    def box(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)


@dataclass
class CandidateSet:
    """Parallel lists of detections and their instance masks (mask i belongs to detection i)."""

    detections: list[Detection]
    masks: list[np.ndarray]

    def __post_init__(self) -> None:
        if len(self.detections) != len(self.masks):
            raise ValueError(
                f"{len(self.detections)} detections but {len(self.masks)} masks"
            )
        ids = [d.id for d in self.detections]
        if len(set(ids)) != len(ids):
            raise ValueError(f"detection ids must be unique, got {sorted(ids)}")
        shapes = {m.shape for m in self.masks}
        if len(shapes) > 1:
            raise ValueError(f"masks disagree on shape: {sorted(shapes)}")

    def __len__(self) -> int:
        return len(self.detections)

    @property
    def ids(self) -> list[int]:
        return [d.id for d in self.detections]

    def mask_by_id(self) -> dict[int, np.ndarray]:
        return {d.id: m for d, m in zip(self.detections, self.masks)}


def boxes_intersect(a: Detection, b: Detection) -> bool:
    """True when the two boxes share positive area (touching edges do not count)."""
    return (
        a.x < b.x + b.w
        and b.x < a.x + a.w
        and a.y < b.y + b.h
        and b.y < a.y + a.h
    )


def clean_mask(mask: np.ndarray, radius: int = 1) -> np.ndarray:
    """Remove small artifacts from a candidate mask: close gaps, then fill holes."""
    return fill_holes(morphological_close(mask, radius))


def overlap_score(i: int, j: int, candidates: CandidateSet, ink: np.ndarray) -> float:
    """IoU of masks i and j after restriction to ink pixels."""
    if i == j:
        raise ValueError("overlap score is defined for distinct detections")
    ink = np.asarray(ink, dtype=bool)
    mi = candidates.masks[i]
    mj = candidates.masks[j]
    if mi.shape != ink.shape or mj.shape != ink.shape:
        raise ValueError(
            f"mask shapes {mi.shape}, {mj.shape} do not match ink shape {ink.shape}"
        )
    return mask_iou(mi & ink, mj & ink)


def filter_detections(
    candidates: CandidateSet,
    ink: np.ndarray,
    threshold: float = 0.5,
) -> tuple[CandidateSet, list[int]]:
    """Greedy suppression of redundant detections by ink-restricted mask IoU.

    Candidates are visited in descending confidence (ties broken toward
    the smaller id). A candidate is suppressed when some already-kept
    detection has an intersecting box and an overlap score above
    ``threshold``; pairs whose boxes do not intersect are never scored.

    Returns the surviving set (original input order) and the suppressed
    detection ids.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    order = sorted(
        range(len(candidates)),
        key=lambda k: (-candidates.detections[k].confidence, candidates.detections[k].id),
    )
    kept: list[int] = []
    suppressed: list[int] = []
    for k in order:
        det = candidates.detections[k]
        redundant = any(
            boxes_intersect(det, candidates.detections[j])
            and overlap_score(k, j, candidates, ink) > threshold
            for j in kept
        )
        if redundant:
            suppressed.append(det.id)
        else:
            kept.append(k)
    kept_in_input_order = sorted(kept)
    survivors = CandidateSet(
        detections=[candidates.detections[k] for k in kept_in_input_order],
        masks=[candidates.masks[k] for k in kept_in_input_order],
    )
    return survivors, sorted(suppressed)
