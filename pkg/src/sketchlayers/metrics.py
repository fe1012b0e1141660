"""Detection and segmentation metrics, instance-averaged and class-agnostic.

Average precision follows the 101-point interpolation convention over
IoU thresholds 0.50:0.05:0.95; detection-to-ground-truth matching is
greedy in descending confidence, each detection taking the unmatched
ground truth of highest IoU at or above the threshold. Pixel metrics
match predicted to ground-truth instances greedily by mask IoU, so they
are invariant to relabeling. Depth-order agreement uses Kendall's tau
(tau-b under ties).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .detection import Detection
from .raster import mask_iou

__all__ = [
    "MetricsReport",
    "box_iou",
    "match_detections",
    "average_precision",
    "ap_suite",
    "segmentation_metrics",
    "kendall_tau",
]

AP_THRESHOLDS = [0.50 + 0.05 * i for i in range(10)]
# exact k/100 values so interpolation decisions match exact-rational oracles
RECALL_POINTS = np.arange(101) / 100.0

Box = tuple[float, float, float, float]


@dataclass
class MetricsReport:
    """One row of the evaluation table."""

    iou_mean: float
    ar: float
    ap: float
    ap50: float
    ap75: float
    pixel_acc: float
    seg_iou: float
    kendall_tau: float | None = None

    def as_dict(self) -> dict[str, float | None]:
        return {
            "iou_mean": self.iou_mean,
            "ar": self.ar,
            "ap": self.ap,
            "ap50": self.ap50,
            "ap75": self.ap75,
            "pixel_acc": self.pixel_acc,
            "seg_iou": self.seg_iou,
            "kendall_tau": self.kendall_tau,
        }


def box_iou(a: Box, b: Box) -> float:
    """Intersection area over union area of two (x, y, w, h) rectangles."""
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    if aw <= 0 or ah <= 0 or bw <= 0 or bh <= 0:
        raise ValueError(f"boxes must have positive dimensions, got {a} and {b}")
    ix = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    union = aw * ah + bw * bh - inter
    return inter / union


def _sorted_detections(dets: Sequence[Detection]) -> list[Detection]:
    return sorted(dets, key=lambda d: (-d.confidence, d.id))


def match_detections(
    dets: Sequence[Detection], gts: Sequence[Box], iou_thr: float
) -> list[tuple[Detection, int | None, float]]:
    """Greedy matching in descending confidence.

    Each detection takes the unmatched ground truth of highest IoU >=
    iou_thr (ties toward the lower GT index). Returns, per detection in
    visit order, (detection, matched GT index or None, match IoU).
    """
    taken = [False] * len(gts)
    matches: list[tuple[Detection, int | None, float]] = []
    for det in _sorted_detections(dets):
        best_idx: int | None = None
        best_iou = 0.0
        for g, gt in enumerate(gts):
            if taken[g]:
                continue
            iou = box_iou(det.box, gt)
            if iou >= iou_thr and iou > best_iou:
                best_iou = iou
                best_idx = g
        if best_idx is not None:
            taken[best_idx] = True
            matches.append((det, best_idx, best_iou))
        else:
            matches.append((det, None, 0.0))
    return matches


def average_precision(
    dets: Sequence[Detection], gts: Sequence[Box], iou_thr: float
) -> float:
    """101-point interpolated AP at one IoU threshold.

    Defined as 1.0 when both sides are empty (vacuously perfect) and 0.0
    when detections exist but no ground truth does.
    """
    if not gts:
        return 1.0 if not dets else 0.0
    if not dets:
        return 0.0
    matches = match_detections(dets, gts, iou_thr)
    tp = np.cumsum([1 if idx is not None else 0 for _, idx, _ in matches])
    ranks = np.arange(1, len(matches) + 1)
    precision = tp / ranks
    recall = tp / len(gts)
    interpolated = 0.0
    for r in RECALL_POINTS:
        mask = recall >= r
        interpolated += precision[mask].max() if mask.any() else 0.0
    return float(interpolated / len(RECALL_POINTS))


def _recall(dets: Sequence[Detection], gts: Sequence[Box], iou_thr: float) -> float:
    if not gts:
        return 1.0 if not dets else 0.0
    if not dets:
        return 0.0
    matches = match_detections(dets, gts, iou_thr)
    matched = sum(1 for _, idx, _ in matches if idx is not None)
    return matched / len(gts)


def mean_matched_iou(dets: Sequence[Detection], gts: Sequence[Box]) -> float:
    """Mean over ground-truth boxes of the IoU with their matched detection.

    Matching is greedy with no threshold (any positive IoU counts);
    unmatched ground truths contribute 0.
    """
    if not gts:
        return 1.0 if not dets else 0.0
    matches = match_detections(dets, gts, iou_thr=0.0)
    per_gt = {idx: iou for _, idx, iou in matches if idx is not None}
    return sum(per_gt.get(g, 0.0) for g in range(len(gts))) / len(gts)


def ap_suite(dets: Sequence[Detection], gts: Sequence[Box]) -> dict[str, float]:
    """AP over thresholds 0.50:0.05:0.95 plus AP@50, AP@75, and AR."""
    aps = [average_precision(dets, gts, thr) for thr in AP_THRESHOLDS]
    recalls = [_recall(dets, gts, thr) for thr in AP_THRESHOLDS]
    return {
        "ap": float(np.mean(aps)),
        "ap50": aps[0],
        "ap75": aps[5],
        "ar": float(np.mean(recalls)),
    }


def _instance_masks(labels: np.ndarray) -> dict[int, np.ndarray]:
    return {int(i): labels == i for i in np.unique(labels) if i != 0}


def greedy_instance_matching(
    pred: np.ndarray, gt: np.ndarray
) -> tuple[dict[int, int], dict[int, float]]:
    """Match predicted to ground-truth instances greedily by mask IoU.

    Returns (gt id -> pred id) for matched pairs and (gt id -> IoU).
    Ties break toward the smaller gt id, then the smaller pred id.
    """
    pred_masks = _instance_masks(pred)
    gt_masks = _instance_masks(gt)
    pairs = []
    for g, gm in gt_masks.items():
        for p, pm in pred_masks.items():
            iou = mask_iou(gm, pm)
            if iou > 0.0:
                pairs.append((iou, g, p))
    pairs.sort(key=lambda t: (-t[0], t[1], t[2]))
    gt_to_pred: dict[int, int] = {}
    gt_iou: dict[int, float] = {}
    used_pred: set[int] = set()
    for iou, g, p in pairs:
        if g in gt_to_pred or p in used_pred:
            continue
        gt_to_pred[g] = p
        gt_iou[g] = iou
        used_pred.add(p)
    return gt_to_pred, gt_iou


def segmentation_metrics(
    pred: np.ndarray, gt: np.ndarray, ink: np.ndarray
) -> dict[str, float]:
    """Pixel accuracy and mean instance IoU of a predicted label map.

    Accuracy is the fraction of ink pixels whose predicted label maps to
    their ground-truth instance under the greedy matching (background
    agreeing with background also counts). Segmentation IoU is the mean
    over ground-truth instances of the IoU with their matched
    prediction, 0 for unmatched instances.
    """
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    ink = np.asarray(ink, dtype=bool)
    if pred.shape != gt.shape or pred.shape != ink.shape:
        raise ValueError(
            f"shape mismatch: pred {pred.shape}, gt {gt.shape}, ink {ink.shape}"
        )
    gt_to_pred, gt_iou = greedy_instance_matching(pred, gt)

    ink_total = int(np.count_nonzero(ink))
    if ink_total == 0:
        acc = 1.0
    else:
        remapped = np.zeros_like(pred)
        for g, p in gt_to_pred.items():
            remapped[pred == p] = g
        correct = (remapped == gt) & ink & ((gt != 0) | (pred == 0))
        acc = float(np.count_nonzero(correct) / ink_total)

    gt_ids = [int(i) for i in np.unique(gt) if i != 0]
    if not gt_ids:
        seg_iou = 1.0 if not _instance_masks(pred) else 0.0
    else:
        seg_iou = float(sum(gt_iou.get(g, 0.0) for g in gt_ids) / len(gt_ids))
    return {"pixel_acc": acc, "seg_iou": seg_iou}


def kendall_tau(
    pred_order: Mapping[int, float], gt_order: Mapping[int, float]
) -> float:
    """Rank agreement between two orderings of the same instance ids.

    (concordant - discordant) / C(n, 2) for tie-free rankings; tau-b
    with tie correction when either side has ties. Defined as 1.0 for
    fewer than two instances (vacuous agreement).
    """
    if set(pred_order) != set(gt_order):
        raise ValueError(
            f"rankings cover different ids: {sorted(pred_order)} vs {sorted(gt_order)}"
        )
    ids = sorted(pred_order)
    n = len(ids)
    if n < 2:
        return 1.0
    concordant = discordant = ties_pred = ties_gt = 0
    for a in range(n):
        for b in range(a + 1, n):
            dp = pred_order[ids[a]] - pred_order[ids[b]]
            dg = gt_order[ids[a]] - gt_order[ids[b]]
            if dp == 0 and dg == 0:
                ties_pred += 1
                ties_gt += 1
            elif dp == 0:
                ties_pred += 1
            elif dg == 0:
                ties_gt += 1
            elif (dp > 0) == (dg > 0):
                concordant += 1
            else:
                discordant += 1
    n0 = n * (n - 1) // 2
    denom = np.sqrt(float(n0 - ties_pred) * float(n0 - ties_gt))
    if denom == 0.0:
        return 0.0
    return float((concordant - discordant) / denom)
