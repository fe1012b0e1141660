"""Scene- and dataset-level evaluation of prediction documents against annotations."""

from __future__ import annotations

import numpy as np

from .compose import SceneAnnotation
from .detection import Detection
from .formats import FormatError, mask_from_rle_obj
from .metrics import (
    MetricsReport,
    ap_suite,
    greedy_instance_matching,
    kendall_tau,
    mean_matched_iou,
    segmentation_metrics,
)

__all__ = ["evaluate_scene", "aggregate_reports", "render_table"]


def annotation_label_map(annotation: SceneAnnotation) -> np.ndarray:
    labels = np.zeros((annotation.height, annotation.width), dtype=np.int32)
    for inst in annotation.instances:
        labels[inst.mask] = inst.id
    return labels


def evaluate_scene(pred_doc: dict, annotation: SceneAnnotation) -> MetricsReport:
    """Score one prediction document against one scene annotation.

    Depth-order agreement pairs predicted and ground-truth instances via
    the greedy mask matching; it is reported as None when fewer than two
    matched pairs carry depth scores.
    """
    shape = (annotation.height, annotation.width)
    gt_labels = annotation_label_map(annotation)
    ink = gt_labels != 0

    pred_labels = np.zeros(shape, dtype=np.int32)
    detections: list[Detection] = []
    scores: dict[int, float | None] = {}
    for rec in pred_doc["instances"]:
        try:
            mask = mask_from_rle_obj(rec["mask_rle"])
            det = Detection(
                id=int(rec["id"]),
                x=float(rec["box"][0]),
                y=float(rec["box"][1]),
                w=float(rec["box"][2]),
                h=float(rec["box"][3]),
                confidence=float(rec["confidence"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed prediction instance: {exc}") from exc
        if mask.shape != shape:
            raise FormatError(
                f"prediction mask shape {mask.shape} does not match scene {shape}"
            )
        pred_labels[mask] = det.id
        detections.append(det)
        scores[det.id] = rec.get("depth_score")

    gt_boxes = [tuple(float(v) for v in inst.box) for inst in annotation.instances]
    suite = ap_suite(detections, gt_boxes)
    pixels = segmentation_metrics(pred_labels, gt_labels, ink)

    gt_to_pred, _ = greedy_instance_matching(pred_labels, gt_labels)
    rank_by_gt = {inst.id: float(inst.depth_rank) for inst in annotation.instances}
    pred_order = {}
    gt_order = {}
    for g, p in gt_to_pred.items():
        if scores.get(p) is None:
            continue
        pred_order[g] = float(scores[p])
        gt_order[g] = rank_by_gt[g]
    tau = kendall_tau(pred_order, gt_order) if len(pred_order) >= 2 else None

    return MetricsReport(
        iou_mean=mean_matched_iou(detections, gt_boxes),
        ar=suite["ar"],
        ap=suite["ap"],
        ap50=suite["ap50"],
        ap75=suite["ap75"],
        pixel_acc=pixels["pixel_acc"],
        seg_iou=pixels["seg_iou"],
        kendall_tau=tau,
    )


_FIELDS = ["iou_mean", "ar", "ap", "ap50", "ap75", "pixel_acc", "seg_iou", "kendall_tau"]


def _mean_std(values: list[float]) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    return float(np.mean(values)), float(np.std(values))


def aggregate_reports(
    reports: list[tuple[str, MetricsReport]]
) -> dict:
    """Per-dataset means plus an overall mean/std row, like a results table."""
    datasets: dict[str, list[MetricsReport]] = {}
    for dataset, report in reports:
        datasets.setdefault(dataset, []).append(report)
    out: dict = {"datasets": {}, "all": {}}
    for name in sorted(datasets):
        rows = datasets[name]
        out["datasets"][name] = {
            "scenes": len(rows),
            **{
                f: _mean_std([getattr(r, f) for r in rows if getattr(r, f) is not None])[0]
                for f in _FIELDS
            },
        }
    everything = [r for rows in datasets.values() for r in rows]
    summary = {"scenes": len(everything)}
    for f in _FIELDS:
        mean, std = _mean_std([getattr(r, f) for r in everything if getattr(r, f) is not None])
        summary[f] = mean
        summary[f + "_std"] = std
    out["all"] = summary
    return out


def render_table(aggregate: dict) -> str:
    """Plain-text table with per-dataset rows and a mean +/- std footer."""
    headers = ["dataset", "n"] + _FIELDS
    lines = ["  ".join(f"{h:>10}" for h in headers)]

    def fmt(value) -> str:
        return f"{value:>10.3f}" if value is not None else f"{'-':>10}"

    for name, row in aggregate["datasets"].items():
        cells = [f"{name:>10}", f"{row['scenes']:>10}"] + [fmt(row[f]) for f in _FIELDS]
        lines.append("  ".join(cells))
    summary = aggregate["all"]
    cells = [f"{'all':>10}", f"{summary['scenes']:>10}"] + [fmt(summary[f]) for f in _FIELDS]
    lines.append("  ".join(cells))
    stds = [
        f"{'+/-':>10}",
        f"{'':>10}",
    ] + [
        f"{summary[f + '_std']:>10.3f}" if summary[f + "_std"] is not None else f"{'-':>10}"
        for f in _FIELDS
    ]
    lines.append("  ".join(stds))
    return "\n".join(lines)
