"""End-to-end orchestration: binarize, clean, filter, segment, layer.

Every stage is deterministic, so identical artifacts and configuration
produce bit-identical label maps and manifests regardless of how many
jobs run concurrently around them.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .config import PipelineConfig
from .depth import SegmentationResult, finalize_segmentation
from .detection import CandidateSet, clean_mask, filter_detections
from .layering import LayerStack, backend_from_env, decompose
from .raster import binarize, connected_components

__all__ = ["PipelineError", "RunReport", "PipelineResult", "run_pipeline"]


class PipelineError(RuntimeError):
    """A stage failed; the message names the stage."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass
class RunReport:
    """What the pipeline did beyond the happy path."""

    suppressed_ids: list[int] = field(default_factory=list)
    unreachable_ink_pixels: int = 0
    unreachable_components: int = 0
    stubbed_layer_ids: list[int] = field(default_factory=list)
    # instances that survived filtering but own no pixel after refinement
    pixel_less_ids: list[int] = field(default_factory=list)
    undersampled_ids: list[int] = field(default_factory=list)
    inkless_mask_ids: list[int] = field(default_factory=list)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class PipelineResult:
    labels: np.ndarray
    stack: LayerStack
    report: RunReport
    candidates: CandidateSet  # surviving detections, input order
    segmentation: SegmentationResult
    ink: np.ndarray


def _stage(name: str):
    def decorate(fn):
        def wrapper(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except PipelineError:
                raise
            except Exception as exc:
                raise PipelineError(name, str(exc)) from exc

        return wrapper

    return decorate


def run_pipeline(
    sketch: np.ndarray,
    candidates: CandidateSet,
    depth: np.ndarray,
    config: PipelineConfig = PipelineConfig(),
    use_depth: bool = True,
) -> PipelineResult:
    """Run refinement and layering over externally produced artifacts.

    ``sketch`` is a grayscale raster, ``candidates`` the detector/masker
    output, ``depth`` a per-pixel relative depth map in [0, 1] with
    larger values nearer. Raises :class:`PipelineError` with the failing
    stage's name on any inconsistency.
    """
    sketch = np.asarray(sketch)
    depth = np.asarray(depth, dtype=float)
    if depth.shape != sketch.shape:
        raise PipelineError(
            "depth",
            f"depth shape {depth.shape} does not match sketch shape {sketch.shape}",
        )
    if len(candidates) and candidates.masks[0].shape != sketch.shape:
        raise PipelineError(
            "detections",
            f"mask shape {candidates.masks[0].shape} does not match sketch shape {sketch.shape}",
        )
    if not np.isfinite(depth).all() or depth.min() < 0.0 or depth.max() > 1.0:
        raise PipelineError("depth", "depth values must be finite and in [0, 1]")

    ink = _stage("binarize")(binarize)(sketch, config.binarize_threshold)

    cleaned = _stage("clean")(
        lambda: CandidateSet(
            detections=list(candidates.detections),
            masks=[clean_mask(m, config.cleanup_radius) for m in candidates.masks],
        )
    )()

    survivors, suppressed = _stage("filter")(filter_detections)(
        cleaned, ink, config.overlap_threshold
    )

    segmentation = _stage("segment")(finalize_segmentation)(
        survivors,
        depth,
        ink,
        n=config.sample_points,
        bins=config.depth_bins,
        use_depth=use_depth,
    )

    backend = backend_from_env(config.inpaint_backend)
    stack, pixel_less = _stage("layering")(decompose)(segmentation, survivors, backend)

    _, unreachable_count = connected_components(segmentation.unreachable, connectivity=8)
    report = RunReport(
        suppressed_ids=suppressed,
        unreachable_ink_pixels=int(np.count_nonzero(segmentation.unreachable)),
        unreachable_components=unreachable_count,
        stubbed_layer_ids=sorted(l.instance_id for l in stack.layers if l.stubbed),
        pixel_less_ids=pixel_less,
        undersampled_ids=segmentation.undersampled_ids,
        inkless_mask_ids=segmentation.inkless_ids,
    )
    return PipelineResult(
        labels=segmentation.labels,
        stack=stack,
        report=report,
        candidates=survivors,
        segmentation=segmentation,
        ink=ink,
    )
