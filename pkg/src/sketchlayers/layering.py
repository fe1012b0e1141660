"""Depth-ordered layer decomposition, inpaint regions, and compositing.

Each surviving instance becomes a layer holding its isolated ink
(pixels the label map assigns to it) and an inpaint region: the union
of every other mask that touches its mask, clipped to its box. An
inpainting backend may fill that region so the layer stands alone when
dragged; without a backend the layer keeps its raw ink and is flagged
as stubbed.
"""

from __future__ import annotations

import base64
import os
from dataclasses import dataclass, replace
from typing import Mapping, Protocol

import numpy as np

from .depth import SegmentationResult
from .detection import CandidateSet

__all__ = [
    "Layer",
    "LayerStack",
    "InpaintBackend",
    "NullInpaintBackend",
    "HttpInpaintBackend",
    "backend_from_env",
    "isolate_layer",
    "intersecting_group",
    "build_inpaint_region",
    "complete_layer",
    "decompose",
    "composite",
    "render_ink",
    "translate_layer",
]

INPAINT_URL_ENV = "INKLAYER_INPAINT_URL"

WHITE = 255


@dataclass(frozen=True)
class Layer:
    """One instance: isolated ink, inpaint region, box, and optional completion."""

    instance_id: int
    ink: np.ndarray
    inpaint_region: np.ndarray
    box: tuple[float, float, float, float]
    depth: float
    completed: np.ndarray | None = None
    stubbed: bool = False

    @property
    def area(self) -> int:
        return int(np.count_nonzero(self.ink))


@dataclass
class LayerStack:
    """Layers ordered back-to-front by the (depth, area, id) cascade."""

    layers: list[Layer]
    width: int
    height: int

    def __post_init__(self) -> None:
        ids = [layer.instance_id for layer in self.layers]
        if len(set(ids)) != len(ids):
            raise ValueError(f"layer ids must be unique, got {sorted(ids)}")
        self.layers = sorted(
            self.layers, key=lambda l: (l.depth, l.area, l.instance_id)
        )


class InpaintBackend(Protocol):
    def complete(self, layer: Layer) -> tuple[np.ndarray | None, bool]:
        """Return (completed raster or None on failure, stubbed flag)."""


def render_ink(ink: np.ndarray) -> np.ndarray:
    """Render a binary ink mask to a grayscale raster: 0 on 255."""
    raster = np.full(ink.shape, WHITE, dtype=np.uint8)
    raster[np.asarray(ink, dtype=bool)] = 0
    return raster


class NullInpaintBackend:
    """Deterministic fallback: the layer keeps its raw ink, the region stays blank."""

    def complete(self, layer: Layer) -> tuple[np.ndarray, bool]:
        return render_ink(layer.ink), bool(layer.inpaint_region.any())


class HttpInpaintBackend:
    """POSTs {layer raster, region mask, box} as base64 PNGs to an HTTP endpoint."""

    def __init__(self, url: str, timeout: float = 30.0):
        self.url = url
        self.timeout = timeout

    def complete(self, layer: Layer) -> tuple[np.ndarray | None, bool]:
        import httpx

        from .formats import decode_image_bytes, encode_mask_png, encode_raster_png

        payload = {
            "layer": base64.b64encode(encode_raster_png(render_ink(layer.ink))).decode(),
            "region": base64.b64encode(encode_mask_png(layer.inpaint_region)).decode(),
            "box": list(layer.box),
        }
        try:
            response = httpx.post(self.url, json=payload, timeout=self.timeout)
            response.raise_for_status()
            data = response.json()
            completed = decode_image_bytes(base64.b64decode(data["completed"]))
        except Exception:
            # unreachable or misbehaving backend: mark incomplete, keep going
            return None, True
        if completed.shape != layer.ink.shape:
            return None, True
        return completed.astype(np.uint8), False


def backend_from_env(url: str | None = None) -> InpaintBackend:
    url = url if url is not None else os.environ.get(INPAINT_URL_ENV)
    if url:
        return HttpInpaintBackend(url)
    return NullInpaintBackend()


def isolate_layer(
    instance_id: int, labels: np.ndarray, ink: np.ndarray | None = None
) -> np.ndarray:
    """Mask of pixels the label map assigns to this instance."""
    isolated = np.asarray(labels) == instance_id
    if not isolated.any():
        raise KeyError(f"instance {instance_id} owns no pixel in the label map")
    if ink is not None and not (isolated <= np.asarray(ink, dtype=bool)).all():
        raise ValueError(f"instance {instance_id} is labeled outside the ink mask")
    return isolated


def intersecting_group(instance_id: int, masks: Mapping[int, np.ndarray]) -> set[int]:
    """Ids of the other masks that share at least one pixel with this one."""
    own = np.asarray(masks[instance_id], dtype=bool)
    return {
        other_id
        for other_id, mask in masks.items()
        if other_id != instance_id and (own & np.asarray(mask, dtype=bool)).any()
    }


def _box_interior(
    shape: tuple[int, int], box: tuple[float, float, float, float]
) -> np.ndarray:
    height, width = shape
    x, y, w, h = box
    x0 = max(0, int(np.floor(x)))
    y0 = max(0, int(np.floor(y)))
    x1 = min(width, int(np.ceil(x + w)))
    y1 = min(height, int(np.ceil(y + h)))
    interior = np.zeros(shape, dtype=bool)
    if x1 > x0 and y1 > y0:
        interior[y0:y1, x0:x1] = True
    return interior


def build_inpaint_region(
    instance_id: int,
    masks: Mapping[int, np.ndarray],
    box: tuple[float, float, float, float],
) -> np.ndarray:
    """Union of the masks intersecting this instance, clipped to its box."""
    shape = masks[instance_id].shape
    region = np.zeros(shape, dtype=bool)
    for other_id in intersecting_group(instance_id, masks):
        region |= np.asarray(masks[other_id], dtype=bool)
    return region & _box_interior(shape, box)


def complete_layer(layer: Layer, backend: InpaintBackend) -> Layer:
    completed, stubbed = backend.complete(layer)
    return replace(layer, completed=completed, stubbed=stubbed)


def decompose(
    result: SegmentationResult,
    candidates: CandidateSet,
    backend: InpaintBackend | None = None,
) -> tuple[LayerStack, list[int]]:
    """Build the layer stack from a finished segmentation.

    Instances that own no pixel (fully lost to overlap resolution) are
    skipped and returned as the second element. When a backend is given
    every layer is completed through it.
    """
    labels = result.labels
    score_by_id = result.score_by_id()
    masks = candidates.mask_by_id()
    layers: list[Layer] = []
    skipped: list[int] = []
    for det in candidates.detections:
        owned = labels == det.id
        if not owned.any():
            skipped.append(det.id)
            continue
        layer = Layer(
            instance_id=det.id,
            ink=owned,
            inpaint_region=build_inpaint_region(det.id, masks, det.box),
            box=det.box,
            depth=score_by_id[det.id],
        )
        if backend is not None:
            layer = complete_layer(layer, backend)
        layers.append(layer)
    height, width = labels.shape
    return LayerStack(layers=layers, width=width, height=height), skipped


def composite(stack: LayerStack) -> np.ndarray:
    """Painter's algorithm: back-to-front, non-white content overwrites."""
    canvas = np.full((stack.height, stack.width), WHITE, dtype=np.uint8)
    for layer in stack.layers:
        if layer.ink.shape != canvas.shape:
            raise ValueError(
                f"layer {layer.instance_id} shape {layer.ink.shape} does not match "
                f"canvas {canvas.shape}"
            )
        content = layer.completed if layer.completed is not None else render_ink(layer.ink)
        footprint = content != WHITE
        canvas[footprint] = content[footprint]
    return canvas


def translate_layer(layer: Layer, dx: int, dy: int) -> Layer:
    """Shift a layer's rasters by whole pixels; content moved off-canvas is dropped."""

    def shift_bool(mask: np.ndarray) -> np.ndarray:
        out = np.zeros_like(mask)
        _paste(out, mask, dx, dy)
        return out

    def shift_gray(raster: np.ndarray) -> np.ndarray:
        out = np.full_like(raster, WHITE)
        _paste(out, raster, dx, dy)
        return out

    x, y, w, h = layer.box
    return replace(
        layer,
        ink=shift_bool(layer.ink),
        inpaint_region=shift_bool(layer.inpaint_region),
        completed=None if layer.completed is None else shift_gray(layer.completed),
        box=(x + dx, y + dy, w, h),
    )


def _paste(out: np.ndarray, src: np.ndarray, dx: int, dy: int) -> None:
    height, width = src.shape
    src_y0 = max(0, -dy)
    src_x0 = max(0, -dx)
    src_y1 = min(height, height - dy)
    src_x1 = min(width, width - dx)
    if src_y1 <= src_y0 or src_x1 <= src_x0:
        return
    out[src_y0 + dy : src_y1 + dy, src_x0 + dx : src_x1 + dx] = src[
        src_y0:src_y1, src_x0:src_x1
    ]
