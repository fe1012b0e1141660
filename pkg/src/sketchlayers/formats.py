"""File formats: images, detection/annotation documents, layer stacks.

* Masks: single-channel 8-bit PNG, 0 = false, 255 = true, or run-length
  arrays embedded in JSON documents.
* Depth maps: single-channel 16-bit PNG, values normalized to [0, 1] on
  load; a ``depth_convention`` text chunk records that larger means
  nearer, and a file declaring anything else is rejected.
* Label maps: 16-bit PNG (pixel value = instance id) plus a JSON palette
  sidecar for visualization.
* Detections: a JSON document with one record per detection carrying
  the box, confidence, and mask (file reference or embedded run-length).
* Scene annotations and predictions: JSON documents listing instances
  with boxes, run-length masks, and depth ranks/scores.
* Layer stacks: a directory of per-layer PNGs plus ``manifest.json``.

All JSON is written with sorted keys so identical content is
byte-identical on disk.
"""

from __future__ import annotations

import io
import json
from pathlib import Path

import numpy as np
from PIL import Image, PngImagePlugin

from .compose import AnnotatedInstance, SceneAnnotation
from .detection import CandidateSet, Detection
from .layering import Layer, LayerStack
from .raster import rle_decode, rle_encode

__all__ = [
    "FormatError",
    "DEPTH_CONVENTION",
    "load_sketch",
    "save_mask",
    "load_mask",
    "encode_mask_png",
    "encode_raster_png",
    "decode_image_bytes",
    "save_depth",
    "load_depth",
    "label_palette",
    "encode_label_png",
    "save_label_map",
    "load_label_map",
    "mask_to_rle_obj",
    "mask_from_rle_obj",
    "save_detections",
    "load_detections",
    "save_annotation",
    "load_annotation",
    "save_prediction",
    "load_prediction",
    "stack_artifacts",
    "save_layer_stack",
    "load_layer_stack",
    "dump_json",
]

DEPTH_CONVENTION = "larger_nearer"
MAX_LABEL = 65535


class FormatError(ValueError):
    """A document or image does not satisfy its schema."""


def dump_json(obj, path: Path | str) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _open_image(path: Path | str) -> Image.Image:
    try:
        return Image.open(path)
    except (OSError, Image.UnidentifiedImageError) as exc:
        raise FormatError(f"cannot read image {path}: {exc}") from exc


# -- rasters and masks -------------------------------------------------------


def load_sketch(path: Path | str) -> np.ndarray:
    """Load any common image as a grayscale uint8 sketch raster."""
    img = _open_image(path).convert("L")
    return np.asarray(img, dtype=np.uint8)


def encode_raster_png(raster: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(raster, dtype=np.uint8), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def encode_mask_png(mask: np.ndarray) -> bytes:
    return encode_raster_png(np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8))


def decode_image_bytes(data: bytes) -> np.ndarray:
    try:
        img = Image.open(io.BytesIO(data)).convert("L")
    except (OSError, Image.UnidentifiedImageError) as exc:
        raise FormatError(f"cannot decode image bytes: {exc}") from exc
    return np.asarray(img, dtype=np.uint8)


def save_mask(mask: np.ndarray, path: Path | str) -> None:
    Path(path).write_bytes(encode_mask_png(mask))


def load_mask(path: Path | str) -> np.ndarray:
    img = _open_image(path).convert("L")
    return np.asarray(img, dtype=np.uint8) >= 128


# -- depth maps ---------------------------------------------------------------


def save_depth(depth: np.ndarray, path: Path | str) -> None:
    depth = np.asarray(depth, dtype=float)
    if depth.min() < 0.0 or depth.max() > 1.0:
        raise FormatError("depth values must lie in [0, 1]")
    scaled = np.round(depth * 65535.0).astype(np.uint16)
    info = PngImagePlugin.PngInfo()
    info.add_text("depth_convention", DEPTH_CONVENTION)
    Image.fromarray(scaled).save(Path(path), format="PNG", pnginfo=info)


def load_depth(path: Path | str) -> np.ndarray:
    img = _open_image(path)
    declared = img.text.get("depth_convention") if hasattr(img, "text") else None
    if declared is not None and declared != DEPTH_CONVENTION:
        raise FormatError(
            f"depth map {path} declares convention {declared!r}, "
            f"expected {DEPTH_CONVENTION!r}"
        )
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise FormatError(f"depth map {path} must be single-channel, got shape {arr.shape}")
    if img.mode in ("I;16", "I"):
        return arr / 65535.0
    if img.mode == "L":
        return arr / 255.0
    raise FormatError(f"unsupported depth image mode {img.mode!r} in {path}")


# -- label maps ---------------------------------------------------------------


def _palette_color(instance_id: int) -> list[int]:
    # golden-angle hue walk: distinct, stable colors without randomness
    hue = (instance_id * 0.61803398875) % 1.0
    i = int(hue * 6.0)
    f = hue * 6.0 - i
    q, t = 1.0 - f, f
    rgb = [(1, t, 0), (q, 1, 0), (0, 1, t), (0, q, 1), (t, 0, 1), (1, 0, q)][i % 6]
    return [int(round(55 + 200 * c)) for c in rgb]


def label_palette(labels: np.ndarray) -> dict[str, list[int]]:
    return {str(int(i)): _palette_color(int(i)) for i in np.unique(labels) if i != 0}


def encode_label_png(labels: np.ndarray) -> bytes:
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() > MAX_LABEL:
        raise FormatError(f"label ids must be in [0, {MAX_LABEL}]")
    buf = io.BytesIO()
    Image.fromarray(labels.astype(np.uint16)).save(buf, format="PNG")
    return buf.getvalue()


def save_label_map(labels: np.ndarray, path: Path | str, palette_path: Path | str | None = None) -> None:
    Path(path).write_bytes(encode_label_png(labels))
    if palette_path is not None:
        dump_json(label_palette(labels), palette_path)


def load_label_map(path: Path | str) -> np.ndarray:
    img = _open_image(path)
    if img.mode not in ("I;16", "I", "L"):
        raise FormatError(f"label map {path} must be 8/16-bit grayscale, got {img.mode!r}")
    return np.asarray(img, dtype=np.int32)


# -- run-length objects -------------------------------------------------------


def mask_to_rle_obj(mask: np.ndarray) -> dict:
    height, width = mask.shape
    return {"size": [int(height), int(width)], "counts": rle_encode(mask)}


def mask_from_rle_obj(obj: dict) -> np.ndarray:
    try:
        height, width = obj["size"]
        counts = obj["counts"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed run-length object: {exc}") from exc
    try:
        return rle_decode(counts, (int(height), int(width)))
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


# -- detection documents ------------------------------------------------------


def save_detections(candidates: CandidateSet, path: Path | str) -> None:
    records = []
    for det, mask in zip(candidates.detections, candidates.masks):
        records.append(
            {
                "id": det.id,
                "box": [det.x, det.y, det.w, det.h],
                "confidence": det.confidence,
                "mask_rle": mask_to_rle_obj(mask),
            }
        )
    dump_json({"type": "detections", "detections": records}, path)


def load_detections(
    path: Path | str,
    canvas_shape: tuple[int, int],
    allow_mask_files: bool = True,
) -> CandidateSet:
    """Load a detections document, clamping boxes to the canvas.

    Boxes that end up with zero area after clamping are rejected, as are
    masks whose dimensions do not match the canvas.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot parse detections document {path}: {exc}") from exc
    records = doc.get("detections")
    if not isinstance(records, list):
        raise FormatError(f"{path}: missing 'detections' list")
    height, width = canvas_shape
    detections: list[Detection] = []
    masks: list[np.ndarray] = []
    for rec in records:
        try:
            det_id = int(rec["id"])
            x, y, w, h = (float(v) for v in rec["box"])
            confidence = float(rec["confidence"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}: malformed detection record {rec!r}: {exc}") from exc
        x0 = min(max(x, 0.0), width)
        y0 = min(max(y, 0.0), height)
        x1 = min(max(x + w, 0.0), width)
        y1 = min(max(y + h, 0.0), height)
        if x1 - x0 <= 0 or y1 - y0 <= 0:
            raise FormatError(f"{path}: detection {det_id} has zero area after clamping")
        if "mask_rle" in rec:
            mask = mask_from_rle_obj(rec["mask_rle"])
        elif "mask_file" in rec:
            if not allow_mask_files:
                raise FormatError(
                    f"{path}: detection {det_id} references a mask file; "
                    "embed masks as run-lengths for this interface"
                )
            mask = load_mask(path.parent / rec["mask_file"])
        else:
            raise FormatError(f"{path}: detection {det_id} carries no mask")
        if mask.shape != canvas_shape:
            raise FormatError(
                f"{path}: detection {det_id} mask shape {mask.shape} does not "
                f"match canvas {canvas_shape}"
            )
        try:
            detections.append(
                Detection(id=det_id, x=x0, y=y0, w=x1 - x0, h=y1 - y0, confidence=confidence)
            )
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}") from exc
        masks.append(mask)
    try:
        return CandidateSet(detections=detections, masks=masks)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


# -- scene annotations and predictions ---------------------------------------


def save_annotation(annotation: SceneAnnotation, path: Path | str, dataset: str | None = None) -> None:
    doc = {
        "type": "scene_annotation",
        "width": annotation.width,
        "height": annotation.height,
        "instances": [
            {
                "id": inst.id,
                "box": list(inst.box),
                "depth_rank": inst.depth_rank,
                "mask_rle": mask_to_rle_obj(inst.mask),
            }
            for inst in annotation.instances
        ],
    }
    if dataset is not None:
        doc["dataset"] = dataset
    dump_json(doc, path)


def load_annotation(path: Path | str) -> tuple[SceneAnnotation, str | None]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot parse annotation document {path}: {exc}") from exc
    try:
        width, height = int(doc["width"]), int(doc["height"])
        instances = [
            AnnotatedInstance(
                id=int(rec["id"]),
                box=tuple(int(v) for v in rec["box"]),
                mask=mask_from_rle_obj(rec["mask_rle"]),
                depth_rank=int(rec["depth_rank"]),
            )
            for rec in doc["instances"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed annotation: {exc}") from exc
    annotation = SceneAnnotation(width=width, height=height, instances=instances)
    return annotation, doc.get("dataset")


def save_prediction(
    candidates: CandidateSet,
    labels: np.ndarray,
    scores: dict[int, float],
    path: Path | str,
    dataset: str | None = None,
) -> None:
    """Persist final per-instance results: box, confidence, depth score, labeled mask."""
    height, width = labels.shape
    records = []
    for det in candidates.detections:
        records.append(
            {
                "id": det.id,
                "box": [det.x, det.y, det.w, det.h],
                "confidence": det.confidence,
                "depth_score": scores.get(det.id),
                "mask_rle": mask_to_rle_obj(labels == det.id),
            }
        )
    doc = {
        "type": "scene_prediction",
        "width": width,
        "height": height,
        "instances": records,
    }
    if dataset is not None:
        doc["dataset"] = dataset
    dump_json(doc, path)


def load_prediction(path: Path | str) -> tuple[dict, str | None]:
    """Load a prediction document into plain dicts (see save_prediction)."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot parse prediction document {path}: {exc}") from exc
    if doc.get("type") != "scene_prediction" or "instances" not in doc:
        raise FormatError(f"{path}: not a scene_prediction document")
    return doc, doc.get("dataset")


# -- layer stacks -------------------------------------------------------------


def stack_artifacts(stack: LayerStack) -> tuple[dict, dict[str, bytes]]:
    """Manifest dict plus encoded per-layer assets, keyed by file name.

    The CLI writes these to a directory and the service serves them from
    memory, so both surfaces emit byte-identical artifacts.
    """
    entries = []
    assets: dict[str, bytes] = {}
    for layer in stack.layers:
        stem = f"layer_{layer.instance_id:04d}"
        assets[f"{stem}_ink.png"] = encode_mask_png(layer.ink)
        assets[f"{stem}_region.png"] = encode_mask_png(layer.inpaint_region)
        completed_file = None
        if layer.completed is not None:
            completed_file = f"{stem}_completed.png"
            assets[completed_file] = encode_raster_png(layer.completed)
        entries.append(
            {
                "id": layer.instance_id,
                "box": list(layer.box),
                "depth_score": layer.depth,
                "area": layer.area,
                "stubbed": layer.stubbed,
                "ink_file": f"{stem}_ink.png",
                "region_file": f"{stem}_region.png",
                "completed_file": completed_file,
            }
        )
    manifest = {
        "type": "layer_stack",
        "width": stack.width,
        "height": stack.height,
        "layers": entries,  # back-to-front
    }
    return manifest, assets


def save_layer_stack(stack: LayerStack, directory: Path | str) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest, assets = stack_artifacts(stack)
    for name, data in assets.items():
        (directory / name).write_bytes(data)
    dump_json(manifest, directory / "manifest.json")


def load_layer_stack(directory: Path | str) -> LayerStack:
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    try:
        manifest = json.loads(manifest_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot parse manifest {manifest_path}: {exc}") from exc
    if manifest.get("type") != "layer_stack":
        raise FormatError(f"{manifest_path}: not a layer_stack manifest")
    layers = []
    for entry in manifest["layers"]:
        completed = None
        if entry.get("completed_file"):
            completed = decode_image_bytes((directory / entry["completed_file"]).read_bytes())
        layers.append(
            Layer(
                instance_id=int(entry["id"]),
                ink=load_mask(directory / entry["ink_file"]),
                inpaint_region=load_mask(directory / entry["region_file"]),
                box=tuple(float(v) for v in entry["box"]),
                depth=float(entry["depth_score"]),
                completed=completed,
                stubbed=bool(entry["stubbed"]),
            )
        )
    return LayerStack(layers=layers, width=int(manifest["width"]), height=int(manifest["height"]))
