"""Job-oriented HTTP surface over the pipeline, serving the layer editor.

Jobs move queued -> running -> done/failed on a bounded worker pool.
Artifact bytes (label map, layer manifest and assets, composite) are
generated once per job through the same encoders the CLI uses, so the
two surfaces are byte-identical for identical inputs.
"""

from __future__ import annotations

import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, File, HTTPException, UploadFile
from fastapi.responses import HTMLResponse, Response
from fastapi.staticfiles import StaticFiles

from .config import PipelineConfig
from .formats import (
    FormatError,
    decode_image_bytes,
    encode_label_png,
    encode_raster_png,
    label_palette,
    mask_from_rle_obj,
    stack_artifacts,
)
from .detection import CandidateSet, Detection
from .layering import composite
from .pipeline import run_pipeline

__all__ = ["create_app", "JobStore"]

FRONTEND_DIST = Path(__file__).resolve().parents[2] / "frontend" / "dist"


@dataclass
class Job:
    id: int
    state: str = "queued"  # queued -> running -> done | failed
    error: str | None = None
    label_png: bytes | None = None
    palette: dict | None = None
    manifest_json: bytes | None = None
    assets: dict[str, bytes] = field(default_factory=dict)
    composite_png: bytes | None = None
    report: dict | None = None
    layer_count: int = 0


class JobStore:
    def __init__(self, workers: int, queue_limit: int):
        self._jobs: dict[int, Job] = {}
        self._lock = threading.Lock()
        self._next_id = 1
        self._pending = 0
        self._queue_limit = queue_limit
        self._pool = ThreadPoolExecutor(max_workers=workers)

    def submit(self, sketch, candidates, depth, config) -> int:
        with self._lock:
            if self._pending >= self._queue_limit:
                raise HTTPException(status_code=503, detail="job queue is saturated")
            job = Job(id=self._next_id)
            self._next_id += 1
            self._jobs[job.id] = job
            self._pending += 1
        self._pool.submit(self._run, job.id, sketch, candidates, depth, config)
        return job.id

    def get(self, job_id: int) -> Job:
        with self._lock:
            job = self._jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id}")
        return job

    def _run(self, job_id, sketch, candidates, depth, config) -> None:
        with self._lock:
            self._jobs[job_id].state = "running"
        try:
            result = run_pipeline(sketch, candidates, depth, config)
            label_png = encode_label_png(result.labels)
            manifest, assets = stack_artifacts(result.stack)
            manifest_bytes = (
                json.dumps(manifest, indent=2, sort_keys=True) + "\n"
            ).encode()
            composite_png = encode_raster_png(composite(result.stack))
            palette = label_palette(result.labels)
            with self._lock:
                job = self._jobs[job_id]
                job.label_png = label_png
                job.palette = palette
                job.manifest_json = manifest_bytes
                job.assets = assets
                job.composite_png = composite_png
                job.report = result.report.as_dict()
                job.layer_count = len(result.stack.layers)
                job.state = "done"
                self._pending -= 1
        except Exception as exc:
            with self._lock:
                job = self._jobs[job_id]
                job.state = "failed"
                job.error = str(exc)
                self._pending -= 1


def _parse_detections_payload(data: bytes, canvas_shape) -> CandidateSet:
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise HTTPException(422, detail=f"detections: invalid JSON: {exc}") from exc
    records = doc.get("detections")
    if not isinstance(records, list):
        raise HTTPException(422, detail="detections: missing 'detections' list")
    height, width = canvas_shape
    detections, masks = [], []
    for rec in records:
        try:
            det_id = int(rec["id"])
            x, y, w, h = (float(v) for v in rec["box"])
            confidence = float(rec["confidence"])
            mask = mask_from_rle_obj(rec["mask_rle"])
        except (KeyError, TypeError, ValueError, FormatError) as exc:
            raise HTTPException(422, detail=f"detections: bad record: {exc}") from exc
        x0, y0 = min(max(x, 0.0), width), min(max(y, 0.0), height)
        x1, y1 = min(max(x + w, 0.0), width), min(max(y + h, 0.0), height)
        if x1 - x0 <= 0 or y1 - y0 <= 0:
            raise HTTPException(
                422, detail=f"detections: detection {det_id} has zero area after clamping"
            )
        try:
            detections.append(
                Detection(id=det_id, x=x0, y=y0, w=x1 - x0, h=y1 - y0, confidence=confidence)
            )
        except ValueError as exc:
            raise HTTPException(422, detail=f"detections: {exc}") from exc
        masks.append(mask)
    try:
        return CandidateSet(detections=detections, masks=masks)
    except ValueError as exc:
        raise HTTPException(422, detail=f"detections: {exc}") from exc


def create_app(
    config: PipelineConfig = PipelineConfig(),
    workers: int = 4,
    queue_limit: int = 32,
    frontend_dist: Path | None = None,
) -> FastAPI:
    app = FastAPI(title="sketchlayers", version="0.1.0")
    store = JobStore(workers=workers, queue_limit=queue_limit)
    app.state.store = store

    @app.post("/jobs")
    async def submit_job(
        sketch: UploadFile = File(...),
        detections: UploadFile = File(...),
        depth: UploadFile = File(...),
    ):
        sketch_bytes = await sketch.read()
        detections_bytes = await detections.read()
        depth_bytes = await depth.read()
        try:
            sketch_arr = decode_image_bytes(sketch_bytes)
        except FormatError as exc:
            raise HTTPException(422, detail=f"sketch: {exc}") from exc
        try:
            from PIL import Image
            import io as _io

            depth_img = Image.open(_io.BytesIO(depth_bytes))
            declared = depth_img.text.get("depth_convention") if hasattr(depth_img, "text") else None
            if declared is not None and declared != "larger_nearer":
                raise HTTPException(
                    422, detail=f"depth: convention {declared!r} is not supported"
                )
            depth_arr = np.asarray(depth_img, dtype=np.float64)
            if depth_arr.ndim != 2:
                raise HTTPException(422, detail="depth: must be single-channel")
            depth_arr = depth_arr / (65535.0 if depth_img.mode in ("I;16", "I") else 255.0)
        except HTTPException:
            raise
        except Exception as exc:
            raise HTTPException(422, detail=f"depth: cannot decode image: {exc}") from exc
        candidates = _parse_detections_payload(detections_bytes, sketch_arr.shape)
        job_id = store.submit(sketch_arr, candidates, depth_arr, config)
        return {"id": job_id}

    @app.get("/jobs/{job_id}")
    def job_state(job_id: int):
        job = store.get(job_id)
        body = {"id": job.id, "state": job.state}
        if job.error is not None:
            body["error"] = job.error
        if job.state == "done":
            body["layer_count"] = job.layer_count
            body["report"] = job.report
        return body

    def _done_job(job_id: int) -> Job:
        job = store.get(job_id)
        if job.state != "done":
            raise HTTPException(404, detail=f"job {job_id} is {job.state}, not done")
        return job

    @app.get("/jobs/{job_id}/segmentation")
    def segmentation(job_id: int):
        job = _done_job(job_id)
        return Response(content=job.label_png, media_type="image/png")

    @app.get("/jobs/{job_id}/palette")
    def palette(job_id: int):
        return _done_job(job_id).palette

    @app.get("/jobs/{job_id}/layers")
    def layers(job_id: int):
        job = _done_job(job_id)
        return Response(content=job.manifest_json, media_type="application/json")

    @app.get("/jobs/{job_id}/layers/assets/{name}")
    def layer_asset(job_id: int, name: str):
        job = _done_job(job_id)
        data = job.assets.get(name)
        if data is None:
            raise HTTPException(404, detail=f"no asset {name!r} in job {job_id}")
        return Response(content=data, media_type="image/png")

    @app.get("/jobs/{job_id}/composite")
    def job_composite(job_id: int):
        job = _done_job(job_id)
        return Response(content=job.composite_png, media_type="image/png")

    dist = frontend_dist if frontend_dist is not None else FRONTEND_DIST
    if dist.is_dir():
        app.mount("/ui", StaticFiles(directory=dist, html=True), name="ui")
    else:

        @app.get("/ui")
        def ui_placeholder():
            return HTMLResponse(
                "<h1>sketchlayers</h1><p>No frontend bundle found; build "
                "frontend/ and restart to enable the layer editor.</p>",
                status_code=200,
            )

    return app
