"""Acceptance suite: one test per criterion, at the stated tolerances.

The terminal summary (see conftest) prints a PASS/FAIL line per
criterion. Everything runs against the null inpainting backend; no
external model or frontend is involved.
"""

from __future__ import annotations

import io
import itertools
import json
import time

import numpy as np
from helpers import (
    ap_oracle,
    close_oracle,
    composed_scene,
    distance_oracle,
    fill_oracle,
    inject_duplicates,
    random_detection_instance,
    recall_oracle,
    tau_oracle,
)

from sketchlayers.compose import LayoutEntry, compose_scene, oracle_candidates
from sketchlayers.depth import finalize_segmentation
from sketchlayers.detection import CandidateSet, Detection
from sketchlayers.evaluation import annotation_label_map
from sketchlayers.metrics import (
    AP_THRESHOLDS,
    ap_suite,
    kendall_tau,
    segmentation_metrics,
)
from sketchlayers.pipeline import run_pipeline
from sketchlayers.raster import (
    distance_transform,
    fill_holes,
    morphological_close,
    rle_decode,
    rle_encode,
)

SCENE_SIZE = 512


def test_disjoint_complete_segmentation():
    """50 random scenes, 3-10 instances: every marker-reachable ink pixel
    gets exactly one id, no non-ink pixel is labeled, under 2s each."""
    rng = np.random.default_rng(2024)
    for i in range(50):
        n = int(rng.integers(3, 11))
        scene = composed_scene(
            seed=1000 + i, n_instances=n, width=SCENE_SIZE, height=SCENE_SIZE,
            overlap=bool(i % 2),
        )
        candidates = oracle_candidates(scene.annotation)
        start = time.perf_counter()
        result = finalize_segmentation(candidates, scene.depth, scene.ink)
        elapsed = time.perf_counter() - start
        assert elapsed < 2.0, f"scene {i}: {elapsed:.2f}s exceeds the 2s budget"

        labels = result.labels
        reachable = scene.ink & ~result.unreachable
        assert (labels[reachable] != 0).all(), f"scene {i}: reachable ink left unlabeled"
        assert not labels[~scene.ink].any(), f"scene {i}: non-ink pixel labeled"
        assert not labels[result.unreachable].any()
        valid_ids = {inst.id for inst in scene.annotation.instances}
        assert set(np.unique(labels)) - {0} <= valid_ids


def test_oracle_round_trip():
    """GT boxes/masks plus rank depth reproduce GT exactly without
    occlusion and reach acc>=0.98, iou>=0.95 with it."""
    for i in range(20):
        scene = composed_scene(
            seed=2000 + i, n_instances=3 + i % 8, width=SCENE_SIZE, height=SCENE_SIZE,
            overlap=False,
        )
        result = finalize_segmentation(
            oracle_candidates(scene.annotation), scene.depth, scene.ink
        )
        np.testing.assert_array_equal(
            result.labels, annotation_label_map(scene.annotation),
            err_msg=f"occlusion-free scene {i} not reproduced exactly",
        )
    for i in range(20):
        scene = composed_scene(
            seed=2100 + i, n_instances=3 + i % 8, width=SCENE_SIZE, height=SCENE_SIZE,
            overlap=True,
        )
        result = finalize_segmentation(
            oracle_candidates(scene.annotation), scene.depth, scene.ink
        )
        gt = annotation_label_map(scene.annotation)
        metrics = segmentation_metrics(result.labels, gt, scene.ink)
        assert metrics["pixel_acc"] >= 0.98, f"occluded scene {i}: acc {metrics['pixel_acc']:.3f}"
        assert metrics["seg_iou"] >= 0.95, f"occluded scene {i}: iou {metrics['seg_iou']:.3f}"


def test_filter_suppresses_exactly_the_injected_duplicates():
    """1-3 jittered duplicates per scene leave the label map pixel-identical
    and appear verbatim (and alone) in the suppression report."""
    rng = np.random.default_rng(77)
    for i in range(15):
        scene = composed_scene(
            seed=3000 + i, n_instances=3 + i % 6, width=256, height=256,
            overlap=bool(i % 2),
        )
        clean = oracle_candidates(scene.annotation)
        baseline = run_pipeline(scene.sketch, clean, scene.depth)
        noisy, injected = inject_duplicates(clean, rng, int(rng.integers(1, 4)))
        result = run_pipeline(scene.sketch, noisy, scene.depth)
        assert result.report.suppressed_ids == injected, (
            f"scene {i}: suppressed {result.report.suppressed_ids}, injected {injected}"
        )
        np.testing.assert_array_equal(
            result.labels, baseline.labels,
            err_msg=f"scene {i}: label map changed by duplicate injection",
        )


def _ablation_scene(seed: int):
    """Background block whose detection mask over-covers a foreground object."""
    rng = np.random.default_rng(seed)
    size = 192
    library = {
        "bg": np.ones((10, 10), dtype=bool),
        "fg": np.zeros((12, 12), dtype=bool),
    }
    library["fg"][0, :] = library["fg"][-1, :] = True
    library["fg"][:, 0] = library["fg"][:, -1] = True
    library["fg"][5:7, :] = True
    bg_w = int(rng.integers(100, 150))
    bg_h = int(rng.integers(100, 150))
    bg_x = int(rng.integers(0, size - bg_w))
    bg_y = int(rng.integers(0, size - bg_h))
    fg_w = int(rng.integers(30, 60))
    fg_h = int(rng.integers(30, 60))
    fg_x = int(np.clip(bg_x + rng.integers(0, bg_w // 2), 0, size - fg_w))
    fg_y = int(np.clip(bg_y + rng.integers(0, bg_h // 2), 0, size - fg_h))
    layout = [
        LayoutEntry("bg", bg_x, bg_y, bg_w, bg_h, rank=0),
        LayoutEntry("fg", fg_x, fg_y, fg_w, fg_h, rank=1),
    ]
    scene = compose_scene(layout, library, size, size)
    assert len(scene.annotation.instances) == 2
    bg_inst, fg_inst = scene.annotation.instances
    # the background detection mask swallows the foreground object
    over_mask = bg_inst.mask | fg_inst.mask
    candidates = CandidateSet(
        detections=[
            Detection(id=bg_inst.id, x=0, y=0, w=192, h=192, confidence=0.9),
            Detection(
                id=fg_inst.id,
                x=float(fg_inst.box[0]), y=float(fg_inst.box[1]),
                w=float(fg_inst.box[2]), h=float(fg_inst.box[3]),
                confidence=0.9,
            ),
        ],
        masks=[over_mask, fg_inst.mask],
    )
    return scene, candidates


def test_refinement_ablation_improves_seg_iou():
    """Depth refinement beats the no-depth baseline on >=19/20 constructed
    scenes and never scores below it."""
    improved = 0
    for i in range(20):
        scene, candidates = _ablation_scene(4000 + i)
        gt = annotation_label_map(scene.annotation)
        with_depth = finalize_segmentation(
            candidates, scene.depth, scene.ink, use_depth=True
        )
        without_depth = finalize_segmentation(
            candidates, scene.depth, scene.ink, use_depth=False
        )
        iou_with = segmentation_metrics(with_depth.labels, gt, scene.ink)["seg_iou"]
        iou_without = segmentation_metrics(without_depth.labels, gt, scene.ink)["seg_iou"]
        assert iou_with >= iou_without, f"scene {i}: refinement hurt ({iou_with:.3f} < {iou_without:.3f})"
        if iou_with > iou_without:
            improved += 1
    assert improved >= 19, f"refinement improved only {improved}/20 scenes"


def test_ap_suite_matches_bruteforce_within_1e9():
    """1000 random instances with <=5 detections/GT: ap/ap50/ap75/ar all
    within 1e-9 of exact rational enumeration; AP@50 >= AP@75 throughout."""
    rng = np.random.default_rng(555)
    for _ in range(1000):
        dets, gts = random_detection_instance(rng)
        suite = ap_suite(dets, gts)
        oracle_aps = [ap_oracle(dets, gts, thr) for thr in AP_THRESHOLDS]
        oracle_ars = [recall_oracle(dets, gts, thr) for thr in AP_THRESHOLDS]
        assert abs(suite["ap"] - float(sum(oracle_aps) / 10)) < 1e-9
        assert abs(suite["ap50"] - float(oracle_aps[0])) < 1e-9
        assert abs(suite["ap75"] - float(oracle_aps[5])) < 1e-9
        assert abs(suite["ar"] - float(sum(oracle_ars) / 10)) < 1e-9
        assert suite["ap50"] >= suite["ap75"]


def test_kendall_tau_exact_for_all_small_permutations():
    """Pair-counting equality for every permutation up to n = 6."""
    for n in range(2, 7):
        ids = list(range(1, n + 1))
        gt = {i: float(k) for k, i in enumerate(ids)}
        for perm in itertools.permutations(range(n)):
            pred = {i: float(perm[k]) for k, i in enumerate(ids)}
            assert kendall_tau(pred, gt) == tau_oracle(pred, gt)


def _random_mask(rng) -> np.ndarray:
    h = int(rng.integers(1, 17))
    w = int(rng.integers(1, 17))
    return rng.random((h, w)) < rng.uniform(0.1, 0.9)


def test_raster_primitives_match_bruteforce():
    """close/fill/distance agree with brute force on 200 random masks each;
    run-length coding round-trips 1000 random masks."""
    rng = np.random.default_rng(8080)
    for _ in range(200):
        mask = _random_mask(rng)
        radius = int(rng.integers(0, 4))
        np.testing.assert_array_equal(
            morphological_close(mask, radius), close_oracle(mask, radius)
        )
        np.testing.assert_array_equal(fill_holes(mask), fill_oracle(mask))
        if mask.any():
            np.testing.assert_allclose(
                distance_transform(mask), distance_oracle(mask), atol=1e-9
            )
    for _ in range(1000):
        mask = _random_mask(rng)
        np.testing.assert_array_equal(rle_decode(rle_encode(mask), mask.shape), mask)


def test_determinism_across_worker_pool_sizes():
    """The same three scenes through 1-worker and 8-worker services produce
    bit-identical label maps and layer manifests."""
    from fastapi.testclient import TestClient

    from sketchlayers.formats import encode_raster_png, mask_to_rle_obj, save_depth
    from sketchlayers.service import create_app

    def artifacts(seed):
        scene = composed_scene(seed, 5, width=256, height=256, overlap=True)
        candidates = oracle_candidates(scene.annotation)
        records = [
            {
                "id": det.id,
                "box": [det.x, det.y, det.w, det.h],
                "confidence": det.confidence,
                "mask_rle": mask_to_rle_obj(mask),
            }
            for det, mask in zip(candidates.detections, candidates.masks)
        ]
        from PIL import Image, PngImagePlugin

        info = PngImagePlugin.PngInfo()
        info.add_text("depth_convention", "larger_nearer")
        buf = io.BytesIO()
        Image.fromarray(np.round(scene.depth * 65535).astype(np.uint16)).save(
            buf, format="PNG", pnginfo=info
        )
        return (
            encode_raster_png(scene.sketch),
            json.dumps({"detections": records}).encode(),
            buf.getvalue(),
        )

    scenes = [artifacts(seed) for seed in (6001, 6002, 6003)]
    outputs: list[list[tuple[bytes, bytes]]] = []
    for workers in (1, 8):
        app = create_app(workers=workers, queue_limit=16)
        with TestClient(app) as client:
            job_ids = []
            for sketch, detections, depth in scenes:
                response = client.post(
                    "/jobs",
                    files={
                        "sketch": ("s.png", sketch, "image/png"),
                        "detections": ("d.json", detections, "application/json"),
                        "depth": ("d.png", depth, "image/png"),
                    },
                )
                assert response.status_code == 200
                job_ids.append(response.json()["id"])
            per_pool = []
            for job_id in job_ids:
                deadline = time.time() + 60
                while time.time() < deadline:
                    state = client.get(f"/jobs/{job_id}").json()["state"]
                    if state in ("done", "failed"):
                        break
                    time.sleep(0.02)
                assert state == "done"
                per_pool.append(
                    (
                        client.get(f"/jobs/{job_id}/segmentation").content,
                        client.get(f"/jobs/{job_id}/layers").content,
                    )
                )
            outputs.append(per_pool)
    for (labels_1, manifest_1), (labels_8, manifest_8) in zip(*outputs):
        assert labels_1 == labels_8
        assert manifest_1 == manifest_8
