"""Shared builders and brute-force oracles for the test suite."""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

from sketchlayers.compose import ComposedScene, LayoutEntry, compose_scene
from sketchlayers.metrics import box_iou


def disc(radius: int) -> np.ndarray:
    y, x = np.ogrid[-radius : radius + 1, -radius : radius + 1]
    return x * x + y * y <= radius * radius


def ring(radius: int, thickness: int = 2) -> np.ndarray:
    y, x = np.ogrid[-radius : radius + 1, -radius : radius + 1]
    rr = x * x + y * y
    return (rr <= radius * radius) & (rr > (radius - thickness) ** 2)


def box_outline(side: int, thickness: int = 2) -> np.ndarray:
    mask = np.ones((side, side), dtype=bool)
    inner = side - 2 * thickness
    if inner > 0:
        mask[thickness : side - thickness, thickness : side - thickness] = False
    return mask


def solid_square(side: int) -> np.ndarray:
    return np.ones((side, side), dtype=bool)


def cross(side: int, thickness: int = 3) -> np.ndarray:
    mask = np.zeros((side, side), dtype=bool)
    mid = side // 2
    half = thickness // 2
    mask[mid - half : mid + half + 1, :] = True
    mask[:, mid - half : mid + half + 1] = True
    return mask


def zigzag(width: int, height: int) -> np.ndarray:
    mask = np.zeros((height, width), dtype=bool)
    for x in range(width):
        y = abs((x * 2) % (2 * (height - 1)) - (height - 1))
        mask[y, x] = True
        if y + 1 < height:
            mask[y + 1, x] = True
    return mask


def shape_library() -> dict[str, np.ndarray]:
    return {
        "disc": disc(10),
        "ring": ring(12, 3),
        "box": box_outline(20, 3),
        "block": solid_square(12),
        "cross": cross(21, 5),
        "zigzag": zigzag(24, 12),
    }


def grid_layout(
    rng: np.random.Generator,
    n: int,
    width: int,
    height: int,
    keys: list[str],
) -> list[LayoutEntry]:
    """n placements in disjoint grid cells: guaranteed occlusion-free."""
    cols = int(np.ceil(np.sqrt(n)))
    rows = int(np.ceil(n / cols))
    cell_w, cell_h = width // cols, height // rows
    cells = [(r, c) for r in range(rows) for c in range(cols)]
    chosen = rng.permutation(len(cells))[:n]
    ranks = rng.permutation(n)
    entries = []
    for i, cell_idx in enumerate(chosen):
        r, c = cells[cell_idx]
        margin = 2
        max_w = cell_w - 2 * margin
        max_h = cell_h - 2 * margin
        w = int(rng.integers(max(8, max_w // 2), max_w + 1))
        h = int(rng.integers(max(8, max_h // 2), max_h + 1))
        x = c * cell_w + margin + int(rng.integers(0, max_w - w + 1))
        y = r * cell_h + margin + int(rng.integers(0, max_h - h + 1))
        entries.append(
            LayoutEntry(key=keys[int(rng.integers(len(keys)))], x=x, y=y, w=w, h=h, rank=int(ranks[i]))
        )
    return entries


def overlapping_layout(
    rng: np.random.Generator,
    n: int,
    width: int,
    height: int,
    keys: list[str],
) -> list[LayoutEntry]:
    """n placements anywhere on the canvas: overlaps likely."""
    ranks = rng.permutation(n)
    entries = []
    for i in range(n):
        w = int(rng.integers(width // 6, width // 2))
        h = int(rng.integers(height // 6, height // 2))
        x = int(rng.integers(0, width - w))
        y = int(rng.integers(0, height - h))
        entries.append(
            LayoutEntry(key=keys[int(rng.integers(len(keys)))], x=x, y=y, w=w, h=h, rank=int(ranks[i]))
        )
    return entries


def composed_scene(
    seed: int,
    n_instances: int,
    width: int = 256,
    height: int = 256,
    overlap: bool = False,
    depth_bins: int = 10,
) -> ComposedScene:
    rng = np.random.default_rng(seed)
    library = shape_library()
    keys = sorted(library)
    layout_fn = overlapping_layout if overlap else grid_layout
    layout = layout_fn(rng, n_instances, width, height, keys)
    return compose_scene(layout, library, width, height, depth_bins=depth_bins)


def rank_order(annotation) -> dict[int, float]:
    return {inst.id: float(inst.depth_rank) for inst in annotation.instances}


# -- brute-force raster oracles -------------------------------------------------


def close_oracle(mask: np.ndarray, r: int) -> np.ndarray:
    """Dilate then erode with a (2r+1) square on the infinite plane."""
    if r == 0:
        return mask.copy()
    h, w = mask.shape
    pad = np.zeros((h + 2 * r, w + 2 * r), dtype=bool)
    pad[r : r + h, r : r + w] = mask
    ph, pw = pad.shape
    dil = np.zeros_like(pad)
    for y in range(ph):
        for x in range(pw):
            dil[y, x] = pad[max(0, y - r) : y + r + 1, max(0, x - r) : x + r + 1].any()
    ero = np.zeros_like(pad)
    for y in range(r, r + h):
        for x in range(r, r + w):
            ero[y, x] = dil[y - r : y + r + 1, x - r : x + r + 1].all()
    return ero[r : r + h, r : r + w]


def fill_oracle(mask: np.ndarray) -> np.ndarray:
    """Flood 4-connected background from the border; the rest becomes true."""
    h, w = mask.shape
    outside = np.zeros((h, w), dtype=bool)
    stack = [
        (y, x)
        for y in range(h)
        for x in range(w)
        if (y in (0, h - 1) or x in (0, w - 1)) and not mask[y, x]
    ]
    for y, x in stack:
        outside[y, x] = True
    while stack:
        y, x = stack.pop()
        for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            yy, xx = y + dy, x + dx
            if 0 <= yy < h and 0 <= xx < w and not mask[yy, xx] and not outside[yy, xx]:
                outside[yy, xx] = True
                stack.append((yy, xx))
    return mask | ~outside


def distance_oracle(mask: np.ndarray) -> np.ndarray:
    """Nearest-true-pixel search by exhaustive enumeration."""
    h, w = mask.shape
    ys, xs = np.nonzero(mask)
    out = np.empty((h, w), dtype=float)
    for y in range(h):
        for x in range(w):
            out[y, x] = np.sqrt(((ys - y) ** 2 + (xs - x) ** 2).min())
    return out


# -- brute-force metric oracles ---------------------------------------------------


def greedy_flags(dets, gts, thr):
    """TP/FP flags per the matching contract, via plain loops."""
    order = sorted(dets, key=lambda d: (-d.confidence, d.id))
    taken = [False] * len(gts)
    flags = []
    for d in order:
        best, best_iou = None, 0.0
        for g, gt in enumerate(gts):
            if taken[g]:
                continue
            iou = box_iou(d.box, gt)
            if iou >= thr and iou > best_iou:
                best, best_iou = g, iou
        if best is not None:
            taken[best] = True
        flags.append(best is not None)
    return flags


def ap_oracle(dets, gts, thr) -> Fraction:
    """Exact 101-point interpolated AP via rational arithmetic."""
    if not gts:
        return Fraction(1) if not dets else Fraction(0)
    if not dets:
        return Fraction(0)
    flags = greedy_flags(dets, gts, thr)
    tp = 0
    points = []  # (recall, precision) after each detection
    for rank, is_tp in enumerate(flags, start=1):
        tp += int(is_tp)
        points.append((Fraction(tp, len(gts)), Fraction(tp, rank)))
    total = Fraction(0)
    for k in range(101):
        r = Fraction(k, 100)
        candidates = [p for rec, p in points if rec >= r]
        total += max(candidates) if candidates else Fraction(0)
    return total / 101


def recall_oracle(dets, gts, thr) -> Fraction:
    if not gts:
        return Fraction(1) if not dets else Fraction(0)
    if not dets:
        return Fraction(0)
    flags = greedy_flags(dets, gts, thr)
    return Fraction(sum(flags), len(gts))


def tau_oracle(pred: dict, gt: dict) -> float:
    """Plain pair counting for tie-free rankings."""
    ids = sorted(pred)
    c = d = 0
    for a, b in itertools.combinations(ids, 2):
        s = (pred[a] - pred[b]) * (gt[a] - gt[b])
        if s > 0:
            c += 1
        elif s < 0:
            d += 1
    n = len(ids)
    return (c - d) / (n * (n - 1) // 2)


def random_detection_instance(rng):
    """Random (detections, ground-truth boxes) pair, each side up to 5."""
    from sketchlayers.detection import Detection

    n_det = int(rng.integers(0, 6))
    n_gt = int(rng.integers(0, 6))
    gts = []
    for _ in range(n_gt):
        x, y = int(rng.integers(0, 40)), int(rng.integers(0, 40))
        w, h = int(rng.integers(4, 24)), int(rng.integers(4, 24))
        gts.append((float(x), float(y), float(w), float(h)))
    dets = []
    for i in range(n_det):
        if gts and rng.random() < 0.7:
            gx, gy, gw, gh = gts[int(rng.integers(len(gts)))]
            x = gx + int(rng.integers(-4, 5))
            y = gy + int(rng.integers(-4, 5))
            w = max(2, gw + int(rng.integers(-4, 5)))
            h = max(2, gh + int(rng.integers(-4, 5)))
        else:
            x, y = int(rng.integers(0, 40)), int(rng.integers(0, 40))
            w, h = int(rng.integers(4, 24)), int(rng.integers(4, 24))
        conf = round(float(rng.random()), 3)
        dets.append(
            Detection(
                id=i + 1, x=float(x), y=float(y), w=float(w), h=float(h), confidence=conf
            )
        )
    return dets, gts


def inject_duplicates(candidates, rng: np.random.Generator, count: int):
    """Duplicate detections: jittered boxes, copied masks, lower confidence.

    Returns (augmented CandidateSet in shuffled order, injected ids).
    """
    from sketchlayers.detection import CandidateSet, Detection

    height, width = candidates.masks[0].shape
    next_id = max(candidates.ids) + 1
    dets = list(candidates.detections)
    masks = list(candidates.masks)
    injected = []
    for _ in range(count):
        k = int(rng.integers(len(candidates)))
        src = candidates.detections[k]
        jx = float(np.clip(src.x + rng.integers(-2, 3), 0, width - 1))
        jy = float(np.clip(src.y + rng.integers(-2, 3), 0, height - 1))
        jw = float(min(src.w + int(rng.integers(-2, 3)), width - jx)) or 1.0
        jh = float(min(src.h + int(rng.integers(-2, 3)), height - jy)) or 1.0
        dup = Detection(
            id=next_id,
            x=jx,
            y=jy,
            w=max(jw, 1.0),
            h=max(jh, 1.0),
            confidence=round(float(rng.uniform(0.2, 0.5)), 3),
        )
        dets.append(dup)
        masks.append(candidates.masks[k].copy())
        injected.append(next_id)
        next_id += 1
    order = rng.permutation(len(dets))
    return (
        CandidateSet(
            detections=[dets[i] for i in order], masks=[masks[i] for i in order]
        ),
        sorted(injected),
    )
