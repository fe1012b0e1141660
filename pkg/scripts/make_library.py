#!/usr/bin/env python3
"""Generate a small object-sketch library (binary mask PNGs) for scene composition."""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from sketchlayers.formats import save_mask


def disc(radius: int) -> np.ndarray:
    y, x = np.ogrid[-radius : radius + 1, -radius : radius + 1]
    return x * x + y * y <= radius * radius


def ring(radius: int, thickness: int) -> np.ndarray:
    y, x = np.ogrid[-radius : radius + 1, -radius : radius + 1]
    rr = x * x + y * y
    return (rr <= radius * radius) & (rr > (radius - thickness) ** 2)


def box_outline(side: int, thickness: int) -> np.ndarray:
    mask = np.ones((side, side), dtype=bool)
    inner = side - 2 * thickness
    if inner > 0:
        mask[thickness:-thickness, thickness:-thickness] = False
    return mask


def cross(side: int, thickness: int) -> np.ndarray:
    mask = np.zeros((side, side), dtype=bool)
    mid, half = side // 2, thickness // 2
    mask[mid - half : mid + half + 1, :] = True
    mask[:, mid - half : mid + half + 1] = True
    return mask


def star(radius: int) -> np.ndarray:
    size = 2 * radius + 1
    mask = np.zeros((size, size), dtype=bool)
    c = radius
    for angle in np.linspace(0.0, 2 * np.pi, 7)[:-1]:
        for t in np.linspace(0.0, 1.0, 4 * radius):
            y = int(round(c + t * radius * np.sin(angle)))
            x = int(round(c + t * radius * np.cos(angle)))
            mask[y, x] = True
    return mask


def house(side: int) -> np.ndarray:
    mask = np.zeros((side, side), dtype=bool)
    base = side // 2
    mask[base : side - 1, 2 : side - 2] = False
    mask[base, 2 : side - 2] = True
    mask[side - 2, 2 : side - 2] = True
    mask[base : side - 1, 2] = True
    mask[base : side - 1, side - 3] = True
    for i in range(base):
        x0 = 2 + (base - i) // 2
        x1 = side - 3 - (base - i) // 2
        if x0 <= x1:
            mask[i + base // 2, x0] = True
            mask[i + base // 2, x1] = True
    return mask


LIBRARY = {
    "disc": disc(14),
    "ring": ring(16, 3),
    "box": box_outline(28, 3),
    "block": np.ones((16, 16), dtype=bool),
    "cross": cross(25, 5),
    "star": star(14),
    "house": house(28),
}


def write_library(directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for key, mask in LIBRARY.items():
        save_mask(mask, directory / f"{key}.png")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/library", help="target directory")
    args = parser.parse_args()
    write_library(Path(args.out))
    print(f"wrote {len(LIBRARY)} object masks to {args.out}")


if __name__ == "__main__":
    main()
