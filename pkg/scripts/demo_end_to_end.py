#!/usr/bin/env python3
"""Compose a demo scene and push it through segmentation and layering.

Everything lands under --out: the scene inputs, the label map, the layer
stack, and the composite. A handy smoke test for the whole toolchain.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from make_library import write_library

from sketchlayers.cli import main as cli


def run(out: Path) -> None:
    library = out / "library"
    write_library(library)

    layout = {
        "width": 480,
        "height": 360,
        "entries": [
            {"key": "house", "x": 40, "y": 60, "w": 220, "h": 220, "rank": 0},
            {"key": "box", "x": 300, "y": 120, "w": 140, "h": 150, "rank": 1},
            {"key": "disc", "x": 180, "y": 160, "w": 120, "h": 120, "rank": 2},
            {"key": "star", "x": 90, "y": 200, "w": 110, "h": 110, "rank": 3},
            {"key": "cross", "x": 330, "y": 40, "w": 90, "h": 90, "rank": 4},
        ],
    }
    layout_path = out / "layout.json"
    layout_path.write_text(json.dumps(layout, indent=2))

    scene = out / "scene"
    assert cli(["compose", "--layout", str(layout_path), "--library", str(library),
                "--out", str(scene), "--dataset", "demo"]) == 0

    result = out / "run"
    assert cli(["layers",
                "--sketch", str(scene / "sketch.png"),
                "--detections", str(scene / "detections.json"),
                "--depth", str(scene / "depth.png"),
                "--out", str(result)]) == 0

    assert cli(["eval",
                "--pred", str(result / "prediction.json"),
                "--gt", str(scene / "annotation.json"),
                "--json", str(out / "metrics.json")]) == 0

    print(f"\nartifacts in {out}:")
    for path in sorted(out.rglob("*")):
        if path.is_file():
            print(f"  {path.relative_to(out)}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/demo")
    args = parser.parse_args()
    run(Path(args.out))


if __name__ == "__main__":
    main()
