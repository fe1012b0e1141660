"""Command-line interface: segment, layers, compose, eval, serve.

Exit codes: 0 success, 1 pipeline/format error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .compose import LayoutEntry, compose_scene, oracle_candidates
from .config import PipelineConfig
from .evaluation import aggregate_reports, evaluate_scene, render_table
from .formats import (
    FormatError,
    dump_json,
    load_annotation,
    load_depth,
    load_detections,
    load_mask,
    load_prediction,
    load_sketch,
    save_annotation,
    save_depth,
    save_detections,
    save_label_map,
    save_layer_stack,
    save_prediction,
)
from .layering import composite
from .pipeline import PipelineError, run_pipeline


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--overlap-threshold", type=float, default=0.5)
    parser.add_argument("--cleanup-radius", type=int, default=1)
    parser.add_argument("--depth-bins", type=int, default=10)
    parser.add_argument("--sample-points", type=int, default=None)
    parser.add_argument("--binarize-threshold", type=int, default=128)
    parser.add_argument(
        "--inpaint-url",
        default=None,
        help="inpainting backend endpoint (default: INKLAYER_INPAINT_URL or null backend)",
    )


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    return PipelineConfig(
        overlap_threshold=args.overlap_threshold,
        cleanup_radius=args.cleanup_radius,
        depth_bins=args.depth_bins,
        sample_points=args.sample_points,
        binarize_threshold=args.binarize_threshold,
        inpaint_backend=args.inpaint_url,
    )


def _run_and_write(args: argparse.Namespace, with_layers: bool) -> int:
    config = _config_from_args(args)
    sketch = load_sketch(args.sketch)
    candidates = load_detections(args.detections, sketch.shape)
    depth = load_depth(args.depth)
    result = run_pipeline(sketch, candidates, depth, config)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_label_map(result.labels, out / "label_map.png", out / "palette.json")
    save_prediction(
        result.candidates,
        result.labels,
        result.segmentation.score_by_id(),
        out / "prediction.json",
        dataset=args.dataset,
    )
    dump_json(result.report.as_dict(), out / "report.json")
    if with_layers:
        save_layer_stack(result.stack, out / "stack")
        from .formats import encode_raster_png

        (out / "composite.png").write_bytes(encode_raster_png(composite(result.stack)))
    print(
        f"segmented {len(result.candidates)} instances "
        f"({len(result.report.suppressed_ids)} suppressed, "
        f"{result.report.unreachable_ink_pixels} unreachable ink px) -> {out}"
    )
    return 0


def _cmd_segment(args: argparse.Namespace) -> int:
    return _run_and_write(args, with_layers=False)


def _cmd_layers(args: argparse.Namespace) -> int:
    return _run_and_write(args, with_layers=True)


def _cmd_compose(args: argparse.Namespace) -> int:
    layout_doc = json.loads(Path(args.layout).read_text())
    try:
        width, height = int(layout_doc["width"]), int(layout_doc["height"])
        entries = [
            LayoutEntry(
                key=str(e["key"]),
                x=int(e["x"]),
                y=int(e["y"]),
                w=int(e["w"]),
                h=int(e["h"]),
                rank=int(e["rank"]),
            )
            for e in layout_doc["entries"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed layout document {args.layout}: {exc}") from exc

    library_dir = Path(args.library)
    library = {p.stem: load_mask(p) for p in sorted(library_dir.glob("*.png"))}
    if not library:
        raise FormatError(f"no *.png object masks found in {library_dir}")

    scene = compose_scene(entries, library, width, height, depth_bins=args.depth_bins)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    from .formats import encode_raster_png

    (out / "sketch.png").write_bytes(encode_raster_png(scene.sketch))
    save_depth(scene.depth, out / "depth.png")
    save_annotation(scene.annotation, out / "annotation.json", dataset=args.dataset)
    save_detections(oracle_candidates(scene.annotation), out / "detections.json")
    print(
        f"composed {len(scene.annotation.instances)} instances "
        f"({len(scene.occluded_keys)} fully occluded) -> {out}"
    )
    return 0


def _eval_pairs(pred_path: Path, gt_path: Path) -> list[tuple[Path, Path]]:
    if pred_path.is_dir() != gt_path.is_dir():
        raise FormatError("--pred and --gt must both be files or both be directories")
    if not pred_path.is_dir():
        return [(pred_path, gt_path)]
    pairs = []
    for pred_file in sorted(pred_path.glob("*.json")):
        gt_file = gt_path / pred_file.name
        if not gt_file.exists():
            raise FormatError(f"no ground-truth document for {pred_file.name}")
        pairs.append((pred_file, gt_file))
    if not pairs:
        raise FormatError(f"no prediction documents in {pred_path}")
    return pairs


def _cmd_eval(args: argparse.Namespace) -> int:
    pairs = _eval_pairs(Path(args.pred), Path(args.gt))
    reports = []
    for pred_file, gt_file in pairs:
        pred_doc, pred_dataset = load_prediction(pred_file)
        annotation, gt_dataset = load_annotation(gt_file)
        dataset = pred_dataset or gt_dataset or "default"
        reports.append((dataset, evaluate_scene(pred_doc, annotation)))
    aggregate = aggregate_reports(reports)
    print(render_table(aggregate))
    if args.json:
        dump_json(aggregate, args.json)
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        config=_config_from_args(args),
        workers=args.workers,
        queue_limit=args.queue_limit,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sketchlayers",
        description="Segment scene sketches into depth-ordered editable layers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    seg = sub.add_parser("segment", help="produce a disjoint instance label map")
    seg.add_argument("--sketch", required=True)
    seg.add_argument("--detections", required=True)
    seg.add_argument("--depth", required=True)
    seg.add_argument("--out", required=True)
    seg.add_argument("--dataset", default=None)
    _add_config_flags(seg)
    seg.set_defaults(func=_cmd_segment)

    lay = sub.add_parser("layers", help="segment and build the editable layer stack")
    lay.add_argument("--sketch", required=True)
    lay.add_argument("--detections", required=True)
    lay.add_argument("--depth", required=True)
    lay.add_argument("--out", required=True)
    lay.add_argument("--dataset", default=None)
    _add_config_flags(lay)
    lay.set_defaults(func=_cmd_layers)

    comp = sub.add_parser("compose", help="build an annotated synthetic scene")
    comp.add_argument("--layout", required=True)
    comp.add_argument("--library", required=True)
    comp.add_argument("--out", required=True)
    comp.add_argument("--dataset", default=None)
    comp.add_argument("--depth-bins", type=int, default=10)
    comp.set_defaults(func=_cmd_compose)

    ev = sub.add_parser("eval", help="score predictions against annotations")
    ev.add_argument("--pred", required=True)
    ev.add_argument("--gt", required=True)
    ev.add_argument("--json", default=None, help="also write the aggregate as JSON")
    ev.set_defaults(func=_cmd_eval)

    srv = sub.add_parser("serve", help="run the HTTP job service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8008)
    srv.add_argument("--workers", type=int, default=4)
    srv.add_argument("--queue-limit", type=int, default=32)
    _add_config_flags(srv)
    srv.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (PipelineError, FormatError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
