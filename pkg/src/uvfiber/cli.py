"""Command-line front end: detect pages, generate corpora, evaluate metrics.

Every behavior here is a thin shell over library calls; the exit status of
``detect`` is part of the contract (0 authentic, 1 fake, 2 any error) so
scripts can branch on it.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys

import numpy as np

from .errors import ConfigError, UvfiberError
from .figures import PageResult, render_eval_figures
from .imagebuf import Rect, read_image, write_gray, write_overlay
from .pipeline import DetectionReport, DetectorConfig, PipelineMaps, Verdict, run_pipeline_with_maps
from .synthgen import SyntheticSpec, evaluate, generate_corpus, read_ground_truth

REPORT_SCHEMA_VERSION = 1

_CONFIG_FIELDS = [f.name for f in dataclasses.fields(DetectorConfig)]


# --- config handling ----------------------------------------------------------


def _rect_from_values(values, what: str) -> Rect:
    try:
        x, y, w, h = (int(v) for v in values)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{what} must be four integers X,Y,W,H") from e
    if w < 0 or h < 0:
        raise ConfigError(f"{what} must have non-negative size, got {w}x{h}")
    return Rect(x, y, w, h)


def load_config(path: str | os.PathLike) -> DetectorConfig:
    """Parse a flat JSON config file; unknown keys are an error."""
    try:
        with open(path) as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path}: not valid JSON ({e})") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path}: expected a JSON object")
    unknown = sorted(set(raw) - set(_CONFIG_FIELDS))
    if unknown:
        raise ConfigError(f"config {path}: unknown keys {unknown}")
    if raw.get("photo_region") is not None:
        raw["photo_region"] = _rect_from_values(raw["photo_region"], "photo_region")
    try:
        return DetectorConfig(**raw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"config {path}: {e}") from e


def _config_with_overrides(args) -> DetectorConfig:
    """Built-in defaults, then the config file, then explicit flags."""
    config = load_config(args.config) if args.config else DetectorConfig()
    overrides = {}
    if getattr(args, "min_fibers", None) is not None:
        overrides["min_fiber_count"] = args.min_fibers
    if getattr(args, "photo_region", None) is not None:
        overrides["photo_region"] = args.photo_region
    if not overrides:
        return config
    try:
        return dataclasses.replace(config, **overrides)
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _config_to_jsonable(config: DetectorConfig) -> dict:
    out = {}
    for name in _CONFIG_FIELDS:
        value = getattr(config, name)
        if name == "photo_region":
            value = None if value is None else [value.x, value.y, value.w, value.h]
        out[name] = value
    return out


def report_to_jsonable(report: DetectionReport, input_path: str) -> dict:
    """Report JSON schema, version 1; consumers parse these keys by name."""
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "input": input_path,
        "width": report.width,
        "height": report.height,
        "config": _config_to_jsonable(report.config),
        "fibers": [
            {
                "bbox": [c.bbox.x, c.bbox.y, c.bbox.w, c.bbox.h],
                "length_px": c.length,
                "centroid": [c.centroid[0], c.centroid[1]],
            }
            for c in report.fibers
        ],
        "fiber_count": report.fiber_count,
        "verdict": report.verdict.value,
        "timings_ms": {k: round(v, 3) for k, v in report.timings_ms.items()},
    }


# --- detect -------------------------------------------------------------------


def _parse_photo_region(text: str) -> Rect:
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(f"photo-region must be X,Y,W,H, got {text!r}")
    try:
        return _rect_from_values(parts, "photo-region")
    except ConfigError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _dump_debug_maps(maps: PipelineMaps, out_dir: str | os.PathLike) -> None:
    """PGM dumps of the intermediates; values above 1 are rescaled, scale printed."""
    os.makedirs(out_dir, exist_ok=True)
    write_gray(os.path.join(out_dir, "i0.pgm"), maps.i0)
    write_gray(os.path.join(out_dir, "ibg.pgm"), maps.ibg)
    write_gray(os.path.join(out_dir, "idil.pgm"), maps.idil)
    for name, img in (("ratio", maps.ratio), ("strength", maps.strength)):
        peak = float(img.max())
        scale = peak if peak > 0 else 1.0
        write_gray(os.path.join(out_dir, name + ".pgm"), img / scale)
        print(f"{name}.pgm scale={scale:.6g} (pixel 255 = {scale:.6g})")
    write_gray(os.path.join(out_dir, "final.pgm"), maps.final.astype(np.float64))


def cmd_detect(args) -> int:
    config = _config_with_overrides(args)
    img = read_image(args.input)
    report, maps = run_pipeline_with_maps(img, config)
    if args.report:
        with open(args.report, "w") as f:
            json.dump(report_to_jsonable(report, args.input), f, indent=2)
            f.write("\n")
    if args.overlay:
        write_overlay(args.overlay, img, [c.bbox for c in report.fibers])
    if args.debug_maps:
        _dump_debug_maps(maps, args.debug_maps)
    print(f"verdict={report.verdict.value} fibers={report.fiber_count}")
    return 0 if report.verdict is Verdict.AUTHENTIC else 1


# --- synth --------------------------------------------------------------------


def _spec_from_args(args) -> SyntheticSpec:
    spec = SyntheticSpec()
    overrides = {}
    for field in ("width", "height", "noise_sigma", "text_blocks"):
        value = getattr(args, field)
        if value is not None:
            overrides[field] = value
    return dataclasses.replace(spec, **overrides) if overrides else spec


def cmd_synth(args) -> int:
    spec = _spec_from_args(args)
    stems = generate_corpus(args.authentic, args.model, spec, args.seed, args.out)
    print(f"wrote {len(stems)} pages to {args.out}")
    return 0


# --- eval ---------------------------------------------------------------------


def _corpus_stems(corpus: str) -> list[str]:
    try:
        entries = os.listdir(corpus)
    except OSError as e:
        raise UvfiberError(f"cannot list corpus directory {corpus}: {e}") from e
    stems = sorted(name[:-4] for name in entries if name.endswith((".ppm", ".pgm")))
    if not stems:
        raise UvfiberError(f"no page images (.ppm/.pgm) in corpus directory {corpus}")
    return stems


def _write_pages_csv(results: list[PageResult], path: str) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["stem", "model_page", "fiber_count", "verdict", "correct", "detect_ms"])
        for r in results:
            writer.writerow(
                [r.stem, int(r.model_page), r.fiber_count, r.verdict, int(r.correct), f"{r.detect_ms:.3f}"]
            )


def cmd_eval(args) -> int:
    config = _config_with_overrides(args)
    reports, truths, results = [], [], []
    for stem in _corpus_stems(args.corpus):
        image_path = next(
            p
            for p in (os.path.join(args.corpus, stem + ext) for ext in (".ppm", ".pgm"))
            if os.path.exists(p)
        )
        truth_path = os.path.join(args.corpus, stem + ".json")
        if not os.path.exists(truth_path):
            raise UvfiberError(f"corpus page {stem} has no truth file {truth_path}")
        truth = read_ground_truth(truth_path)
        report, _ = run_pipeline_with_maps(read_image(image_path), config)
        reports.append(report)
        truths.append(truth)
        expected = Verdict.FAKE if truth.model_page else Verdict.AUTHENTIC
        results.append(
            PageResult(
                stem=stem,
                model_page=truth.model_page,
                fiber_count=report.fiber_count,
                verdict=report.verdict.value,
                correct=report.verdict is expected,
                detect_ms=sum(report.timings_ms.values()),
            )
        )
    metrics = evaluate(reports, truths, args.match_dist)
    if args.report_dir:
        os.makedirs(args.report_dir, exist_ok=True)
        _write_pages_csv(results, os.path.join(args.report_dir, "pages.csv"))
        render_eval_figures(results, metrics, config.min_fiber_count, args.report_dir)
    print(
        json.dumps(
            {
                "fiber_precision": metrics.fiber_precision,
                "fiber_recall": metrics.fiber_recall,
                "doc_accuracy": metrics.doc_accuracy,
                "tp": metrics.tp,
                "fp": metrics.fp,
                "fn": metrics.fn,
            }
        )
    )
    return 0


# --- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uvfiber", description="UV security-fiber detector")
    sub = parser.add_subparsers(dest="command", required=True)

    detect = sub.add_parser("detect", help="detect fibers on one page image")
    detect.add_argument("--input", required=True, help="page image (PGM/PPM)")
    detect.add_argument("--config", help="JSON config file")
    detect.add_argument("--report", help="write the detection report JSON here")
    detect.add_argument("--overlay", help="write a PPM with detected boxes outlined in red")
    detect.add_argument("--photo-region", type=_parse_photo_region, metavar="X,Y,W,H",
                        help="mask this region before ridge detection")
    detect.add_argument("--min-fibers", type=int, help="fibers required for AUTHENTIC")
    detect.add_argument("--debug-maps", metavar="DIR", help="dump intermediate maps as PGM")
    detect.set_defaults(func=cmd_detect)

    synth = sub.add_parser("synth", help="generate a synthetic corpus")
    synth.add_argument("--out", required=True, help="output directory")
    synth.add_argument("--authentic", type=int, default=10, help="authentic page count")
    synth.add_argument("--model", type=int, default=10, help="model (fiberless) page count")
    synth.add_argument("--seed", type=int, default=0, help="corpus seed")
    synth.add_argument("--width", type=int, help="page width override")
    synth.add_argument("--height", type=int, help="page height override")
    synth.add_argument("--noise-sigma", type=float, help="sensor noise override")
    synth.add_argument("--text-blocks", type=int, help="text block count override")
    synth.set_defaults(func=cmd_synth)

    ev = sub.add_parser("eval", help="run detection over a corpus and score it")
    ev.add_argument("--corpus", required=True, help="directory of pages + truth JSON")
    ev.add_argument("--config", help="JSON config file")
    ev.add_argument("--match-dist", type=float, default=3.0, help="match distance in px")
    ev.add_argument("--report-dir", help="write pages.csv and figures here")
    ev.set_defaults(func=cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UvfiberError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
