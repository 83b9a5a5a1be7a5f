"""Command-line interface.

Verbs: run (pipeline), eval (scoring), synth (scenario generation),
bench (timing), baseline (comparison decoder). Exit codes: 0 success,
1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import synth
from .backend import available_backends
from .evaluation import FrameAlignmentError, evaluate
from .pipeline import (
    MODE_BASELINE,
    MODE_FULL,
    PipelineConfig,
    bench,
    load_config,
    merge_reports,
    run_dataset,
)
from .probmap_io import (
    DataFormatError,
    load_manifest,
    load_manifest_frame,
    load_manifest_gt,
    read_lane_output,
)

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lanepost", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    def add_common(p):
        p.add_argument("--config", type=Path, help="JSON pipeline config")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config value (dotted keys)")

    p_run = sub.add_parser("run", help="run the pipeline over a manifest")
    p_run.add_argument("--manifest", type=Path, required=True)
    p_run.add_argument("--out", type=Path, required=True)
    p_run.add_argument("--mode", choices=[MODE_FULL, MODE_BASELINE])
    p_run.add_argument("--no-pft", action="store_true",
                       help="disable preceding-frame tracking")
    p_run.add_argument("--overlay", action="store_true",
                       help="write overlay images next to lane outputs")
    p_run.add_argument("--seed", type=int, default=0,
                       help="recorded in the summary; the pipeline is deterministic")
    p_run.add_argument("--backend", choices=["auto", "compiled", "pure"])
    add_common(p_run)

    p_base = sub.add_parser("baseline", help="run the comparison decoder")
    p_base.add_argument("--manifest", type=Path, required=True)
    p_base.add_argument("--out", type=Path, required=True)
    p_base.add_argument("--overlay", action="store_true")
    add_common(p_base)

    p_eval = sub.add_parser("eval", help="score lane outputs against ground truth")
    p_eval.add_argument("--manifest", type=Path, required=True)
    p_eval.add_argument("--pred-dir", type=Path, required=True,
                        help="output directory of a previous run")
    p_eval.add_argument("--out", type=Path, help="where to write the report files")
    add_common(p_eval)

    p_synth = sub.add_parser("synth", help="generate a synthetic scenario")
    p_synth.add_argument("--out", type=Path, required=True)
    p_synth.add_argument("--preset", choices=sorted(synth.PRESETS))
    p_synth.add_argument("--spec", type=Path, help="JSON scenario spec")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--frames", type=int, help="override preset frame count")

    p_bench = sub.add_parser("bench", help="time the pipeline on preloaded frames")
    p_bench.add_argument("--manifest", type=Path, required=True)
    p_bench.add_argument("--repeats", type=int, default=5)
    p_bench.add_argument("--backend",
                         choices=["auto", "compiled", "pure", "both"], default="both")
    add_common(p_bench)
    return parser


def _config_from_args(args) -> PipelineConfig:
    cfg = load_config(getattr(args, "config", None))
    for item in getattr(args, "overrides", []):
        if "=" not in item:
            raise SystemExit(USAGE_ERROR)
        key, value = item.split("=", 1)
        try:
            cfg = cfg.with_override(key, value)
        except (KeyError, ValueError) as exc:
            print(f"lanepost: bad --set {item!r}: {exc}", file=sys.stderr)
            raise SystemExit(USAGE_ERROR) from exc
    if getattr(args, "mode", None):
        cfg = dataclasses.replace(cfg, mode=args.mode)
    if getattr(args, "no_pft", False):
        cfg = dataclasses.replace(
            cfg, tracker=dataclasses.replace(cfg.tracker, pft_enabled=False)
        )
    if getattr(args, "backend", None) and args.backend != "both":
        cfg = dataclasses.replace(cfg, backend=args.backend)
    return cfg


def _cmd_run(args, mode_override=None) -> int:
    cfg = _config_from_args(args)
    if mode_override:
        cfg = dataclasses.replace(cfg, mode=mode_override)
    summary = run_dataset(args.manifest, cfg, args.out, overlay=args.overlay)
    print(f"processed {summary.frames_processed} frames in {summary.clips} clips"
          f" -> {summary.out_dir}")
    if summary.report is not None:
        print(summary.report.to_text(), end="")
    return 0


def _cmd_eval(args) -> int:
    cfg = _config_from_args(args)
    clips = load_manifest(args.manifest)
    reports = []
    for clip in clips:
        preds = {}
        gts = []
        dims = None
        for entry in clip.frames:
            gt = load_manifest_gt(entry)
            if gt is None:
                continue
            gts.append(gt)
            pred_file = args.pred_dir / clip.name / f"frame_{entry.frame_id:06d}.lanes.txt"
            if not pred_file.exists():
                raise FrameAlignmentError(f"missing predictions for frame {entry.frame_id}")
            preds[entry.frame_id] = [rec.samples for rec in read_lane_output(pred_file)]
            if dims is None:
                frame = load_manifest_frame(entry)
                dims = (frame.width, frame.height)
        if gts:
            reports.append(evaluate(preds, gts, cfg.evaluation, dims[0], dims[1]))
    report = merge_reports(reports)
    if report is None:
        print("no ground truth in manifest; nothing to score", file=sys.stderr)
        return DATA_ERROR
    print(report.to_text(), end="")
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "eval_report.txt").write_text(report.to_text())
        (args.out / "eval_report.csv").write_text(report.to_csv())
    return 0


def _cmd_synth(args) -> int:
    if (args.preset is None) == (args.spec is None):
        print("lanepost synth: give exactly one of --preset or --spec", file=sys.stderr)
        return USAGE_ERROR
    if args.preset:
        spec = synth.PRESETS[args.preset]()
        if args.frames:
            spec = dataclasses.replace(
                spec, frames=args.frames,
                dropouts=frozenset((f, l) for f, l in spec.dropouts if f < args.frames),
            )
    else:
        data = json.loads(args.spec.read_text())
        lanes = []
        for entry in data.pop("lanes"):
            kind = entry.pop("kind", "straight")
            cls = synth.CurvedLaneSpec if kind == "curved" else synth.StraightLaneSpec
            lanes.append(cls(**entry))
        data["lanes"] = tuple(lanes)
        if "dropouts" in data:
            data["dropouts"] = frozenset(tuple(d) for d in data["dropouts"])
        if "active_pair" in data and data["active_pair"] is not None:
            data["active_pair"] = tuple(data["active_pair"])
        spec = synth.ScenarioSpec(**data)
    manifest = synth.write_scenario(spec, args.out, seed=args.seed)
    print(f"wrote scenario manifest {manifest}")
    return 0


def _cmd_bench(args) -> int:
    cfg = _config_from_args(args)
    backends = ["both"] if args.backend == "both" else [args.backend]
    if backends == ["both"] and len(available_backends()) == 1:
        backends = ["pure"]
    report = bench(args.manifest, cfg, repeats=args.repeats, backends=backends)
    print(report.to_text(), end="")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_ERROR
    try:
        if args.verb == "run":
            return _cmd_run(args)
        if args.verb == "baseline":
            args.mode = MODE_BASELINE
            args.no_pft = False
            args.backend = None
            args.seed = 0
            return _cmd_run(args, mode_override=MODE_BASELINE)
        if args.verb == "eval":
            return _cmd_eval(args)
        if args.verb == "synth":
            return _cmd_synth(args)
        if args.verb == "bench":
            return _cmd_bench(args)
    except (DataFormatError, FrameAlignmentError) as exc:
        print(f"lanepost: data error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except FileNotFoundError as exc:
        print(f"lanepost: missing file: {exc}", file=sys.stderr)
        return DATA_ERROR
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_ERROR
    return USAGE_ERROR


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
