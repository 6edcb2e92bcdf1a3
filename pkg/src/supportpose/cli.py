"""Command line: full pipeline plus each stage as its own subcommand.

Settings resolve in order: built-in defaults < config file (--config) <
environment variables (SUPPORTPOSE_<FLAG>) < explicit flags. Environment
variables mirror the flags, e.g. SUPPORTPOSE_DIST_FEET, SUPPORTPOSE_VEL,
SUPPORTPOSE_HOLD_FRAMES.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import yaml

from . import io as sio
from .contacts import DetectionThresholds
from .errors import SupportPoseError
from .fit import FitOptions
from .model import load_model
from .pipeline import (PipelineConfig, run_pipeline, stage_detect, stage_eval,
                       stage_fit, stage_graph, stage_segment, stage_stats)

ENV_PREFIX = "SUPPORTPOSE_"

_THRESHOLD_FLAGS = {
    "dist_feet": ("Feet", float),
    "dist_hands": ("Hands", float),
    "dist_knees": ("Knees", float),
    "dist_elbows": ("Elbows", float),
}
_SCALAR_FLAGS = {
    "vel": float, "hold_frames": int, "smooth_window": int,
    "env_motion_max": float, "bin_width": int, "max_airborne_frames": int,
    "rel_tol": float, "max_evals": int,
}
_BOOL_FLAGS = ("include_boundaries", "exclude_loops", "exclude_kneeling", "strict")


def _add_common_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="pipeline config document (YAML)")
    p.add_argument("--model", help="kinematic model spec document")
    p.add_argument("--out", help="output directory")
    p.add_argument("--dist-feet", type=float, help="foot distance threshold, mm")
    p.add_argument("--dist-hands", type=float, help="hand distance threshold, mm")
    p.add_argument("--dist-knees", type=float, help="knee distance threshold, mm")
    p.add_argument("--dist-elbows", type=float, help="elbow distance threshold, mm")
    p.add_argument("--vel", type=float, help="speed threshold, mm/s")
    p.add_argument("--hold-frames", type=int, help="onset hold duration, frames")
    p.add_argument("--smooth-window", type=int, help="velocity smoothing window, frames")
    p.add_argument("--env-motion-max", type=float,
                   help="max environmental element displacement, mm")
    p.add_argument("--bin-width", type=int, help="histogram bin width, frames")
    p.add_argument("--max-airborne-frames", type=int,
                   help="bridge empty-pose gaps shorter than this")
    p.add_argument("--method", help="optimizer: powell or nelder-mead")
    p.add_argument("--rel-tol", type=float, help="optimizer relative tolerance")
    p.add_argument("--max-evals", type=int, help="optimizer evaluation budget per frame")
    p.add_argument("--include-boundaries", action="store_true", default=None,
                   help="include boundary records in the transition graph")
    p.add_argument("--exclude-loops", action="store_true", default=None,
                   help="drop loop transitions from the statistics")
    p.add_argument("--exclude-kneeling", action="store_true", default=None,
                   help="drop kneeling-tagged motions from the statistics")
    p.add_argument("--include-kneeling", action="store_true", default=None,
                   help="keep kneeling-tagged motions in the statistics")
    p.add_argument("--strict", action="store_true", default=None,
                   help="abort the corpus on the first failing motion")


def _env_value(name, cast):
    raw = os.environ.get(ENV_PREFIX + name.upper())
    if raw is None:
        return None
    if cast is bool:
        return raw.strip().lower() in ("1", "true", "yes", "on")
    return cast(raw)


def build_config(args) -> PipelineConfig:
    doc: dict = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise SupportPoseError(f"config file not found: {path}")
        doc = yaml.safe_load(path.read_text()) or {}

    thr = dict(doc.get("thresholds", {}))
    fit = dict(doc.get("fit", {}))
    ana = dict(doc.get("analytics", {}))
    floor = dict(doc.get("floor", {}))

    def resolve(flag, cast, current):
        env = _env_value(flag, cast)
        cli = getattr(args, flag, None)
        if cli is not None:
            return cli
        if env is not None:
            return env
        return current

    dist = {
        "Feet": resolve("dist_feet", float, thr.get("dist_feet", 15.0)),
        "Hands": resolve("dist_hands", float, thr.get("dist_hands", 15.0)),
        "Knees": resolve("dist_knees", float, thr.get("dist_knees", 35.0)),
        "Elbows": resolve("dist_elbows", float, thr.get("dist_elbows", 30.0)),
    }
    thresholds = DetectionThresholds(
        dist_mm=dist,
        vel_mm_per_s=resolve("vel", float, thr.get("vel", 200.0)),
        hold_frames=resolve("hold_frames", int, thr.get("hold_frames", 5)),
        smoothing_window_frames=resolve("smooth_window", int, thr.get("smooth_window", 5)),
        env_motion_max_mm=resolve("env_motion_max", float, thr.get("env_motion_max", 50.0)),
    )
    fit_opts = FitOptions(
        method=resolve("method", str, fit.get("method", "trf")),
        rel_tol=resolve("rel_tol", float, fit.get("rel_tol", 1e-8)),
        max_evals=resolve("max_evals", int, fit.get("max_evals", 5000)),
    )

    exclude_kneeling = ana.get("exclude_kneeling", True)
    if getattr(args, "include_kneeling", None):
        exclude_kneeling = False
    elif getattr(args, "exclude_kneeling", None):
        exclude_kneeling = True
    else:
        env = _env_value("exclude_kneeling", bool)
        if env is not None:
            exclude_kneeling = env

    model_path = resolve("model", str, doc.get("model"))
    out_dir = resolve("out", str, doc.get("out", "out"))
    if not model_path:
        raise SupportPoseError("no model given (flag --model, env, or config)")

    return PipelineConfig(
        model_path=str(model_path),
        out_dir=str(out_dir),
        thresholds=thresholds,
        fit=fit_opts,
        bin_width=resolve("bin_width", int, ana.get("bin_width", 10)),
        include_boundaries=bool(resolve("include_boundaries", bool,
                                        ana.get("include_boundaries", False))),
        exclude_loops=bool(resolve("exclude_loops", bool,
                                   ana.get("exclude_loops", False))),
        exclude_kneeling=bool(exclude_kneeling),
        max_airborne_frames=resolve("max_airborne_frames", int,
                                    ana.get("max_airborne_frames", 0)),
        floor_enabled=bool(floor.get("enabled", True)),
        floor_half_extent=float(floor.get("half_extent", 5000.0)),
        floor_z=float(floor.get("z", 0.0)),
        strict=bool(resolve("strict", bool, doc.get("strict", False))),
    )


def _motion_dir(config: PipelineConfig, motion_id: str) -> Path:
    d = Path(config.out_dir) / "motions" / motion_id
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_run(args) -> int:
    config = build_config(args)
    result = run_pipeline(config, args.bundles)
    ok = result.report.get("n_ok", 0)
    total = len(result.report.get("motions", []))
    print(f"processed {ok}/{total} motions -> {config.out_dir}")
    return result.exit_code


def cmd_fit(args) -> int:
    config = build_config(args)
    model = load_model(config.model_path)
    bundle = sio.parse_motion_bundle(args.bundle)
    motion_dir = _motion_dir(config, bundle.motion_id)
    poses_path, tracks_path = stage_fit(model, bundle, config.fit, motion_dir)
    print(f"wrote {poses_path} and {tracks_path}")
    return 0


def cmd_detect(args) -> int:
    config = build_config(args)
    model = load_model(config.model_path)
    bundle = sio.parse_motion_bundle(args.bundle)
    motion_dir = _motion_dir(config, bundle.motion_id)
    poses = Path(args.poses) if args.poses else motion_dir / "poses.json"
    tracks = Path(args.tracks) if args.tracks else motion_dir / "tracks.json"
    path = stage_detect(model, bundle, poses, tracks, config, motion_dir)
    print(f"wrote {path}")
    return 0


def cmd_segment(args) -> int:
    config = build_config(args) if (args.config or args.model) else None
    timeline = Path(args.timeline)
    out_dir = Path(args.out or timeline.parent)
    out_dir.mkdir(parents=True, exist_ok=True)
    max_airborne = args.max_airborne_frames
    if max_airborne is None:
        max_airborne = config.max_airborne_frames if config else 0
    path = stage_segment(timeline, out_dir, max_airborne, category=args.category)
    print(f"wrote {path}")
    return 0


def _config_for_stats(args) -> PipelineConfig:
    # stats/graph/eval do not need a model; fake one if absent
    if not getattr(args, "model", None) and not os.environ.get(ENV_PREFIX + "MODEL") \
            and not args.config:
        args.model = "-"
    try:
        return build_config(args)
    except SupportPoseError:
        args.model = "-"
        return build_config(args)


def cmd_stats(args) -> int:
    config = _config_for_stats(args)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stage_stats([Path(p) for p in args.transitions], config, out_dir)
    print(f"wrote {out_dir / 'table.csv'}, {out_dir / 'histograms.csv'}, "
          f"{out_dir / 'mixtures.json'}")
    return 0


def cmd_graph(args) -> int:
    config = _config_for_stats(args)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stage_graph([Path(p) for p in args.transitions], config, out_dir)
    print(f"wrote {out_dir / 'graph.dot'} and {out_dir / 'graph.json'}")
    return 0


def cmd_eval(args) -> int:
    if args.annotation:
        annotation = [s.strip() for s in Path(args.annotation).read_text().split()
                      if s.strip()]
    else:
        bundle = sio.parse_motion_bundle(args.bundle)
        if not bundle.annotation:
            raise SupportPoseError(f"bundle {bundle.motion_id} carries no annotation")
        annotation = bundle.annotation
    out = Path(args.out or ".") / "eval.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    doc = stage_eval(Path(args.detected), annotation, out)
    print(f"missed={doc['n_missed']} incorrect={doc['n_incorrect']} -> {out}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="supportpose",
        description="Support-pose detection and transition analytics for "
                    "marker-based motion capture.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="full pipeline over one or more bundles")
    _add_common_flags(p)
    p.add_argument("bundles", nargs="+", help="bundle manifest documents")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("fit", help="fit subject poses and object tracks")
    _add_common_flags(p)
    p.add_argument("bundle", help="bundle manifest document")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("detect", help="detect support contacts from fitted poses")
    _add_common_flags(p)
    p.add_argument("bundle", help="bundle manifest document")
    p.add_argument("--poses", help="poses.json from the fit stage")
    p.add_argument("--tracks", help="tracks.json from the fit stage")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("segment", help="segment a contact timeline into transitions")
    _add_common_flags(p)
    p.add_argument("timeline", help="timeline.json from the detect stage")
    p.add_argument("--category", help="motion category tag")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("stats", help="transition table, histograms, mixture fits")
    _add_common_flags(p)
    p.add_argument("transitions", nargs="+", help="transitions.json files")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("graph", help="transition graph (DOT + JSON)")
    _add_common_flags(p)
    p.add_argument("transitions", nargs="+", help="transitions.json files")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("eval", help="diff detected transitions against an annotation")
    _add_common_flags(p)
    p.add_argument("detected", help="transitions.json from the segment stage")
    p.add_argument("--bundle", help="bundle manifest carrying the annotation")
    p.add_argument("--annotation", help="whitespace-separated pose label file")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SupportPoseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
