"""End-to-end orchestration: fit -> detect -> segment per motion, then
corpus-level table, histograms, mixture fits and transition graph.

Every stage reads the previous stage's files and writes its own, so chaining
the CLI subcommands produces byte-identical artifacts to `run_pipeline`.
Failures are isolated per motion unless strict mode is on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as sio
from .analytics import (build_transition_graph, duration_histogram,
                        fit_two_normal_mixture, transition_table)
from .contacts import DetectionThresholds, detect_contacts
from .errors import SupportPoseError
from .fit import FitOptions, fit_object_track, fit_sequence
from .geometry import floor_mesh
from .model import KinematicModel, load_model
from .segmentation import compare_to_annotation, segment_timeline


@dataclass(frozen=True)
class PipelineConfig:
    model_path: str
    out_dir: str
    thresholds: DetectionThresholds = DetectionThresholds()
    fit: FitOptions = FitOptions()
    bin_width: int = 10
    include_boundaries: bool = False
    exclude_loops: bool = False
    exclude_kneeling: bool = True
    max_airborne_frames: int = 0
    floor_enabled: bool = True
    floor_half_extent: float = 5000.0
    floor_z: float = 0.0
    strict: bool = False

    def __post_init__(self):
        if self.bin_width < 1:
            raise SupportPoseError("bin_width must be >= 1")
        if self.max_airborne_frames < 0:
            raise SupportPoseError("max_airborne_frames must be >= 0")
        if self.floor_half_extent <= 0:
            raise SupportPoseError("floor_half_extent must be positive")


# ---------------------------------------------------------------------------
# stages (each one file-in, file-out)
# ---------------------------------------------------------------------------

def stage_fit(model: KinematicModel, bundle: sio.MotionBundle,
              opts: FitOptions, motion_dir: Path) -> tuple[Path, Path]:
    """Fit the subject pose trajectory and all object tracks."""
    motion_dir.mkdir(parents=True, exist_ok=True)
    traj = fit_sequence(model, bundle.subject, opts, fps=bundle.fps)
    poses_path = sio.write_json(sio.pose_trajectory_to_dict(traj, model),
                                motion_dir / "poses.json")
    tracks = [fit_object_track(obj.model, obj.markers, fps=bundle.fps)
              for obj in bundle.objects]
    tracks_path = sio.write_json(
        {"tracks": [sio.object_track_to_dict(t) for t in tracks]},
        motion_dir / "tracks.json")
    return poses_path, tracks_path


def stage_detect(model: KinematicModel, bundle: sio.MotionBundle,
                 poses_path: Path, tracks_path: Path,
                 config: PipelineConfig, motion_dir: Path) -> Path:
    """Detect support contacts against the floor and fitted elements."""
    traj = sio.pose_trajectory_from_dict(sio.read_json(poses_path))
    tracks_doc = sio.read_json(tracks_path)
    tracks = [sio.object_track_from_dict(d) for d in tracks_doc["tracks"]]
    meshes = {obj.model.name: obj.model.mesh for obj in bundle.objects}

    elements = []
    if config.floor_enabled:
        elements.append(("floor",
                         floor_mesh(config.floor_half_extent, config.floor_z),
                         np.eye(4)))
    for track in tracks:
        mesh = meshes.get(track.name)
        if mesh is None or mesh.is_empty:
            continue
        elements.append((track.name, mesh, track.transforms()))

    timeline = detect_contacts(model, traj, elements, config.thresholds,
                               fps=traj.fps, motion_id=bundle.motion_id)
    return sio.write_json(sio.timeline_to_dict(timeline),
                          motion_dir / "timeline.json")


def stage_segment(timeline_path: Path, motion_dir: Path,
                  max_airborne_frames: int = 0,
                  category: str | None = None) -> Path:
    timeline = sio.timeline_from_dict(sio.read_json(timeline_path))
    seq = segment_timeline(timeline, max_airborne_frames=max_airborne_frames)
    seq.category = category
    path = sio.write_json(sio.transitions_to_dict(seq),
                          motion_dir / "transitions.json")
    (motion_dir / "timeline.csv").write_text(sio.timeline_csv(seq))
    return path


def stage_stats(transition_paths: list[Path], config: PipelineConfig,
                out_dir: Path) -> None:
    sequences = [sio.transitions_from_dict(sio.read_json(p))
                 for p in transition_paths]
    stats = transition_table(sequences, exclude_kneeling=config.exclude_kneeling,
                             exclude_loops=config.exclude_loops)
    (out_dir / "table.csv").write_text(sio.table_csv(stats))

    histograms = []
    categories = sorted({s.category or "" for s in sequences})
    for cat in categories:
        records = [r for s in sequences if (s.category or "") == cat
                   for r in s.non_boundary() if r.to_pose is not None]
        if records:
            histograms.append(duration_histogram(records, config.bin_width,
                                                 category=cat or None))
    (out_dir / "histograms.csv").write_text(sio.histogram_csv(histograms))

    mixtures = {}
    cells: dict[tuple[str, str], list[int]] = {}
    all_durations: list[int] = []
    for s in sequences:
        if config.exclude_kneeling and s.category == "kneeling":
            continue
        for r in s.non_boundary():
            if r.to_pose is None:
                continue
            if config.exclude_loops and r.is_loop:
                continue
            cells.setdefault((r.from_pose.label, r.to_pose.label), []).append(
                r.duration_frames)
            all_durations.append(r.duration_frames)
    for (frm, to), durations in sorted(cells.items()):
        if len(durations) >= 8 and max(durations) > min(durations):
            fit = fit_two_normal_mixture(durations)
            mixtures[f"{frm}->{to}"] = sio.mixture_to_dict(fit)
    if len(all_durations) >= 8 and max(all_durations) > min(all_durations):
        mixtures["all"] = sio.mixture_to_dict(fit_two_normal_mixture(all_durations))
    sio.write_json(mixtures, out_dir / "mixtures.json")


def stage_graph(transition_paths: list[Path], config: PipelineConfig,
                out_dir: Path) -> None:
    sequences = [sio.transitions_from_dict(sio.read_json(p))
                 for p in transition_paths]
    graph = build_transition_graph(sequences,
                                   include_boundaries=config.include_boundaries,
                                   exclude_kneeling=config.exclude_kneeling)
    (out_dir / "graph.dot").write_text(sio.graph_dot(graph))
    sio.write_json(sio.graph_to_dict(graph), out_dir / "graph.json")


def stage_eval(transitions_path: Path, annotation: list[str],
               out_path: Path) -> dict:
    seq = sio.transitions_from_dict(sio.read_json(transitions_path))
    report = compare_to_annotation(seq, annotation)
    doc = sio.eval_report_to_dict(report)
    sio.write_json(doc, out_path)
    return doc


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------

@dataclass
class PipelineResult:
    exit_code: int
    report: dict = field(default_factory=dict)


def run_pipeline(config: PipelineConfig, manifest_paths) -> PipelineResult:
    """Process every bundle and write corpus-level artifacts.

    Returns exit code 0 when at least one motion succeeded (and all of them
    in strict mode).
    """
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model = load_model(config.model_path)

    motions = []
    transition_paths = []
    sorted_paths = sorted(Path(p) for p in manifest_paths)
    for manifest in sorted_paths:
        entry: dict = {"manifest": str(manifest)}
        try:
            bundle = sio.parse_motion_bundle(manifest)
            entry["id"] = bundle.motion_id
            motion_dir = out_dir / "motions" / bundle.motion_id
            poses_path, tracks_path = stage_fit(model, bundle, config.fit, motion_dir)
            timeline_path = stage_detect(model, bundle, poses_path, tracks_path,
                                         config, motion_dir)
            transitions_path = stage_segment(timeline_path, motion_dir,
                                             config.max_airborne_frames,
                                             category=bundle.category)
            transition_paths.append(transitions_path)
            entry["status"] = "ok"
            entry["n_frames"] = bundle.n_frames
            if bundle.annotation:
                entry["eval"] = stage_eval(transitions_path, bundle.annotation,
                                           motion_dir / "eval.json")
        except (SupportPoseError, OSError) as exc:
            entry["status"] = "error"
            entry["error"] = str(exc)
            if config.strict:
                motions.append(entry)
                report = {"motions": motions, "n_ok": 0}
                sio.write_json(report, out_dir / "run_report.json")
                return PipelineResult(exit_code=1, report=report)
        motions.append(entry)

    n_ok = sum(1 for m in motions if m.get("status") == "ok")
    if transition_paths:
        stage_stats(transition_paths, config, out_dir)
        stage_graph(transition_paths, config, out_dir)
    report = {"motions": motions, "n_ok": n_ok}
    sio.write_json(report, out_dir / "run_report.json")
    exit_code = 0 if n_ok > 0 and (not config.strict or n_ok == len(motions)) else 1
    return PipelineResult(exit_code=exit_code, report=report)
