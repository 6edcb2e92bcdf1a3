"""Interchange formats: marker CSV, motion bundles, stage exports.

All emitters are deterministic (sorted keys where order is not meaningful,
floats via shortest round-trip repr), so identical inputs give byte-identical
files and parse(emit(x)) is a fixed point.

Marker CSV: header ``frame,marker_name,x,y,z``; every frame block lists all
declared markers (the first block declares them); empty x,y,z cells mark an
occluded marker. Frame indices must be strictly increasing.

Bundle manifest (YAML)::

    id: walk_01
    category: locomotion
    fps: 100
    subject_markers: subject.csv
    objects:
      - model: table_model.yaml   # object model document
        markers: table.csv
    annotation: [2Feet, 1Foot, 2Feet]   # optional ordered pose labels

Object model (YAML)::

    name: table
    mesh: table.obj
    markers:
      - {name: T1, offset: [0.0, 0.0, 0.0]}
"""

from __future__ import annotations

import csv
import io as _io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .analytics import Histogram, MixtureFit, TransitionGraph, TransitionStats
from .contacts import ContactTimeline
from .errors import BundleError, MarkerDataError
from .fit import MarkerSequence, ObjectModel, ObjectTrack, PoseTrajectory
from .geometry import load_obj
from .model import KinematicModel
from .segmentation import (EvalReport, SupportPose, TransitionRecord,
                           TransitionSequence)

MARKER_CSV_HEADER = ["frame", "marker_name", "x", "y", "z"]


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# marker CSV
# ---------------------------------------------------------------------------

def parse_marker_csv(source, name: str | None = None) -> MarkerSequence:
    """Parse a marker CSV file (path, file object, or text)."""
    if hasattr(source, "read"):
        text = source.read()
        src = name or "<stream>"
    else:
        p = Path(source)
        if p.exists():
            text = p.read_text()
            src = str(p)
        elif "\n" in str(source) or "," in str(source):
            text = str(source)
            src = name or "<string>"
        else:
            raise MarkerDataError(f"marker CSV not found: {source}")

    reader = csv.reader(_io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MarkerDataError(f"{src}: empty marker CSV") from None
    if [h.strip() for h in header] != MARKER_CSV_HEADER:
        raise MarkerDataError(
            f"{src}:1: header must be {','.join(MARKER_CSV_HEADER)!r}, "
            f"got {','.join(header)!r}")

    blocks: list[tuple[int, dict[str, np.ndarray]]] = []
    declared: list[str] | None = None
    current_frame: int | None = None
    current: dict[str, np.ndarray] = {}

    def close_block(lineno):
        nonlocal declared, current, current_frame
        if current_frame is None:
            return
        names = list(current)
        if declared is None:
            declared = names
        else:
            missing = [n for n in declared if n not in current]
            if missing:
                raise MarkerDataError(
                    f"{src}: frame {current_frame} is missing marker(s) "
                    f"{missing} (before line {lineno})")
        blocks.append((current_frame, current))
        current = {}

    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 5:
            raise MarkerDataError(f"{src}:{lineno}: expected 5 fields, got {len(row)}")
        f_str, mname, xs, ys, zs = (c.strip() for c in row)
        try:
            frame_idx = int(f_str)
        except ValueError:
            raise MarkerDataError(f"{src}:{lineno}: field 'frame': bad integer {f_str!r}") from None
        if current_frame is None:
            current_frame = frame_idx
        elif frame_idx != current_frame:
            if frame_idx <= current_frame:
                raise MarkerDataError(
                    f"{src}:{lineno}: field 'frame': frame indices must be "
                    f"strictly increasing ({frame_idx} after {current_frame})")
            close_block(lineno)
            current_frame = frame_idx
        if declared is not None and mname not in declared:
            raise MarkerDataError(
                f"{src}:{lineno}: field 'marker_name': unknown marker {mname!r} "
                f"(declared set: {declared})")
        if mname in current:
            raise MarkerDataError(
                f"{src}:{lineno}: field 'marker_name': duplicate marker {mname!r} "
                f"in frame {frame_idx}")
        if xs == "" and ys == "" and zs == "":
            pos = np.array([np.nan, np.nan, np.nan])
        else:
            try:
                pos = np.array([float(xs), float(ys), float(zs)])
            except ValueError:
                raise MarkerDataError(
                    f"{src}:{lineno}: field 'x/y/z': malformed number in "
                    f"({xs!r}, {ys!r}, {zs!r})") from None
        current[mname] = pos
    close_block("end")

    if not blocks:
        raise MarkerDataError(f"{src}: no marker rows")
    assert declared is not None
    F = len(blocks)
    positions = np.empty((F, len(declared), 3))
    indices = np.empty(F, dtype=np.int64)
    for i, (fidx, row_map) in enumerate(blocks):
        indices[i] = fidx
        for k, mname in enumerate(declared):
            positions[i, k] = row_map[mname]
    return MarkerSequence(marker_names=tuple(declared), positions=positions,
                          frame_indices=indices)


def emit_marker_csv(seq: MarkerSequence) -> str:
    out = [",".join(MARKER_CSV_HEADER)]
    for i in range(seq.n_frames):
        fidx = int(seq.frame_indices[i])
        for k, name in enumerate(seq.marker_names):
            p = seq.positions[i, k]
            if np.isnan(p).any():
                out.append(f"{fidx},{name},,,")
            else:
                out.append(f"{fidx},{name},{_fmt(p[0])},{_fmt(p[1])},{_fmt(p[2])}")
    return "\n".join(out) + "\n"


def write_marker_csv(seq: MarkerSequence, path) -> Path:
    p = Path(path)
    p.write_text(emit_marker_csv(seq))
    return p


# ---------------------------------------------------------------------------
# pose trajectories
# ---------------------------------------------------------------------------

def pose_trajectory_to_dict(traj: PoseTrajectory, model: KinematicModel | None = None) -> dict:
    fields = ["px", "py", "pz", "alpha", "beta", "gamma"]
    if model is not None:
        fields += model.joint_names
    return {
        "model": traj.model_name,
        "fps": float(traj.fps),
        "pose_fields": fields,
        "poses": [[float(v) for v in row] for row in traj.poses],
        "objectives": [float(v) for v in traj.objectives],
        "converged": [bool(v) for v in traj.converged],
    }


def pose_trajectory_from_dict(doc: dict) -> PoseTrajectory:
    return PoseTrajectory(
        poses=np.asarray(doc["poses"], dtype=float),
        objectives=np.asarray(doc.get("objectives", []), dtype=float),
        converged=np.asarray(doc.get("converged", []), dtype=bool),
        fps=float(doc.get("fps", 100.0)),
        model_name=doc.get("model", ""),
    )


# ---------------------------------------------------------------------------
# object tracks
# ---------------------------------------------------------------------------

def object_track_to_dict(track: ObjectTrack) -> dict:
    return {
        "name": track.name,
        "fps": float(track.fps),
        "marker_count": int(track.marker_count),
        "poses": [[float(v) for v in row] for row in track.poses],
    }


def object_track_from_dict(doc: dict) -> ObjectTrack:
    return ObjectTrack(name=doc["name"],
                       poses=np.asarray(doc["poses"], dtype=float),
                       marker_count=int(doc.get("marker_count", 0)),
                       fps=float(doc.get("fps", 100.0)))


# ---------------------------------------------------------------------------
# contact timelines
# ---------------------------------------------------------------------------

def timeline_to_dict(timeline: ContactTimeline) -> dict:
    return {
        "motion_id": timeline.motion_id,
        "fps": float(timeline.fps),
        "n_frames": timeline.n_frames,
        "contacts": [sorted([list(pair) for pair in frame])
                     for frame in timeline.frames],
    }


def timeline_from_dict(doc: dict) -> ContactTimeline:
    frames = [frozenset(tuple(pair) for pair in frame) for frame in doc["contacts"]]
    return ContactTimeline(frames=frames, fps=float(doc.get("fps", 100.0)),
                           motion_id=doc.get("motion_id"))


# ---------------------------------------------------------------------------
# transition sequences
# ---------------------------------------------------------------------------

def transitions_to_dict(seq: TransitionSequence) -> dict:
    return {
        "motion_id": seq.motion_id,
        "category": seq.category,
        "fps": float(seq.fps),
        "records": [{
            "from": r.from_pose.label,
            "to": r.to_pose.label if r.to_pose is not None else None,
            "duration_frames": int(r.duration_frames),
            "start_frame": int(r.start_frame),
            "boundary": bool(r.boundary),
        } for r in seq.records],
    }


def transitions_from_dict(doc: dict) -> TransitionSequence:
    records = [
        TransitionRecord(
            from_pose=SupportPose.from_label(r["from"]),
            to_pose=None if r["to"] is None else SupportPose.from_label(r["to"]),
            duration_frames=int(r["duration_frames"]),
            start_frame=int(r["start_frame"]),
            boundary=bool(r.get("boundary", False)),
            motion_id=doc.get("motion_id"),
        ) for r in doc["records"]
    ]
    return TransitionSequence(motion_id=doc.get("motion_id", ""), records=records,
                              category=doc.get("category"),
                              fps=float(doc.get("fps", 100.0)))


def timeline_csv(seq: TransitionSequence) -> str:
    """Per-record rows ``start,end,label,duration`` (end exclusive)."""
    lines = ["start,end,label,duration"]
    for r in seq.records:
        lines.append(f"{r.start_frame},{r.start_frame + r.duration_frames},"
                     f"{r.from_pose.label},{r.duration_frames}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# analytics exports
# ---------------------------------------------------------------------------

def table_csv(stats: TransitionStats) -> str:
    """Table cells formatted ``appearance%, time%`` to 2 decimals; rows and
    columns ordered by decreasing pose appearance total."""
    order = stats.row_order
    cols = list(order)
    extra = sorted({to for (_, to) in stats.cells} - set(cols))
    cols += extra
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["from_pose"] + cols + ["total"])
    for frm in order:
        row = [frm]
        for to in cols:
            cs = stats.cells.get((frm, to))
            row.append(f"{cs.appearance_pct:.2f}%, {cs.time_pct:.2f}%" if cs else "--")
        tot = stats.pose_totals[frm]
        row.append(f"{tot[0]:.2f}%, {tot[1]:.2f}%")
        writer.writerow(row)
    writer.writerow(["transitions", str(stats.n_transitions)]
                    + [""] * (len(cols) - 1)
                    + [f"total_frames={stats.total_frames}"])
    return buf.getvalue()


def histogram_csv(histograms) -> str:
    """``bin_start,bin_end,count,category`` rows for one or many histograms."""
    if isinstance(histograms, Histogram):
        histograms = [histograms]
    lines = ["bin_start,bin_end,count,category"]
    for h in histograms:
        for idx in sorted(h.counts):
            lo, hi = h.bin_range(idx)
            lines.append(f"{lo},{hi},{h.counts[idx]},{h.category or ''}")
    return "\n".join(lines) + "\n"


def mixture_to_dict(fit: MixtureFit) -> dict:
    return {
        "weights": [float(w) for w in fit.weights],
        "means": [float(m) for m in fit.means],
        "stds": [float(s) for s in fit.stds],
        "log_likelihood": float(fit.log_likelihood),
        "converged": bool(fit.converged),
        "iterations": int(fit.iterations),
        "separation": float(fit.separation),
    }


def graph_dot(graph: TransitionGraph) -> str:
    """DOT rendering; multi-change edges are drawn red, labels are counts."""
    lines = ["digraph transitions {"]
    for node in graph.nodes:
        lines.append(f'  "{node}";')
    for e in graph.edges:
        style = ' color="red"' if e.change_class == "multi" else ""
        lines.append(f'  "{e.from_label}" -> "{e.to_label}" '
                     f'[label="{e.count}"{style}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_to_dict(graph: TransitionGraph) -> dict:
    return {
        "nodes": list(graph.nodes),
        "edges": [{
            "from": e.from_label, "to": e.to_label,
            "count": int(e.count), "change_class": e.change_class,
        } for e in graph.edges],
    }


def eval_report_to_dict(report: EvalReport) -> dict:
    return {
        "n_detected": report.n_detected,
        "n_annotated": report.n_annotated,
        "n_missed": report.n_missed,
        "n_incorrect": report.n_incorrect,
        "n_substituted": report.n_substituted,
        "n_inserted": report.n_inserted,
        "discrepancies": list(report.discrepancies),
    }


def write_json(doc, path) -> Path:
    p = Path(path)
    p.write_text(json.dumps(doc, indent=1, sort_keys=False) + "\n")
    return p


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


# ---------------------------------------------------------------------------
# motion bundles
# ---------------------------------------------------------------------------

@dataclass
class BundleObject:
    model: ObjectModel
    markers: MarkerSequence


@dataclass
class MotionBundle:
    """One captured motion: subject markers, object markers, metadata."""

    motion_id: str
    subject: MarkerSequence
    objects: list[BundleObject] = field(default_factory=list)
    category: str | None = None
    fps: float = 100.0
    annotation: list[str] | None = None

    @property
    def n_frames(self) -> int:
        return self.subject.n_frames


def parse_object_model(path) -> ObjectModel:
    p = Path(path)
    if not p.exists():
        raise BundleError(f"object model not found: {p}")
    doc = yaml.safe_load(p.read_text())
    if not isinstance(doc, dict) or "name" not in doc or "markers" not in doc:
        raise BundleError(f"{p}: object model needs 'name' and 'markers' fields")
    mesh = None
    if doc.get("mesh"):
        mesh_path = Path(doc["mesh"])
        if not mesh_path.is_absolute():
            mesh_path = p.parent / mesh_path
        mesh = load_obj(mesh_path)
    names = [m["name"] for m in doc["markers"]]
    offsets = np.array([m["offset"] for m in doc["markers"]], dtype=float)
    return ObjectModel(name=doc["name"], marker_names=tuple(names),
                       marker_offsets=offsets, mesh=mesh)


def parse_motion_bundle(manifest_path) -> MotionBundle:
    p = Path(manifest_path)
    if not p.exists():
        raise BundleError(f"bundle manifest not found: {p}")
    doc = yaml.safe_load(p.read_text())
    if not isinstance(doc, dict) or "id" not in doc or "subject_markers" not in doc:
        raise BundleError(f"{p}: manifest needs 'id' and 'subject_markers' fields")
    base = p.parent

    def resolve(rel):
        q = Path(rel)
        return q if q.is_absolute() else base / q

    subject_path = resolve(doc["subject_markers"])
    if not subject_path.exists():
        raise BundleError(f"{p}: subject marker file not found: {subject_path}")
    subject = parse_marker_csv(subject_path)

    objects = []
    for entry in doc.get("objects", []):
        model = parse_object_model(resolve(entry["model"]))
        markers_path = resolve(entry["markers"])
        if not markers_path.exists():
            raise BundleError(f"{p}: object marker file not found: {markers_path}")
        markers = parse_marker_csv(markers_path)
        if markers.n_frames != subject.n_frames:
            raise BundleError(
                f"{p}: frame count mismatch between {subject_path.name} "
                f"({subject.n_frames}) and {markers_path.name} ({markers.n_frames})")
        objects.append(BundleObject(model=model, markers=markers))

    annotation = doc.get("annotation")
    if annotation is not None:
        annotation = [str(a) for a in annotation]
        for label in annotation:
            SupportPose.from_label(label)  # validate early

    return MotionBundle(motion_id=str(doc["id"]), subject=subject, objects=objects,
                        category=doc.get("category"), fps=float(doc.get("fps", 100.0)),
                        annotation=annotation)


def write_motion_bundle(bundle: MotionBundle, directory) -> Path:
    """Write a bundle's manifest, marker CSVs, and object models; returns
    the manifest path."""
    from .geometry import emit_obj

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_marker_csv(bundle.subject, directory / "subject.csv")
    entries = []
    for obj in bundle.objects:
        stem = obj.model.name
        write_marker_csv(obj.markers, directory / f"{stem}.csv")
        model_doc = {
            "name": obj.model.name,
            "markers": [{"name": n, "offset": [float(v) for v in off]}
                        for n, off in zip(obj.model.marker_names,
                                          obj.model.marker_offsets)],
        }
        if obj.model.mesh is not None:
            (directory / f"{stem}.obj").write_text(emit_obj(obj.model.mesh, comment=stem))
            model_doc["mesh"] = f"{stem}.obj"
        (directory / f"{stem}_model.yaml").write_text(
            yaml.safe_dump(model_doc, sort_keys=False))
        entries.append({"model": f"{stem}_model.yaml", "markers": f"{stem}.csv"})
    manifest = {
        "id": bundle.motion_id,
        "category": bundle.category,
        "fps": float(bundle.fps),
        "subject_markers": "subject.csv",
        "objects": entries,
    }
    if bundle.annotation is not None:
        manifest["annotation"] = list(bundle.annotation)
    path = directory / "bundle.yaml"
    path.write_text(yaml.safe_dump(manifest, sort_keys=False))
    return path
