"""Articulated reference model: joint tree, limits, meshes, virtual markers.

Conventions (fixed and documented here and in the model-spec format):

* units: millimeters and radians everywhere;
* pose vector layout: ``[px, py, pz, alpha, beta, gamma, theta_1..theta_m]``
  with the root rotation as intrinsic x-y-z Euler angles
  (``R = Rx(alpha) @ Ry(beta) @ Rz(gamma)``);
* joints are single-axis revolute; the child frame is
  ``T_child = T_parent * Trans(offset) * Rot(axis, theta)`` where ``offset``
  is the joint position in the parent segment frame;
* the root segment transform equals the root pose exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import _kernels
from .errors import ModelSpecError
from .geometry import TriangleMesh, emit_obj, load_obj, make_transform

#: Segment names that may provide support, keyed to their threshold class.
SUPPORT_SEGMENT_CLASS = {
    "LeftFoot": "Feet", "RightFoot": "Feet",
    "LeftHand": "Hands", "RightHand": "Hands",
    "LeftKnee": "Knees", "RightKnee": "Knees",
    "LeftElbow": "Elbows", "RightElbow": "Elbows",
}

_AXIS_TOL = 1e-9


@dataclass(frozen=True)
class Joint:
    """Revolute joint connecting two segments."""

    name: str
    parent: str
    child: str
    axis: np.ndarray       # unit 3-vector in the parent frame
    offset: np.ndarray     # joint position in the parent frame, mm
    limits: tuple[float, float]  # radians, lo <= hi

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float).reshape(3)
        offset = np.asarray(self.offset, dtype=float).reshape(3)
        if abs(np.linalg.norm(axis) - 1.0) > _AXIS_TOL:
            raise ModelSpecError(f"joint {self.name!r}: axis must have unit norm")
        lo, hi = float(self.limits[0]), float(self.limits[1])
        if lo > hi:
            raise ModelSpecError(f"joint {self.name!r}: limit lo > hi")
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "limits", (lo, hi))


@dataclass(frozen=True)
class Segment:
    name: str
    mesh: TriangleMesh | None = None
    support_candidate: bool = False

    def __post_init__(self):
        if self.support_candidate:
            if self.name not in SUPPORT_SEGMENT_CLASS:
                raise ModelSpecError(
                    f"support segment {self.name!r} is not one of the canonical "
                    f"names {sorted(SUPPORT_SEGMENT_CLASS)}")
            if self.mesh is None or self.mesh.is_empty:
                raise ModelSpecError(
                    f"support segment {self.name!r} needs a non-empty collision mesh")


@dataclass(frozen=True)
class MarkerAttachment:
    name: str
    segment: str
    offset: np.ndarray  # mm, in the segment frame

    def __post_init__(self):
        object.__setattr__(self, "offset",
                           np.asarray(self.offset, dtype=float).reshape(3))


@dataclass(frozen=True)
class PoseVector:
    """Structured view of a pose array (root position, root rotation, angles)."""

    root_position: np.ndarray
    root_rotation: np.ndarray
    joint_angles: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "root_position", np.asarray(self.root_position, dtype=float).reshape(3))
        object.__setattr__(self, "root_rotation", np.asarray(self.root_rotation, dtype=float).reshape(3))
        object.__setattr__(self, "joint_angles", np.asarray(self.joint_angles, dtype=float).reshape(-1))

    @classmethod
    def from_array(cls, arr) -> "PoseVector":
        arr = np.asarray(arr, dtype=float).reshape(-1)
        if len(arr) < 6:
            raise ModelSpecError(f"pose vector needs at least 6 values, got {len(arr)}")
        return cls(arr[:3], arr[3:6], arr[6:])

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.root_position, self.root_rotation, self.joint_angles])

    def __len__(self) -> int:
        return 6 + len(self.joint_angles)


class KinematicModel:
    """Immutable joint tree with collision meshes and marker attachments."""

    def __init__(self, name: str, segments: list[Segment], joints: list[Joint],
                 markers: list[MarkerAttachment]):
        self.name = name
        self.segments = list(segments)
        self.joints = list(joints)
        self.markers = list(markers)
        self._validate()
        self._compile()

    # -- validation -------------------------------------------------------

    def _validate(self):
        seg_names = [s.name for s in self.segments]
        if len(set(seg_names)) != len(seg_names):
            raise ModelSpecError("duplicate segment names")
        joint_names = [j.name for j in self.joints]
        if len(set(joint_names)) != len(joint_names):
            raise ModelSpecError("duplicate joint names")
        seg_set = set(seg_names)
        for j in self.joints:
            if j.parent not in seg_set:
                raise ModelSpecError(f"joint {j.name!r} references unknown parent segment {j.parent!r}")
            if j.child not in seg_set:
                raise ModelSpecError(f"joint {j.name!r} references unknown child segment {j.child!r}")
        children = [j.child for j in self.joints]
        if len(set(children)) != len(children):
            dup = sorted({c for c in children if children.count(c) > 1})
            raise ModelSpecError(f"segments {dup} have more than one parent joint")
        roots = [s for s in seg_names if s not in set(children)]
        if len(roots) != 1:
            raise ModelSpecError(f"model must have exactly one root segment, found {roots}")
        self._root_name = roots[0]
        for m in self.markers:
            if m.segment not in seg_set:
                raise ModelSpecError(
                    f"marker {m.name!r} references unknown segment {m.segment!r}")
        marker_names = [m.name for m in self.markers]
        if len(set(marker_names)) != len(marker_names):
            raise ModelSpecError("duplicate marker names")

        # reachability along the joint tree (no cycles, no disconnected parts)
        reached = {self._root_name}
        pending = [j for j in self.joints]
        while True:
            progressed = False
            remaining = []
            for j in pending:
                if j.parent in reached:
                    reached.add(j.child)
                    progressed = True
                else:
                    remaining.append(j)
            pending = remaining
            if not pending:
                break
            if not progressed:
                raise ModelSpecError(
                    f"joints {[j.name for j in pending]} are not connected to the root")
        if reached != set(seg_names):
            orphans = sorted(set(seg_names) - reached)
            raise ModelSpecError(f"segments {orphans} are not connected to the root")

    # -- compiled arrays for the kernels ----------------------------------

    def _compile(self):
        seg_index = {s.name: i for i, s in enumerate(self.segments)}
        m = len(self.joints)
        self._seg_index = seg_index
        self._parent_seg = np.array([seg_index[j.parent] for j in self.joints], dtype=np.int64).reshape(m)
        self._child_seg = np.array([seg_index[j.child] for j in self.joints], dtype=np.int64).reshape(m)
        self._axes = np.ascontiguousarray(np.array([j.axis for j in self.joints], dtype=float).reshape(m, 3))
        self._offsets = np.ascontiguousarray(np.array([j.offset for j in self.joints], dtype=float).reshape(m, 3))
        self._root_index = seg_index[self._root_name]

        # topological joint order: parents before children
        placed = {self._root_index}
        topo: list[int] = []
        remaining = list(range(m))
        while remaining:
            nxt = [j for j in remaining if self._parent_seg[j] in placed]
            for j in nxt:
                topo.append(j)
                placed.add(int(self._child_seg[j]))
            remaining = [j for j in remaining if j not in set(nxt)]
        self._topo = np.array(topo, dtype=np.int64).reshape(m)

        self._marker_seg = np.array([seg_index[a.segment] for a in self.markers], dtype=np.int64).reshape(len(self.markers))
        self._marker_off = np.ascontiguousarray(
            np.array([a.offset for a in self.markers], dtype=float).reshape(len(self.markers), 3))

        lims = np.array([j.limits for j in self.joints], dtype=float).reshape(m, 2)
        self._limits = lims

    # -- basic properties --------------------------------------------------

    @property
    def m(self) -> int:
        """Number of joint angles in the pose vector."""
        return len(self.joints)

    @property
    def pose_size(self) -> int:
        return 6 + self.m

    @property
    def n_markers(self) -> int:
        return len(self.markers)

    @property
    def root_segment(self) -> str:
        return self._root_name

    @property
    def joint_names(self) -> list[str]:
        return [j.name for j in self.joints]

    @property
    def marker_names(self) -> list[str]:
        return [a.name for a in self.markers]

    @property
    def segment_names(self) -> list[str]:
        return [s.name for s in self.segments]

    @property
    def support_segments(self) -> list[Segment]:
        return [s for s in self.segments if s.support_candidate]

    @property
    def joint_limits(self) -> np.ndarray:
        """(m, 2) array of [lo, hi] per joint."""
        return self._limits.copy()

    @property
    def neutral_pose(self) -> np.ndarray:
        """Zero root pose; joint angles are 0 clipped into their limits."""
        pose = np.zeros(self.pose_size)
        if self.m:
            pose[6:] = np.clip(0.0, self._limits[:, 0], self._limits[:, 1])
        return pose

    def segment(self, name: str) -> Segment:
        return self.segments[self._seg_index[name]]

    def pose_array(self, pose) -> np.ndarray:
        """Coerce a PoseVector or sequence into a validated (6+m,) array."""
        if isinstance(pose, PoseVector):
            arr = pose.as_array()
        else:
            arr = np.asarray(pose, dtype=float).reshape(-1)
        if len(arr) != self.pose_size:
            raise ModelSpecError(
                f"pose length {len(arr)} does not match 6 + m = {self.pose_size}")
        return np.ascontiguousarray(arr)

    def clamp_to_limits(self, pose) -> np.ndarray:
        arr = self.pose_array(pose).copy()
        if self.m:
            arr[6:] = np.clip(arr[6:], self._limits[:, 0], self._limits[:, 1])
        return arr

    def within_limits(self, pose, tol: float = 0.0) -> bool:
        arr = self.pose_array(pose)
        if not self.m:
            return True
        return bool(np.all(arr[6:] >= self._limits[:, 0] - tol)
                    and np.all(arr[6:] <= self._limits[:, 1] + tol))

    # -- kinematics --------------------------------------------------------

    def segment_frames(self, pose) -> tuple[np.ndarray, np.ndarray]:
        """Rotations (S,3,3) and translations (S,3) in segment list order."""
        arr = self.pose_array(pose)
        return _kernels.fk_segments(arr, self._topo, self._parent_seg,
                                    self._child_seg, self._axes, self._offsets,
                                    self._root_index, len(self.segments))

    def segment_frames_batch(self, poses) -> tuple[np.ndarray, np.ndarray]:
        poses = np.ascontiguousarray(np.asarray(poses, dtype=float))
        if poses.ndim != 2 or poses.shape[1] != self.pose_size:
            raise ModelSpecError(
                f"pose trajectory must be (F, {self.pose_size}), got {poses.shape}")
        return _kernels.fk_segments_batch(poses, self._topo, self._parent_seg,
                                          self._child_seg, self._axes,
                                          self._offsets, self._root_index,
                                          len(self.segments))


def forward_kinematics(model: KinematicModel, pose) -> dict[str, np.ndarray]:
    """World transform (4x4) of every segment for one pose."""
    R, t = model.segment_frames(pose)
    return {s.name: make_transform(R[i], t[i]) for i, s in enumerate(model.segments)}


def virtual_marker_positions(model: KinematicModel, pose) -> np.ndarray:
    """(n, 3) world positions of the virtual markers in attachment order."""
    R, t = model.segment_frames(pose)
    return _kernels.marker_positions(R, t, model._marker_seg, model._marker_off)


# ---------------------------------------------------------------------------
# model spec documents
# ---------------------------------------------------------------------------
#
# YAML schema:
#
#   name: <model name>
#   segments:
#     - name: Pelvis
#     - name: LeftFoot
#       support: true
#       mesh: meshes/left_foot.obj     # path relative to the document
#   joints:
#     - name: left_knee
#       parent: LThigh
#       child: LeftKnee
#       axis: [0.0, 1.0, 0.0]
#       offset: [0.0, 0.0, -400.0]     # joint position in the parent frame
#       limits: [-2.6, 0.1]            # radians
#   markers:
#     - name: LKNE
#       segment: LeftKnee
#       offset: [60.0, 0.0, 0.0]


def _require(mapping, key, where, source):
    if not isinstance(mapping, dict) or key not in mapping:
        raise ModelSpecError(f"{source}: missing field {key!r} in {where}")
    return mapping[key]


def parse_model_spec(doc: dict, base_dir: Path | None = None,
                     source: str = "<model spec>") -> KinematicModel:
    if not isinstance(doc, dict):
        raise ModelSpecError(f"{source}: document root must be a mapping")
    name = doc.get("name", "model")
    segments = []
    for entry in _require(doc, "segments", "document", source):
        seg_name = _require(entry, "name", "segment", source)
        mesh = None
        mesh_ref = entry.get("mesh")
        if mesh_ref is not None:
            mesh_path = Path(mesh_ref)
            if base_dir is not None and not mesh_path.is_absolute():
                mesh_path = base_dir / mesh_path
            mesh = load_obj(mesh_path)
        try:
            segments.append(Segment(seg_name, mesh, bool(entry.get("support", False))))
        except ModelSpecError as exc:
            raise ModelSpecError(f"{source}: {exc}") from exc
    joints = []
    for entry in doc.get("joints", []):
        try:
            joints.append(Joint(
                name=_require(entry, "name", "joint", source),
                parent=_require(entry, "parent", "joint", source),
                child=_require(entry, "child", "joint", source),
                axis=_require(entry, "axis", "joint", source),
                offset=entry.get("offset", (0.0, 0.0, 0.0)),
                limits=tuple(_require(entry, "limits", "joint", source)),
            ))
        except ModelSpecError as exc:
            raise ModelSpecError(f"{source}: {exc}") from exc
    markers = []
    for entry in doc.get("markers", []):
        markers.append(MarkerAttachment(
            name=_require(entry, "name", "marker", source),
            segment=_require(entry, "segment", "marker", source),
            offset=_require(entry, "offset", "marker", source),
        ))
    try:
        return KinematicModel(name, segments, joints, markers)
    except ModelSpecError as exc:
        raise ModelSpecError(f"{source}: {exc}") from exc


def load_model(path) -> KinematicModel:
    """Parse a model spec document (YAML) and its referenced OBJ meshes."""
    p = Path(path)
    if not p.exists():
        raise ModelSpecError(f"model spec not found: {p}")
    try:
        doc = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ModelSpecError(f"{p}: not valid YAML: {exc}") from exc
    return parse_model_spec(doc, base_dir=p.parent, source=str(p))


def emit_model_spec(model: KinematicModel, directory) -> Path:
    """Write a model as a spec document plus OBJ mesh files; returns the
    document path. `load_model` on the result reproduces the model."""
    directory = Path(directory)
    (directory / "meshes").mkdir(parents=True, exist_ok=True)
    seg_entries = []
    for seg in model.segments:
        entry: dict = {"name": seg.name}
        if seg.mesh is not None and not seg.mesh.is_empty:
            rel = f"meshes/{seg.name.lower()}.obj"
            (directory / rel).write_text(emit_obj(seg.mesh, comment=seg.name))
            entry["mesh"] = rel
        if seg.support_candidate:
            entry["support"] = True
        seg_entries.append(entry)
    doc = {
        "name": model.name,
        "segments": seg_entries,
        "joints": [{
            "name": j.name, "parent": j.parent, "child": j.child,
            "axis": [float(x) for x in j.axis],
            "offset": [float(x) for x in j.offset],
            "limits": [float(j.limits[0]), float(j.limits[1])],
        } for j in model.joints],
        "markers": [{
            "name": a.name, "segment": a.segment,
            "offset": [float(x) for x in a.offset],
        } for a in model.markers],
    }
    path = directory / "model.yaml"
    path.write_text(yaml.safe_dump(doc, sort_keys=False))
    return path
