"""Support contact detection: proximity plus sustained low speed.

A support-candidate segment is in contact with an environmental element over
a maximal run of frames in which the mesh-to-mesh distance stays strictly
below the class threshold; the run is kept only if it lasts at least
`hold_frames` frames and the segment's smoothed speed stays strictly below
`vel_mm_per_s` on the run's first `hold_frames` frames. Elements that move
more than `env_motion_max_mm` over the motion are not environmental and
yield no contacts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from .errors import DetectionError
from .fit import ObjectTrack, PoseTrajectory
from .geometry import TriangleMesh, make_transform, mesh_mesh_distance
from .model import SUPPORT_SEGMENT_CLASS, KinematicModel

_DEFAULT_DIST = {"Feet": 15.0, "Hands": 15.0, "Knees": 35.0, "Elbows": 30.0}


@dataclass(frozen=True)
class DetectionThresholds:
    """Empirical detection thresholds (mm, mm/s, frames at 100 FPS)."""

    dist_mm: dict = field(default_factory=lambda: dict(_DEFAULT_DIST))
    vel_mm_per_s: float = 200.0
    hold_frames: int = 5
    smoothing_window_frames: int = 5
    env_motion_max_mm: float = 50.0

    def __post_init__(self):
        merged = dict(_DEFAULT_DIST)
        merged.update(self.dist_mm)
        unknown = set(merged) - set(_DEFAULT_DIST)
        if unknown:
            raise DetectionError(f"unknown segment classes {sorted(unknown)}")
        if any(v <= 0 for v in merged.values()):
            raise DetectionError("distance thresholds must be strictly positive")
        if self.vel_mm_per_s <= 0 or self.hold_frames <= 0 \
                or self.smoothing_window_frames <= 0 or self.env_motion_max_mm <= 0:
            raise DetectionError("thresholds must be strictly positive")
        if self.smoothing_window_frames % 2 == 0:
            raise DetectionError("smoothing window must be odd")
        object.__setattr__(self, "dist_mm", MappingProxyType(merged))

    def dist_for_segment(self, segment_name: str) -> float:
        try:
            return self.dist_mm[SUPPORT_SEGMENT_CLASS[segment_name]]
        except KeyError:
            raise DetectionError(
                f"segment {segment_name!r} has no known threshold class") from None


@dataclass
class ContactTimeline:
    """Per-frame sets of (segment, element) support contacts."""

    frames: list[frozenset[tuple[str, str]]]
    fps: float = 100.0
    motion_id: str | None = None

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    def segments_at(self, i: int) -> frozenset[str]:
        return frozenset(seg for seg, _ in self.frames[i])


def classify_environmental(track: ObjectTrack,
                           thresholds: DetectionThresholds = DetectionThresholds()) -> bool:
    """True when the object moved at most env_motion_max_mm from its initial
    position over the whole motion."""
    if track.n_frames == 0:
        raise DetectionError(f"object {track.name!r} has an empty track")
    disp = np.linalg.norm(track.poses[:, :3] - track.poses[0, :3], axis=1)
    return bool(disp.max() <= thresholds.env_motion_max_mm)


def segment_speed(positions, window: int = 5, fps: float = 100.0) -> np.ndarray:
    """Per-frame speed of a tracked point, from smoothed velocity vectors.

    Central differences at `fps` (one-sided at the ends), then a centered
    moving average of the velocity vectors over `window` frames (truncated
    at the sequence ends), then the vector norm.
    """
    p = np.asarray(positions, dtype=float)
    if p.ndim != 2 or p.shape[1] != 3:
        raise DetectionError(f"positions must be (F, 3), got {p.shape}")
    F = len(p)
    if F < 2:
        raise DetectionError("segment_speed needs at least 2 frames")
    if window < 1 or window % 2 == 0:
        raise DetectionError("smoothing window must be a positive odd count")

    vel = np.empty_like(p)
    vel[1:-1] = (p[2:] - p[:-2]) * (fps / 2.0)
    vel[0] = (p[1] - p[0]) * fps
    vel[-1] = (p[-1] - p[-2]) * fps

    half = window // 2
    smoothed = np.empty_like(vel)
    for i in range(F):
        lo = max(0, i - half)
        hi = min(F, i + half + 1)
        smoothed[i] = vel[lo:hi].mean(axis=0)
    return np.linalg.norm(smoothed, axis=1)


def _element_transforms(transforms, n_frames: int, name: str) -> np.ndarray:
    T = np.asarray(transforms, dtype=float)
    if T.shape == (4, 4):  # static element
        T = np.tile(T, (n_frames, 1, 1))
    if T.shape != (n_frames, 4, 4):
        raise DetectionError(
            f"element {name!r}: transforms shape {T.shape} does not match "
            f"{n_frames} pose frames")
    return T


def _proximity_flags(seg_mesh: TriangleMesh, seg_R, seg_t,
                     elem_mesh: TriangleMesh, elem_T, threshold: float) -> np.ndarray:
    """Strict `distance < threshold` per frame, with AABB short-circuiting."""
    F = len(seg_R)
    seg_world = np.einsum("fij,vj->fvi", seg_R, seg_mesh.vertices) + seg_t[:, None, :]
    elem_world = np.einsum("fij,vj->fvi", elem_T[:, :3, :3], elem_mesh.vertices) \
        + elem_T[:, None, :3, 3]
    lo_s, hi_s = seg_world.min(axis=1), seg_world.max(axis=1)
    lo_e, hi_e = elem_world.min(axis=1), elem_world.max(axis=1)
    gap = np.maximum(0.0, np.maximum(lo_s - hi_e, lo_e - hi_s))
    lower_bound = np.linalg.norm(gap, axis=1)

    flags = np.zeros(F, dtype=bool)
    for f in np.flatnonzero(lower_bound < threshold):
        d = mesh_mesh_distance(seg_mesh, make_transform(seg_R[f], seg_t[f]),
                               elem_mesh, elem_T[f]).distance
        flags[f] = d < threshold
    return flags


def _runs(mask: np.ndarray):
    """(start, end) half-open index runs of True."""
    runs = []
    start = None
    for i, v in enumerate(mask):
        if v and start is None:
            start = i
        elif not v and start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(mask)))
    return runs


def detect_contacts(model: KinematicModel, poses,
                    elements: list[tuple[str, TriangleMesh, np.ndarray]],
                    thresholds: DetectionThresholds = DetectionThresholds(),
                    fps: float = 100.0, motion_id: str | None = None) -> ContactTimeline:
    """Label supporting contacts per frame.

    `elements` are (name, mesh, transforms) triples; transforms are one 4x4
    (static) or (F, 4, 4). Non-environmental elements (displacement above
    env_motion_max_mm) are skipped entirely.
    """
    if isinstance(poses, PoseTrajectory):
        pose_array = poses.poses
        fps = poses.fps
    else:
        pose_array = np.asarray(poses, dtype=float)
    F = len(pose_array)
    if F == 0:
        raise DetectionError("empty pose trajectory")

    support = model.support_segments
    for seg in support:
        if seg.name not in SUPPORT_SEGMENT_CLASS:
            raise DetectionError(f"segment {seg.name!r} has no known threshold class")

    env: list[tuple[str, TriangleMesh, np.ndarray]] = []
    for name, mesh, transforms in elements:
        T = _element_transforms(transforms, F, name)
        disp = np.linalg.norm(T[:, :3, 3] - T[0, :3, 3], axis=1)
        if disp.max() <= thresholds.env_motion_max_mm:
            env.append((name, mesh, T))

    R_all, t_all = model.segment_frames_batch(pose_array)
    seg_index = {s.name: i for i, s in enumerate(model.segments)}

    contacts: list[set[tuple[str, str]]] = [set() for _ in range(F)]
    for seg in support:
        si = seg_index[seg.name]
        seg_R = R_all[:, si]
        seg_t = t_all[:, si]
        centroid = seg.mesh.surface_centroid()
        ref = np.einsum("fij,j->fi", seg_R, centroid) + seg_t
        if F >= 2:
            speed = segment_speed(ref, thresholds.smoothing_window_frames, fps)
        else:
            speed = np.zeros(F)
        threshold = thresholds.dist_for_segment(seg.name)
        for name, mesh, T in env:
            near = _proximity_flags(seg.mesh, seg_R, seg_t, mesh, T, threshold)
            for start, end in _runs(near):
                if end - start < thresholds.hold_frames:
                    continue
                onset = speed[start:start + thresholds.hold_frames]
                if np.all(onset < thresholds.vel_mm_per_s):
                    for f in range(start, end):
                        contacts[f].add((seg.name, name))

    return ContactTimeline(frames=[frozenset(c) for c in contacts],
                           fps=fps, motion_id=motion_id)
