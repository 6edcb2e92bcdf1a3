"""Synthetic fixtures: small chain models, a 40-DoF humanoid, scripted
walking bundles with ground-truth contact schedules, and a transition corpus
whose multiset matches the published percentage table.

Real recordings are not redistributable; every statistic and pipeline check
in the tests and demos runs on these generators instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fit import MarkerSequence, ObjectModel
from .geometry import box_mesh
from .io import BundleObject, MotionBundle
from .model import (Joint, KinematicModel, MarkerAttachment, Segment,
                    virtual_marker_positions)
from .segmentation import SupportPose, TransitionRecord, TransitionSequence

# ---------------------------------------------------------------------------
# small fixture models
# ---------------------------------------------------------------------------


def planar_chain_model(n_links: int = 2, link_length: float = 100.0) -> KinematicModel:
    """Planar revolute chain about z; links extend along +x at zero pose.

    The last link is a support candidate (canonical name "LeftHand") with a
    small box mesh; markers sit at the chain tip and 10 mm beyond it.
    """
    segments = [Segment("Base")]
    joints = []
    L = float(link_length)
    for k in range(n_links):
        parent = "Base" if k == 0 else f"Link{k}"
        last = k == n_links - 1
        child = "LeftHand" if last else f"Link{k + 1}"
        mesh = box_mesh((40.0, 40.0, 40.0), center=(L / 2, 0.0, 0.0)) if last else None
        segments.append(Segment(child, mesh=mesh, support_candidate=last))
        joints.append(Joint(
            name=f"j{k + 1}", parent=parent, child=child,
            axis=(0.0, 0.0, 1.0),
            offset=(0.0, 0.0, 0.0) if k == 0 else (L, 0.0, 0.0),
            limits=(-np.pi, np.pi)))
    markers = [
        MarkerAttachment("TIP", segments[-1].name, (L, 0.0, 0.0)),
        MarkerAttachment("PROBE", segments[-1].name, (L + 10.0, 0.0, 0.0)),
    ]
    return KinematicModel(f"chain{n_links}", segments, joints, markers)


def six_dof_model() -> KinematicModel:
    """Six-joint serial arm used for fit round-trip checks.

    Every joint is observable: each segment carries two markers with lever
    arms off the joint axis.
    """
    axes = [(0, 0, 1), (0, 1, 0), (1, 0, 0), (0, 0, 1), (0, 1, 0), (1, 0, 0)]
    offsets = [(0, 0, 0), (150, 0, 0), (150, 0, 0), (120, 0, 0), (100, 0, 0), (80, 0, 0)]
    segments = [Segment("Root")]
    joints = []
    markers = [
        MarkerAttachment("R0", "Root", (0.0, 0.0, 0.0)),
        MarkerAttachment("RX", "Root", (60.0, 0.0, 0.0)),
        MarkerAttachment("RY", "Root", (0.0, 60.0, 0.0)),
        MarkerAttachment("RZ", "Root", (0.0, 0.0, 60.0)),
    ]
    lever = [(75, 40, 0), (75, 0, 40), (60, 40, 0), (50, 0, 40), (40, 40, 0), (40, 0, 40)]
    for k in range(6):
        parent = "Root" if k == 0 else f"S{k}"
        child = f"S{k + 1}"
        segments.append(Segment(child))
        joints.append(Joint(f"j{k + 1}", parent, child, axes[k], offsets[k],
                            limits=(-1.2, 1.2)))
        lx, ly, lz = lever[k]
        markers.append(MarkerAttachment(f"M{k + 1}A", child, (lx, 0.0, 0.0)))
        markers.append(MarkerAttachment(f"M{k + 1}B", child, (float(lx), float(ly), float(lz))))
    return KinematicModel("sixdof", segments, joints, markers)


def probe_model(segment_name: str, extents=(100.0, 80.0, 30.0)) -> KinematicModel:
    """Joint-less model whose root IS one support segment; the box mesh
    bottom face sits at the frame origin, so the distance to a floor at z=0
    equals the root z coordinate exactly."""
    ex, ey, ez = extents
    mesh = box_mesh((ex, ey, ez), center=(0.0, 0.0, ez / 2))
    seg = Segment(segment_name, mesh=mesh, support_candidate=True)
    return KinematicModel(f"probe_{segment_name}", [seg], [], [])


# ---------------------------------------------------------------------------
# 40-DoF humanoid
# ---------------------------------------------------------------------------

PELVIS_HEIGHT = 775.0      # standing root height used by the gait generator
THIGH_LENGTH = 400.0
SHANK_LENGTH = 340.0
ANKLE_SOLE_DROP = 20.0     # sole sits this far below the ankle frame

_SPINE = [
    ("spine_x", "Pelvis", "SpineA", (1, 0, 0), (0, 0, 100), (-0.6, 0.6)),
    ("spine_y", "SpineA", "SpineB", (0, 1, 0), (0, 0, 0), (-0.6, 0.6)),
    ("spine_z", "SpineB", "Torso", (0, 0, 1), (0, 0, 0), (-0.8, 0.8)),
    ("chest_x", "Torso", "ChestA", (1, 0, 0), (0, 0, 150), (-0.5, 0.5)),
    ("chest_y", "ChestA", "ChestB", (0, 1, 0), (0, 0, 0), (-0.5, 0.5)),
    ("chest_z", "ChestB", "Chest", (0, 0, 1), (0, 0, 0), (-0.7, 0.7)),
    ("neck_x", "Chest", "NeckA", (1, 0, 0), (0, 0, 200), (-0.7, 0.7)),
    ("neck_y", "NeckA", "Neck", (0, 1, 0), (0, 0, 0), (-0.7, 0.7)),
    ("head_x", "Neck", "HeadA", (1, 0, 0), (0, 0, 80), (-0.8, 0.8)),
    ("head_y", "HeadA", "Head", (0, 1, 0), (0, 0, 0), (-0.8, 0.8)),
]


def _leg(side: str, sign: float):
    p = side[0]  # "L" / "R"
    return [
        (f"{p.lower()}hip_x", "Pelvis", f"{p}HipA", (1, 0, 0),
         (0.0, sign * 90.0, -60.0), (-0.8, 0.8)),
        (f"{p.lower()}hip_z", f"{p}HipA", f"{p}HipB", (0, 0, 1), (0, 0, 0), (-0.9, 0.9)),
        (f"{p.lower()}hip_y", f"{p}HipB", f"{p}Thigh", (0, 1, 0), (0, 0, 0), (-1.6, 1.6)),
        (f"{p.lower()}knee_y", f"{p}Thigh", f"{side}Knee", (0, 1, 0),
         (0, 0, -THIGH_LENGTH), (-0.05, 2.4)),
        (f"{p.lower()}ankle_y", f"{side}Knee", f"{p}AnkleA", (0, 1, 0),
         (0, 0, -SHANK_LENGTH), (-1.2, 1.2)),
        (f"{p.lower()}ankle_x", f"{p}AnkleA", f"{side}Foot", (1, 0, 0), (0, 0, 0), (-0.6, 0.6)),
        (f"{p.lower()}toe_y", f"{side}Foot", f"{p}Toe", (0, 1, 0),
         (120.0, 0.0, -15.0), (-0.3, 1.0)),
    ]


def _arm(side: str, sign: float):
    p = side[0]
    return [
        (f"{p.lower()}clav_z", "Chest", f"{p}Clav", (0, 0, 1),
         (0.0, sign * 40.0, 180.0), (-0.4, 0.4)),
        (f"{p.lower()}sh_x", f"{p}Clav", f"{p}ShA", (1, 0, 0),
         (0.0, sign * 130.0, 0.0), (-2.8, 2.8)),
        (f"{p.lower()}sh_y", f"{p}ShA", f"{p}ShB", (0, 1, 0), (0, 0, 0), (-1.6, 1.6)),
        (f"{p.lower()}sh_z", f"{p}ShB", f"{p}UpperArm", (0, 0, 1), (0, 0, 0), (-1.6, 1.6)),
        (f"{p.lower()}elbow_y", f"{p}UpperArm", f"{p}ElbowA", (0, 1, 0),
         (0, 0, -300.0), (-2.6, 0.05)),
        (f"{p.lower()}pron_z", f"{p}ElbowA", f"{side}Elbow", (0, 0, 1), (0, 0, 0), (-1.5, 1.5)),
        (f"{p.lower()}wrist_x", f"{side}Elbow", f"{p}WristA", (1, 0, 0),
         (0, 0, -280.0), (-0.8, 0.8)),
        (f"{p.lower()}wrist_y", f"{p}WristA", f"{side}Hand", (0, 1, 0), (0, 0, 0), (-0.8, 0.8)),
    ]


def _humanoid_meshes(side: str):
    return {
        f"{side}Foot": box_mesh((200.0, 90.0, 35.0), center=(40.0, 0.0, -2.5)),
        f"{side}Knee": box_mesh((50.0, 80.0, 80.0), center=(45.0, 0.0, 0.0)),
        f"{side}Hand": box_mesh((60.0, 24.0, 70.0), center=(0.0, 0.0, -50.0)),
        f"{side}Elbow": box_mesh((40.0, 60.0, 70.0), center=(-35.0, 0.0, 0.0)),
    }


def _humanoid_markers():
    """56 markers covering every articulated part with lever arms."""
    per_side = []
    for side, s in (("Left", 1.0), ("Right", -1.0)):
        p = side[0]
        per_side += [
            (f"{p}CLAVX", f"{p}Clav", (0.0, s * 60.0, 10.0)),
            (f"{p}UPA1", f"{p}UpperArm", (35.0, 0.0, -120.0)),
            (f"{p}UPA2", f"{p}UpperArm", (0.0, s * 45.0, -160.0)),
            (f"{p}ELB", f"{side}Elbow", (-50.0, 0.0, -20.0)),
            (f"{p}FRM", f"{side}Elbow", (30.0, 0.0, -150.0)),
            (f"{p}WRA", f"{side}Hand", (40.0, 0.0, -20.0)),
            (f"{p}WRB", f"{side}Hand", (-40.0, 0.0, -20.0)),
            (f"{p}FIN", f"{side}Hand", (0.0, 0.0, -90.0)),
            (f"{p}THI1", f"{p}Thigh", (60.0, 0.0, -180.0)),
            (f"{p}THI2", f"{p}Thigh", (0.0, s * 60.0, -230.0)),
            (f"{p}THI3", f"{p}Thigh", (40.0, s * 50.0, -320.0)),
            (f"{p}KNE", f"{side}Knee", (0.0, s * 55.0, 0.0)),
            (f"{p}TIB1", f"{side}Knee", (45.0, 0.0, -140.0)),
            (f"{p}TIB2", f"{side}Knee", (0.0, s * 45.0, -220.0)),
            (f"{p}ANK", f"{side}Foot", (0.0, s * 60.0, 0.0)),
            (f"{p}HEE", f"{side}Foot", (-55.0, 0.0, -10.0)),
            (f"{p}TOE", f"{side}Foot", (125.0, 0.0, -10.0)),
            (f"{p}MT5", f"{side}Foot", (90.0, s * 40.0, -12.0)),
            (f"{p}TIP", f"{p}Toe", (40.0, 0.0, 0.0)),
        ]
    trunk = [
        ("HEADFL", "Head", (70.0, 55.0, 40.0)),
        ("HEADFR", "Head", (70.0, -55.0, 40.0)),
        ("HEADBL", "Head", (-75.0, 55.0, 50.0)),
        ("HEADBR", "Head", (-75.0, -55.0, 50.0)),
        ("HEADTOP", "Head", (0.0, 0.0, 90.0)),
        ("C7", "Neck", (-60.0, 0.0, 40.0)),
        ("CLAV", "Chest", (80.0, 0.0, 150.0)),
        ("STRN", "Chest", (90.0, 0.0, 60.0)),
        ("C7B", "Chest", (-90.0, 0.0, 150.0)),
        ("T8", "Chest", (-95.0, 0.0, 40.0)),
        ("T10", "Torso", (-90.0, 0.0, 60.0)),
        ("RIBL", "Torso", (60.0, 110.0, 60.0)),
        ("RIBR", "Torso", (60.0, -110.0, 60.0)),
        ("LASI", "Pelvis", (70.0, 110.0, 20.0)),
        ("RASI", "Pelvis", (70.0, -110.0, 20.0)),
        ("LPSI", "Pelvis", (-85.0, 55.0, 30.0)),
        ("RPSI", "Pelvis", (-85.0, -55.0, 30.0)),
        ("SACR", "Pelvis", (-95.0, 0.0, 10.0)),
    ]
    return [MarkerAttachment(n, s, o) for n, s, o in trunk + per_side]


def humanoid_model() -> KinematicModel:
    """40-DoF, 56-marker humanoid with the 8 canonical support segments."""
    rows = list(_SPINE)
    rows += _leg("Left", 1.0) + _leg("Right", -1.0)
    rows += _arm("Left", 1.0) + _arm("Right", -1.0)
    meshes = {**_humanoid_meshes("Left"), **_humanoid_meshes("Right")}
    seg_names = ["Pelvis"] + [child for (_, _, child, _, _, _) in rows]
    segments = [Segment(n, mesh=meshes.get(n), support_candidate=n in meshes)
                for n in seg_names]
    joints = [Joint(name, parent, child, axis, offset, limits)
              for (name, parent, child, axis, offset, limits) in rows]
    markers = _humanoid_markers()
    model = KinematicModel("humanoid40", segments, joints, markers)
    assert model.m == 40 and model.n_markers == 56
    assert len(model.support_segments) == 8
    return model


# ---------------------------------------------------------------------------
# scripted walking
# ---------------------------------------------------------------------------

SOLE_CLEARANCE = 3.0     # sole height during stance, mm
SWING_APEX = 60.0        # sole height mid-swing, mm
_DESCENT_RATE = 1.2      # mm/frame over the final approach
_APPROACH_FRAMES = 10    # frames of slow descent before touchdown
_LIFT_PROFILE = (16.0, 30.0, 45.0)  # sole heights right after liftoff


@dataclass
class GaitScript:
    """Ground truth for a scripted walking motion."""

    n_frames: int
    label_runs: list[tuple[str, int, int]]       # (label, start, length)
    stance_intervals: dict[str, list[tuple[int, int]]]  # half-open frames
    truth_poses: np.ndarray                      # (F, 46)
    step_durations: list[tuple[int, int]]        # (single, double) per step

    @property
    def annotation(self) -> list[str]:
        return [label for label, _, _ in self.label_runs]


def _sole_height_curve(n_frames, stance_intervals):
    """Sole height per frame for one foot; strictly below 15 mm exactly on
    the scheduled stance frames and at/above it elsewhere.

    The crossing happens between start-1 (15.6 mm) and start (14.4 mm) at
    a gentle 1.2 mm/frame, keeping the smoothed onset speed near 120 mm/s;
    liftoff jumps well above the threshold in one frame, which is fine
    because the speed criterion only applies at onset.
    """
    h = np.full(n_frames, SWING_APEX)
    for start, end in stance_intervals:
        h[start:end] = SOLE_CLEARANCE
        if start > 0:
            # descend through the threshold into the stance
            for k in range(end - start):
                v = 15.0 - 0.6 - _DESCENT_RATE * k
                if v <= SOLE_CLEARANCE:
                    break
                h[start + k] = v
            # approach from above the threshold
            for k in range(_APPROACH_FRAMES + 16):
                f = start - 1 - k
                if f < 0:
                    break
                if k < _APPROACH_FRAMES:
                    v = 15.0 + 0.6 + _DESCENT_RATE * k
                else:
                    v = 15.0 + 0.6 + _DESCENT_RATE * (_APPROACH_FRAMES - 1) \
                        + 2.4 * (k - _APPROACH_FRAMES + 1)
                h[f] = min(h[f], max(SOLE_CLEARANCE, min(v, SWING_APEX)))
        # quick liftoff right after the stance ends
        for k, v in enumerate(_LIFT_PROFILE):
            f = end + k
            if f < n_frames:
                h[f] = min(h[f], v)
    return h


def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def _foot_x_curve(n_frames, stance_intervals, positions):
    """Horizontal foot position; constant during stance, smoothstep during
    swing, settled several frames before touchdown."""
    x = np.empty(n_frames)
    for k, (start, end) in enumerate(stance_intervals):
        x[start:end] = positions[k]
        if k + 1 < len(stance_intervals):
            nxt_start = stance_intervals[k + 1][0]
            a = end + 2              # after the liftoff spike
            b = nxt_start - 6        # settle before touchdown
            span = max(b - a, 1)
            u = (np.arange(end, nxt_start) - a) / span
            x[end:nxt_start] = positions[k] \
                + (positions[k + 1] - positions[k]) * _smoothstep(u)
    first_start = stance_intervals[0][0]
    x[:first_start] = positions[0]
    last_end = stance_intervals[-1][1]
    x[last_end:] = positions[-1]
    return x


def _leg_ik(dx, dz):
    """Hip pitch and knee flexion reaching an ankle target (dx, dz) relative
    to the hip, both rotations about +y, thigh/shank along -z at zero."""
    xp = -dx
    zp = -dz
    d2 = xp * xp + zp * zp
    cos_k = (d2 - THIGH_LENGTH ** 2 - SHANK_LENGTH ** 2) / (2 * THIGH_LENGTH * SHANK_LENGTH)
    if not -1.0 <= cos_k <= 1.0:
        raise ValueError(f"ankle target out of reach: dx={dx:.1f} dz={dz:.1f}")
    theta_k = np.arccos(cos_k)
    theta_h = np.arctan2(xp, zp) - np.arctan2(
        SHANK_LENGTH * np.sin(theta_k), THIGH_LENGTH + SHANK_LENGTH * np.cos(theta_k))
    return theta_h, theta_k


_ARM_POSE = {
    "lsh_x": 0.10, "rsh_x": -0.10,
    "lelbow_y": -0.30, "relbow_y": -0.30,
}


def walking_script(model: KinematicModel, n_frames: int = 600, seed: int = 0,
                   step_length: float = 280.0, stand_frames: int = 60,
                   double_range=(11, 19), single_range=(38, 52)) -> GaitScript:
    """Scripted straight-line walk: alternating single supports (one foot
    swings) and double supports, bracketed by standing periods.

    Single supports last `single_range` frames, double supports
    `double_range` frames. Foot trajectories are built so the sole crosses
    the 15 mm proximity threshold exactly at the scheduled frames with low
    approach speed.
    """
    rng = np.random.default_rng(seed)

    # schedule: alternating swings, left foot leads
    events = []  # (side, lift_frame, land_frame)
    t = stand_frames
    sides = ["Left", "Right"]
    step_durations = []
    k = 0
    while True:
        single = int(rng.integers(single_range[0], single_range[1] + 1))
        double = int(rng.integers(double_range[0], double_range[1] + 1))
        if t + single + double + stand_frames > n_frames:
            break
        side = sides[k % 2]
        events.append((side, t, t + single))
        step_durations.append((single, double))
        t += single + double
        k += 1
    if not events:
        raise ValueError(f"n_frames={n_frames} too short for a single step")
    F = n_frames

    # per-foot stance intervals and horizontal positions
    stance: dict[str, list[tuple[int, int]]] = {"Left": [], "Right": []}
    foot_x: dict[str, list[float]] = {"Left": [0.0], "Right": [0.0]}
    cursor = {"Left": 0, "Right": 0}
    open_since = {"Left": 0, "Right": 0}
    for side, lift, land in events:
        stance[side].append((open_since[side], lift))
        cursor[side] += step_length
        foot_x[side].append(cursor[side])
        open_since[side] = land
    for side in ("Left", "Right"):
        stance[side].append((open_since[side], F))

    # label runs from the schedule
    runs: list[tuple[str, int, int]] = []
    pos = 0
    for i, (side, lift, land) in enumerate(events):
        runs.append(("2Feet", pos, lift - pos))
        runs.append(("1Foot", lift, land - lift))
        pos = land
    runs.append(("2Feet", pos, F - pos))

    sole = {s: _sole_height_curve(F, stance[s]) for s in ("Left", "Right")}
    fx = {s: _foot_x_curve(F, stance[s], foot_x[s]) for s in ("Left", "Right")}

    # pelvis follows the feet midpoint; constant height
    pelvis_x = (fx["Left"] + fx["Right"]) / 2.0
    hip_z = PELVIS_HEIGHT - 60.0

    joint_index = {n: i for i, n in enumerate(model.joint_names)}
    poses = np.zeros((F, model.pose_size))
    poses[:, 0] = pelvis_x
    poses[:, 2] = PELVIS_HEIGHT
    for name, val in _ARM_POSE.items():
        poses[:, 6 + joint_index[name]] = val
    for side, p in (("Left", "l"), ("Right", "r")):
        ankle_z = sole[side] + ANKLE_SOLE_DROP
        for f in range(F):
            th, tk = _leg_ik(fx[side][f] - pelvis_x[f], ankle_z[f] - hip_z)
            poses[f, 6 + joint_index[f"{p}hip_y"]] = th
            poses[f, 6 + joint_index[f"{p}knee_y"]] = tk
            poses[f, 6 + joint_index[f"{p}ankle_y"]] = -(th + tk)

    script = GaitScript(n_frames=F, label_runs=runs, stance_intervals=stance,
                        truth_poses=poses, step_durations=step_durations)
    _check_script(model, script, sole, fx)
    return script


def _check_script(model, script, sole, fx):
    """Design-time sanity checks: IK reached the targets and the scheduled
    stance frames are exactly the sub-15 mm frames."""
    F = script.n_frames
    for side in ("Left", "Right"):
        below = sole[side] < 15.0
        expected = np.zeros(F, dtype=bool)
        for start, end in script.stance_intervals[side]:
            expected[start:end] = True
        if not np.array_equal(below, expected):
            bad = int(np.flatnonzero(below != expected)[0])
            raise AssertionError(f"{side} sole curve off schedule at frame {bad}")
    # spot-check the leg IK through real forward kinematics
    seg_index = {s.name: i for i, s in enumerate(model.segments)}
    for f in range(0, F, max(1, F // 37)):
        R, t = model.segment_frames(script.truth_poses[f])
        for side in ("Left", "Right"):
            i = seg_index[f"{side}Foot"]
            ankle = t[i]
            target = np.array([fx[side][f],
                               90.0 if side == "Left" else -90.0,
                               sole[side][f] + ANKLE_SOLE_DROP])
            if not np.allclose(ankle, target, atol=1e-6):
                raise AssertionError(f"leg IK missed target at frame {f} ({side})")
            if not np.allclose(R[i], np.eye(3), atol=1e-9):
                raise AssertionError(f"foot not level at frame {f} ({side})")


def table_object(name: str = "table", center=(1500.0, 1500.0, 735.0),
                 size=(800.0, 800.0, 30.0)) -> ObjectModel:
    w, d, h = size
    corners = np.array([
        [-w / 2, -d / 2, h / 2], [w / 2, -d / 2, h / 2],
        [w / 2, d / 2, h / 2], [-w / 2, d / 2, h / 2],
    ])
    return ObjectModel(name=name,
                       marker_names=tuple(f"{name.upper()}{i}" for i in range(4)),
                       marker_offsets=corners,
                       mesh=box_mesh(size))


def _object_markers(obj: ObjectModel, translations: np.ndarray) -> MarkerSequence:
    F = len(translations)
    pos = obj.marker_offsets[None, :, :] + translations[:, None, :]
    return MarkerSequence(marker_names=obj.marker_names, positions=pos,
                          frame_indices=np.arange(F))


def walking_bundle(model: KinematicModel, n_frames: int = 600, seed: int = 0,
                   with_objects: bool = False,
                   motion_id: str = "walk") -> tuple[MotionBundle, GaitScript]:
    """Marker bundle synthesized from a scripted walk via forward kinematics.

    With `with_objects`, a static table (environmental) and a pushed cart
    (moving 400 mm, filtered out as non-environmental) are included.
    """
    script = walking_script(model, n_frames=n_frames, seed=seed)
    F = script.n_frames
    positions = np.empty((F, model.n_markers, 3))
    for f in range(F):
        positions[f] = virtual_marker_positions(model, script.truth_poses[f])
    subject = MarkerSequence(marker_names=tuple(model.marker_names),
                             positions=positions, frame_indices=np.arange(F))

    objects = []
    if with_objects:
        table = table_object("table", center=(1500.0, 1500.0, 735.0))
        table_pos = np.tile(np.array([1500.0, 1500.0, 735.0]), (F, 1))
        objects.append(BundleObject(model=table, markers=_object_markers(table, table_pos)))
        cart = table_object("cart", center=(-1500.0, -1500.0, 400.0),
                            size=(400.0, 300.0, 200.0))
        u = _smoothstep(np.linspace(0.0, 1.0, F))
        cart_pos = np.tile(np.array([-1500.0, -1500.0, 400.0]), (F, 1))
        cart_pos[:, 0] += 400.0 * u
        objects.append(BundleObject(model=cart, markers=_object_markers(cart, cart_pos)))

    bundle = MotionBundle(motion_id=motion_id, subject=subject, objects=objects,
                          category="locomotion", fps=100.0,
                          annotation=script.annotation)
    return bundle, script


# ---------------------------------------------------------------------------
# corpus matching the published transition table
# ---------------------------------------------------------------------------

#: (from, to) -> (appearance %, time %) as published; 1323 transitions,
#: 541.48 s of counted origin-pose time.
TABLE_II = {
    ("1Foot", "1Foot"): (4.38, 5.69),
    ("1Foot", "1Foot-1Hand"): (9.30, 7.90),
    ("1Foot", "2Feet"): (22.90, 25.56),
    ("1Foot", "2Feet-1Hand"): (0.15, 0.26),
    ("1Foot", "1Foot-2Hands"): (0.08, 0.04),
    ("1Foot-1Hand", "1Foot"): (9.15, 13.64),
    ("1Foot-1Hand", "1Foot-1Hand"): (1.81, 2.26),
    ("1Foot-1Hand", "2Feet"): (0.08, 0.03),
    ("1Foot-1Hand", "2Feet-1Hand"): (12.24, 16.59),
    ("1Foot-1Hand", "2Feet-2Hands"): (0.08, 0.02),
    ("1Foot-1Hand", "1Foot-2Hands"): (0.15, 0.02),
    ("2Feet", "1Foot"): (16.02, 10.05),
    ("2Feet", "1Foot-1Hand"): (0.15, 0.04),
    ("2Feet", "2Feet-1Hand"): (3.48, 2.23),
    ("2Feet", "2Feet-2Hands"): (0.08, 0.06),
    ("2Feet-1Hand", "1Foot"): (0.23, 0.07),
    ("2Feet-1Hand", "1Foot-1Hand"): (11.72, 4.38),
    ("2Feet-1Hand", "2Feet"): (4.61, 5.31),
    ("2Feet-1Hand", "2Feet-2Hands"): (0.98, 0.15),
    ("2Feet-2Hands", "2Feet-1Hand"): (0.83, 1.22),
    ("2Feet-2Hands", "1Foot-2Hands"): (0.68, 0.75),
    ("1Foot-2Hands", "1Foot-1Hand"): (0.53, 1.27),
    ("1Foot-2Hands", "2Feet-2Hands"): (0.38, 2.45),
}

TABLE_II_TRANSITIONS = 1323
TABLE_II_TOTAL_FRAMES = 54148  # 541.48 s at 100 FPS


def table_ii_counts() -> dict[tuple[str, str], int]:
    """Integer transition counts whose percentages reproduce the table."""
    counts = {key: round(pct * TABLE_II_TRANSITIONS / 100.0)
              for key, (pct, _) in TABLE_II.items()}
    total = sum(counts.values())
    if total != TABLE_II_TRANSITIONS:
        raise AssertionError(f"count apportionment off: {total} != {TABLE_II_TRANSITIONS}")
    return counts


def _cell_durations(key, count):
    """Deterministic per-record durations that respect the cell's share of
    the total counted time."""
    _, time_pct = TABLE_II[key]
    total = max(count, round(time_pct * TABLE_II_TOTAL_FRAMES / 100.0))
    base = total // count
    extra = total - base * count
    return [base + 1] * extra + [base] * (count - extra)


def table_ii_corpus() -> list[TransitionSequence]:
    """Synthetic motions whose non-boundary transition multiset equals the
    published table counts exactly.

    The transition multigraph is decomposed into trails; each trail becomes
    one motion with sacrificial boundary records at both ends so that every
    trail edge survives boundary filtering.
    """
    counts = table_ii_counts()
    durations = {key: _cell_durations(key, n) for key, n in counts.items()}

    out_deg: dict[str, int] = {}
    in_deg: dict[str, int] = {}
    adj: dict[str, list[str]] = {}
    remaining = dict(counts)
    for (frm, to), n in counts.items():
        out_deg[frm] = out_deg.get(frm, 0) + n
        in_deg[to] = in_deg.get(to, 0) + n
        adj.setdefault(frm, [])

    def pick_start():
        nodes = sorted(set(out_deg) | set(in_deg))
        for node in nodes:
            if out_deg.get(node, 0) - in_deg.get(node, 0) > 0 and _has_out(node):
                return node
        for node in nodes:
            if _has_out(node):
                return node
        return None

    def _has_out(node):
        return any(remaining.get((node, to), 0) > 0
                   for to in sorted({t for (f, t) in remaining if f == node}))

    def next_edge(node):
        for to in sorted({t for (f, t) in remaining if f == node}):
            if remaining[(node, to)] > 0:
                return to
        return None

    trails: list[list[str]] = []
    while True:
        start = pick_start()
        if start is None:
            break
        trail = [start]
        node = start
        while True:
            to = next_edge(node)
            if to is None:
                break
            remaining[(node, to)] -= 1
            in_deg[to] -= 1
            out_deg[node] -= 1
            trail.append(to)
            node = to
        trails.append(trail)

    categories = ("locomotion", "loco-manipulation", "balancing")
    sequences = []
    dur_cursor = {key: 0 for key in counts}
    for t_idx, trail in enumerate(trails):
        records = []
        first = SupportPose.from_label(trail[0])
        opener = SupportPose.from_label("2Feet" if trail[0] != "2Feet" else "1Foot")
        records.append(TransitionRecord(from_pose=opener, to_pose=first,
                                        duration_frames=50, start_frame=0,
                                        boundary=True))
        frame = 50
        for a, b in zip(trail[:-1], trail[1:]):
            key = (a, b)
            d = durations[key][dur_cursor[key]]
            dur_cursor[key] += 1
            records.append(TransitionRecord(
                from_pose=SupportPose.from_label(a),
                to_pose=SupportPose.from_label(b),
                duration_frames=d, start_frame=frame))
            frame += d
        records.append(TransitionRecord(
            from_pose=SupportPose.from_label(trail[-1]), to_pose=None,
            duration_frames=50, start_frame=frame, boundary=True))
        sequences.append(TransitionSequence(
            motion_id=f"corpus_{t_idx:03d}", records=records,
            category=categories[t_idx % len(categories)]))
    used = {key: dur_cursor[key] for key in counts}
    if used != counts:
        raise AssertionError("trail decomposition did not cover all transitions")
    return sequences


def mixture_duration_samples(n: int = 5000, seed: int = 0,
                             components=((0.5, 11.76, 8.60), (0.5, 53.89, 11.35))) -> np.ndarray:
    """Durations drawn from a two-normal mixture (defaults to the published
    locomotion-transition parameters)."""
    rng = np.random.default_rng(seed)
    weights = np.array([c[0] for c in components])
    weights = weights / weights.sum()
    comp = rng.choice(len(components), size=n, p=weights)
    means = np.array([c[1] for c in components])
    stds = np.array([c[2] for c in components])
    return rng.normal(means[comp], stds[comp])
