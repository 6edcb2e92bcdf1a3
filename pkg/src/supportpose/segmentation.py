"""Support-pose labelling, transition segmentation, annotation diffing.

A support pose is the laterality-collapsed count of feet/hands/knees/elbows
in supporting contact ("2Feet-1Hand"); a knee contact implies the same-side
foot. Contact timelines collapse into maximal runs of identical poses, each
yielding one transition record (origin pose, destination pose, time spent in
the origin). The first and last records of a motion are flagged as boundary
records; statistics exclude them downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .contacts import ContactTimeline
from .errors import SupportPoseError
from .model import SUPPORT_SEGMENT_CLASS

_CLASS_FIELDS = ("feet", "hands", "knees", "elbows")
_LABEL_WORDS = {
    "feet": ("1Foot", "2Feet"),
    "hands": ("1Hand", "2Hands"),
    "knees": ("1Knee", "2Knees"),
    "elbows": ("1Elbow", "2Elbows"),
}
_WORD_TO_FIELD = {w: (f, i + 1)
                  for f, words in _LABEL_WORDS.items()
                  for i, w in enumerate(words)}

EMPTY_POSE_LABEL = "None"


@dataclass(frozen=True)
class SupportPose:
    """Laterality-collapsed support counts; knees never exceed feet."""

    feet: int = 0
    hands: int = 0
    knees: int = 0
    elbows: int = 0

    def __post_init__(self):
        for f in _CLASS_FIELDS:
            v = getattr(self, f)
            if not 0 <= v <= 2:
                raise SupportPoseError(f"{f} count {v} outside 0..2")
        if self.knees > self.feet:
            raise SupportPoseError("knee support implies foot support (knees <= feet)")

    @property
    def label(self) -> str:
        parts = []
        for f in _CLASS_FIELDS:
            v = getattr(self, f)
            if v:
                parts.append(_LABEL_WORDS[f][v - 1])
        return "-".join(parts) if parts else EMPTY_POSE_LABEL

    @classmethod
    def from_label(cls, label: str) -> "SupportPose":
        if label == EMPTY_POSE_LABEL:
            return cls()
        counts = dict.fromkeys(_CLASS_FIELDS, 0)
        for word in label.split("-"):
            if word not in _WORD_TO_FIELD:
                raise SupportPoseError(f"unknown pose label part {word!r}")
            f, v = _WORD_TO_FIELD[word]
            if counts[f]:
                raise SupportPoseError(f"duplicate class in label {label!r}")
            counts[f] = v
        return cls(**counts)

    def counts(self) -> tuple[int, int, int, int]:
        return (self.feet, self.hands, self.knees, self.elbows)

    def __str__(self) -> str:
        return self.label


def _side(segment: str) -> str:
    return "Left" if segment.startswith("Left") else "Right"


def support_pose_at(contacts) -> SupportPose:
    """Collapse a set of supporting segment names into a SupportPose.

    Applies the knee-implies-foot rule per side; an empty set is the empty
    pose ("None").
    """
    sides: dict[str, set[str]] = {"Feet": set(), "Hands": set(), "Knees": set(), "Elbows": set()}
    for name in contacts:
        cls = SUPPORT_SEGMENT_CLASS.get(name)
        if cls is None:
            raise SupportPoseError(f"{name!r} is not a canonical support segment name")
        sides[cls].add(_side(name))
    sides["Feet"] |= sides["Knees"]  # a knee support implies the same-side foot
    return SupportPose(feet=len(sides["Feet"]), hands=len(sides["Hands"]),
                       knees=len(sides["Knees"]), elbows=len(sides["Elbows"]))


@dataclass(frozen=True)
class TransitionRecord:
    """Maximal run of one support pose and the transition out of it.

    `to_pose` is None only for the final record of a motion (no destination).
    `duration_frames` is the time spent in `from_pose`.
    """

    from_pose: SupportPose
    to_pose: SupportPose | None
    duration_frames: int
    start_frame: int
    boundary: bool = False
    motion_id: str | None = None

    def __post_init__(self):
        if self.duration_frames < 1:
            raise SupportPoseError("record duration must be >= 1 frame")

    @property
    def is_loop(self) -> bool:
        return self.to_pose is not None and self.to_pose == self.from_pose


@dataclass
class TransitionSequence:
    """Ordered transition records of one motion."""

    motion_id: str
    records: list[TransitionRecord] = field(default_factory=list)
    category: str | None = None
    fps: float = 100.0

    def pose_labels(self) -> list[str]:
        return [r.from_pose.label for r in self.records]

    def non_boundary(self) -> list[TransitionRecord]:
        return [r for r in self.records if not r.boundary]

    @property
    def total_frames(self) -> int:
        return sum(r.duration_frames for r in self.records)


def segment_timeline(timeline: ContactTimeline,
                     max_airborne_frames: int = 0) -> TransitionSequence:
    """Collapse a contact timeline into transition records.

    Interior empty-pose runs shorter than `max_airborne_frames` are bridged
    (dropped), which turns pose -> None -> pose into a direct transition and
    produces loop records when both sides share the pose. The default (0)
    bridges nothing.
    """
    if timeline.n_frames == 0:
        raise SupportPoseError("empty contact timeline")

    labels = [support_pose_at(timeline.segments_at(i)) for i in range(timeline.n_frames)]
    runs: list[tuple[SupportPose, int, int]] = []  # (pose, start, length)
    start = 0
    for i in range(1, len(labels) + 1):
        if i == len(labels) or labels[i] != labels[start]:
            runs.append((labels[start], start, i - start))
            start = i

    if max_airborne_frames > 0:
        empty = SupportPose()
        runs = [r for k, r in enumerate(runs)
                if not (0 < k < len(runs) - 1
                        and r[0] == empty and r[2] < max_airborne_frames)]

    records = []
    last = len(runs) - 1
    for k, (pose, run_start, length) in enumerate(runs):
        records.append(TransitionRecord(
            from_pose=pose,
            to_pose=runs[k + 1][0] if k < last else None,
            duration_frames=length,
            start_frame=run_start,
            boundary=(k == 0 or k == last),
            motion_id=timeline.motion_id,
        ))
    return TransitionSequence(motion_id=timeline.motion_id or "", records=records,
                              fps=timeline.fps)


def contact_change_count(a: SupportPose, b: SupportPose) -> int:
    """Total count change across classes (laterality-collapsed metric)."""
    return int(sum(abs(x - y) for x, y in zip(a.counts(), b.counts())))


@dataclass
class EvalReport:
    """Alignment of a detected pose sequence against an annotation."""

    n_detected: int
    n_annotated: int
    n_missed: int      # annotated poses absent from the detection
    n_incorrect: int   # substituted or spurious detected poses
    n_substituted: int
    n_inserted: int
    discrepancies: list[str] = field(default_factory=list)


def _label_list(seq) -> list[str]:
    if isinstance(seq, TransitionSequence):
        return seq.pose_labels()
    return [s.label if isinstance(s, SupportPose) else str(s) for s in seq]


def compare_to_annotation(detected, annotated) -> EvalReport:
    """Minimal-edit alignment of pose label sequences.

    Substitutions and insertions into the detected sequence count as
    incorrect; deletions from the annotated sequence count as missed.
    Tie-breaking prefers match > substitution > deletion > insertion, which
    makes the trace deterministic.
    """
    det = _label_list(detected)
    ann = _label_list(annotated)
    if not det or not ann:
        raise SupportPoseError("cannot compare empty pose sequences")

    na, nd = len(ann), len(det)
    cost = np.zeros((na + 1, nd + 1), dtype=np.int64)
    cost[:, 0] = np.arange(na + 1)
    cost[0, :] = np.arange(nd + 1)
    for i in range(1, na + 1):
        for j in range(1, nd + 1):
            sub = cost[i - 1, j - 1] + (ann[i - 1] != det[j - 1])
            dele = cost[i - 1, j] + 1
            ins = cost[i, j - 1] + 1
            cost[i, j] = min(sub, dele, ins)

    # traceback (preference: match/substitute, then delete, then insert)
    i, j = na, nd
    ops: list[tuple[str, int, int]] = []
    while i > 0 or j > 0:
        if i > 0 and j > 0 and cost[i, j] == cost[i - 1, j - 1] + (ann[i - 1] != det[j - 1]):
            ops.append(("match" if ann[i - 1] == det[j - 1] else "substitute", i - 1, j - 1))
            i -= 1
            j -= 1
        elif i > 0 and cost[i, j] == cost[i - 1, j] + 1:
            ops.append(("delete", i - 1, j))
            i -= 1
        else:
            ops.append(("insert", i, j - 1))
            j -= 1
    ops.reverse()

    missed = substituted = inserted = 0
    notes = []
    for op, ia, jd in ops:
        if op == "delete":
            missed += 1
            notes.append(f"missed: annotated[{ia}] {ann[ia]!r} has no detected counterpart")
        elif op == "substitute":
            substituted += 1
            notes.append(f"incorrect: detected[{jd}] {det[jd]!r} where annotation "
                         f"has {ann[ia]!r}")
        elif op == "insert":
            inserted += 1
            notes.append(f"incorrect: detected[{jd}] {det[jd]!r} not present in annotation")
    return EvalReport(n_detected=nd, n_annotated=na, n_missed=missed,
                      n_incorrect=substituted + inserted,
                      n_substituted=substituted, n_inserted=inserted,
                      discrepancies=notes)
