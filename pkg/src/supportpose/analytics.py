"""Corpus statistics over transition sequences.

Boundary records (arbitrary-duration first/last poses of each motion) are
excluded from the table and histograms; the transition graph can include
them. Kneeling-tagged motions are excluded from statistics by default, loop
transitions only on request.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SupportPoseError
from .segmentation import (SupportPose, TransitionRecord, TransitionSequence,
                           contact_change_count)

KNEELING_CATEGORY = "kneeling"


def _gather_records(sequences, categories=None, exclude_kneeling=True,
                    exclude_loops=False, include_boundaries=False):
    records: list[TransitionRecord] = []
    for seq in sequences:
        if categories is not None and seq.category not in categories:
            continue
        if exclude_kneeling and seq.category == KNEELING_CATEGORY:
            continue
        for r in seq.records:
            if r.boundary and not include_boundaries:
                continue
            if r.to_pose is None:
                continue
            if exclude_loops and r.is_loop:
                continue
            records.append(r)
    return records


@dataclass
class CellStats:
    count: int
    frames: int
    appearance_pct: float
    time_pct: float


@dataclass
class TransitionStats:
    """Transition table: per-cell appearance and origin-time percentages."""

    cells: dict[tuple[str, str], CellStats]
    pose_totals: dict[str, tuple[float, float]]  # label -> (appearance, time) %
    n_transitions: int
    total_frames: int
    row_order: list[str] = field(default_factory=list)


def transition_table(sequences, categories=None, exclude_kneeling: bool = True,
                     exclude_loops: bool = False) -> TransitionStats:
    """Aggregate non-boundary transition records into the percentage table.

    appearance_pct is the cell count over all counted transitions; time_pct
    is the summed origin-pose duration over the total counted time. Rows are
    ordered by decreasing pose appearance total.
    """
    records = _gather_records(sequences, categories=categories,
                              exclude_kneeling=exclude_kneeling,
                              exclude_loops=exclude_loops)
    if not records:
        raise SupportPoseError("no transition records left after filtering")

    counts: dict[tuple[str, str], int] = {}
    frames: dict[tuple[str, str], int] = {}
    for r in records:
        key = (r.from_pose.label, r.to_pose.label)
        counts[key] = counts.get(key, 0) + 1
        frames[key] = frames.get(key, 0) + r.duration_frames

    n = len(records)
    total_frames = sum(frames.values())
    cells = {
        key: CellStats(count=counts[key], frames=frames[key],
                       appearance_pct=100.0 * counts[key] / n,
                       time_pct=100.0 * frames[key] / total_frames)
        for key in counts
    }
    totals: dict[str, list[float]] = {}
    for (frm, _), cs in cells.items():
        acc = totals.setdefault(frm, [0.0, 0.0])
        acc[0] += cs.appearance_pct
        acc[1] += cs.time_pct
    pose_totals = {k: (v[0], v[1]) for k, v in totals.items()}
    row_order = sorted(pose_totals, key=lambda k: (-pose_totals[k][0], k))
    return TransitionStats(cells=cells, pose_totals=pose_totals,
                           n_transitions=n, total_frames=total_frames,
                           row_order=row_order)


@dataclass
class Histogram:
    """Left-closed right-open duration bins of fixed width (frames)."""

    bin_width: int
    counts: dict[int, int]         # bin index -> count
    category: str | None = None
    n_samples: int = 0

    def bin_range(self, index: int) -> tuple[int, int]:
        return index * self.bin_width, (index + 1) * self.bin_width


def duration_histogram(records, bin_width: int = 10,
                       category: str | None = None) -> Histogram:
    """Histogram of record durations; duration d lands in bin d // bin_width.

    Accepts transition records or raw integer durations.
    """
    if bin_width < 1:
        raise SupportPoseError("bin_width must be >= 1")
    counts: dict[int, int] = {}
    n = 0
    for item in records:
        d = item.duration_frames if isinstance(item, TransitionRecord) else int(item)
        counts[d // bin_width] = counts.get(d // bin_width, 0) + 1
        n += 1
    return Histogram(bin_width=bin_width, counts=dict(sorted(counts.items())),
                     category=category, n_samples=n)


@dataclass
class MixtureFit:
    """Two-component 1-D normal mixture fitted by EM.

    Components are in canonical order (mean_1 <= mean_2). `separation` is
    Ashman's D; values below 2 indicate weak bimodality.
    """

    weights: tuple[float, float]
    means: tuple[float, float]
    stds: tuple[float, float]
    log_likelihood: float
    converged: bool
    iterations: int
    separation: float
    log_likelihood_trace: list[float] = field(default_factory=list)

    @property
    def weakly_separated(self) -> bool:
        return self.separation < 2.0


def fit_two_normal_mixture(samples, tol: float = 1e-9, max_iter: int = 1000,
                           var_floor: float = 1e-3) -> MixtureFit:
    """EM fit of a two-normal mixture to duration samples.

    Initialization is deterministic: means from the lower/upper halves split
    at the median, a shared sample variance, equal weights. The variance
    floor prevents component collapse.
    """
    x = np.asarray(samples, dtype=float).reshape(-1)
    if len(x) < 4:
        raise SupportPoseError(f"mixture fit needs >= 4 samples, got {len(x)}")
    if np.ptp(x) == 0.0:
        raise SupportPoseError("zero-variance input: mixture fit is degenerate")

    med = np.median(x)
    lower = x[x <= med]
    upper = x[x > med]
    if len(upper) == 0:  # heavy ties at the median
        lower = x[x < med]
        upper = x[x >= med]
    mu = np.array([lower.mean(), upper.mean()])
    var = np.full(2, max(x.var(), var_floor))
    w = np.array([0.5, 0.5])

    ll_trace: list[float] = []
    prev_ll = -np.inf
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        # E-step
        log_pdf = (-0.5 * np.log(2.0 * np.pi * var)[None, :]
                   - 0.5 * (x[:, None] - mu[None, :]) ** 2 / var[None, :])
        log_wp = np.log(w)[None, :] + log_pdf
        m = log_wp.max(axis=1, keepdims=True)
        log_norm = m[:, 0] + np.log(np.exp(log_wp - m).sum(axis=1))
        ll = float(log_norm.sum())
        ll_trace.append(ll)
        if ll - prev_ll < tol and iterations > 1:
            converged = True
            break
        prev_ll = ll
        resp = np.exp(log_wp - log_norm[:, None])
        # M-step
        nk = resp.sum(axis=0)
        nk = np.maximum(nk, 1e-12)
        w = nk / len(x)
        mu = (resp * x[:, None]).sum(axis=0) / nk
        var = (resp * (x[:, None] - mu[None, :]) ** 2).sum(axis=0) / nk
        var = np.maximum(var, var_floor)

    order = np.argsort(mu)
    mu = mu[order]
    var = var[order]
    w = w[order]
    sd = np.sqrt(var)
    separation = float(np.sqrt(2.0) * abs(mu[1] - mu[0]) / np.sqrt(var[0] + var[1]))
    return MixtureFit(weights=(float(w[0]), float(w[1])),
                      means=(float(mu[0]), float(mu[1])),
                      stds=(float(sd[0]), float(sd[1])),
                      log_likelihood=ll_trace[-1],
                      converged=converged,
                      iterations=iterations,
                      separation=separation,
                      log_likelihood_trace=ll_trace)


@dataclass(frozen=True)
class GraphEdge:
    from_label: str
    to_label: str
    count: int
    change_class: str  # "single" | "multi"


@dataclass
class TransitionGraph:
    nodes: list[str]
    edges: list[GraphEdge]

    @property
    def total_count(self) -> int:
        return sum(e.count for e in self.edges)


def build_transition_graph(sequences, include_boundaries: bool = False,
                           categories=None, exclude_kneeling: bool = True) -> TransitionGraph:
    """Aggregate transitions into a directed multigraph with edge counts.

    An edge is "multi" when two or more simultaneous contact-count changes
    occur between its poses, "single" otherwise. Loops are allowed.
    """
    records = _gather_records(sequences, categories=categories,
                              exclude_kneeling=exclude_kneeling,
                              include_boundaries=include_boundaries)
    counts: dict[tuple[str, str], int] = {}
    poses: dict[str, SupportPose] = {}
    for r in records:
        key = (r.from_pose.label, r.to_pose.label)
        counts[key] = counts.get(key, 0) + 1
        poses[r.from_pose.label] = r.from_pose
        poses[r.to_pose.label] = r.to_pose
    edges = [
        GraphEdge(frm, to, counts[(frm, to)],
                  "multi" if contact_change_count(poses[frm], poses[to]) >= 2
                  else "single")
        for frm, to in sorted(counts)
    ]
    return TransitionGraph(nodes=sorted(poses), edges=edges)
