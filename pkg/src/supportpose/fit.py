"""Pose reconstruction from marker trajectories.

Per frame, the pose minimizes the sum of squared distances between captured
markers and the model's virtual markers, subject to the joint box limits.
Occluded markers (NaN rows) simply drop out of the sum; joints that no
observed marker can see keep their warm-start value. Sequences are fitted
frame by frame, each frame warm-started from the previous solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize
from scipy.spatial.transform import Rotation

from . import _kernels
from .errors import FitError, MarkerDataError
from .geometry import TriangleMesh
from .model import KinematicModel

_LIMIT_SLACK = 1e-9
_COLLINEAR_TOL = 1e-8


@dataclass(frozen=True)
class MarkerFrame:
    """One capture frame; NaN rows mark occluded markers."""

    index: int
    positions: np.ndarray  # (n, 3) mm

    def __post_init__(self):
        object.__setattr__(self, "positions",
                           np.ascontiguousarray(np.asarray(self.positions, dtype=float)))

    @property
    def observed(self) -> np.ndarray:
        return ~np.isnan(self.positions).any(axis=1)


@dataclass(frozen=True)
class MarkerSequence:
    """Dense marker trajectories with a fixed marker order."""

    marker_names: tuple[str, ...]
    positions: np.ndarray      # (F, n, 3) mm, NaN = occluded
    frame_indices: np.ndarray  # (F,) strictly increasing

    def __post_init__(self):
        pos = np.ascontiguousarray(np.asarray(self.positions, dtype=float))
        idx = np.asarray(self.frame_indices, dtype=np.int64)
        if pos.ndim != 3 or pos.shape[2] != 3:
            raise MarkerDataError(f"positions must be (F, n, 3), got {pos.shape}")
        if len(idx) != len(pos):
            raise MarkerDataError("frame_indices length does not match positions")
        if len(idx) > 1 and not np.all(np.diff(idx) > 0):
            raise MarkerDataError("frame indices must be strictly increasing")
        object.__setattr__(self, "marker_names", tuple(self.marker_names))
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "frame_indices", idx)
        if pos.shape[1] != len(self.marker_names):
            raise MarkerDataError("marker_names length does not match positions")

    @property
    def n_frames(self) -> int:
        return len(self.positions)

    @property
    def n_markers(self) -> int:
        return self.positions.shape[1]

    def frame(self, i: int) -> MarkerFrame:
        return MarkerFrame(int(self.frame_indices[i]), self.positions[i])


@dataclass(frozen=True)
class FitOptions:
    """Optimizer settings for the per-frame fit.

    All methods use objective/residual evaluations only, keep every
    evaluated pose inside the joint box, and track the best feasible point,
    so the returned objective never exceeds the initial one. `rel_tol` is
    the relative improvement below which a full optimizer cycle counts as
    converged; `max_evals` caps objective-equivalent evaluations per frame.

    Methods: "trf" (default; trust-region least squares on the marker
    residuals with finite-difference steps), "powell" and "nelder-mead"
    (direct search via scipy with internal variable scaling).
    """

    method: str = "trf"
    rel_tol: float = 1e-8
    max_evals: int = 5000

    def __post_init__(self):
        if self.method.lower() not in ("trf", "powell", "nelder-mead"):
            raise FitError(f"unsupported method {self.method!r}")
        if self.rel_tol <= 0 or self.max_evals <= 0:
            raise FitError("rel_tol and max_evals must be positive")


@dataclass
class FitResult:
    pose: np.ndarray
    objective: float   # mm^2
    iterations: int    # objective evaluations used
    converged: bool


@dataclass
class PoseTrajectory:
    """Per-frame fitted poses for one motion."""

    poses: np.ndarray        # (F, 6+m)
    objectives: np.ndarray   # (F,) mm^2
    converged: np.ndarray    # (F,) bool
    fps: float = 100.0
    model_name: str = ""

    @property
    def n_frames(self) -> int:
        return len(self.poses)


@dataclass(frozen=True)
class ObjectModel:
    """Rigid object: local marker layout plus an optional collision mesh."""

    name: str
    marker_names: tuple[str, ...]
    marker_offsets: np.ndarray  # (k, 3) mm in the object frame
    mesh: TriangleMesh | None = None

    def __post_init__(self):
        off = np.ascontiguousarray(np.asarray(self.marker_offsets, dtype=float))
        if off.ndim != 2 or off.shape[1] != 3:
            raise MarkerDataError(f"marker offsets must be (k, 3), got {off.shape}")
        object.__setattr__(self, "marker_names", tuple(self.marker_names))
        object.__setattr__(self, "marker_offsets", off)
        if len(self.marker_names) != len(off):
            raise MarkerDataError("marker names/offsets length mismatch")
        if len(off) < 3:
            raise MarkerDataError(
                f"object {self.name!r} needs at least 3 markers, has {len(off)}")
        if _collinear(off):
            raise MarkerDataError(f"object {self.name!r} markers are collinear")


@dataclass
class ObjectTrack:
    """Fitted 6-DoF trajectory of a rigid object."""

    name: str
    poses: np.ndarray  # (F, 6): [tx, ty, tz, alpha, beta, gamma]
    marker_count: int
    fps: float = 100.0

    @property
    def n_frames(self) -> int:
        return len(self.poses)

    def transforms(self) -> np.ndarray:
        """(F, 4, 4) world transforms."""
        out = np.tile(np.eye(4), (len(self.poses), 1, 1))
        for i, p in enumerate(self.poses):
            out[i, :3, :3] = _kernels.euler_xyz_matrix(p[3], p[4], p[5])
            out[i, :3, 3] = p[:3]
        return out


def _collinear(points: np.ndarray) -> bool:
    centered = points - points.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    scale = max(s[0], 1.0)
    return s[1] <= _COLLINEAR_TOL * scale


def _frame_positions(frame) -> np.ndarray:
    if isinstance(frame, MarkerFrame):
        return frame.positions
    return np.ascontiguousarray(np.asarray(frame, dtype=float))


def objective(model: KinematicModel, pose, frame) -> float:
    """Sum of squared marker distances in mm^2 over observed markers."""
    targets = _frame_positions(frame)
    if targets.shape != (model.n_markers, 3):
        raise MarkerDataError(
            f"frame has shape {targets.shape}, model expects ({model.n_markers}, 3)")
    observed = ~np.isnan(targets).any(axis=1)
    if not observed.any():
        raise MarkerDataError("all markers missing: objective undefined")
    arr = model.pose_array(pose)
    return float(_kernels.marker_objective(
        arr, model._topo, model._parent_seg, model._child_seg, model._axes,
        model._offsets, model._root_index, len(model.segments),
        model._marker_seg, model._marker_off,
        np.where(observed[:, None], targets, 0.0), observed))


def fit_frame(model: KinematicModel, frame, initial,
              opts: FitOptions = FitOptions()) -> FitResult:
    """Box-constrained least-squares marker fit for a single frame.

    The returned pose is exactly within the joint limits, and its objective
    never exceeds the initial pose's objective (best-so-far tracking over
    all evaluated feasible points).
    """
    targets = _frame_positions(frame)
    if targets.shape != (model.n_markers, 3):
        raise MarkerDataError(
            f"frame has shape {targets.shape}, model expects ({model.n_markers}, 3)")
    if np.isinf(targets).any():
        raise MarkerDataError("non-finite marker coordinates in frame")
    observed = ~np.isnan(targets).any(axis=1)
    if not observed.any():
        raise MarkerDataError("all markers missing in frame")

    x0 = model.pose_array(initial)
    if not model.within_limits(x0, tol=_LIMIT_SLACK):
        raise FitError("initial pose violates joint limits")
    x0 = model.clamp_to_limits(x0)

    limits = model.joint_limits
    lo = np.concatenate([np.full(6, -np.inf), limits[:, 0]])
    hi = np.concatenate([np.full(6, np.inf), limits[:, 1]])
    targets_clean = np.ascontiguousarray(np.where(observed[:, None], targets, 0.0))

    best = {"f": np.inf, "x": x0, "nfev": 0}

    def evaluate(xc):
        f = _kernels.marker_objective(
            xc, model._topo, model._parent_seg,
            model._child_seg, model._axes, model._offsets, model._root_index,
            len(model.segments), model._marker_seg, model._marker_off,
            targets_clean, observed)
        best["nfev"] += 1
        if f < best["f"]:
            best["f"] = f
            best["x"] = xc.copy()
        return f

    evaluate(x0)
    method = opts.method.lower()

    if method == "trf":
        idx = np.flatnonzero(observed)

        def residuals(x):
            xc = np.ascontiguousarray(np.minimum(np.maximum(x, lo), hi))
            evaluate(xc)
            R, t = _kernels.fk_segments(
                xc, model._topo, model._parent_seg, model._child_seg,
                model._axes, model._offsets, model._root_index,
                len(model.segments))
            v = _kernels.marker_positions(R, t, model._marker_seg, model._marker_off)
            return (targets_clean[idx] - v[idx]).ravel()

        # each finite-difference Jacobian costs ~pose_size residual passes
        max_nfev = max(2, opts.max_evals // (model.pose_size + 1))
        hi_solver = np.where(hi - lo < 1e-12, hi + 1e-12, hi)  # trf rejects equal bounds
        res = least_squares(residuals, x0, bounds=(lo, hi_solver), method="trf",
                            jac="2-point", ftol=opts.rel_tol, xtol=opts.rel_tol,
                            gtol=None, max_nfev=max_nfev)
        converged = res.status > 0
    else:
        scale = np.ones(model.pose_size)
        scale[:3] = 100.0  # translations in mm vs angles in radians

        def fun(z):
            xc = np.ascontiguousarray(np.minimum(np.maximum(z * scale, lo), hi))
            return evaluate(xc)

        if method == "powell":
            options = {"xtol": 1e-5, "ftol": opts.rel_tol, "maxfev": opts.max_evals}
        else:
            options = {"xatol": opts.rel_tol, "fatol": opts.rel_tol,
                       "maxfev": opts.max_evals, "adaptive": True}
        bounds = list(zip(lo / scale, hi / scale))
        res = minimize(fun, x0 / scale, method=method, bounds=bounds,
                       options=options)
        converged = bool(res.success)

    pose = model.clamp_to_limits(best["x"])
    return FitResult(pose=pose, objective=float(best["f"]),
                     iterations=int(best["nfev"]), converged=converged)


def fit_sequence(model: KinematicModel, frames: MarkerSequence,
                 opts: FitOptions = FitOptions(), fps: float = 100.0) -> PoseTrajectory:
    """Fit every frame, warm-starting each from the previous solution.

    Frame 0 starts from the model's neutral pose. Errors are re-raised with
    the offending frame index attached.
    """
    if frames.n_frames == 0:
        raise MarkerDataError("empty marker sequence")
    if frames.n_markers != model.n_markers:
        raise MarkerDataError(
            f"sequence has {frames.n_markers} markers, model expects {model.n_markers}")
    if list(frames.marker_names) != model.marker_names:
        raise MarkerDataError("marker order does not match model attachments")

    F = frames.n_frames
    poses = np.empty((F, model.pose_size))
    objectives = np.empty(F)
    converged = np.empty(F, dtype=bool)
    current = model.neutral_pose
    for i in range(F):
        try:
            result = fit_frame(model, frames.positions[i], current, opts)
        except (FitError, MarkerDataError) as exc:
            raise FitError(f"frame {int(frames.frame_indices[i])}: {exc}") from exc
        poses[i] = result.pose
        objectives[i] = result.objective
        converged[i] = result.converged
        current = result.pose
    return PoseTrajectory(poses=poses, objectives=objectives, converged=converged,
                          fps=fps, model_name=model.name)


def fit_object_track(object_model: ObjectModel, frames: MarkerSequence,
                     fps: float = 100.0) -> ObjectTrack:
    """Closed-form rigid registration (Kabsch) of an object per frame.

    Each frame needs at least 3 observed, non-collinear markers.
    """
    if frames.n_markers != len(object_model.marker_names):
        raise MarkerDataError(
            f"sequence has {frames.n_markers} markers, object "
            f"{object_model.name!r} expects {len(object_model.marker_names)}")
    if list(frames.marker_names) != list(object_model.marker_names):
        raise MarkerDataError("marker order does not match the object model")

    F = frames.n_frames
    poses = np.empty((F, 6))
    local = object_model.marker_offsets
    for i in range(F):
        world = frames.positions[i]
        observed = ~np.isnan(world).any(axis=1)
        if observed.sum() < 3:
            raise FitError(
                f"object {object_model.name!r} frame {int(frames.frame_indices[i])}: "
                f"needs 3 observed markers, has {int(observed.sum())}")
        L = local[observed]
        W = world[observed]
        if _collinear(L) or _collinear(W):
            raise FitError(
                f"object {object_model.name!r} frame {int(frames.frame_indices[i])}: "
                "markers are collinear")
        lc = L.mean(axis=0)
        wc = W.mean(axis=0)
        H = (L - lc).T @ (W - wc)
        U, _, Vt = np.linalg.svd(H)
        D = np.eye(3)
        D[2, 2] = np.sign(np.linalg.det(Vt.T @ U.T))
        R = Vt.T @ D @ U.T
        t = wc - R @ lc
        alpha, beta, gamma = Rotation.from_matrix(R).as_euler("XYZ")
        poses[i] = [t[0], t[1], t[2], alpha, beta, gamma]
    return ObjectTrack(name=object_model.name, poses=poses,
                       marker_count=frames.n_markers, fps=fps)
