"""Triangle meshes and proximity queries between posed meshes.

Distances are Euclidean surface-to-surface distances in mm; interpenetrating
surfaces report 0 (the contact rule only tests `distance < threshold`, so
penetration must count as touching). World placement is expressed with 4x4
homogeneous transforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import MeshError

_DEGENERATE_AREA = 1e-12


def make_transform(rotation: np.ndarray | None = None,
                   translation: np.ndarray | None = None) -> np.ndarray:
    """Assemble a 4x4 rigid transform from a 3x3 rotation and a translation."""
    T = np.eye(4)
    if rotation is not None:
        T[:3, :3] = np.asarray(rotation, dtype=float)
    if translation is not None:
        T[:3, 3] = np.asarray(translation, dtype=float)
    return T


def identity_transform() -> np.ndarray:
    return np.eye(4)


@dataclass(frozen=True)
class TriangleMesh:
    """Indexed triangle mesh. Degenerate (zero-area) triangles are dropped
    at construction, so a non-empty mesh never contains them."""

    vertices: np.ndarray   # (V, 3) float64, mm
    triangles: np.ndarray  # (T, 3) int64

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=float))
        t = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must be (V, 3), got {v.shape}")
        if t.size == 0:
            t = t.reshape(0, 3)
        if t.ndim != 2 or t.shape[1] != 3:
            raise MeshError(f"triangles must be (T, 3), got {t.shape}")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise MeshError("triangle index out of range")
        if t.size:
            a, b, c = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
            area2 = np.linalg.norm(np.cross(b - a, c - a), axis=1)
            t = t[area2 > _DEGENERATE_AREA]
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def is_empty(self) -> bool:
        return self.n_triangles == 0

    def transformed(self, transform: np.ndarray) -> "TriangleMesh":
        v = self.vertices @ np.asarray(transform)[:3, :3].T + np.asarray(transform)[:3, 3]
        return TriangleMesh(v, self.triangles)

    def aabb(self, transform: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
        v = self.vertices
        if transform is not None:
            T = np.asarray(transform)
            v = v @ T[:3, :3].T + T[:3, 3]
        return v.min(axis=0), v.max(axis=0)

    def surface_centroid(self) -> np.ndarray:
        """Area-weighted centroid of the triangle surfaces (local frame)."""
        a = self.vertices[self.triangles[:, 0]]
        b = self.vertices[self.triangles[:, 1]]
        c = self.vertices[self.triangles[:, 2]]
        areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
        centers = (a + b + c) / 3.0
        return (centers * areas[:, None]).sum(axis=0) / areas.sum()


@dataclass(frozen=True)
class ProximityResult:
    """Minimum distance between two posed meshes with the closest points."""

    distance: float
    point_a: np.ndarray
    point_b: np.ndarray


def point_triangle_distance(p, tri) -> tuple[float, np.ndarray]:
    """Distance from a point to a triangle and the closest triangle point.

    `tri` is a (3, 3) array of vertices. Raises MeshError on a degenerate
    triangle.
    """
    p = np.asarray(p, dtype=float)
    tri = np.asarray(tri, dtype=float)
    if tri.shape != (3, 3):
        raise MeshError(f"triangle must be (3, 3), got {tri.shape}")
    if np.linalg.norm(np.cross(tri[1] - tri[0], tri[2] - tri[0])) <= _DEGENERATE_AREA:
        raise MeshError("degenerate (zero-area) triangle")
    cp = _kernels.closest_point_on_triangle(
        np.ascontiguousarray(p), np.ascontiguousarray(tri[0]),
        np.ascontiguousarray(tri[1]), np.ascontiguousarray(tri[2]))
    return float(np.linalg.norm(p - cp)), cp


def _world_triangles(mesh: TriangleMesh, transform: np.ndarray | None):
    v = mesh.vertices
    if transform is not None:
        T = np.asarray(transform, dtype=float)
        v = v @ T[:3, :3].T + T[:3, 3]
    return np.ascontiguousarray(v[mesh.triangles]), v


def mesh_mesh_distance(mesh_a: TriangleMesh, transform_a: np.ndarray | None,
                       mesh_b: TriangleMesh, transform_b: np.ndarray | None,
                       accelerated: bool = True) -> ProximityResult:
    """Minimum distance between two posed meshes (exact over all triangle
    pairs).

    The accelerated path prunes triangle pairs with per-triangle AABB lower
    bounds, seeded by the closest vertex pair; it returns the same minimum
    as the exhaustive scan (`accelerated=False`).
    """
    if mesh_a.is_empty or mesh_b.is_empty:
        raise MeshError("mesh_mesh_distance requires non-empty meshes")

    tris_a, verts_a = _world_triangles(mesh_a, transform_a)
    tris_b, verts_b = _world_triangles(mesh_b, transform_b)
    na, nb = len(tris_a), len(tris_b)

    # seed with the closest vertex pair (upper bound on the true minimum)
    d2v = ((verts_a[:, None, :] - verts_b[None, :, :]) ** 2).sum(axis=2)
    ia, ib = np.unravel_index(np.argmin(d2v), d2v.shape)
    best_d2 = float(d2v[ia, ib])
    best_pa = np.ascontiguousarray(verts_a[ia])
    best_pb = np.ascontiguousarray(verts_b[ib])

    if accelerated:
        lo_a = tris_a.min(axis=1)
        hi_a = tris_a.max(axis=1)
        lo_b = tris_b.min(axis=1)
        hi_b = tris_b.max(axis=1)
        gap = np.maximum(0.0, np.maximum(lo_a[:, None] - hi_b[None, :, :],
                                         lo_b[None, :, :] - hi_a[:, None]))
        lb = np.sqrt((gap ** 2).sum(axis=2))
        keep = lb.ravel() ** 2 <= best_d2
        flat = np.flatnonzero(keep)
        order = flat[np.argsort(lb.ravel()[flat], kind="stable")]
        pairs = np.ascontiguousarray(
            np.stack([order // nb, order % nb], axis=1).astype(np.int64))
        bounds = np.ascontiguousarray(lb.ravel()[order])
    else:
        ii, jj = np.meshgrid(np.arange(na), np.arange(nb), indexing="ij")
        pairs = np.ascontiguousarray(
            np.stack([ii.ravel(), jj.ravel()], axis=1).astype(np.int64))
        bounds = np.zeros(len(pairs))

    d2, pa, pb = _kernels.mesh_pair_closest(tris_a, tris_b, pairs, bounds,
                                            best_d2, best_pa, best_pb)
    return ProximityResult(float(np.sqrt(d2)), pa, pb)


# ---------------------------------------------------------------------------
# mesh constructors and the OBJ subset
# ---------------------------------------------------------------------------

_BOX_FACES = np.array([
    [0, 1, 2], [0, 2, 3],  # bottom
    [4, 6, 5], [4, 7, 6],  # top
    [0, 4, 5], [0, 5, 1],
    [1, 5, 6], [1, 6, 2],
    [2, 6, 7], [2, 7, 3],
    [3, 7, 4], [3, 4, 0],
], dtype=np.int64)


def box_mesh(extents, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Axis-aligned box as 12 triangles; `extents` are full side lengths."""
    e = np.asarray(extents, dtype=float) / 2.0
    c = np.asarray(center, dtype=float)
    corners = np.array([
        [-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1],
        [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1],
    ], dtype=float)
    return TriangleMesh(corners * e + c, _BOX_FACES)


def floor_mesh(half_extent: float = 5000.0, z: float = 0.0) -> TriangleMesh:
    """Large horizontal quad (two triangles) modelling the floor plane."""
    s = float(half_extent)
    verts = np.array([[-s, -s, z], [s, -s, z], [s, s, z], [-s, s, z]])
    return TriangleMesh(verts, np.array([[0, 1, 2], [0, 2, 3]], dtype=np.int64))


def parse_obj(text: str, source: str = "<string>") -> TriangleMesh:
    """ASCII OBJ subset: `v x y z` and triangular `f i j k` records only."""
    vertices: list[list[float]] = []
    faces: list[list[int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) != 4:
                raise MeshError(f"{source}:{lineno}: vertex needs 3 coordinates")
            try:
                vertices.append([float(x) for x in parts[1:]])
            except ValueError as exc:
                raise MeshError(f"{source}:{lineno}: bad vertex number: {exc}") from exc
        elif tag == "f":
            if len(parts) != 4:
                raise MeshError(f"{source}:{lineno}: only triangular faces are supported")
            idx = []
            for tok in parts[1:]:
                head = tok.split("/")[0]
                try:
                    i = int(head)
                except ValueError as exc:
                    raise MeshError(f"{source}:{lineno}: bad face index {tok!r}") from exc
                if i <= 0:
                    raise MeshError(f"{source}:{lineno}: face indices must be positive (1-based)")
                idx.append(i - 1)
            faces.append(idx)
        # other record types (vn, vt, o, g, s, usemtl, ...) are ignored
    if faces and (max(max(f) for f in faces) >= len(vertices)):
        raise MeshError(f"{source}: face index out of range")
    return TriangleMesh(np.asarray(vertices, dtype=float).reshape(-1, 3),
                        np.asarray(faces, dtype=np.int64).reshape(-1, 3))


def load_obj(path) -> TriangleMesh:
    from pathlib import Path
    p = Path(path)
    if not p.exists():
        raise MeshError(f"mesh file not found: {p}")
    return parse_obj(p.read_text(), source=str(p))


def emit_obj(mesh: TriangleMesh, comment: str | None = None) -> str:
    lines = []
    if comment:
        lines.append(f"# {comment}")
    for v in mesh.vertices:
        lines.append(f"v {v[0]!r} {v[1]!r} {v[2]!r}")
    for f in mesh.triangles:
        lines.append(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}")
    return "\n".join(lines) + "\n"
