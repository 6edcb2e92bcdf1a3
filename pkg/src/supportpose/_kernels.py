"""Numba kernels: forward kinematics, marker objective, triangle proximity.

All lengths are millimeters, all angles radians. These functions take plain
ndarrays so they can be jitted; the friendly wrappers live in `model`,
`fit` and `geometry`.
"""

import numpy as np
from numba import njit

_EPS = 1e-12


# ---------------------------------------------------------------------------
# rotations
# ---------------------------------------------------------------------------

@njit(cache=True)
def rotation_about_axis(axis, theta):
    """Rodrigues rotation matrix for a unit axis."""
    x, y, z = axis[0], axis[1], axis[2]
    c = np.cos(theta)
    s = np.sin(theta)
    t = 1.0 - c
    R = np.empty((3, 3))
    R[0, 0] = t * x * x + c
    R[0, 1] = t * x * y - s * z
    R[0, 2] = t * x * z + s * y
    R[1, 0] = t * x * y + s * z
    R[1, 1] = t * y * y + c
    R[1, 2] = t * y * z - s * x
    R[2, 0] = t * x * z - s * y
    R[2, 1] = t * y * z + s * x
    R[2, 2] = t * z * z + c
    return R


@njit(cache=True)
def euler_xyz_matrix(a, b, g):
    """Intrinsic x-y-z Euler rotation: Rx(a) @ Ry(b) @ Rz(g)."""
    ca, sa = np.cos(a), np.sin(a)
    cb, sb = np.cos(b), np.sin(b)
    cg, sg = np.cos(g), np.sin(g)
    R = np.empty((3, 3))
    R[0, 0] = cb * cg
    R[0, 1] = -cb * sg
    R[0, 2] = sb
    R[1, 0] = ca * sg + sa * sb * cg
    R[1, 1] = ca * cg - sa * sb * sg
    R[1, 2] = -sa * cb
    R[2, 0] = sa * sg - ca * sb * cg
    R[2, 1] = sa * cg + ca * sb * sg
    R[2, 2] = ca * cb
    return R


# ---------------------------------------------------------------------------
# forward kinematics
# ---------------------------------------------------------------------------
#
# Joint model: T_child = T_parent * Trans(offset) * Rot(axis, theta), i.e.
# `offset` is the joint position in the parent segment frame and the joint
# rotates the child frame about that point. The root segment transform is
# the root pose itself (translation pose[0:3], rotation Euler pose[3:6]).

@njit(cache=True)
def fk_segments(pose, topo, parent_seg, child_seg, axes, offsets, root_seg, n_seg):
    R = np.empty((n_seg, 3, 3))
    t = np.empty((n_seg, 3))
    R[root_seg] = euler_xyz_matrix(pose[3], pose[4], pose[5])
    t[root_seg, 0] = pose[0]
    t[root_seg, 1] = pose[1]
    t[root_seg, 2] = pose[2]
    for k in range(topo.shape[0]):
        j = topo[k]
        p = parent_seg[j]
        c = child_seg[j]
        for a in range(3):
            t[c, a] = (t[p, a]
                       + R[p, a, 0] * offsets[j, 0]
                       + R[p, a, 1] * offsets[j, 1]
                       + R[p, a, 2] * offsets[j, 2])
        Rj = rotation_about_axis(axes[j], pose[6 + j])
        for a in range(3):
            for b in range(3):
                acc = 0.0
                for k2 in range(3):
                    acc += R[p, a, k2] * Rj[k2, b]
                R[c, a, b] = acc
    return R, t


@njit(cache=True)
def fk_segments_batch(poses, topo, parent_seg, child_seg, axes, offsets, root_seg, n_seg):
    F = poses.shape[0]
    R = np.empty((F, n_seg, 3, 3))
    t = np.empty((F, n_seg, 3))
    for f in range(F):
        Rf, tf = fk_segments(poses[f], topo, parent_seg, child_seg,
                             axes, offsets, root_seg, n_seg)
        R[f] = Rf
        t[f] = tf
    return R, t


@njit(cache=True)
def marker_positions(R, t, marker_seg, marker_off):
    n = marker_seg.shape[0]
    out = np.empty((n, 3))
    for i in range(n):
        s = marker_seg[i]
        for a in range(3):
            out[i, a] = (t[s, a]
                         + R[s, a, 0] * marker_off[i, 0]
                         + R[s, a, 1] * marker_off[i, 1]
                         + R[s, a, 2] * marker_off[i, 2])
    return out


@njit(cache=True)
def marker_objective(pose, topo, parent_seg, child_seg, axes, offsets, root_seg,
                     n_seg, marker_seg, marker_off, targets, observed):
    """Sum of squared marker errors in mm^2 over observed markers."""
    R, t = fk_segments(pose, topo, parent_seg, child_seg, axes, offsets,
                       root_seg, n_seg)
    total = 0.0
    for i in range(marker_seg.shape[0]):
        if not observed[i]:
            continue
        s = marker_seg[i]
        for a in range(3):
            v = (t[s, a]
                 + R[s, a, 0] * marker_off[i, 0]
                 + R[s, a, 1] * marker_off[i, 1]
                 + R[s, a, 2] * marker_off[i, 2])
            d = targets[i, a] - v
            total += d * d
    return total


# ---------------------------------------------------------------------------
# point / segment / triangle proximity (Ericson, Real-Time Collision
# Detection, ch. 5)
# ---------------------------------------------------------------------------

@njit(cache=True)
def closest_point_on_triangle(p, a, b, c):
    ab = b - a
    ac = c - a
    ap = p - a

    d1 = ab[0] * ap[0] + ab[1] * ap[1] + ab[2] * ap[2]
    d2 = ac[0] * ap[0] + ac[1] * ap[1] + ac[2] * ap[2]
    if d1 <= 0.0 and d2 <= 0.0:
        return a.copy()

    bp = p - b
    d3 = ab[0] * bp[0] + ab[1] * bp[1] + ab[2] * bp[2]
    d4 = ac[0] * bp[0] + ac[1] * bp[1] + ac[2] * bp[2]
    if d3 >= 0.0 and d4 <= d3:
        return b.copy()

    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        v = d1 / (d1 - d3)
        return a + v * ab

    cp = p - c
    d5 = ab[0] * cp[0] + ab[1] * cp[1] + ab[2] * cp[2]
    d6 = ac[0] * cp[0] + ac[1] * cp[1] + ac[2] * cp[2]
    if d6 >= 0.0 and d5 <= d6:
        return c.copy()

    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        w = d2 / (d2 - d6)
        return a + w * ac

    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return b + w * (c - b)

    denom = 1.0 / (va + vb + vc)
    v = vb * denom
    w = vc * denom
    return a + ab * v + ac * w


@njit(cache=True)
def _dist2(u, v):
    d0 = u[0] - v[0]
    d1 = u[1] - v[1]
    d2 = u[2] - v[2]
    return d0 * d0 + d1 * d1 + d2 * d2


@njit(cache=True)
def segment_segment_closest(p1, q1, p2, q2):
    """Closest points between segments [p1,q1] and [p2,q2]."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = d1[0] * d1[0] + d1[1] * d1[1] + d1[2] * d1[2]
    e = d2[0] * d2[0] + d2[1] * d2[1] + d2[2] * d2[2]
    f = d2[0] * r[0] + d2[1] * r[1] + d2[2] * r[2]

    if a <= _EPS and e <= _EPS:
        return p1.copy(), p2.copy()
    if a <= _EPS:
        t = min(max(f / e, 0.0), 1.0)
        return p1.copy(), p2 + t * d2
    c = d1[0] * r[0] + d1[1] * r[1] + d1[2] * r[2]
    if e <= _EPS:
        s = min(max(-c / a, 0.0), 1.0)
        return p1 + s * d1, p2.copy()

    b = d1[0] * d2[0] + d1[1] * d2[1] + d1[2] * d2[2]
    denom = a * e - b * b
    if denom > _EPS:
        s = min(max((b * f - c * e) / denom, 0.0), 1.0)
    else:
        s = 0.0
    t = (b * s + f) / e
    if t < 0.0:
        t = 0.0
        s = min(max(-c / a, 0.0), 1.0)
    elif t > 1.0:
        t = 1.0
        s = min(max((b - c) / a, 0.0), 1.0)
    return p1 + s * d1, p2 + t * d2


@njit(cache=True)
def _segment_pierces_triangle(p, q, a, b, c):
    """Proper crossing of the segment through the triangle interior.

    Returns (hit, point). Coplanar and touching configurations are left to
    the edge/vertex candidates, which already yield distance 0 there.
    """
    x = np.zeros(3)
    n0 = ((b[1] - a[1]) * (c[2] - a[2]) - (b[2] - a[2]) * (c[1] - a[1]))
    n1 = ((b[2] - a[2]) * (c[0] - a[0]) - (b[0] - a[0]) * (c[2] - a[2]))
    n2 = ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    dp = n0 * (p[0] - a[0]) + n1 * (p[1] - a[1]) + n2 * (p[2] - a[2])
    dq = n0 * (q[0] - a[0]) + n1 * (q[1] - a[1]) + n2 * (q[2] - a[2])
    if dp * dq >= 0.0:
        return False, x
    t = dp / (dp - dq)
    x[0] = p[0] + t * (q[0] - p[0])
    x[1] = p[1] + t * (q[1] - p[1])
    x[2] = p[2] + t * (q[2] - p[2])
    # barycentric inside test
    v0x, v0y, v0z = c[0] - a[0], c[1] - a[1], c[2] - a[2]
    v1x, v1y, v1z = b[0] - a[0], b[1] - a[1], b[2] - a[2]
    v2x, v2y, v2z = x[0] - a[0], x[1] - a[1], x[2] - a[2]
    dot00 = v0x * v0x + v0y * v0y + v0z * v0z
    dot01 = v0x * v1x + v0y * v1y + v0z * v1z
    dot02 = v0x * v2x + v0y * v2y + v0z * v2z
    dot11 = v1x * v1x + v1y * v1y + v1z * v1z
    dot12 = v1x * v2x + v1y * v2y + v1z * v2z
    denom = dot00 * dot11 - dot01 * dot01
    if denom <= _EPS:
        return False, x
    inv = 1.0 / denom
    u = (dot11 * dot02 - dot01 * dot12) * inv
    v = (dot00 * dot12 - dot01 * dot02) * inv
    hit = u >= 0.0 and v >= 0.0 and (u + v) <= 1.0
    return hit, x


@njit(cache=True)
def triangle_triangle_closest(A, B):
    """Closest points between two triangles (3x3 vertex arrays).

    Minimum over the 9 edge-edge and 6 vertex-face candidates; a proper
    edge-through-face crossing forces distance 0.
    """
    best = np.inf
    pa = np.zeros(3)
    pb = np.zeros(3)

    for i in range(3):
        # vertex of A against face B
        cp = closest_point_on_triangle(A[i], B[0], B[1], B[2])
        d = _dist2(A[i], cp)
        if d < best:
            best = d
            pa = A[i].copy()
            pb = cp
        # vertex of B against face A
        cp = closest_point_on_triangle(B[i], A[0], A[1], A[2])
        d = _dist2(B[i], cp)
        if d < best:
            best = d
            pa = cp
            pb = B[i].copy()

    for i in range(3):
        a0 = A[i]
        a1 = A[(i + 1) % 3]
        for j in range(3):
            b0 = B[j]
            b1 = B[(j + 1) % 3]
            c1, c2 = segment_segment_closest(a0, a1, b0, b1)
            d = _dist2(c1, c2)
            if d < best:
                best = d
                pa = c1
                pb = c2

    if best > 0.0:
        for i in range(3):
            hit, x = _segment_pierces_triangle(A[i], A[(i + 1) % 3], B[0], B[1], B[2])
            if hit:
                return 0.0, x.copy(), x
        for j in range(3):
            hit, x = _segment_pierces_triangle(B[j], B[(j + 1) % 3], A[0], A[1], A[2])
            if hit:
                return 0.0, x.copy(), x
    return best, pa, pb


@njit(cache=True)
def mesh_pair_closest(tris_a, tris_b, pairs, lower_bounds, best_d2, best_pa, best_pb):
    """Scan candidate triangle pairs in ascending lower-bound order.

    `best_d2`/`best_pa`/`best_pb` seed the search (closest vertex pair);
    a pair whose lower bound cannot beat the best so far ends the scan.
    """
    d2 = best_d2
    pa = best_pa.copy()
    pb = best_pb.copy()
    for k in range(pairs.shape[0]):
        lb = lower_bounds[k]
        if lb * lb >= d2:
            break
        i = pairs[k, 0]
        j = pairs[k, 1]
        cand, ca, cb = triangle_triangle_closest(tris_a[i], tris_b[j])
        if cand < d2:
            d2 = cand
            pa = ca
            pb = cb
            if d2 <= 0.0:
                break
    return d2, pa, pb
