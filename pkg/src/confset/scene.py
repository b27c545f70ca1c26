"""Sites, scenes and exact distance queries.

A *scene* is a finite family of pairwise disjoint closed sites in R^2 or R^3.
Every site is a union of primitives with closed-form Euclidean distance:
points, finite point sets, hyperplanes, spheres, closed balls, segments and
axis-aligned boxes.  The taxicab (L1) metric is supported for points, point
sets and boxes only.

The module also implements clipping of a scene by a closed ball.  Clipped
primitives keep exact distance formulas (disk, spherical cap, sub-segment,
ball lens); the box/ball intersection is handled by a monotone 1-D root in
the projection mixing weight, exact to ~1e-12.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .parallel import map_rows

__all__ = [
    "SceneError",
    "Point",
    "PointSet",
    "Hyperplane",
    "Sphere",
    "Ball",
    "Segment",
    "Box",
    "Site",
    "Scene",
    "ClippedScene",
    "SupportPart",
    "parse_scene",
    "load_scene",
    "scene_to_dict",
    "scene_dumps",
    "make_scene",
    "clip_scene",
    "nearest_point",
    "site_pair_distance",
]

UNIT_NORM_TOL = 1e-12
DISJOINT_TOL = 1e-9
#: tolerance for deciding that a point lies on the support sphere
SUPPORT_TOL = 1e-9

_L1_KINDS = {"point", "point_set", "box"}


class SceneError(ValueError):
    """Invalid scene input: bad JSON, bad parameters, or overlapping sites."""


def _arr(x, dim: Optional[int] = None, name: str = "value") -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim != 1:
        raise SceneError(f"{name} must be a flat coordinate list, got shape {a.shape}")
    if dim is not None and a.shape[0] != dim:
        raise SceneError(f"{name} has {a.shape[0]} coordinates, expected {dim}")
    if not np.all(np.isfinite(a)):
        raise SceneError(f"{name} contains non-finite coordinates")
    return a


def _pts2d(x, dim: int, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim != 2 or a.shape[1] != dim or a.shape[0] == 0:
        raise SceneError(f"{name} must be a non-empty (n, {dim}) point list")
    if not np.all(np.isfinite(a)):
        raise SceneError(f"{name} contains non-finite coordinates")
    return a


def _norm(v: np.ndarray, axis=-1) -> np.ndarray:
    return np.sqrt(np.sum(v * v, axis=axis))


def _perp2(v: np.ndarray) -> np.ndarray:
    return np.array([-v[1], v[0]])


def _unit_basis(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal pair spanning the plane orthogonal to axis (3D)."""
    k = int(np.argmin(np.abs(axis)))
    e = np.zeros(3)
    e[k] = 1.0
    u = np.cross(axis, e)
    u /= _norm(u)
    v = np.cross(axis, u)
    v /= _norm(v)
    return u, v


# ---------------------------------------------------------------------------
# distance helpers shared by primitives and their clipped forms


def _segment_distance(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = b - a
    L2 = float(d @ d)
    if L2 == 0.0:
        return _norm(pts - a)
    t = np.clip((pts - a) @ d / L2, 0.0, 1.0)
    return _norm(pts - (a + t[:, None] * d))


def _segment_nearest(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = b - a
    L2 = float(d @ d)
    if L2 == 0.0:
        return np.broadcast_to(a, pts.shape).copy()
    t = np.clip((pts - a) @ d / L2, 0.0, 1.0)
    return a + t[:, None] * d


def _circle_distance(pts, center, axis, radius):
    """Distance to a circle in 3-space (center, unit normal ``axis``)."""
    v = pts - center
    vn = v @ axis
    vt2 = np.maximum(np.sum(v * v, axis=-1) - vn * vn, 0.0)
    vt = np.sqrt(vt2)
    return np.sqrt(vn * vn + (vt - radius) ** 2)


def _disk_distance(pts, center, axis, radius):
    """Distance to a closed flat disk in 3-space."""
    v = pts - center
    vn = v @ axis
    vt2 = np.maximum(np.sum(v * v, axis=-1) - vn * vn, 0.0)
    vt = np.sqrt(vt2)
    out = np.sqrt(vn * vn + np.maximum(vt - radius, 0.0) ** 2)
    return out


def _cap_distance(pts, center, r, axis, cos_half, dim):
    """Distance to the spherical cap {y : |y-center| = r, (y-center).axis >= r*cos_half}."""
    w = pts - center
    wn = _norm(w)
    with np.errstate(invalid="ignore", divide="ignore"):
        cosb = np.where(wn > 0, (w @ axis) / np.where(wn > 0, wn, 1.0), 1.0)
    on_cap = cosb >= cos_half
    d_sph = np.abs(wn - r)
    # rim of the cap
    sin_half = math.sqrt(max(1.0 - cos_half * cos_half, 0.0))
    q = center + r * cos_half * axis
    rho = r * sin_half
    if dim == 3:
        d_rim = _circle_distance(pts, q, axis, rho)
    else:
        t = _perp2(axis)
        d_rim = np.minimum(_norm(pts - (q + rho * t)), _norm(pts - (q - rho * t)))
    return np.where(on_cap, d_sph, d_rim)


def _box_nearest(pts, lo, hi):
    return np.clip(pts, lo, hi)


def _box_ball_distance(pts, lo, hi, c, R):
    """Exact distance to box ∩ closed ball via the KKT mixing-weight root.

    The projection of p onto the intersection is clip((1-mu) p + mu c) for the
    smallest mu in [0, 1] putting the clipped point inside the ball (mu = 0 if
    already feasible).  |clip((1-mu) p + mu c) - c| is monotone in mu, so a
    bisection gives the projection to ~1e-12.
    """
    pb = np.clip(pts, lo, hi)
    feas = _norm(pb - c) <= R
    out = _norm(pts - pb)
    todo = ~feas
    if np.any(todo):
        p = pts[todo]
        mu_lo = np.zeros(p.shape[0])
        mu_hi = np.ones(p.shape[0])
        for _ in range(80):
            mu = 0.5 * (mu_lo + mu_hi)
            y = np.clip(p + mu[:, None] * (c - p), lo, hi)
            inside = _norm(y - c) <= R
            mu_hi = np.where(inside, mu, mu_hi)
            mu_lo = np.where(inside, mu_lo, mu)
        y = np.clip(p + mu_hi[:, None] * (c - p), lo, hi)
        out[todo] = _norm(p - y)
    return out


# ---------------------------------------------------------------------------
# support-set descriptions (site ∩ sphere around a base point)


@dataclass(frozen=True, eq=False)
class SupportPart:
    """One analytic or sampled piece of a site's trace on a sphere.

    kind is "points" (finite set of unit directions), "circle" (directions at
    a fixed angle from ``axis``) or "samples" (dense sampled directions).
    All directions are unit vectors seen from the sphere center.
    """

    kind: str
    dirs: Optional[np.ndarray] = None
    axis: Optional[np.ndarray] = None
    angle: Optional[float] = None  # angular radius of a circle part

    def sample_dirs(self, n_circle: int = 512) -> np.ndarray:
        if self.kind in ("points", "samples"):
            return self.dirs
        u, v = _unit_basis(self.axis)
        t = np.linspace(0.0, 2.0 * math.pi, n_circle, endpoint=False)
        ca, sa = math.cos(self.angle), math.sin(self.angle)
        return ca * self.axis + sa * (np.cos(t)[:, None] * u + np.sin(t)[:, None] * v)

    def geodesic_to(self, U: np.ndarray) -> np.ndarray:
        """Geodesic (angular) distance from unit directions U to this part."""
        if self.kind == "circle":
            ang = np.arccos(np.clip(U @ self.axis, -1.0, 1.0))
            return np.abs(ang - self.angle)
        d = U @ self.dirs.T
        return np.arccos(np.clip(d.max(axis=1), -1.0, 1.0))


def _fib_sphere(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    th = math.pi * (1.0 + math.sqrt(5.0)) * i
    return np.column_stack([r * np.cos(th), r * np.sin(th), z])


def _cap_samples(axis: np.ndarray, cos_half: float, n: int = 2500) -> np.ndarray:
    """Deterministic spiral sample of a spherical cap (unit directions)."""
    u, v = _unit_basis(axis)
    i = np.arange(n) + 0.5
    cz = 1.0 - (1.0 - cos_half) * i / n  # cos(angle) from 1 down to cos_half
    sz = np.sqrt(np.maximum(1.0 - cz * cz, 0.0))
    th = math.pi * (1.0 + math.sqrt(5.0)) * i
    return (cz[:, None] * axis
            + sz[:, None] * (np.cos(th)[:, None] * u + np.sin(th)[:, None] * v))


def _arc_samples(axis: np.ndarray, cos_half: float, n: int = 256) -> np.ndarray:
    """Sample of the arc {u in S^1 : u.axis >= cos_half}."""
    half = math.acos(max(min(cos_half, 1.0), -1.0))
    base = math.atan2(axis[1], axis[0])
    t = base + np.linspace(-half, half, n)
    return np.column_stack([np.cos(t), np.sin(t)])


# ---------------------------------------------------------------------------
# primitives


@dataclass(frozen=True, eq=False)
class Point:
    coords: np.ndarray
    kind = "point"

    def __post_init__(self):
        object.__setattr__(self, "coords", np.asarray(self.coords, dtype=float))

    @property
    def dim(self):
        return self.coords.shape[0]

    def distance(self, pts):
        return _norm(pts - self.coords)

    def distance_l1(self, pts):
        return np.sum(np.abs(pts - self.coords), axis=-1)

    def nearest(self, pts):
        return np.broadcast_to(self.coords, pts.shape).copy()

    def clip(self, x0, R):
        if _norm(self.coords - x0) <= R:
            return _ClippedPoints(self.coords[None, :])
        return None

    def support_on_sphere(self, x0, r0, tol=SUPPORT_TOL):
        if abs(_norm(self.coords - x0) - r0) <= tol:
            return [SupportPart("points", dirs=(self.coords - x0)[None, :] / r0)]
        return []


@dataclass(frozen=True, eq=False)
class PointSet:
    points: np.ndarray
    kind = "point_set"

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float))

    @property
    def dim(self):
        return self.points.shape[1]

    def distance(self, pts):
        d = pts[:, None, :] - self.points[None, :, :]
        return np.sqrt(np.sum(d * d, axis=-1)).min(axis=1)

    def distance_l1(self, pts):
        d = np.abs(pts[:, None, :] - self.points[None, :, :]).sum(axis=-1)
        return d.min(axis=1)

    def nearest(self, pts):
        d = pts[:, None, :] - self.points[None, :, :]
        dist = np.sqrt(np.sum(d * d, axis=-1))
        # exact ties resolved toward the lexicographically smallest member
        order = np.lexsort(self.points.T[::-1])
        dist = dist[:, order]
        idx = order[np.argmin(dist, axis=1)]
        return self.points[idx]

    def clip(self, x0, R):
        keep = _norm(self.points - x0) <= R
        if not np.any(keep):
            return None
        return _ClippedPoints(self.points[keep])

    def support_on_sphere(self, x0, r0, tol=SUPPORT_TOL):
        keep = np.abs(_norm(self.points - x0) - r0) <= tol
        if not np.any(keep):
            return []
        return [SupportPart("points", dirs=(self.points[keep] - x0) / r0)]


@dataclass(frozen=True, eq=False)
class Hyperplane:
    normal: np.ndarray
    offset: float
    kind = "hyperplane"

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        if abs(_norm(n) - 1.0) > UNIT_NORM_TOL:
            raise SceneError(f"hyperplane normal must be unit length, |n| = {_norm(n):.17g}")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self):
        return self.normal.shape[0]

    def _signed(self, pts):
        return pts @ self.normal - self.offset

    def distance(self, pts):
        return np.abs(self._signed(pts))

    def nearest(self, pts):
        return pts - self._signed(pts)[:, None] * self.normal

    def clip(self, x0, R):
        h = float(x0 @ self.normal - self.offset)
        if abs(h) > R:
            return None
        foot = x0 - h * self.normal
        rho = math.sqrt(max(R * R - h * h, 0.0))
        if self.dim == 3:
            return _Disk(foot, self.normal, rho)
        t = _perp2(self.normal)
        return _SubSegment(foot - rho * t, foot + rho * t)

    def support_on_sphere(self, x0, r0, tol=SUPPORT_TOL):
        h = float(x0 @ self.normal - self.offset)
        if abs(h) > r0 + tol:
            return []
        foot = x0 - h * self.normal
        if abs(abs(h) - r0) <= tol:  # tangency
            return [SupportPart("points", dirs=(foot - x0)[None, :] / r0)]
        rho = math.sqrt(max(r0 * r0 - h * h, 0.0))
        axis = -np.sign(h) * self.normal if h != 0 else self.normal
        if self.dim == 3:
            ang = math.acos(max(min(abs(h) / r0, 1.0), -1.0))
            return [SupportPart("circle", axis=axis, angle=ang)]
        t = _perp2(self.normal)
        pts = np.stack([foot + rho * t, foot - rho * t])
        return [SupportPart("points", dirs=(pts - x0) / r0)]


@dataclass(frozen=True, eq=False)
class Sphere:
    center: np.ndarray
    radius: float
    kind = "sphere"

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius <= 0:
            raise SceneError("sphere radius must be positive")

    @property
    def dim(self):
        return self.center.shape[0]

    def distance(self, pts):
        return np.abs(_norm(pts - self.center) - self.radius)

    def nearest(self, pts):
        v = pts - self.center
        n = _norm(v)
        out = np.empty_like(pts)
        deg = n == 0
        safe = ~deg
        out[safe] = self.center + self.radius * v[safe] / n[safe, None]
        if np.any(deg):
            # center query: lexicographically smallest point of the sphere
            p = self.center.copy()
            p[0] -= self.radius
            out[deg] = p
        return out

    def clip(self, x0, R):
        d0 = _norm(self.center - x0)
        if abs(d0 - self.radius) > R:
            return None
        if d0 + self.radius <= R:  # whole sphere inside the ball
            return _SphereCap(self.center, self.radius, None, -1.0, self.dim)
        axis = (x0 - self.center) / d0
        t = (d0 * d0 + self.radius ** 2 - R * R) / (2.0 * d0)
        cos_half = max(min(t / self.radius, 1.0), -1.0)
        return _SphereCap(self.center, self.radius, axis, cos_half, self.dim)

    def support_on_sphere(self, x0, r0, tol=SUPPORT_TOL):
        d0 = _norm(self.center - x0)
        if d0 <= tol:  # concentric
            if abs(self.radius - r0) <= tol:
                ax = np.zeros(self.dim)
                ax[-1] = 1.0
                return [SupportPart("circle", axis=ax, angle=math.pi / 2)] if self.dim == 3 \
                    else [SupportPart("samples", dirs=_arc_samples(np.array([1.0, 0.0]), -1.0, 512))]
            return []
        if d0 > self.radius + r0 + tol or d0 < abs(self.radius - r0) - tol:
            return []
        u = (self.center - x0) / d0
        t = (d0 * d0 + r0 * r0 - self.radius ** 2) / (2.0 * d0)
        c = max(min(t / r0, 1.0), -1.0)
        if abs(abs(c) - 1.0) <= 1e-14:  # tangency
            return [SupportPart("points", dirs=(np.sign(c) * u)[None, :])]
        if self.dim == 3:
            return [SupportPart("circle", axis=u, angle=math.acos(c))]
        rho = math.sqrt(max(1.0 - c * c, 0.0))
        tt = _perp2(u)
        return [SupportPart("points", dirs=np.stack([c * u + rho * tt, c * u - rho * tt]))]


@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float
    kind = "ball"

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius <= 0:
            raise SceneError("ball radius must be positive")

    @property
    def dim(self):
        return self.center.shape[0]

    def distance(self, pts):
        return np.maximum(_norm(pts - self.center) - self.radius, 0.0)

    def nearest(self, pts):
        v = pts - self.center
        n = _norm(v)
        scale = np.where(n > self.radius, self.radius / np.where(n > 0, n, 1.0), 1.0)
        return self.center + scale[:, None] * v

    def clip(self, x0, R):
        d0 = _norm(self.center - x0)
        if d0 > R + self.radius:
            return None
        return _BallLens(self.center, self.radius, x0, R, self.dim)

    def support_on_sphere(self, x0, r0, tol=SUPPORT_TOL):
        d0 = _norm(self.center - x0)
        if d0 > self.radius + r0 + tol or r0 > d0 + self.radius + tol:
            return []
        if d0 + r0 <= self.radius:  # sampling sphere inside the ball
            if self.dim == 3:
                return [SupportPart("samples", dirs=_fib_sphere(2500))]
            return [SupportPart("samples", dirs=_arc_samples(np.array([1.0, 0.0]), -1.0, 512))]
        u = (self.center - x0) / d0
        cos_half = (r0 * r0 + d0 * d0 - self.radius ** 2) / (2.0 * r0 * d0)
        cos_half = max(min(cos_half, 1.0), -1.0)
        if self.dim == 3:
            return [SupportPart("samples", dirs=_cap_samples(u, cos_half, 2500))]
        return [SupportPart("samples", dirs=_arc_samples(u, cos_half, 256))]


@dataclass(frozen=True, eq=False)
class Segment:
    a: np.ndarray
    b: np.ndarray
    kind = "segment"

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if np.allclose(a, b, atol=0.0):
            raise SceneError("segment endpoints must be distinct")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def dim(self):
        return self.a.shape[0]

    def distance(self, pts):
        return _segment_distance(pts, self.a, self.b)

    def nearest(self, pts):
        return _segment_nearest(pts, self.a, self.b)

    def _ball_interval(self, x0, R):
        d = self.b - self.a
        w = self.a - x0
        A = float(d @ d)
        B = 2.0 * float(w @ d)
        C = float(w @ w) - R * R
        disc = B * B - 4 * A * C
        if disc < 0:
            return None
        s = math.sqrt(disc)
        t0 = max((-B - s) / (2 * A), 0.0)
        t1 = min((-B + s) / (2 * A), 1.0)
        if t0 > t1:
            return None
        return t0, t1

    def clip(self, x0, R):
        iv = self._ball_interval(x0, R)
        if iv is None:
            return None
        t0, t1 = iv
        d = self.b - self.a
        if t1 - t0 == 0.0:
            return _ClippedPoints((self.a + t0 * d)[None, :])
        return _SubSegment(self.a + t0 * d, self.a + t1 * d)

    def support_on_sphere(self, x0, r0, tol=SUPPORT_TOL):
        d = self.b - self.a
        w = self.a - x0
        A = float(d @ d)
        B = 2.0 * float(w @ d)
        C = float(w @ w) - r0 * r0
        disc = B * B - 4 * A * C
        if disc < -tol:
            return []
        disc = max(disc, 0.0)
        s = math.sqrt(disc)
        ts = [(-B - s) / (2 * A), (-B + s) / (2 * A)]
        pts = [self.a + t * d for t in ts if -tol <= t <= 1.0 + tol]
        if not pts:
            return []
        dirs = np.asarray(pts)
        dirs = (dirs - x0) / r0
        # dedupe the double root at tangency
        if dirs.shape[0] == 2 and _norm(dirs[0] - dirs[1]) < 1e-12:
            dirs = dirs[:1]
        return [SupportPart("points", dirs=dirs)]


@dataclass(frozen=True, eq=False)
class Box:
    lo: np.ndarray
    hi: np.ndarray
    kind = "box"

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if not np.all(lo < hi):
            raise SceneError("box needs min < max on every axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return self.lo.shape[0]

    def distance(self, pts):
        return _norm(pts - np.clip(pts, self.lo, self.hi))

    def distance_l1(self, pts):
        gap = np.maximum(self.lo - pts, 0.0) + np.maximum(pts - self.hi, 0.0)
        return gap.sum(axis=-1)

    def nearest(self, pts):
        return _box_nearest(pts, self.lo, self.hi)

    def corners(self):
        dim = self.dim
        out = np.empty((2 ** dim, dim))
        for m in range(2 ** dim):
            for k in range(dim):
                out[m, k] = self.hi[k] if (m >> k) & 1 else self.lo[k]
        return out

    def clip(self, x0, R):
        if _norm(np.clip(x0, self.lo, self.hi) - x0) > R:
            return None
        return _ClippedBox(self.lo, self.hi, x0, R)

    def support_on_sphere(self, x0, r0, tol=SUPPORT_TOL):
        # sampled: dense sphere sampling filtered by exact box membership
        if self.dim == 3:
            cand = x0 + r0 * _fib_sphere(40000)
        else:
            t = np.linspace(0.0, 2 * math.pi, 8192, endpoint=False)
            cand = x0 + r0 * np.column_stack([np.cos(t), np.sin(t)])
        keep = np.all((cand >= self.lo - 1e-12) & (cand <= self.hi + 1e-12), axis=1)
        if not np.any(keep):
            return []
        return [SupportPart("samples", dirs=(cand[keep] - x0) / r0)]


_PRIM_TYPES = {
    "point": Point,
    "point_set": PointSet,
    "hyperplane": Hyperplane,
    "sphere": Sphere,
    "ball": Ball,
    "segment": Segment,
    "box": Box,
}


# ---------------------------------------------------------------------------
# clipped primitive forms (site ∩ closed ball), each with exact distance


@dataclass(frozen=True, eq=False)
class _ClippedPoints:
    points: np.ndarray

    def distance(self, pts):
        d = pts[:, None, :] - self.points[None, :, :]
        return np.sqrt(np.sum(d * d, axis=-1)).min(axis=1)


@dataclass(frozen=True, eq=False)
class _Disk:
    center: np.ndarray
    axis: np.ndarray
    radius: float

    def distance(self, pts):
        return _disk_distance(pts, self.center, self.axis, self.radius)


@dataclass(frozen=True, eq=False)
class _SubSegment:
    a: np.ndarray
    b: np.ndarray

    def distance(self, pts):
        return _segment_distance(pts, self.a, self.b)


@dataclass(frozen=True, eq=False)
class _SphereCap:
    center: np.ndarray
    radius: float
    axis: Optional[np.ndarray]  # None means the full sphere survived the clip
    cos_half: float
    dim: int

    def distance(self, pts):
        if self.axis is None:
            return np.abs(_norm(pts - self.center) - self.radius)
        return _cap_distance(pts, self.center, self.radius, self.axis, self.cos_half, self.dim)


@dataclass(frozen=True, eq=False)
class _BallLens:
    """Intersection of two closed balls (convex)."""

    c1: np.ndarray
    r1: float
    c2: np.ndarray
    r2: float
    dim: int

    def distance(self, pts):
        out = np.empty(pts.shape[0])
        # projection onto ball 1, accepted where it lands in ball 2
        v1 = pts - self.c1
        n1 = _norm(v1)
        s1 = np.where(n1 > self.r1, self.r1 / np.where(n1 > 0, n1, 1.0), 1.0)
        p1 = self.c1 + s1[:, None] * v1
        ok1 = _norm(p1 - self.c2) <= self.r2
        v2 = pts - self.c2
        n2 = _norm(v2)
        s2 = np.where(n2 > self.r2, self.r2 / np.where(n2 > 0, n2, 1.0), 1.0)
        p2 = self.c2 + s2[:, None] * v2
        ok2 = _norm(p2 - self.c1) <= self.r1
        out[:] = np.inf
        out[ok1] = _norm((pts - p1)[ok1])
        m = ~ok1 & ok2
        out[m] = _norm((pts - p2)[m])
        rest = ~(ok1 | ok2)
        if np.any(rest):
            # projection lies on the radical rim circle
            d = _norm(self.c2 - self.c1)
            u = (self.c2 - self.c1) / d
            t = (d * d + self.r1 ** 2 - self.r2 ** 2) / (2 * d)
            q = self.c1 + t * u
            rho = math.sqrt(max(self.r1 ** 2 - t * t, 0.0))
            if self.dim == 3:
                out[rest] = _circle_distance(pts[rest], q, u, rho)
            else:
                tt = _perp2(u)
                out[rest] = np.minimum(_norm(pts[rest] - (q + rho * tt)),
                                       _norm(pts[rest] - (q - rho * tt)))
        return out


@dataclass(frozen=True, eq=False)
class _ClippedBox:
    lo: np.ndarray
    hi: np.ndarray
    c: np.ndarray
    R: float

    def distance(self, pts):
        return _box_ball_distance(pts, self.lo, self.hi, self.c, self.R)


# ---------------------------------------------------------------------------
# sites and scenes


@dataclass(frozen=True, eq=False)
class Site:
    """A closed site: non-empty union of primitives, queried as one set."""

    id: str
    primitives: tuple

    def __post_init__(self):
        if not self.primitives:
            raise SceneError(f"site {self.id!r} has no primitives")
        object.__setattr__(self, "primitives", tuple(self.primitives))

    @property
    def dim(self):
        return self.primitives[0].dim

    def distance(self, pts, metric: str = "euclidean"):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if metric == "euclidean":
            return np.min([p.distance(pts) for p in self.primitives], axis=0)
        if metric == "taxicab":
            vals = []
            for p in self.primitives:
                if p.kind not in _L1_KINDS:
                    raise SceneError(
                        f"taxicab metric not supported for primitive type {p.kind!r} "
                        f"(site {self.id!r}); only point/point_set/box")
                vals.append(p.distance_l1(pts))
            return np.min(vals, axis=0)
        raise SceneError(f"unknown metric {metric!r}")

    def nearest(self, pts):
        """Euclidean foot points; ties break to the first primitive declared,
        then to lexicographically smallest coordinates inside a primitive."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        dists = np.stack([p.distance(pts) for p in self.primitives])
        best = dists.min(axis=0)
        out = np.empty_like(pts)
        assigned = np.zeros(pts.shape[0], dtype=bool)
        for k, p in enumerate(self.primitives):
            m = ~assigned & (dists[k] == best)
            if np.any(m):
                out[m] = p.nearest(pts[m])
                assigned[m] = True
        return out


@dataclass(frozen=True, eq=False)
class Scene:
    """Pairwise disjoint closed sites in R^dimension under a fixed metric."""

    dimension: int
    sites: tuple
    metric: str = "euclidean"

    @property
    def k(self):
        return len(self.sites)

    def distance_matrix(self, pts, workers: int = 1) -> np.ndarray:
        """(N, k) matrix of site distances under the scene metric."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))

        def kernel(block):
            return np.column_stack([s.distance(block, self.metric) for s in self.sites])

        return map_rows(kernel, pts, workers=workers)

    def site_ids(self):
        return [s.id for s in self.sites]


def make_scene(dimension: int, sites: Sequence[Site], metric: str = "euclidean",
               check: bool = True) -> Scene:
    if dimension not in (2, 3):
        raise SceneError(f"dimension must be 2 or 3, got {dimension}")
    if metric not in ("euclidean", "taxicab"):
        raise SceneError(f"metric must be 'euclidean' or 'taxicab', got {metric!r}")
    sites = tuple(sites)
    if len(sites) < 2:
        raise SceneError("a scene needs at least two sites")
    ids = [s.id for s in sites]
    if len(set(ids)) != len(ids):
        raise SceneError("site ids must be unique")
    for s in sites:
        for p in s.primitives:
            if p.dim != dimension:
                raise SceneError(
                    f"site {s.id!r}: primitive {p.kind} has dimension {p.dim}, "
                    f"scene declares {dimension}")
    scene = Scene(dimension, sites, metric)
    if check:
        _check_disjoint(scene)
    return scene


def _check_disjoint(scene: Scene, tol: float = DISJOINT_TOL):
    for i in range(scene.k):
        for j in range(i + 1, scene.k):
            d = site_pair_distance(scene.sites[i], scene.sites[j])
            if d <= tol:
                raise SceneError(
                    f"sites {scene.sites[i].id!r} and {scene.sites[j].id!r} are not "
                    f"disjoint (distance {d:.3e} <= {tol:.1e})")


# ---------------------------------------------------------------------------
# exact pairwise distances between primitives (disjointness validation)


def _dist_from_convex_hullpts(prim, pts_of_other, radius_shrink=0.0):
    d = prim.distance(pts_of_other)
    return float(np.min(d))


def _plane_plane(p: Hyperplane, q: Hyperplane) -> float:
    c = float(p.normal @ q.normal)
    if abs(abs(c) - 1.0) > 1e-9:
        return 0.0
    return abs(p.offset - c * q.offset)


def _sphere_minmax(center, radius, dmin, dmax) -> float:
    if dmin >= radius:
        return dmin - radius
    if dmax <= radius:
        return radius - dmax
    return 0.0


def _seg_seg(a1, b1, a2, b2) -> float:
    d1 = b1 - a1
    d2 = b2 - a2
    r = a1 - a2
    A = float(d1 @ d1)
    e = float(d2 @ d2)
    f = float(d2 @ r)
    c = float(d1 @ r)
    b = float(d1 @ d2)
    den = A * e - b * b
    s = 0.0 if den == 0 else min(max((b * f - c * e) / den, 0.0), 1.0)
    t = (b * s + f) / e if e > 0 else 0.0
    if t < 0.0:
        t = 0.0
        s = min(max(-c / A, 0.0), 1.0) if A > 0 else 0.0
    elif t > 1.0:
        t = 1.0
        s = min(max((b - c) / A, 0.0), 1.0) if A > 0 else 0.0
    p = a1 + s * d1
    q = a2 + t * d2
    return float(_norm(p - q))


def _seg_box(seg: Segment, box: Box) -> float:
    # distance along the segment to a box is convex in the parameter
    lo_t, hi_t = 0.0, 1.0
    d = seg.b - seg.a

    def g(t):
        p = seg.a + t * d
        return float(_norm(p - np.clip(p, box.lo, box.hi)))

    for _ in range(200):
        m1 = lo_t + (hi_t - lo_t) / 3
        m2 = hi_t - (hi_t - lo_t) / 3
        if g(m1) <= g(m2):
            hi_t = m2
        else:
            lo_t = m1
    return g(0.5 * (lo_t + hi_t))


def _primitive_pair_distance(p, q) -> float:
    """Exact Euclidean distance between two primitives."""
    # order so the simpler handler sees a canonical pair
    order = {"point": 0, "point_set": 1, "ball": 2, "hyperplane": 3,
             "sphere": 4, "segment": 5, "box": 6}
    if order[p.kind] > order[q.kind]:
        p, q = q, p
    if p.kind == "point":
        return float(q.distance(p.coords[None, :])[0])
    if p.kind == "point_set":
        if q.kind == "point_set" and p.points.shape[0] * q.points.shape[0] > 4_000_000:
            from scipy.spatial import cKDTree
            d, _ = cKDTree(q.points).query(p.points, k=1)
            return float(np.min(d))
        return float(np.min(q.distance(p.points)))
    if p.kind == "ball":
        if q.kind == "ball":
            return max(0.0, float(_norm(p.center - q.center)) - p.radius - q.radius)
        return max(0.0, float(q.distance(p.center[None, :])[0]) - p.radius)
    if p.kind == "hyperplane":
        if q.kind == "hyperplane":
            return _plane_plane(p, q)
        if q.kind == "sphere":
            return max(0.0, abs(float(q.center @ p.normal) - p.offset) - q.radius)
        if q.kind == "segment":
            fa = float(p.normal @ q.a) - p.offset
            fb = float(p.normal @ q.b) - p.offset
            return 0.0 if fa * fb <= 0 else min(abs(fa), abs(fb))
        if q.kind == "box":
            vals = q.corners() @ p.normal - p.offset
            return 0.0 if vals.min() <= 0 <= vals.max() else float(np.min(np.abs(vals)))
    if p.kind == "sphere":
        if q.kind == "sphere":
            d = float(_norm(p.center - q.center))
            return max(0.0, abs(d - p.radius) - q.radius, abs(d - q.radius) - p.radius)
        if q.kind == "segment":
            dmin = float(q.distance(p.center[None, :])[0])
            dmax = max(float(_norm(q.a - p.center)), float(_norm(q.b - p.center)))
            return _sphere_minmax(p.center, p.radius, dmin, dmax)
        if q.kind == "box":
            dmin = float(q.distance(p.center[None, :])[0])
            dmax = float(np.max(_norm(q.corners() - p.center)))
            return _sphere_minmax(p.center, p.radius, dmin, dmax)
    if p.kind == "segment":
        if q.kind == "segment":
            return _seg_seg(p.a, p.b, q.a, q.b)
        if q.kind == "box":
            return _seg_box(p, q)
    if p.kind == "box" and q.kind == "box":
        gap = np.maximum(p.lo - q.hi, 0.0) + np.maximum(q.lo - p.hi, 0.0)
        return float(_norm(gap))
    raise SceneError(f"no distance rule for primitive pair ({p.kind}, {q.kind})")


def site_pair_distance(s1: Site, s2: Site) -> float:
    """Exact distance between two sites (min over primitive pairs)."""
    return min(_primitive_pair_distance(p, q)
               for p in s1.primitives for q in s2.primitives)


def nearest_point(site: Site, x) -> np.ndarray:
    """Euclidean nearest point of a site to x (deterministic tie-breaks)."""
    x = _arr(x, None, "query point")
    return site.nearest(x[None, :])[0]


# ---------------------------------------------------------------------------
# clipping by a closed ball


@dataclass(frozen=True, eq=False)
class ClippedScene:
    """Scene intersected with a closed ball; distances stay exact.

    Sites whose clip is empty report +inf distance and are listed in
    ``empty_sites``.
    """

    base: Scene
    x0: np.ndarray
    radius: float
    clipped: tuple  # tuple (per site) of tuples of clipped primitives
    empty_sites: tuple

    @property
    def dimension(self):
        return self.base.dimension

    @property
    def metric(self):
        return "euclidean"

    @property
    def k(self):
        return self.base.k

    def site_ids(self):
        return self.base.site_ids()

    def site_distance(self, i: int, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        parts = self.clipped[i]
        if not parts:
            return np.full(pts.shape[0], np.inf)
        return np.min([c.distance(pts) for c in parts], axis=0)

    def distance_matrix(self, pts, workers: int = 1) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))

        def kernel(block):
            return np.column_stack([self.site_distance(i, block) for i in range(self.k)])

        return map_rows(kernel, pts, workers=workers)


def clip_scene(scene: Scene, x0, radius: float) -> ClippedScene:
    """Intersect every site with the closed ball B(x0, radius)."""
    if scene.metric != "euclidean":
        raise SceneError("clipping is defined for the Euclidean metric only")
    x0 = _arr(x0, scene.dimension, "clip center")
    radius = float(radius)
    if radius <= 0:
        raise SceneError("clip radius must be positive")
    clipped = []
    empty = []
    for s in scene.sites:
        parts = [c for c in (p.clip(x0, radius) for p in s.primitives) if c is not None]
        clipped.append(tuple(parts))
        if not parts:
            empty.append(s.id)
    return ClippedScene(scene, x0, radius, tuple(clipped), tuple(empty))


# ---------------------------------------------------------------------------
# JSON scene format


def _build_primitive(entry: dict, dim: int, site_id: str, idx: int):
    if not isinstance(entry, dict) or "type" not in entry:
        raise SceneError(f"site {site_id!r}: primitive #{idx} needs a 'type' field")
    kind = entry["type"]
    if kind not in _PRIM_TYPES:
        raise SceneError(
            f"site {site_id!r}: primitive #{idx} has unknown type {kind!r}; "
            f"expected one of {sorted(_PRIM_TYPES)}")
    where = f"site {site_id!r}, primitive #{idx} ({kind})"
    try:
        if kind == "point":
            return Point(_arr(entry["coords"], dim, f"{where}: coords"))
        if kind == "point_set":
            return PointSet(_pts2d(entry["points"], dim, f"{where}: points"))
        if kind == "hyperplane":
            return Hyperplane(_arr(entry["normal"], dim, f"{where}: normal"),
                              float(entry["offset"]))
        if kind == "sphere":
            return Sphere(_arr(entry["center"], dim, f"{where}: center"),
                          float(entry["radius"]))
        if kind == "ball":
            return Ball(_arr(entry["center"], dim, f"{where}: center"),
                        float(entry["radius"]))
        if kind == "segment":
            return Segment(_arr(entry["a"], dim, f"{where}: a"),
                           _arr(entry["b"], dim, f"{where}: b"))
        if kind == "box":
            return Box(_arr(entry["min"], dim, f"{where}: min"),
                       _arr(entry["max"], dim, f"{where}: max"))
    except KeyError as e:
        raise SceneError(f"{where}: missing parameter {e.args[0]!r}") from None
    except (TypeError, ValueError) as e:
        if isinstance(e, SceneError):
            raise
        raise SceneError(f"{where}: {e}") from None


def parse_scene(text: str) -> Scene:
    """Parse and validate a scene from its JSON text."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SceneError(
            f"scene JSON syntax error at line {e.lineno}, column {e.colno}: {e.msg}"
        ) from None
    if not isinstance(doc, dict):
        raise SceneError("scene JSON must be an object")
    for key in ("dimension", "sites"):
        if key not in doc:
            raise SceneError(f"scene JSON missing required field {key!r}")
    dim = doc["dimension"]
    if dim not in (2, 3):
        raise SceneError(f"dimension must be 2 or 3, got {dim!r}")
    metric = doc.get("metric", "euclidean")
    sites = []
    if not isinstance(doc["sites"], list) or len(doc["sites"]) < 2:
        raise SceneError("scene needs a list of at least two sites")
    for si, sd in enumerate(doc["sites"]):
        if not isinstance(sd, dict):
            raise SceneError(f"sites[{si}] must be an object")
        sid = sd.get("id", f"site{si}")
        prims = sd.get("primitives")
        if not isinstance(prims, list) or not prims:
            raise SceneError(f"site {sid!r} needs a non-empty 'primitives' list")
        sites.append(Site(str(sid), tuple(
            _build_primitive(p, dim, sid, pi) for pi, p in enumerate(prims))))
    return make_scene(dim, sites, metric)


def load_scene(path) -> Scene:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scene(fh.read())


def _primitive_to_dict(p) -> dict:
    if p.kind == "point":
        return {"type": "point", "coords": p.coords.tolist()}
    if p.kind == "point_set":
        return {"type": "point_set", "points": p.points.tolist()}
    if p.kind == "hyperplane":
        return {"type": "hyperplane", "normal": p.normal.tolist(), "offset": p.offset}
    if p.kind == "sphere":
        return {"type": "sphere", "center": p.center.tolist(), "radius": p.radius}
    if p.kind == "ball":
        return {"type": "ball", "center": p.center.tolist(), "radius": p.radius}
    if p.kind == "segment":
        return {"type": "segment", "a": p.a.tolist(), "b": p.b.tolist()}
    if p.kind == "box":
        return {"type": "box", "min": p.lo.tolist(), "max": p.hi.tolist()}
    raise SceneError(f"cannot serialize primitive {p.kind!r}")


def scene_to_dict(scene: Scene) -> dict:
    return {
        "dimension": scene.dimension,
        "metric": scene.metric,
        "sites": [
            {"id": s.id, "primitives": [_primitive_to_dict(p) for p in s.primitives]}
            for s in scene.sites
        ],
    }


def scene_dumps(scene: Scene) -> str:
    return json.dumps(scene_to_dict(scene), indent=2, sort_keys=True) + "\n"
