"""Planar and spatial primitives: naturally parametrized polylines, convex
hulls and polygon measurements.

Every "smooth" curve is represented by a polyline; quantities defined as
suprema over partitions are then evaluated on refinement sequences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    BadRadius,
    DuplicatePoints,
    EmptyInput,
    GeometryError,
    NoIntersection,
    TooFewPoints,
)

GEOM_TOL = 1e-12

CLASS_TAGS = ("circle", "convex_boundary", "sphere_section", "coord_convex", "free")


@dataclass(frozen=True, eq=False)
class Curve:
    """Polyline in R^n together with its cumulative arc length.

    ``points`` includes the closing point for closed curves, so that
    ``points[0]`` and ``points[-1]`` coincide and ``cum_len[-1]`` is the
    full perimeter.
    """

    points: np.ndarray
    cum_len: np.ndarray
    closed: bool
    class_tag: str = "free"

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def length(self) -> float:
        return float(self.cum_len[-1])

    def sample(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(t, points)`` for ``n`` points uniform in arc length.

        Closed curves omit the endpoint ``t = T`` (it repeats ``t = 0``).
        """
        T = self.length
        if self.closed:
            t = np.arange(n) * (T / n)
        else:
            t = np.linspace(0.0, T, n)
        pts = np.column_stack(
            [np.interp(t, self.cum_len, self.points[:, k]) for k in range(self.dim)]
        )
        return t, pts

    def with_tag(self, tag: str) -> "Curve":
        if tag not in CLASS_TAGS:
            raise GeometryError(f"unknown curve class {tag!r}")
        return Curve(self.points, self.cum_len, self.closed, tag)


@dataclass(frozen=True, eq=False)
class Polygon:
    """Convex polygon with counterclockwise vertices.

    One vertex is a point and two vertices a segment; the perimeter of a
    degenerate polygon is that of its closed traversal.
    """

    vertices: np.ndarray

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def perimeter(self) -> float:
        v = self.vertices
        if len(v) < 2:
            return 0.0
        return float(np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1).sum())

    @property
    def area(self) -> float:
        v = self.vertices
        if len(v) < 3:
            return 0.0
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))

    @property
    def centroid(self) -> np.ndarray:
        v = self.vertices
        if len(v) < 3:
            return v.mean(axis=0)
        x, y = v[:, 0], v[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        a = cross.sum() / 2.0
        cx = ((x + xn) * cross).sum() / (6.0 * a)
        cy = ((y + yn) * cross).sum() / (6.0 * a)
        return np.array([cx, cy])

    @property
    def diameter(self) -> float:
        v = self.vertices
        if len(v) < 2:
            return 0.0
        d = v[:, None, :] - v[None, :, :]
        return float(np.sqrt((d**2).sum(-1)).max())

    def support(self, directions: np.ndarray) -> np.ndarray:
        """Support function ``h(u) = max_v (v, u)`` for each row of ``directions``."""
        directions = np.atleast_2d(directions)
        return (directions @ self.vertices.T).max(axis=1)

    def contains(self, points: np.ndarray, tol: float = GEOM_TOL) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        v = self.vertices
        if len(v) == 1:
            return np.linalg.norm(pts - v[0], axis=1) <= tol
        if len(v) == 2:
            a, b = v
            d = b - a
            L = np.linalg.norm(d)
            s = np.clip((pts - a) @ d / L**2, 0.0, 1.0)
            return np.linalg.norm(pts - (a + s[:, None] * d), axis=1) <= tol
        e = np.roll(v, -1, axis=0) - v
        rel = pts[:, None, :] - v[None, :, :]
        cross = e[None, :, 0] * rel[..., 1] - e[None, :, 1] * rel[..., 0]
        lens = np.linalg.norm(e, axis=1)
        return np.all(cross >= -tol * lens[None, :], axis=1)

    def boundary_distance(self, points: np.ndarray) -> np.ndarray:
        """Unsigned distance from each point to the polygon boundary."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        v = self.vertices
        if len(v) == 1:
            return np.linalg.norm(pts - v[0], axis=1)
        a = v
        b = np.roll(v, -1, axis=0)
        d = b - a
        L2 = (d**2).sum(1)
        s = ((pts[:, None, :] - a[None]) * d[None]).sum(-1) / L2[None]
        s = np.clip(s, 0.0, 1.0)
        proj = a[None] + s[..., None] * d[None]
        return np.linalg.norm(pts[:, None, :] - proj, axis=-1).min(axis=1)

    def to_curve(self) -> Curve:
        v = self.vertices
        c = natural_parametrize(v, closed=True)
        return c.with_tag("convex_boundary") if len(v) >= 3 else c


def _cumulative(points: np.ndarray) -> np.ndarray:
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


def natural_parametrize(points: Sequence, closed: bool = False) -> Curve:
    """Parametrize a polyline by arc length.

    For ``closed=True`` the first point is appended if the input does not
    already end on it.
    """
    pts = np.array(points, dtype=float)
    if pts.ndim != 2 or len(pts) < 2:
        raise TooFewPoints("a curve needs at least 2 points")
    if closed and np.linalg.norm(pts[0] - pts[-1]) > GEOM_TOL:
        pts = np.vstack([pts, pts[:1]])
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    if np.any(seg <= GEOM_TOL):
        i = int(np.argmax(seg <= GEOM_TOL))
        raise DuplicatePoints(f"points {i} and {i + 1} coincide")
    distinct = len(pts) - 1 if closed else len(pts)
    if distinct < 2:
        raise TooFewPoints("a curve needs at least 2 distinct points")
    return Curve(pts, np.concatenate([[0.0], np.cumsum(seg)]), bool(closed), "free")


def circle_curve(radius: float = 1.0, samples: int = 360, center=(0.0, 0.0)) -> Curve:
    """Regular ``samples``-gon inscribed in the circle, starting at angle 0."""
    if not radius > 0:
        raise BadRadius(f"radius must be positive, got {radius}")
    if samples < 3:
        raise TooFewPoints("a circle needs at least 3 samples")
    t = 2.0 * np.pi * np.arange(samples) / samples
    pts = np.column_stack([np.cos(t), np.sin(t)]) * radius + np.asarray(center, float)
    pts = np.vstack([pts, pts[:1]])
    return Curve(pts, _cumulative(pts), True, "circle")


def _orthonormal_complement(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    k = int(np.argmin(np.abs(normal)))
    e = np.zeros(3)
    e[k] = 1.0
    u = np.cross(normal, e)
    u /= np.linalg.norm(u)
    v = np.cross(normal, u)
    return u, v


def sphere_section_curve(plane_normal, plane_offset: float, samples: int = 360) -> Curve:
    """Circle cut from the unit sphere by the plane ``(p, normal) = offset``."""
    n = np.asarray(plane_normal, dtype=float)
    nn = np.linalg.norm(n)
    if n.shape != (3,) or nn == 0:
        raise GeometryError("plane normal must be a nonzero 3-vector")
    n = n / nn
    if abs(plane_offset) >= 1.0:
        raise NoIntersection(f"|offset| = {abs(plane_offset)} does not cut the unit sphere")
    if samples < 3:
        raise TooFewPoints("a section needs at least 3 samples")
    rho = np.sqrt(1.0 - plane_offset**2)
    u, v = _orthonormal_complement(n)
    t = 2.0 * np.pi * np.arange(samples) / samples
    pts = plane_offset * n + rho * (np.outer(np.cos(t), u) + np.outer(np.sin(t), v))
    pts = np.vstack([pts, pts[:1]])
    return Curve(pts, _cumulative(pts), True, "sphere_section")


def is_convex_loop(points: np.ndarray, tol: float = 1e-12) -> bool:
    """True if the closed planar polyline bounds a convex set, traversed once.

    Degenerate loops (all points collinear) count as convex.
    """
    p = np.asarray(points, dtype=float)
    if len(p) > 1 and np.linalg.norm(p[0] - p[-1]) <= GEOM_TOL:
        p = p[:-1]
    if len(p) < 3:
        return True
    e = np.roll(p, -1, axis=0) - p
    keep = np.linalg.norm(e, axis=1) > GEOM_TOL
    e = e[keep]
    if len(e) < 3:
        return True
    en = np.roll(e, -1, axis=0)
    cross = e[:, 0] * en[:, 1] - e[:, 1] * en[:, 0]
    scale = np.linalg.norm(e, axis=1) * np.linalg.norm(en, axis=1)
    cross = np.where(np.abs(cross) <= tol * scale, 0.0, cross)
    if np.all(cross == 0):
        return True
    if np.any(cross > 0) and np.any(cross < 0):
        return False
    # one sign: also require total turning of one full revolution
    ang = np.arctan2(cross, (e * en).sum(1))
    return bool(abs(abs(ang.sum()) - 2.0 * np.pi) < 1e-6)


def convex_polygon_curve(vertices: Sequence) -> Curve:
    """Closed curve tagged ``convex_boundary``; raises if not convex."""
    c = natural_parametrize(vertices, closed=True)
    if not is_convex_loop(c.points):
        raise GeometryError("vertices do not form a convex polygon boundary")
    return c.with_tag("convex_boundary")


def projections_convex(curve: Curve) -> bool:
    """Whether the projection onto every coordinate plane is a convex loop."""
    d = curve.dim
    for i in range(d):
        for j in range(i + 1, d):
            if not is_convex_loop(curve.points[:, [i, j]], tol=1e-9):
                return False
    return True


def coord_convex_curve(points: Sequence) -> Curve:
    c = natural_parametrize(points, closed=True)
    if not projections_convex(c):
        raise GeometryError("some coordinate projection is not a convex loop")
    return c.with_tag("coord_convex")


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull_2d(points: Sequence) -> Polygon:
    """Andrew's monotone chain; collinear boundary points are dropped."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise EmptyInput("convex hull of an empty set")
    scale = max(1.0, float(np.abs(pts).max()))
    tol = GEOM_TOL * scale * scale
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    P = [tuple(p) for p in pts[order]]
    uniq = [P[0]]
    for p in P[1:]:
        if abs(p[0] - uniq[-1][0]) > GEOM_TOL * scale or abs(p[1] - uniq[-1][1]) > GEOM_TOL * scale:
            uniq.append(p)
    if len(uniq) == 1:
        return Polygon(np.array(uniq))

    def chain(seq):
        out: list = []
        for p in seq:
            while len(out) >= 2 and _cross(out[-2], out[-1], p) <= tol:
                out.pop()
            out.append(p)
        return out

    lower = chain(uniq)
    upper = chain(reversed(uniq))
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 2:
        hull = [uniq[0], uniq[-1]]
    return Polygon(np.array(hull))


def hausdorff_convex(
    p: Polygon, q: Polygon | None = None, *, disk: tuple[np.ndarray, float] | None = None,
    n_dirs: int = 8192,
) -> float:
    """Hausdorff distance between convex sets via ``sup_u |h_P(u) - h_Q(u)|``.

    ``q`` may be replaced by a disk ``(center, radius)``.
    """
    t = 2.0 * np.pi * np.arange(n_dirs) / n_dirs
    dirs = [np.column_stack([np.cos(t), np.sin(t)])]
    for poly in (p, q):
        if poly is not None and len(poly) >= 2:
            e = np.roll(poly.vertices, -1, axis=0) - poly.vertices
            nrm = np.column_stack([e[:, 1], -e[:, 0]])
            nrm /= np.linalg.norm(nrm, axis=1, keepdims=True)
            dirs.append(nrm)
            dirs.append(-nrm)
    if disk is not None:
        c = np.asarray(disk[0], float)
        rel = p.vertices - c
        r = np.linalg.norm(rel, axis=1, keepdims=True)
        ok = r[:, 0] > 0
        dirs.append(rel[ok] / r[ok])
    u = np.vstack(dirs)
    hp = p.support(u)
    if disk is not None:
        hq = u @ np.asarray(disk[0], float) + disk[1]
    else:
        hq = q.support(u)
    return float(np.abs(hp - hq).max())
