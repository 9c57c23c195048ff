"""Piecewise-linear functions on the plane.

Two representations are supported:

* :class:`SectorFanPH` -- positively homogeneous (degree 1) function that is
  linear on each angular sector of a fan of rays from the origin;
* :class:`TriangulatedPWL` -- continuous function linear on each triangle of
  a conforming triangulation of a convex polygon.

Both expose their interior kinks ("dihedral edges") through
:func:`enumerate_edges`; a kink is convex when the gradient jump, read from
the left cell to the right cell, points along the edge normal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import (
    DegenerateTriangle,
    NonConforming,
    OutOfDomain,
    PWLError,
    SectorTooWide,
    SingularSector,
)
from .geometry import Polygon, convex_hull_2d

TWO_PI = 2.0 * np.pi
EPS_CONVEX = 1e-9
SINGULAR_SIN = 1e-12


# --------------------------------------------------------------------------
# sector fans


@dataclass(frozen=True, eq=False)
class SectorFanPH:
    """Fan of ``m`` rays at ``angles`` (strictly increasing, one turn).

    Sector ``i`` lies between ray ``i`` and ray ``i + 1`` (mod ``m``) and
    carries the linear function with gradient ``sector_gradients[i]``.
    """

    angles: np.ndarray
    ray_values: np.ndarray
    sector_gradients: np.ndarray

    @property
    def m(self) -> int:
        return len(self.angles)

    @property
    def rays(self) -> np.ndarray:
        return np.column_stack([np.cos(self.angles), np.sin(self.angles)])

    @property
    def closed_angles(self) -> np.ndarray:
        return np.append(self.angles, self.angles[0] + TWO_PI)

    @property
    def sector_widths(self) -> np.ndarray:
        return np.diff(self.closed_angles)

    def __call__(self, x) -> np.ndarray:
        return evaluate(self, x)


def _normalize_angles(angles, m_values: int) -> np.ndarray:
    a = np.asarray(angles, dtype=float).ravel()
    if len(a) == m_values + 1:
        if abs(a[-1] - a[0] - TWO_PI) > 1e-9:
            raise PWLError("closing angle must equal the first angle plus 2*pi")
        a = a[:-1]
    if len(a) != m_values:
        raise PWLError(f"got {len(a)} angles for {m_values} ray values")
    if np.any(np.diff(a) <= 0):
        raise PWLError("angles must be strictly increasing")
    if a[-1] - a[0] >= TWO_PI:
        raise PWLError("angles must span less than one full turn")
    return a


def build_sector_fan(phi_samples, angles) -> SectorFanPH:
    """Fan interpolating ``phi_samples`` on the rays at ``angles``.

    ``angles`` may list the ``m`` rays, or ``m + 1`` entries ending with the
    first angle plus ``2*pi``.
    """
    v = np.asarray(phi_samples, dtype=float).ravel()
    m = len(v)
    if m < 3:
        raise PWLError("a fan needs at least 3 rays")
    t = _normalize_angles(angles, m)
    t_next = np.append(t[1:], t[0] + TWO_PI)
    width = t_next - t
    if np.any(width >= np.pi):
        i = int(np.argmax(width >= np.pi))
        raise SectorTooWide(f"sector {i} spans {width[i]:.6g} >= pi")
    det = np.sin(width)
    if np.any(det < SINGULAR_SIN):
        raise SingularSector("adjacent rays are nearly parallel")
    v_next = np.roll(v, -1)
    gx = (v * np.sin(t_next) - v_next * np.sin(t)) / det
    gy = (v_next * np.cos(t) - v * np.cos(t_next)) / det
    return SectorFanPH(t, v.copy(), np.column_stack([gx, gy]))


def uniform_angles(m: int, t0: float = 0.0) -> np.ndarray:
    return t0 + TWO_PI * np.arange(m) / m


def fan_from_function(f, m: int, t0: float = 0.0) -> SectorFanPH:
    """Fan through ``m`` equally spaced rays sampling ``f`` on the unit circle."""
    t = uniform_angles(m, t0)
    u = np.column_stack([np.cos(t), np.sin(t)])
    return build_sector_fan(np.asarray(f(u), dtype=float), t)


def _fan_sector_index(fan: SectorFanPH, theta: np.ndarray) -> np.ndarray:
    rel = np.mod(theta - fan.angles[0], TWO_PI)
    idx = np.searchsorted(fan.angles - fan.angles[0], rel, side="right") - 1
    return np.clip(idx, 0, fan.m - 1)


def _evaluate_fan(fan: SectorFanPH, x: np.ndarray) -> np.ndarray:
    theta = np.arctan2(x[..., 1], x[..., 0])
    g = fan.sector_gradients[_fan_sector_index(fan, theta)]
    return (g * x).sum(-1)


def fan_gradient_at(fan: SectorFanPH, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    theta = np.arctan2(x[..., 1], x[..., 0])
    return fan.sector_gradients[_fan_sector_index(fan, theta)]


# --------------------------------------------------------------------------
# triangulations


class _TriangleLocator:
    """Uniform bucket grid over triangle bounding boxes."""

    def __init__(self, vertices: np.ndarray, triangles: np.ndarray, tol: float = 1e-10):
        self.tol = tol
        a = vertices[triangles[:, 0]]
        b = vertices[triangles[:, 1]]
        c = vertices[triangles[:, 2]]
        self.a = a
        e1, e2 = b - a, c - a
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        # rows of the inverse of [e1 e2]
        self.inv = np.stack(
            [np.column_stack([e2[:, 1], -e2[:, 0]]), np.column_stack([-e1[:, 1], e1[:, 0]])],
            axis=1,
        ) / det[:, None, None]
        lo = vertices.min(axis=0)
        hi = vertices.max(axis=0)
        span = np.maximum(hi - lo, 1e-300)
        self.lo, self.span = lo, span
        k = len(triangles)
        self.g = g = max(1, int(np.sqrt(k)))
        tlo = np.minimum(np.minimum(a, b), c)
        thi = np.maximum(np.maximum(a, b), c)
        pad = 1e-9 * span
        i0 = self._cell(tlo - pad)
        i1 = self._cell(thi + pad)
        buckets: list[list[int]] = [[] for _ in range(g * g)]
        for t in range(k):
            for ix in range(i0[t, 0], i1[t, 0] + 1):
                for iy in range(i0[t, 1], i1[t, 1] + 1):
                    buckets[ix * g + iy].append(t)
        self.buckets = [np.array(bk, dtype=np.int64) for bk in buckets]

    def _cell(self, p: np.ndarray) -> np.ndarray:
        c = np.floor((p - self.lo) / self.span * self.g).astype(np.int64)
        return np.clip(c, 0, self.g - 1)

    def find(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        out = np.full(len(pts), -1, dtype=np.int64)
        if len(pts) == 0:
            return out
        inside = np.all(
            (pts >= self.lo - 1e-9 * self.span) & (pts <= self.lo + self.span * (1 + 1e-9)), axis=1
        )
        cells = self._cell(pts)
        cid = cells[:, 0] * self.g + cells[:, 1]
        cid[~inside] = -1
        order = np.argsort(cid, kind="stable")
        sorted_cid = cid[order]
        starts = np.flatnonzero(np.r_[True, sorted_cid[1:] != sorted_cid[:-1]])
        ends = np.r_[starts[1:], len(order)]
        for s, e in zip(starts, ends):
            c = sorted_cid[s]
            if c < 0:
                continue
            cand = self.buckets[c]
            if len(cand) == 0:
                continue
            q = pts[order[s:e]]
            rel = q[:, None, :] - self.a[cand][None, :, :]
            lam = np.einsum("cij,qcj->qci", self.inv[cand], rel)
            l0 = 1.0 - lam[..., 0] - lam[..., 1]
            ok = (lam[..., 0] >= -self.tol) & (lam[..., 1] >= -self.tol) & (l0 >= -self.tol)
            has = ok.any(axis=1)
            first = np.argmax(ok, axis=1)
            res = np.where(has, cand[first], -1)
            out[order[s:e]] = res
        return out


@dataclass(frozen=True, eq=False)
class TriangulatedPWL:
    """Continuous piecewise-linear function on a triangulated convex polygon.

    Triangles are stored counterclockwise.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    values: np.ndarray
    gradients: np.ndarray
    domain_hull: Polygon
    _locator: list = field(default_factory=list, repr=False)

    @property
    def locator(self) -> _TriangleLocator:
        if not self._locator:
            self._locator.append(_TriangleLocator(self.vertices, self.triangles))
        return self._locator[0]

    @property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    @property
    def areas(self) -> np.ndarray:
        return _signed_areas(self.vertices, self.triangles)

    def __call__(self, x) -> np.ndarray:
        return evaluate(self, x)

    def with_values(self, values, gradients=None) -> "TriangulatedPWL":
        """Same mesh, new vertex values (the mesh is not re-validated)."""
        values = np.asarray(values, dtype=float)
        if gradients is None:
            gradients = _triangle_gradients(self.vertices, self.triangles, values)
        return TriangulatedPWL(
            self.vertices, self.triangles, values, gradients, self.domain_hull, self._locator
        )


def _signed_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    e1, e2 = b - a, c - a
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def _triangle_gradients(vertices, triangles, values) -> np.ndarray:
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    e1, e2 = b - a, c - a
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    d1 = values[triangles[:, 1]] - values[triangles[:, 0]]
    d2 = values[triangles[:, 2]] - values[triangles[:, 0]]
    gx = (d1 * e2[:, 1] - d2 * e1[:, 1]) / det
    gy = (d2 * e1[:, 0] - d1 * e2[:, 0]) / det
    return np.column_stack([gx, gy])


def _edge_pairs(triangles: np.ndarray, n_vertices: int):
    """Return (unique sorted edges, triangle ids per edge occurrence, counts)."""
    k = len(triangles)
    e = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    tid = np.tile(np.arange(k), 3)
    e.sort(axis=1)
    key = e[:, 0].astype(np.int64) * n_vertices + e[:, 1]
    order = np.argsort(key, kind="stable")
    skey = key[order]
    starts = np.flatnonzero(np.r_[True, skey[1:] != skey[:-1]])
    counts = np.diff(np.r_[starts, len(skey)])
    return e[order], tid[order], starts, counts


def build_triangulated(
    vertices, triangles, values, check: bool = True, gradients=None, area_eps: float = 1e-14
) -> TriangulatedPWL:
    """Linear interpolant of ``values`` on each triangle.

    With ``check`` the triangulation is verified to be conforming and to
    tile the convex hull of its vertices; triangles smaller than
    ``area_eps * diameter**2`` are rejected.  ``gradients`` may supply
    exactly known cell gradients (used for refined meshes with slivers).
    """
    V = np.asarray(vertices, dtype=float).reshape(-1, 2)
    T = np.array(triangles, dtype=np.int64).reshape(-1, 3)
    vals = np.asarray(values, dtype=float).ravel()
    if len(vals) != len(V):
        raise PWLError(f"{len(vals)} values for {len(V)} vertices")
    if len(T) == 0:
        raise PWLError("no triangles")
    if T.min() < 0 or T.max() >= len(V):
        raise NonConforming("triangle refers to a missing vertex")
    area = _signed_areas(V, T)
    flip = area < 0
    T[flip] = T[flip][:, [0, 2, 1]]
    area = np.abs(area)
    hull = convex_hull_2d(V)
    if check:
        diam = max(hull.diameter, 1e-300)
        if np.any(area <= area_eps * diam * diam):
            i = int(np.argmin(area))
            raise DegenerateTriangle(f"triangle {i} has area {area[i]:.3g}")
        _check_conforming(V, T, area, hull)
    if gradients is None:
        gradients = _triangle_gradients(V, T, vals)
    else:
        gradients = np.asarray(gradients, dtype=float).reshape(-1, 2)
    return TriangulatedPWL(V, T, vals, gradients, hull)


def _check_conforming(V, T, area, hull: Polygon) -> None:
    e, _, starts, counts = _edge_pairs(T, len(V))
    if np.any(counts > 2):
        raise NonConforming("an edge is shared by more than two triangles")
    if len(np.unique(T)) != len(V):
        raise NonConforming("some vertices are not used by any triangle")
    if abs(area.sum() - hull.area) > 1e-9 * max(hull.area, 1e-300):
        raise NonConforming(
            f"triangles cover area {area.sum():.12g}, convex hull has {hull.area:.12g}"
        )
    bnd = e[starts[counts == 1]]
    mid = 0.5 * (V[bnd[:, 0]] + V[bnd[:, 1]])
    if len(mid) and np.any(hull.boundary_distance(mid) > 1e-9 * max(hull.diameter, 1.0)):
        raise NonConforming("a boundary edge lies inside the domain (hanging vertex or hole)")


def _evaluate_mesh(f: TriangulatedPWL, x: np.ndarray) -> np.ndarray:
    pts = x.reshape(-1, 2)
    tri = f.locator.find(pts)
    if np.any(tri < 0):
        bad = pts[int(np.argmax(tri < 0))]
        raise OutOfDomain(f"point {bad.tolist()} is outside the triangulated domain")
    a = f.vertices[f.triangles[tri, 0]]
    val = f.values[f.triangles[tri, 0]] + ((pts - a) * f.gradients[tri]).sum(1)
    return val.reshape(x.shape[:-1])


def locate(f: TriangulatedPWL, x) -> np.ndarray:
    """Index of the containing triangle (lowest index on ties), -1 outside."""
    return f.locator.find(np.asarray(x, dtype=float))


PWL = Union[TriangulatedPWL, SectorFanPH]


def evaluate(f: PWL, x):
    """Value of ``f`` at ``x`` (a point or an array of points, last axis 2)."""
    arr = np.asarray(x, dtype=float)
    if arr.shape[-1] != 2:
        raise PWLError("points must have 2 coordinates")
    if isinstance(f, SectorFanPH):
        out = _evaluate_fan(f, arr)
    elif isinstance(f, TriangulatedPWL):
        out = _evaluate_mesh(f, arr)
    else:
        raise TypeError(f"cannot evaluate {type(f).__name__}")
    return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# dihedral edges


KIND_NAMES = ("concave", "flat", "convex")


@dataclass(frozen=True)
class DihedralEdge:
    kind: str
    grad_left: np.ndarray
    grad_right: np.ndarray
    jump: np.ndarray
    anchor: np.ndarray
    edge_dir: np.ndarray
    jump_norm: float
    index: int = 0
    strength: float = 0.0
    homogeneous: bool = False
    length: float = float("inf")

    @property
    def normal(self) -> np.ndarray:
        """In-plane unit normal pointing from the left cell to the right cell."""
        return np.array([self.edge_dir[1], -self.edge_dir[0]])


@dataclass(frozen=True, eq=False)
class EdgeTable:
    """Columnar form of all interior edges of a PWL function.

    ``strength`` is ``(jump, normal)``; ``kind`` holds -1/0/+1 for
    concave/flat/convex.
    """

    left: np.ndarray
    right: np.ndarray
    anchor: np.ndarray
    direction: np.ndarray
    jump: np.ndarray
    strength: np.ndarray
    eps: np.ndarray
    kind: np.ndarray
    length: np.ndarray
    endpoints: np.ndarray | None
    homogeneous: bool
    grad_left: np.ndarray
    grad_right: np.ndarray

    def __len__(self) -> int:
        return len(self.left)

    @property
    def normal(self) -> np.ndarray:
        return np.column_stack([self.direction[:, 1], -self.direction[:, 0]])

    @property
    def jump_norm(self) -> np.ndarray:
        return np.linalg.norm(self.jump, axis=1)

    def edge(self, i: int) -> DihedralEdge:
        return DihedralEdge(
            kind=KIND_NAMES[int(self.kind[i]) + 1],
            grad_left=self.grad_left[i].copy(),
            grad_right=self.grad_right[i].copy(),
            jump=self.jump[i].copy(),
            anchor=self.anchor[i].copy(),
            edge_dir=self.direction[i].copy(),
            jump_norm=float(np.linalg.norm(self.jump[i])),
            index=i,
            strength=float(self.strength[i]),
            homogeneous=self.homogeneous,
            length=float(self.length[i]),
        )


def _classify(jump, normal, g_left, g_right):
    strength = (jump * normal).sum(1)
    gmax = np.maximum(np.linalg.norm(g_left, axis=1), np.linalg.norm(g_right, axis=1))
    eps = EPS_CONVEX * (1.0 + gmax)
    kind = np.where(strength > eps, 1, np.where(strength < -eps, -1, 0))
    return strength, eps, kind


def edge_table(f: PWL) -> EdgeTable:
    if isinstance(f, SectorFanPH):
        m = f.m
        d = f.rays
        left = np.arange(m)
        right = (left - 1) % m
        gl = f.sector_gradients[left]
        gr = f.sector_gradients[right]
        jump = gr - gl
        normal = np.column_stack([d[:, 1], -d[:, 0]])
        s, eps, kind = _classify(jump, normal, gl, gr)
        return EdgeTable(
            left, right, np.zeros((m, 2)), d, jump, s, eps, kind,
            np.full(m, np.inf), None, True, gl, gr,
        )
    if isinstance(f, TriangulatedPWL):
        V, T = f.vertices, f.triangles
        e, tid, starts, counts = _edge_pairs(T, len(V))
        inner = starts[counts == 2]
        ends = e[inner]
        t0 = tid[inner]
        t1 = tid[inner + 1]
        pa, pb = V[ends[:, 0]], V[ends[:, 1]]
        vec = pb - pa
        length = np.linalg.norm(vec, axis=1)
        d = vec / length[:, None]
        c0 = f.centroids[t0] - pa
        t0_left = d[:, 0] * c0[:, 1] - d[:, 1] * c0[:, 0] > 0
        left = np.where(t0_left, t0, t1)
        right = np.where(t0_left, t1, t0)
        gl, gr = f.gradients[left], f.gradients[right]
        jump = gr - gl
        normal = np.column_stack([d[:, 1], -d[:, 0]])
        s, eps, kind = _classify(jump, normal, gl, gr)
        return EdgeTable(
            left, right, 0.5 * (pa + pb), d, jump, s, eps, kind, length, ends, False, gl, gr
        )
    raise TypeError(f"no edges for {type(f).__name__}")


def enumerate_edges(f: PWL) -> list[DihedralEdge]:
    """One entry per interior edge (mesh) or per ray (fan)."""
    tab = edge_table(f)
    return [tab.edge(i) for i in range(len(tab))]


def lipschitz_constant(f: PWL) -> float:
    """Largest cell gradient norm."""
    g = f.sector_gradients if isinstance(f, SectorFanPH) else f.gradients
    return float(np.linalg.norm(g, axis=1).max())
