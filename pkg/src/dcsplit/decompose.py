"""Aleksandrov decomposition of planar piecewise-linear functions.

Every convex kink of ``f`` is extended along its whole supporting line to a
ridge ``max(0, (jump, x - anchor))``.  The sum of the ridges, ``f1``, is
convex and so is ``f2 = f1 - f``: where ``f`` is convex the same ridge
appears in ``f1``, and where ``f`` is concave ``-f`` is locally convex.

Kinks lying on one line share a single ridge whose jump is the largest
convex jump found on that line; a full-line ridge already supplies the
kink wherever the line meets another edge of ``f``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import ConvexityCertificateFailed, NotConvexEdge, NotConvexInput
from .geometry import Polygon, convex_hull_2d
from .pwl import (
    TWO_PI,
    DihedralEdge,
    EdgeTable,
    SectorFanPH,
    TriangulatedPWL,
    build_sector_fan,
    build_triangulated,
    edge_table,
    evaluate,
)

log = logging.getLogger(__name__)

ANGLE_TOL = 1e-9
PWL = Union[TriangulatedPWL, SectorFanPH]


@dataclass(frozen=True, eq=False)
class RidgeFunction:
    """``x -> max(0, (jump, x - anchor))``, one extended convex dihedral angle."""

    jump: np.ndarray
    anchor: np.ndarray
    homogeneous: bool = False

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.maximum(0.0, ((x - self.anchor) * self.jump).sum(-1))

    @property
    def kink_direction(self) -> np.ndarray:
        j = self.jump / np.linalg.norm(self.jump)
        return np.array([-j[1], j[0]])


def ridge_from_edge(e: DihedralEdge) -> RidgeFunction:
    if e.kind != "convex":
        raise NotConvexEdge(f"edge {e.index} is {e.kind}, not convex")
    anchor = np.zeros(2) if e.homogeneous else np.asarray(e.anchor, dtype=float)
    return RidgeFunction(np.asarray(e.jump, dtype=float), anchor, e.homogeneous)


@dataclass(frozen=True, eq=False)
class ConvexityReport:
    ok: bool
    worst_jump: float
    witness: int | None

    def __bool__(self) -> bool:
        return self.ok


def verify_convex(f: PWL) -> ConvexityReport:
    """Local convexity of every non-flat kink.

    ``worst_jump`` is the smallest ``(jump, normal)`` over non-flat edges
    (0 when every edge is flat).
    """
    tab = edge_table(f)
    sharp = np.flatnonzero(tab.kind != 0)
    if len(sharp) == 0:
        return ConvexityReport(True, 0.0, None)
    i = sharp[np.argmin(tab.strength[sharp])]
    ok = not np.any(tab.kind == -1)
    return ConvexityReport(ok, float(tab.strength[i]), None if ok else int(i))


@dataclass(frozen=True, eq=False)
class DCPair:
    """``f1 - f2 = base`` with ``f1``, ``f2`` convex.

    ``base`` is the input function carried onto the (possibly refined)
    cells shared by ``f1`` and ``f2``; ``normalization`` is the constant
    already subtracted from both parts.
    """

    f1: PWL
    f2: PWL
    base: PWL
    normalization: float = 0.0
    ridges: tuple = ()
    edge_counts: dict = field(default_factory=dict)

    def __call__(self, x):
        return evaluate(self.f1, x) - evaluate(self.f2, x)


# --------------------------------------------------------------------------
# grouping kinks by supporting line


def _split_sorted(values: np.ndarray, tol: float) -> np.ndarray:
    """Cluster labels for 1-D values (gap > tol starts a new cluster)."""
    order = np.argsort(values, kind="stable")
    gaps = np.diff(values[order]) > tol
    lab_sorted = np.concatenate([[0], np.cumsum(gaps)])
    labels = np.empty(len(values), dtype=np.int64)
    labels[order] = lab_sorted
    return labels


def line_groups(tab: EdgeTable, scale: float = 1.0) -> list[np.ndarray]:
    """Indices of convex edges grouped by supporting line, in edge order."""
    idx = np.flatnonzero(tab.kind == 1)
    if len(idx) == 0:
        return []
    d = tab.direction[idx]
    theta = np.mod(np.arctan2(d[:, 1], d[:, 0]), np.pi)
    wrap = theta > np.pi - ANGLE_TOL
    theta = np.where(wrap, theta - np.pi, theta)
    if tab.homogeneous:
        offset = np.zeros(len(idx))
    else:
        nrm = np.column_stack([-np.sin(theta), np.cos(theta)])
        offset = (tab.anchor[idx] * nrm).sum(1)
    lab_t = _split_sorted(theta, ANGLE_TOL)
    groups: list[np.ndarray] = []
    for lt in np.unique(lab_t):
        sel = np.flatnonzero(lab_t == lt)
        lab_c = _split_sorted(offset[sel], 1e-9 * scale)
        for lc in np.unique(lab_c):
            groups.append(np.sort(idx[sel[lab_c == lc]]))
    groups.sort(key=lambda g: int(g[0]))
    return groups


def collect_ridges(f: PWL) -> tuple[list[RidgeFunction], EdgeTable]:
    """One ridge per line carrying convex kinks, ordered by edge id."""
    tab = edge_table(f)
    scale = 1.0 if isinstance(f, SectorFanPH) else max(f.domain_hull.diameter, 1e-300)
    ridges = []
    for g in line_groups(tab, scale):
        rep = int(g[np.argmax(tab.strength[g])])
        ridges.append(ridge_from_edge(tab.edge(rep)))
    return ridges, tab


def _sum_ridges(ridges: list[RidgeFunction], x: np.ndarray) -> np.ndarray:
    total = np.zeros(x.shape[:-1])
    for r in ridges:
        total = total + r(x)
    return total


# --------------------------------------------------------------------------
# fans


def _merge_angles(base: np.ndarray, extra: np.ndarray) -> np.ndarray:
    t0 = base[0]
    rel = np.mod(np.asarray(extra, dtype=float) - t0, TWO_PI)
    cur = base - t0
    keep = []
    for a in np.sort(rel):
        near = np.min(np.abs(np.r_[cur, keep] - a)) if len(keep) else np.min(np.abs(cur - a))
        near = min(near, abs(TWO_PI - a))
        if near > ANGLE_TOL:
            keep.append(a)
    return t0 + np.sort(np.r_[cur, keep])


def _decompose_fan(f: SectorFanPH):
    ridges, tab = collect_ridges(f)
    extra = []
    for r in ridges:
        k = r.kink_direction
        a = np.arctan2(k[1], k[0])
        extra.extend([a, a + np.pi])
    angles = _merge_angles(f.angles, np.array(extra)) if extra else f.angles
    u = np.column_stack([np.cos(angles), np.sin(angles)])
    base_vals = evaluate(f, u) if len(angles) != f.m else f.ray_values
    base = build_sector_fan(base_vals, angles) if len(angles) != f.m else f
    v1 = _sum_ridges(ridges, u)
    f1 = build_sector_fan(v1, angles)
    f2 = build_sector_fan(v1 - base.ray_values, angles)
    return f1, f2, base, ridges, tab, 0.0


# --------------------------------------------------------------------------
# triangulations


@dataclass(frozen=True, eq=False)
class LineRefinement:
    """Mesh cut along a set of lines.

    ``parent[k]`` is the input triangle containing refined triangle ``k``;
    ``side[k, l]`` is +1/-1 when triangle ``k`` lies on the positive/negative
    side of line ``l`` (sides are exact, never recomputed from coordinates).
    """

    vertices: np.ndarray
    triangles: np.ndarray
    values: np.ndarray
    parent: np.ndarray
    side: np.ndarray


def refine_along_lines(f: TriangulatedPWL, lines) -> LineRefinement:
    """Split every triangle crossed by one of ``lines`` (point, unit normal).

    New vertices on shared edges are created once, so the result stays
    conforming; ``f`` is linear on each old triangle, hence new vertex
    values are exact interpolants.  Vertices within ``1e-10 * diameter`` of
    a line are treated as lying on it.
    """
    V = [p for p in f.vertices]
    vals = list(f.values)
    T = f.triangles.copy()
    parent = np.arange(len(T))
    sides = np.zeros((len(T), len(lines)), dtype=np.int8)
    tol = 1e-10 * max(f.domain_hull.diameter, 1e-300)
    for li, (a, nrm) in enumerate(lines):
        Va = np.asarray(V)
        dist = (Va - a) @ nrm
        side = np.where(dist > tol, 1, np.where(dist < -tol, -1, 0))
        s = side[T]
        smax, smin = s.max(1), s.min(1)
        crossed = (smax == 1) & (smin == -1)
        keep = ~crossed
        sides[keep, li] = np.where(smax[keep] == 1, 1, -1)
        if not crossed.any():
            continue
        cache: dict[tuple[int, int], int] = {}
        pieces, piece_parent, piece_sides = [], [], []
        for k in np.flatnonzero(crossed):
            tri = T[k]
            pos: list[int] = []
            neg: list[int] = []
            for e in range(3):
                i, j = int(tri[e]), int(tri[(e + 1) % 3])
                if side[i] >= 0:
                    pos.append(i)
                if side[i] <= 0:
                    neg.append(i)
                if side[i] * side[j] == -1:
                    key = (min(i, j), max(i, j))
                    if key not in cache:
                        t = dist[i] / (dist[i] - dist[j])
                        V.append(Va[i] + t * (Va[j] - Va[i]))
                        vals.append(vals[i] + t * (vals[j] - vals[i]))
                        cache[key] = len(V) - 1
                    pos.append(cache[key])
                    neg.append(cache[key])
            for poly, sgn in ((pos, 1), (neg, -1)):
                for q in range(1, len(poly) - 1):
                    pieces.append((poly[0], poly[q], poly[q + 1]))
                    piece_parent.append(parent[k])
                    row = sides[k].copy()
                    row[li] = sgn
                    piece_sides.append(row)
        T = np.vstack([T[keep], np.array(pieces, dtype=np.int64)])
        parent = np.concatenate([parent[keep], np.array(piece_parent, dtype=np.int64)])
        sides = np.vstack([sides[keep], np.array(piece_sides, dtype=np.int8)])
    return LineRefinement(np.asarray(V), T, np.asarray(vals), parent, sides)


def _decompose_mesh(f: TriangulatedPWL, normalize_at):
    ridges, tab = collect_ridges(f)
    lines = [(r.anchor, r.jump / np.linalg.norm(r.jump)) for r in ridges]
    if lines:
        ref = refine_along_lines(f, lines)
        base = build_triangulated(
            ref.vertices, ref.triangles, ref.values,
            gradients=f.gradients[ref.parent], area_eps=1e-24,
        )
        # triangles may have been re-oriented, never re-ordered
        jumps = np.array([r.jump for r in ridges])
        g1 = (ref.side == 1).astype(float) @ jumps
    else:
        base = f
        g1 = np.zeros_like(f.gradients)
    v1 = _sum_ridges(ridges, base.vertices)
    c1 = 0.0
    if normalize_at is not None:
        c1 = float(_sum_ridges(ridges, np.asarray(normalize_at, dtype=float)[None])[0])
        v1 = v1 - c1
    f1 = base.with_values(v1, gradients=g1)
    f2 = base.with_values(v1 - base.values, gradients=g1 - base.gradients)
    return f1, f2, base, ridges, tab, c1


def aleksandrov_decompose(f: PWL, normalize_at=None, certify: bool = True) -> DCPair:
    """Split ``f`` into convex ``f1`` and ``f2`` with ``f1 - f2 = f``.

    ``normalize_at`` (meshes only) subtracts ``f1(a)`` from both parts.
    With ``certify`` both parts are checked by :func:`verify_convex`.
    """
    if isinstance(f, SectorFanPH):
        f1, f2, base, ridges, tab, c1 = _decompose_fan(f)
    elif isinstance(f, TriangulatedPWL):
        f1, f2, base, ridges, tab, c1 = _decompose_mesh(f, normalize_at)
    else:
        raise TypeError(f"cannot decompose {type(f).__name__}")
    if certify:
        for name, part in (("f1", f1), ("f2", f2)):
            rep = verify_convex(part)
            if not rep.ok:
                raise ConvexityCertificateFailed(
                    f"{name} has a concave edge {rep.witness} (jump {rep.worst_jump:.3g})"
                )
    counts = {
        "convex": int((tab.kind == 1).sum()),
        "concave": int((tab.kind == -1).sum()),
        "flat": int((tab.kind == 0).sum()),
        "ridges": len(ridges),
    }
    log.debug("decomposed %s: %s", type(f).__name__, counts)
    return DCPair(f1, f2, base, c1, tuple(ridges), counts)


def subdifferential_zero(f: SectorFanPH) -> Polygon:
    """Subdifferential at the origin of a convex fan (hull of its gradients)."""
    rep = verify_convex(f)
    if not rep.ok:
        raise NotConvexInput(f"fan is concave at ray {rep.witness}")
    return convex_hull_2d(f.sector_gradients)


def steiner_point(f: SectorFanPH) -> np.ndarray:
    """Sector-angle weighted mean of the gradients.

    For a convex fan this is the Steiner point of its subdifferential.
    """
    w = f.sector_widths / TWO_PI
    return (w[:, None] * f.sector_gradients).sum(0)


def shift_linear(f: SectorFanPH, g) -> SectorFanPH:
    """``f - (g, .)`` on the same rays."""
    g = np.asarray(g, dtype=float)
    return build_sector_fan(f.ray_values - f.rays @ g, f.angles)
