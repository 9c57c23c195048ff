"""DC-representability diagnostics.

* :func:`dc_decompose_general` - sample on nested uniform triangulations and
  decompose each interpolant (the constructive two-operation route);
* :func:`dc_diagnose` / :func:`dc_diagnose_nd` - refinement study of the
  derivative variation along families of convex closed curves;
* :func:`qd_sequence_test` - uniform convergence plus bounded variation
  checks for a sequence of directional-derivative traces.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .decompose import DCPair, aleksandrov_decompose
from .errors import EmptyFamily, GridMismatch, NonConvexDomain, UnsupportedDimension
from .geometry import (
    Curve,
    Polygon,
    circle_curve,
    convex_hull_2d,
    convex_polygon_curve,
    coord_convex_curve,
    is_convex_loop,
    natural_parametrize,
    sphere_section_curve,
)
from .pwl import build_triangulated, lipschitz_constant
from .variation import (
    TraceSamples,
    VariationReport,
    derivative_variation,
    doubling_schedule,
    refine_verdict,
    tangent_variation,
    trace,
    variation_report,
)

log = logging.getLogger(__name__)

DEFAULT_SCHEDULE = (1024, 2048, 4096, 8192, 16384)
HOTSPOT_DEPTH = 8
FAMILY_KINDS = ("circle_family", "convex_boundary_family", "coord_convex_family", "sphere_sections")
DC_VERDICTS = ("likely_dc", "divergent", "inconclusive")


def thread_count() -> int:
    """Worker cap from ``DCSPLIT_THREADS`` (default: CPU count, at most 8)."""
    env = os.environ.get("DCSPLIT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer DCSPLIT_THREADS=%r", env)
    return max(1, min(8, os.cpu_count() or 1))


def _map(fn, items, threads: int | None):
    """Ordered map; results are independent of the worker count."""
    items = list(items)
    n = thread_count() if threads is None else max(1, threads)
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def unit_square() -> Polygon:
    return Polygon(np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]))


def _check_domain(domain: Polygon) -> None:
    v = np.asarray(domain.vertices, dtype=float)
    if len(v) < 3 or domain.area <= 0 or not is_convex_loop(v):
        raise NonConvexDomain("domain must be a counterclockwise convex polygon with positive area")


# --------------------------------------------------------------------------
# triangulation and the constructive route


def triangulate_refine(domain: Polygon, level: int) -> tuple[np.ndarray, np.ndarray]:
    """Fan triangulation from vertex 0, quadrisected ``level`` times.

    Returns ``(vertices, triangles)``; refinement is nested and halves the
    maximal triangle diameter at each level.
    """
    _check_domain(domain)
    if level < 0:
        raise ValueError("level must be non-negative")
    verts = [tuple(p) for p in np.asarray(domain.vertices, dtype=float)]
    tris = [(0, i, i + 1) for i in range(1, len(verts) - 1)]
    pts = np.array(verts)
    for _ in range(level):
        index: dict[tuple[int, int], int] = {}
        new_pts = list(pts)

        def mid(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            if key not in index:
                index[key] = len(new_pts)
                new_pts.append(0.5 * (pts[a] + pts[b]))
            return index[key]

        new_tris = []
        for a, b, c in tris:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_tris += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
        pts, tris = np.array(new_pts), new_tris
    return pts, np.array(tris, dtype=np.int64)


def probe_points(domain: Polygon, level: int) -> np.ndarray:
    """Vertices and centroids of a finer nested triangulation (fixed grid)."""
    v, t = triangulate_refine(domain, level)
    return np.vstack([v, v[t].mean(axis=1)])


@dataclass
class GeneralLevel:
    level: int
    pair: DCPair
    sup_error: float
    lipschitz_f1: float
    lipschitz_f2: float
    max_abs_f1: float


def dc_decompose_general(
    f: Callable, domain: Polygon | None = None, levels: Sequence[int] = (0, 1, 2, 3), probe_level: int | None = None
) -> list[GeneralLevel]:
    """Sample ``f`` on nested triangulations and decompose each interpolant.

    Both parts are normalized by ``c1 = f1(a)`` at the domain centroid.
    ``sup_error`` is ``max |f - f_N|`` on a fixed probe grid, two levels finer
    than the finest requested level.
    """
    domain = unit_square() if domain is None else domain
    levels = sorted(int(k) for k in levels)
    probe_level = (levels[-1] + 2) if probe_level is None else probe_level
    probes = probe_points(domain, probe_level)
    exact = np.asarray(f(probes), dtype=float)
    anchor = domain.centroid
    out = []
    for k in levels:
        v, t = triangulate_refine(domain, k)
        fn = build_triangulated(v, t, np.asarray(f(v), dtype=float))
        pair = aleksandrov_decompose(fn, normalize_at=anchor)
        err = float(np.max(np.abs(exact - fn(probes))))
        out.append(
            GeneralLevel(
                k,
                pair,
                err,
                lipschitz_constant(pair.f1),
                lipschitz_constant(pair.f2),
                float(np.max(np.abs(pair.f1.values))),
            )
        )
        log.debug("level %d: %d cells, sup_error %.3g", k, len(pair.f1.triangles), err)
    return out


# --------------------------------------------------------------------------
# curve families


@dataclass(frozen=True)
class CurveFamily:
    """Deterministic generator of closed test curves.

    ``count`` random curves are drawn from ``seed``; planar families also
    get concentric circles (radii ``circle_radii`` times the local scale)
    around the domain centroid and around ``anchors``.
    """

    kind: str = "convex_boundary_family"
    count: int = 20
    seed: int = 0
    anchors: tuple = ()
    circle_radii: tuple = (1.0, 0.5, 0.25)
    mean_points: float = 6.0
    samples: int = 16384

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")


def _random_point(domain: Polygon, rng: np.random.Generator) -> np.ndarray:
    lo, hi = domain.vertices.min(0), domain.vertices.max(0)
    while True:
        p = rng.uniform(lo, hi)
        if domain.contains(p[None], tol=-1e-9)[0]:
            return p


def _random_convex_polygon(domain: Polygon, rng: np.random.Generator, mean_points: float) -> np.ndarray:
    while True:
        c = _random_point(domain, rng)
        room = float(domain.boundary_distance(c[None])[0])
        rad = room * rng.uniform(0.2, 0.95)
        k = 3 + int(rng.poisson(mean_points))
        ang = rng.uniform(0, 2 * np.pi, k)
        r = rad * np.sqrt(rng.uniform(0, 1, k))
        hull = convex_hull_2d(c + np.column_stack([r * np.cos(ang), r * np.sin(ang)]))
        if len(hull) >= 3 and hull.area > 1e-3 * rad * rad:
            return hull.vertices


def _circles_around(center, base_radius: float, radii: Sequence[float], samples: int, prefix: str):
    return [
        (f"{prefix}-r{rho:.6g}", circle_curve(base_radius * rho, samples, center))
        for rho in radii
        if base_radius * rho > 0
    ]


def generate_family(family: CurveFamily, domain: Polygon | None = None) -> list[tuple[str, Curve]]:
    """The family's curves, each with a stable identifier."""
    rng = np.random.default_rng(family.seed)
    if family.kind in ("sphere_sections", "coord_convex_family"):
        return _generate_3d(family, rng)
    domain = unit_square() if domain is None else domain
    _check_domain(domain)
    curves: list[tuple[str, Curve]] = []
    centers = [("centroid", domain.centroid)] + [(f"anchor{i}", np.asarray(a, float)) for i, a in enumerate(family.anchors)]
    for name, c in centers:
        room = float(domain.boundary_distance(c[None])[0])
        if domain.contains(c[None])[0] and room > 0:
            curves += _circles_around(c, 0.9 * room, family.circle_radii, family.samples, f"circle-{name}")
    for i in range(family.count):
        if family.kind == "circle_family":
            c = _random_point(domain, rng)
            room = float(domain.boundary_distance(c[None])[0])
            curves.append((f"circle{i:03d}", circle_curve(room * rng.uniform(0.2, 0.95), family.samples, c)))
        else:
            poly = _random_convex_polygon(domain, rng, family.mean_points)
            curves.append((f"poly{i:03d}", convex_polygon_curve(poly)))
    return curves


def _generate_3d(family: CurveFamily, rng: np.random.Generator) -> list[tuple[str, Curve]]:
    curves = [("equator", sphere_section_curve([0.0, 0.0, 1.0], 0.0, family.samples))]
    for i in range(family.count):
        if family.kind == "sphere_sections":
            n = rng.normal(size=3)
            n /= np.linalg.norm(n)
            curves.append((f"section{i:03d}", sphere_section_curve(n, rng.uniform(-0.8, 0.8), family.samples)))
        else:
            # ellipse in a random plane: every coordinate projection is an
            # ellipse (possibly a segment), hence a convex loop
            t = 2 * np.pi * np.arange(family.samples) / family.samples
            a, b = rng.normal(size=3), rng.normal(size=3)
            c = rng.uniform(-0.3, 0.3, 3)
            s = 0.6 / max(np.linalg.norm(a), np.linalg.norm(b))
            pts = c + s * (np.outer(np.cos(t), a) + np.outer(np.sin(t), b))
            curves.append((f"coordconvex{i:03d}", coord_convex_curve(np.vstack([pts, pts[:1]]))))
    return curves


# --------------------------------------------------------------------------
# curve diagnostics


@dataclass
class DCVerdict:
    verdict: str
    constant_estimate: float
    worst_curve: str
    reports: list[VariationReport] = field(default_factory=list)
    hot_spot: tuple | None = None

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "constant_estimate": self.constant_estimate,
            "worst_curve": self.worst_curve,
            "hot_spot": None if self.hot_spot is None else [float(x) for x in self.hot_spot],
            "reports": [r.to_dict() for r in self.reports],
        }


def _report(
    f: Callable, cid: str, curve: Curve, schedule: Sequence[int], tolerances: dict | None = None
) -> VariationReport:
    rep = variation_report(f, curve, schedule, curve_id=cid, tolerances=tolerances)
    rv = tangent_variation(curve, max(schedule))
    rep.extra = {
        "curve_variation": rv,
        "weighted_variation": rep.levels[-1][1] / (1.0 + rv),
        "curve_length": curve.length,
        "is_circle": curve.class_tag == "circle",
    }
    return rep


def _aggregate(reports: list[VariationReport]) -> tuple[str, float, str]:
    finals = [r.levels[-1][1] for r in reports]
    constant = float(max(finals))
    divergent = [r for r in reports if r.verdict == "divergent"]
    if divergent:
        # the smallest divergent curve localizes the singularity best;
        # circles first, then shorter curves, then id
        def key(r):
            return (not r.extra.get("is_circle", False), r.extra.get("curve_length", 0.0), r.curve_id)

        return "divergent", constant, sorted(divergent, key=key)[0].curve_id
    worst = max(reports, key=lambda r: (r.levels[-1][1], r.curve_id)).curve_id
    if all(r.verdict == "bounded" for r in reports):
        return "likely_dc", constant, worst
    return "inconclusive", constant, worst


def _cell_score(f: Callable, lo: np.ndarray, hi: np.ndarray, n: int) -> float:
    """Summed derivative variation along the two midlines and two diagonals
    of the cell ``[lo, hi]``.

    Affine functions score 0, a point singularity inside the cell is seen
    by all four segments at distance at most half the cell width, and a
    kink line crossing the cell by at least two of them.
    """
    c = 0.5 * (lo + hi)
    segs = [
        ((lo[0], c[1]), (hi[0], c[1])),
        ((c[0], lo[1]), (c[0], hi[1])),
        (tuple(lo), tuple(hi)),
        ((lo[0], hi[1]), (hi[0], lo[1])),
    ]
    return float(sum(derivative_variation(trace(f, natural_parametrize(s), n)) for s in segs))


def hot_spot_search(
    f: Callable, domain: Polygon, depth: int = HOTSPOT_DEPTH, n: int = 256
) -> np.ndarray:
    """Recursive quadrant search for the most non-smooth spot of ``f``.

    At each step the current cell (initially the domain's bounding box) is
    split in four and the quadrant with the largest :func:`_cell_score` is
    kept; quadrants whose segments leave the domain are skipped.  Returns
    the final cell centre.
    """
    lo, hi = domain.vertices.min(0).astype(float), domain.vertices.max(0).astype(float)
    for _ in range(depth):
        mid = 0.5 * (lo + hi)
        best = None
        for qx in (0, 1):
            for qy in (0, 1):
                clo = np.array([lo[0] if qx == 0 else mid[0], lo[1] if qy == 0 else mid[1]])
                chi = np.array([mid[0] if qx == 0 else hi[0], mid[1] if qy == 0 else hi[1]])
                corners = np.array([clo, chi, [clo[0], chi[1]], [chi[0], clo[1]]])
                if not np.all(domain.contains(corners, tol=1e-9)):
                    continue
                val = _cell_score(f, clo, chi, n)
                if best is None or val > best[0] * (1.0 + 1e-9):
                    best = (val, clo, chi)
        if best is None:
            break
        _, lo, hi = best
    return 0.5 * (lo + hi)


def dc_diagnose(
    f: Callable,
    domain: Polygon | None = None,
    family: CurveFamily | None = None,
    refinement: Sequence[int] = DEFAULT_SCHEDULE,
    hot_spots: bool = True,
    hotspot_depth: int = HOTSPOT_DEPTH,
    threads: int | None = None,
    tolerances: dict | None = None,
) -> DCVerdict:
    """Refinement study of the derivative variation over a planar curve family.

    ``divergent`` if any curve diverges, ``likely_dc`` if all are bounded,
    ``inconclusive`` otherwise.
    """
    domain = unit_square() if domain is None else domain
    family = CurveFamily() if family is None else family
    if family.kind not in ("circle_family", "convex_boundary_family"):
        raise ValueError("planar diagnosis needs a circle or convex-boundary family")
    schedule = sorted(int(n) for n in refinement)
    hot = None
    if hot_spots:
        hot = hot_spot_search(f, domain, hotspot_depth)
        family = CurveFamily(
            family.kind, family.count, family.seed, tuple(family.anchors) + (tuple(hot),),
            family.circle_radii, family.mean_points, max(family.samples, schedule[-1]),
        )
    curves = generate_family(family, domain)
    if not curves:
        raise EmptyFamily("the curve family is empty")
    reports = _map(lambda item: _report(f, item[0], item[1], schedule, tolerances), curves, threads)
    verdict, constant, worst = _aggregate(reports)
    return DCVerdict(verdict, constant, worst, reports, None if hot is None else tuple(hot))


def dc_diagnose_nd(
    f: Callable,
    family: CurveFamily | Sequence[tuple[str, Curve]] | None = None,
    refinement: Sequence[int] = DEFAULT_SCHEDULE,
    threads: int | None = None,
    tolerances: dict | None = None,
) -> DCVerdict:
    """Curve diagnostics in R^3 over sphere sections / coordinate-convex curves."""
    if family is None:
        family = CurveFamily("sphere_sections")
    curves = generate_family(family) if isinstance(family, CurveFamily) else list(family)
    if not curves:
        raise EmptyFamily("the curve family is empty")
    for cid, c in curves:
        if c.dim > 3:
            raise UnsupportedDimension(f"curve {cid} lives in R^{c.dim}; only n = 3 is supported")
        if c.dim != 3:
            raise UnsupportedDimension(f"curve {cid} lives in R^{c.dim}; use dc_diagnose in the plane")
    schedule = sorted(int(n) for n in refinement)
    reports = _map(lambda item: _report(f, item[0], item[1], schedule, tolerances), curves, threads)
    verdict, constant, worst = _aggregate(reports)
    return DCVerdict(verdict, constant, worst, reports)


# --------------------------------------------------------------------------
# quasidifferentiability of a limit


@dataclass
class QDSequenceResult:
    conditions_hold: bool
    c_estimate: float
    limit_variation_bound: float
    condition_a: bool
    condition_b: bool
    distances: list
    gaps: list
    variations: list
    limit_variation: float | None = None

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def qd_sequence_test(
    traces: Sequence[TraceSamples], uniform_tol: float | None = None, limit: TraceSamples | None = None
) -> QDSequenceResult:
    """Check the two hypotheses of the limit theorem on finite data.

    Condition (a), uniform convergence: the distances ``sup|Phi_k - ref|``
    to the reference (``limit`` if given, else the last trace) and the
    consecutive gaps ``sup|Phi_k+1 - Phi_k|`` are non-increasing (slack
    ``uniform_tol``), and the last distance is within ``uniform_tol`` or
    strictly smaller than the first.  Condition (b): the derivative
    variations are finite and do not grow divergently (sustained relative
    growth of at least the divergence tolerance with non-contracting absolute
    increments); ``c_estimate`` is
    their maximum and the limit bound is ``2 c``.
    """
    traces = list(traces)
    if len(traces) < 2:
        raise GridMismatch("need at least 2 traces")
    t0 = traces[0].t
    for ts in traces[1:] + ([limit] if limit is not None else []):
        if len(ts.t) != len(t0) or not np.allclose(ts.t, t0, rtol=0, atol=1e-12) or ts.closed != traces[0].closed:
            raise GridMismatch("traces must share one sample grid")
    scale = max(float(np.abs(ts.phi).max()) for ts in traces)
    tol = 1e-6 * (1.0 + scale) if uniform_tol is None else float(uniform_tol)
    ref = limit.phi if limit is not None else traces[-1].phi
    body = traces if limit is not None else traces[:-1]
    dist = [float(np.abs(ts.phi - ref).max()) for ts in body]
    gaps = [float(np.abs(b.phi - a.phi).max()) for a, b in zip(traces, traces[1:])]
    mono = lambda x: all(b <= a + tol for a, b in zip(x, x[1:]))  # noqa: E731
    cond_a = mono(dist) and mono(gaps) and (dist[-1] <= tol or dist[-1] < dist[0] - tol)
    var = [derivative_variation(ts) for ts in traces]
    c = float(max(var))
    cond_b = bool(np.isfinite(c))
    if cond_b and len(var) >= 4 and refine_verdict(list(enumerate(var, start=1))) == "divergent":
        # sustained relative growth; still bounded if the absolute increments
        # contract (geometric tail), e.g. (1 - 1/k) * V
        inc = np.diff(var)
        cond_b = bool(inc[-1] < inc[-2])
    lim_var = derivative_variation(limit) if limit is not None else None
    return QDSequenceResult(
        bool(cond_a and cond_b), c, 2.0 * c, bool(cond_a), bool(cond_b), dist, gaps, var, lim_var
    )


__all__ = [
    "CurveFamily",
    "DCVerdict",
    "GeneralLevel",
    "QDSequenceResult",
    "dc_decompose_general",
    "dc_diagnose",
    "dc_diagnose_nd",
    "doubling_schedule",
    "generate_family",
    "hot_spot_search",
    "qd_sequence_test",
    "triangulate_refine",
    "unit_square",
]
