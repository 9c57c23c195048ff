"""Positively homogeneous functions in the plane.

A p.h. function of degree ``m`` is stored through its values on the unit
circle, ``Phi(t)``, and evaluated as ``||x||^m * Phi(atan2(x))``.  The
module covers radial lifts of boundary data, degree changes, the fan-based
DC decomposition of p.h. functions and the quasidifferential point test.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .decompose import DCPair, aleksandrov_decompose, steiner_point, shift_linear, subdifferential_zero
from .errors import NotPositiveOnCircle, OriginOutside, OutOfDomain, PWLError
from .geometry import Curve, Polygon, convex_hull_2d, is_convex_loop
from .pwl import SectorFanPH, build_sector_fan, lipschitz_constant, uniform_angles
from .variation import circle_trace, derivative_variation, refine_verdict

PROBE_SAMPLES = 4096
POSITIVITY_MARGIN = 1.0
UNIT_RADIUS_SNAP = 16 * np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class PHFunction:
    """``x -> ||x||^degree * boundary(angle(x))``.

    ``shift`` records the positivity shift ``c`` used when this function was
    obtained by a degree lift of data that was not positive on the circle:
    then ``self = lift(psi + c||.||) - c||.||^degree``.
    """

    degree: int
    boundary: Callable
    shift: float = 0.0
    source: object = field(default=None, repr=False)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        r = np.hypot(x[..., 0], x[..., 1])
        # unit-circle samples carry radius roundoff; snapping it makes circle
        # traces independent of the degree, as they are mathematically
        r = np.where(np.abs(r - 1.0) <= UNIT_RADIUS_SNAP, 1.0, r)
        theta = np.arctan2(x[..., 1], x[..., 0])
        out = r**self.degree * np.asarray(self.boundary(theta), dtype=float)
        out = np.where(r > 0, out, 0.0)
        return float(out) if out.ndim == 0 else out

    def circle_values(self, t) -> np.ndarray:
        return np.asarray(self.boundary(np.asarray(t, dtype=float)), dtype=float)

    def convex_parts(self) -> tuple["PHFunction", "PHFunction"]:
        """``(||x||^m (Phi + c), c ||x||^m)``; their difference is ``self``."""
        c = self.shift
        return (
            PHFunction(self.degree, lambda t, b=self.boundary: b(t) + c, 0.0, self.source),
            PHFunction(self.degree, lambda t: np.full(np.shape(t), c), 0.0),
        )

    def min_on_circle(self, samples: int = PROBE_SAMPLES) -> float:
        t = uniform_angles(samples)
        vals = self.circle_values(t)
        if isinstance(self.source, SectorFanPH):
            vals = np.concatenate([vals, self.source.ray_values])
        return float(vals.min())


def ph_from_function(f: Callable, degree: int = 1) -> PHFunction:
    """p.h. function of the given degree agreeing with ``f`` on the unit circle."""

    def boundary(t, f=f):
        t = np.asarray(t, dtype=float)
        return np.asarray(f(np.stack([np.cos(t), np.sin(t)], axis=-1)), dtype=float)

    return PHFunction(int(degree), boundary, source=f)


def ph_from_fan(fan: SectorFanPH) -> PHFunction:
    def boundary(t, fan=fan):
        t = np.asarray(t, dtype=float)
        return fan(np.stack([np.cos(t), np.sin(t)], axis=-1))

    return PHFunction(1, boundary, source=fan)


def radial_lift_degree1(curve: Curve, values) -> SectorFanPH:
    """Fan whose rays pass through the curve points with ``psi(p) = v``.

    ``values`` are sampled at the curve's distinct points (the closing
    point excluded).  Each ray value is rescaled to unit radius.
    """
    pts = curve.points[:-1] if curve.closed else curve.points
    v = np.asarray(values, dtype=float).ravel()
    if len(v) != len(pts):
        raise PWLError(f"{len(v)} values for {len(pts)} curve points")
    if not curve.closed or curve.dim != 2:
        raise OriginOutside("the lift needs a closed planar curve around the origin")
    if curve.class_tag not in ("convex_boundary", "circle") and not is_convex_loop(pts):
        raise PWLError("the lift needs a convex boundary curve")
    hull = convex_hull_2d(pts)
    if not hull.contains(np.zeros((1, 2)), tol=-1e-12)[0]:
        raise OriginOutside("origin is not strictly inside the curve")
    radius = np.hypot(pts[:, 0], pts[:, 1])
    angles = np.arctan2(pts[:, 1], pts[:, 0])
    order = np.argsort(angles, kind="stable")
    return build_sector_fan(v[order] / radius[order], angles[order])


def lift_shift(low: float, slope: float, m: int) -> float:
    """Smallest recorded shift ``c`` making ``||x||^m (Phi + c)`` provably convex.

    For a convex degree-1 ``psi`` the lift of ``psi + c||.||`` is convex
    when ``min (Phi + c) >= max|Phi'| / sqrt(m)`` (Hessian of
    ``r^m Phi(theta)``); positivity alone suffices only for ``m = 1``.  The
    shift is zero when the data already satisfy ``min Phi >= max(1,
    max|Phi'|/sqrt(m))``-style positivity, otherwise ``-min Phi +
    max(1, max|Phi'|/sqrt(m))``.
    """
    need = POSITIVITY_MARGIN if m == 1 else max(POSITIVITY_MARGIN, slope / np.sqrt(m))
    if low > 0 and (m == 1 or low >= slope / np.sqrt(m)):
        return 0.0
    return float(need - low)


def max_circle_slope(phi: PHFunction, samples: int = PROBE_SAMPLES) -> float:
    """``max |Phi'|`` estimated from chord slopes on a dense circle grid."""
    if isinstance(phi.source, SectorFanPH):
        return lipschitz_constant(phi.source)
    t = uniform_angles(samples + 1)
    t = np.append(t[:-1], 2 * np.pi)
    v = phi.circle_values(t)
    return float(np.abs(np.diff(v) / np.diff(t)).max())


def degree_lift(psi: PHFunction, m: int, strict: bool = False) -> PHFunction:
    """Same circle data, homogeneous of degree ``m``.

    The returned function equals ``||x||^m Phi``; its ``shift`` ``c``
    (see :func:`lift_shift`) is what must be added to ``psi`` before lifting
    for the lift to be convex, and :meth:`PHFunction.convex_parts` returns
    the corresponding split.  ``strict`` raises instead of shifting when
    ``Phi`` is not positive on the circle.
    """
    if int(m) < 1:
        raise ValueError("degree must be a positive integer")
    low = psi.min_on_circle()
    if strict and low <= 0:
        raise NotPositiveOnCircle(f"min of the circle data is {low:.6g} <= 0")
    shift = lift_shift(low, max_circle_slope(psi), int(m)) if low <= 0 or m > 1 else 0.0
    return PHFunction(int(m), psi.boundary, shift, psi.source)


def degree_drop(phi: PHFunction) -> PHFunction:
    """``||q|| * phi(q / ||q||)``: same circle data, degree 1."""
    return PHFunction(1, phi.boundary, 0.0, phi.source)


def fan_of(phi: PHFunction, m_fan: int, t0: float = 0.0) -> SectorFanPH:
    t = uniform_angles(m_fan, t0)
    return build_sector_fan(phi.circle_values(t), t)


def line_slopes_monotone(
    f: Callable, n_rays: int = 20, seed: int = 0, n_alpha: int = 201, span: float = 2.0, rtol: float = 1e-9
) -> bool:
    """Discrete convexity test along random lines ``x0 + alpha p``.

    Chord slopes of ``alpha -> f(x0 + alpha p)`` must be non-decreasing.
    """
    rng = np.random.default_rng(seed)
    alpha = np.linspace(-span, span, n_alpha)
    for _ in range(n_rays):
        x0 = rng.uniform(-1.0, 1.0, 2)
        p = rng.normal(size=2)
        p /= np.linalg.norm(p)
        vals = np.asarray(f(x0 + alpha[:, None] * p), dtype=float)
        s = np.diff(vals) / np.diff(alpha)
        tol = rtol * (1.0 + np.abs(s).max())
        if np.any(np.diff(s) < -tol):
            return False
    return True


@dataclass
class PHLevel:
    """One level of :func:`dc_decompose_ph`.

    ``pair`` is the degree-1 fan decomposition; for degree ``m > 1``,
    ``lifted`` holds the two degree-``m`` convex parts.
    """

    m_fan: int
    pair: DCPair
    sup_error: float
    lipschitz_f1: float
    lipschitz_f2: float
    lifted: tuple | None = None
    shift: float = 0.0


def dc_decompose_ph(
    phi: PHFunction, fan_sizes: Sequence[int], probe_samples: int = PROBE_SAMPLES
) -> list[PHLevel]:
    """Fan discretization plus Aleksandrov decomposition at each fan size."""
    sizes = [int(m) for m in fan_sizes]
    if any(m < 8 for m in sizes) or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("fan sizes must be increasing and at least 8")
    psi = degree_drop(phi)
    t = uniform_angles(probe_samples, 0.5 * 2 * np.pi / probe_samples)
    u = np.column_stack([np.cos(t), np.sin(t)])
    exact = phi.circle_values(t)
    out = []
    for m in sizes:
        pair = aleksandrov_decompose(fan_of(psi, m))
        err = float(np.max(np.abs(exact - (pair.f1(u) - pair.f2(u)))))
        lifted, shift = None, 0.0
        if phi.degree > 1:
            p1, p2 = ph_from_fan(pair.f1), ph_from_fan(pair.f2)
            low = min(p1.min_on_circle(), p2.min_on_circle())
            slope = max(lipschitz_constant(pair.f1), lipschitz_constant(pair.f2))
            shift = lift_shift(low, slope, phi.degree)
            lifted = tuple(
                PHFunction(phi.degree, (lambda tt, p=p, c=shift: p.boundary(tt) + c), 0.0, p.source)
                for p in (p1, p2)
            )
        out.append(
            PHLevel(m, pair, err, lipschitz_constant(pair.f1), lipschitz_constant(pair.f2), lifted, shift)
        )
    return out


# --------------------------------------------------------------------------
# quasidifferential at a point


@dataclass
class QDPointResult:
    verdict: str
    sub: Polygon
    super: Polygon
    pair: DCPair
    h: SectorFanPH
    estimates: list = field(default_factory=list)


def directional_derivatives(f: Callable, x, directions: np.ndarray, alpha: float) -> np.ndarray:
    """Forward differences with one Richardson step: ``2 D(alpha/2) - D(alpha)``."""
    x = np.asarray(x, dtype=float)
    fx = float(np.asarray(f(x[None, :]), dtype=float).ravel()[0])

    def quotient(a):
        vals = np.asarray(f(x + a * directions), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise OutOfDomain("f is not finite on the probe circle")
        return (vals - fx) / a

    return 2.0 * quotient(alpha / 2.0) - quotient(alpha)


def qd_point_test(
    f: Callable, x, alpha: float = 1e-4, m_fan: int = 256, domain: Polygon | None = None
) -> QDPointResult:
    """Approximate the quasidifferential ``(sub, super)`` of ``f`` at ``x``.

    The directional derivative ``h`` is sampled on a fan of ``m_fan`` rays
    and DC-decomposed; both parts are shifted by the linear function whose
    gradient is the Steiner point of the second part's subdifferential,
    which makes the pair canonical (``super = {0}`` whenever ``h`` is
    convex).  The verdict applies :func:`refine_verdict` to the circle
    variation of ``h`` on fans of ``m_fan/8 ... m_fan`` rays.
    """
    if m_fan < 64:
        raise ValueError("m_fan must be at least 64 (four refinement levels of at least 8 rays)")
    x = np.asarray(x, dtype=float)
    if domain is not None:
        probe = x + alpha * np.column_stack([np.cos(uniform_angles(m_fan)), np.sin(uniform_angles(m_fan))])
        if not np.all(domain.contains(np.vstack([x, probe]))):
            raise OutOfDomain("x + alpha*g leaves the domain")
    t = uniform_angles(m_fan)
    dirs = np.column_stack([np.cos(t), np.sin(t)])
    h = build_sector_fan(directional_derivatives(f, x, dirs, alpha), t)
    pair = aleksandrov_decompose(h)
    g = steiner_point(pair.f2)
    f1, f2 = shift_linear(pair.f1, g), shift_linear(pair.f2, g)
    pair = DCPair(f1, f2, h, pair.normalization, pair.ridges, pair.edge_counts)
    sub = subdifferential_zero(f1)
    sup_hull = subdifferential_zero(f2)
    sup = Polygon(-sup_hull.vertices)
    estimates = []
    for k in (8, 4, 2, 1):
        step = m_fan // k
        stride = k
        vals = h.ray_values[::stride][:step]
        hk = build_sector_fan(vals, t[::stride][:step])
        estimates.append((step, derivative_variation(circle_trace(hk, step))))
    verdict = refine_verdict(estimates)
    return QDPointResult(verdict, sub, sup, pair, h, estimates)
