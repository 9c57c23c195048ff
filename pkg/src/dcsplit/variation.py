"""Variation of the derivative along curves, turn of lifted curves, and the
cumulative-variation split of one-dimensional functions.

Derivatives are never formed pointwise: everything is computed from chord
slopes of samples, i.e. from one partition of the parameter interval.
Closed curves are handled cyclically so that the seam is counted once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import GridMismatch, TooFewLevels, TooFewPoints
from .geometry import Curve, circle_curve

BOUNDED_TOL = 0.01
DIVERGENT_TOL = 0.05
BOUNDED_WINDOW = 2
DIVERGENT_WINDOW = 3
# estimates below this level are treated as zero (slope roundoff grows like
# eps * n^2, so "zero" variations are not exactly zero at fine levels)
VERDICT_ATOL = 1e-5

VERDICTS = ("bounded", "divergent", "inconclusive")


@dataclass(frozen=True, eq=False)
class TraceSamples:
    """Values ``phi[i] = f(r(t[i]))`` along a curve, with chord slopes.

    For closed curves ``slopes`` has one entry per sample (the last chord
    wraps to the first point, at parameter ``period``); for open curves one
    fewer than the number of samples.
    """

    t: np.ndarray
    phi: np.ndarray
    slopes: np.ndarray
    closed: bool = False
    period: float | None = None
    points: np.ndarray | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def steps(self) -> np.ndarray:
        if self.closed:
            return np.diff(np.append(self.t, self.period))
        return np.diff(self.t)


def _slopes(t: np.ndarray, phi: np.ndarray, closed: bool, period: float | None) -> np.ndarray:
    if closed:
        dt = np.diff(np.append(t, period))
        return (np.roll(phi, -1) - phi) / dt
    return np.diff(phi) / np.diff(t)


def trace_from_values(t, phi, closed: bool = False, period: float | None = None) -> TraceSamples:
    """Wrap sampled values ``phi(t)``; ``period`` is required when closed."""
    t = np.asarray(t, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if len(t) != len(phi):
        raise GridMismatch("t and phi differ in length")
    if len(t) < 2 or np.any(np.diff(t) <= 0):
        raise TooFewPoints("need at least 2 strictly increasing parameters")
    if closed:
        if period is None or period <= t[-1] - t[0]:
            raise ValueError("closed traces need a period longer than the sampled span")
        period = float(t[0] + period)
    return TraceSamples(t, phi, _slopes(t, phi, closed, period), closed, period)


def trace(f: Callable, curve: Curve, n: int) -> TraceSamples:
    """Sample ``f`` at ``n`` points uniform in arc length along ``curve``."""
    if n < 8:
        raise TooFewPoints("a trace needs at least 8 samples")
    t, pts = curve.sample(n)
    phi = np.asarray(f(pts), dtype=float).reshape(-1)
    period = curve.length if curve.closed else None
    return TraceSamples(t, phi, _slopes(t, phi, curve.closed, period), curve.closed, period, pts)


def circle_trace(f: Callable, n: int, radius: float = 1.0, center=(0.0, 0.0)) -> TraceSamples:
    """Trace on the regular ``n``-gon inscribed in a circle, sampled at its vertices."""
    return trace(f, circle_curve(radius, n, center), n)


def derivative_variation(ts: TraceSamples) -> float:
    """Sum of absolute changes between consecutive chord slopes."""
    s = ts.slopes
    if len(ts) < 3:
        raise TooFewPoints("variation needs at least 3 samples")
    if ts.closed:
        return float(np.abs(np.roll(s, -1) - s).sum())
    return float(np.abs(np.diff(s)).sum())


def _unit_chords(points: np.ndarray, closed: bool) -> np.ndarray:
    if closed:
        tau = np.roll(points, -1, axis=0) - points
    else:
        tau = np.diff(points, axis=0)
    return tau / np.linalg.norm(tau, axis=1, keepdims=True)


def _turn_of_chords(u: np.ndarray, closed: bool) -> float:
    if closed:
        return float(np.linalg.norm(u - np.roll(u, 1, axis=0), axis=1).sum())
    return float(np.linalg.norm(np.diff(u, axis=0), axis=1).sum())


def curve_turn(f: Callable, curve: Curve, n: int) -> float:
    """Turn of the lifted polyline ``R(t) = (r(t), f(r(t)))``.

    Sum of distances between consecutive unit chord tangents; for ``f = 0``
    this is the turn of the planar curve itself.
    """
    if n < 8:
        raise TooFewPoints("turn needs at least 8 samples")
    _, pts = curve.sample(n)
    z = np.asarray(f(pts), dtype=float).reshape(-1, 1)
    lifted = np.hstack([pts, z])
    return _turn_of_chords(_unit_chords(lifted, curve.closed), curve.closed)


def tangent_variation(curve: Curve, n: int) -> float:
    """Variation of the unit tangent of the sampled planar curve."""
    _, pts = curve.sample(n)
    return _turn_of_chords(_unit_chords(pts, curve.closed), curve.closed)


def turn_constants(lipschitz: float) -> tuple[float, float]:
    """Upper and lower constants relating the turn of a lifted curve to the
    variations of ``r'`` and ``Phi'`` when ``|Phi'| <= lipschitz``.

    The lower one is the minimum of ``d/dx x / sqrt(1 + x^2)`` on
    ``[-L, L]``; the upper one bounds ``sqrt(1 + Phi'^2)``.
    """
    L2 = lipschitz * lipschitz
    return max(1.0, np.sqrt(1.0 + L2)), (1.0 + L2) ** -1.5


def cumulative_decomposition(ts: TraceSamples) -> tuple[TraceSamples, TraceSamples]:
    """Split the trace into two discretely convex parts ``psi1 - psi2 = psi``.

    On chord ``i`` the slope of ``psi1`` is the running variation of the
    slopes up to that chord, integrated exactly over the chord; ``psi2 =
    psi1 - psi``.  Both parts start at ``psi1(a) = 0``.
    """
    if len(ts) < 3:
        raise TooFewPoints("need at least 3 samples")
    t = ts.t
    s = np.diff(ts.phi) / np.diff(t)
    run = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(s)))])
    psi1 = np.concatenate([[0.0], np.cumsum(run * np.diff(t))])
    psi2 = psi1 - ts.phi
    return trace_from_values(t, psi1), trace_from_values(t, psi2)


# --------------------------------------------------------------------------
# refinement verdicts


def _rel_increments(values: np.ndarray, atol: float) -> np.ndarray:
    prev, cur = values[:-1], values[1:]
    return (cur - prev) / np.maximum(np.abs(prev), atol)


def refine_verdict(
    estimates: Sequence[tuple[int, float]],
    bounded_tol: float = BOUNDED_TOL,
    divergent_tol: float = DIVERGENT_TOL,
    atol: float = VERDICT_ATOL,
) -> str:
    """Classify a refinement sequence of variation estimates.

    ``bounded`` when the last two relative increments (last three levels)
    are below ``bounded_tol`` in size; ``divergent`` when each of the last
    three increments (last four levels) is at least ``divergent_tol``;
    ``inconclusive`` otherwise.  Increments are relative to
    ``max(|previous|, atol)``.
    """
    est = sorted((int(n), float(v)) for n, v in estimates)
    if len(est) < 4:
        raise TooFewLevels(f"need at least 4 refinement levels, got {len(est)}")
    ns = np.array([n for n, _ in est])
    if np.any(np.diff(ns) <= 0):
        raise ValueError("refinement levels must have distinct sample counts")
    v = np.array([x for _, x in est])
    if not np.all(np.isfinite(v)):
        return "divergent"
    inc = _rel_increments(v, atol)
    if np.all(inc[-DIVERGENT_WINDOW:] >= divergent_tol):
        return "divergent"
    if np.all(np.abs(inc[-BOUNDED_WINDOW:]) < bounded_tol):
        return "bounded"
    return "inconclusive"


@dataclass
class VariationReport:
    """Per-level estimates for one curve, plus the refinement verdict."""

    levels: list[tuple[int, float, float]]
    verdict: str
    constant_estimate: float | None
    curve_id: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "curve_id": self.curve_id,
            "levels": [
                {"n_samples": int(n), "variation": float(v), "turn": float(o)}
                for n, v, o in self.levels
            ],
            "verdict": self.verdict,
            "constant_estimate": self.constant_estimate,
            **({"extra": self.extra} if self.extra else {}),
        }


def variation_report(
    f: Callable,
    curve: Curve,
    schedule: Sequence[int],
    curve_id: str = "",
    with_turn: bool = True,
    tolerances: dict | None = None,
) -> VariationReport:
    """Variation (and turn) of ``f`` along ``curve`` at each schedule level;
    ``tolerances`` are passed on to :func:`refine_verdict`."""
    levels = []
    for n in sorted(schedule):
        ts = trace(f, curve, n)
        var = derivative_variation(ts)
        turn = curve_turn(f, curve, n) if with_turn else float("nan")
        levels.append((int(n), var, turn))
    verdict = refine_verdict([(n, v) for n, v, _ in levels], **(tolerances or {}))
    const = levels[-1][1] if verdict == "bounded" else None
    return VariationReport(levels, verdict, const, curve_id)


def doubling_schedule(n0: int, levels: int) -> list[int]:
    return [n0 * 2**k for k in range(levels)]
