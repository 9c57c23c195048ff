import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcsplit.builtins import get_builtin
from dcsplit.errors import TooFewLevels, TooFewPoints
from dcsplit.geometry import circle_curve, convex_polygon_curve, natural_parametrize
from dcsplit.variation import (
    circle_trace,
    cumulative_decomposition,
    curve_turn,
    derivative_variation,
    doubling_schedule,
    refine_verdict,
    tangent_variation,
    trace,
    trace_from_values,
    turn_constants,
    variation_report,
)


def test_trace_requires_samples():
    with pytest.raises(TooFewPoints):
        trace(get_builtin("norm2"), circle_curve(), 4)


def test_variation_of_linear_on_segment_is_zero():
    seg = natural_parametrize([[-1, 0.5], [1, -0.3]])
    assert derivative_variation(trace(get_builtin("linear", "2,3"), seg, 500)) == pytest.approx(0, abs=1e-9)


def test_variation_of_abs_on_segment():
    ts = trace_from_values(np.linspace(-1, 1, 101), np.abs(np.linspace(-1, 1, 101)))
    assert derivative_variation(ts) == pytest.approx(2.0)


def test_closed_trace_counts_seam_once():
    # |sin t| style kink exactly at the seam t = 0
    n = 400
    t = 2 * np.pi * np.arange(n) / n
    ts = trace_from_values(t, np.abs(np.sin(t / 2)), closed=True, period=2 * np.pi)
    # |sin(t/2)| on [0, 2pi): kink of size 1 at the seam, smooth part varies by 1
    assert derivative_variation(ts) == pytest.approx(2.0, rel=1e-3)


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_variation_cos_kt(k):
    # int |Phi''| = 4 k^2 for Phi = cos(k t)
    n = 2**14
    t = 2 * np.pi * np.arange(n) / n
    ts = trace_from_values(t, np.cos(k * t), closed=True, period=2 * np.pi)
    assert derivative_variation(ts) == pytest.approx(4 * k * k, rel=1e-3)


def test_turn_flat_curves():
    n = 1000
    assert curve_turn(lambda q: np.zeros(len(q)), circle_curve(1, n), n) == pytest.approx(2 * math.pi, rel=1e-4)
    sq = convex_polygon_curve([[0, 0], [1, 0], [1, 1], [0, 1]])
    # four right-angle corners: chord of unit tangents sqrt(2) each
    assert tangent_variation(sq, 400) == pytest.approx(4 * math.sqrt(2))
    seg = natural_parametrize([[0, 0], [1, 1]])
    assert tangent_variation(seg, 50) == pytest.approx(0.0, abs=1e-12)


def test_turn_constants():
    c5, c6 = turn_constants(0.0)
    assert (c5, c6) == (1.0, 1.0)
    c5, c6 = turn_constants(2.0)
    assert c5 == pytest.approx(math.sqrt(5)) and c6 == pytest.approx(5**-1.5)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=3, max_size=60))
def test_cumulative_decomposition_property(vals):
    t = np.linspace(0, 1, len(vals))
    ts = trace_from_values(t, np.array(vals))
    p1, p2 = cumulative_decomposition(ts)
    assert np.allclose(p1.phi - p2.phi, vals, atol=1e-9)
    tol = 1e-9 * (1 + np.abs(p1.slopes).max())
    assert np.all(np.diff(p1.slopes) >= -tol)
    assert np.all(np.diff(p2.slopes) >= -tol)
    # total variation of the slopes of psi1 equals that of psi
    assert p1.slopes[-1] - p1.slopes[0] == pytest.approx(derivative_variation(ts), abs=tol)


def test_refine_verdict():
    sched = [256, 512, 1024, 2048]
    assert refine_verdict(list(zip(sched, [10, 10.5, 10.51, 10.512]))) == "bounded"
    assert refine_verdict(list(zip(sched, [1, 1.1, 1.25, 1.4]))) == "divergent"
    assert refine_verdict(list(zip(sched, [1, 1.1, 1.12, 1.2]))) == "inconclusive"
    assert refine_verdict(list(zip(sched, [0, 1e-10, 4e-10, 1.6e-9]))) == "bounded"
    assert refine_verdict(list(zip(sched, [1, 2, 3, float("inf")]))) == "divergent"
    with pytest.raises(TooFewLevels):
        refine_verdict([(8, 1.0), (16, 1.0), (32, 1.0)])
    with pytest.raises(ValueError):
        refine_verdict([(8, 1.0), (8, 1.0), (32, 1.0), (64, 1)])
    # custom tolerances
    assert refine_verdict(list(zip(sched, [1, 1.1, 1.12, 1.2])), bounded_tol=0.1) == "bounded"


def test_variation_report_saddle_bounded_and_osc_divergent():
    c = circle_curve(1.0, 4096)
    rep = variation_report(get_builtin("saddle"), c, doubling_schedule(256, 5), "unit")
    assert rep.verdict == "bounded"
    assert rep.constant_estimate == pytest.approx(16, rel=1e-2)
    d = rep.to_dict()
    assert [lv["n_samples"] for lv in d["levels"]] == [256, 512, 1024, 2048, 4096]
    osc = variation_report(get_builtin("osc"), c, doubling_schedule(256, 5), with_turn=False)
    assert osc.verdict == "divergent" and osc.constant_estimate is None
    v = [x for _, x, _ in osc.levels]
    assert all(b >= 1.05 * a for a, b in zip(v, v[1:]))


def test_circle_trace_center_radius():
    ts = circle_trace(get_builtin("norm2"), 64, radius=0.5, center=(0.1, 0))
    assert np.allclose(np.linalg.norm(ts.points - [0.1, 0], axis=1), 0.5)
    assert ts.closed and ts.period == pytest.approx(ts.t[-1] + ts.steps[-1])
