import numpy as np
import pytest

from dcsplit.builtins import get_builtin
from dcsplit.decompose import verify_convex
from dcsplit.dctest import (
    CurveFamily,
    _map,
    dc_decompose_general,
    dc_diagnose,
    dc_diagnose_nd,
    generate_family,
    hot_spot_search,
    qd_sequence_test,
    thread_count,
    triangulate_refine,
    unit_square,
)
from dcsplit.errors import EmptyFamily, GridMismatch, NonConvexDomain, UnsupportedDimension
from dcsplit.geometry import Polygon, circle_curve, convex_polygon_curve, is_convex_loop
from dcsplit.pwl import build_triangulated, uniform_angles
from dcsplit.variation import trace_from_values

SCHED = (256, 512, 1024, 2048)


def test_triangulate_refine_nested():
    for k in range(4):
        v, t = triangulate_refine(unit_square(), k)
        assert len(t) == 2 * 4**k
        build_triangulated(v, t, np.zeros(len(v)))  # conforming
    with pytest.raises(NonConvexDomain):
        triangulate_refine(Polygon(np.array([[0, 0], [2, 0], [1, 0.2], [1, 2]], float)), 1)


@pytest.mark.parametrize("key", ["smooth", "absdiff", "poly2"])
def test_general_route_converges_bounded(key):
    levels = dc_decompose_general(get_builtin(key), levels=range(5))
    errs = [lv.sup_error for lv in levels]
    assert all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))
    for lv in levels:
        assert verify_convex(lv.pair.f1).ok and verify_convex(lv.pair.f2).ok
        assert abs(float(lv.pair.f1(np.zeros((1, 2)))[0])) < 1e-9  # normalized at the centroid
    lips = [lv.lipschitz_f1 for lv in levels]
    if key == "smooth":
        assert lips[-1] <= 1.05 * lips[-2]


def test_family_deterministic_and_convex():
    fam = CurveFamily(count=12, seed=5, samples=512)
    a, b = generate_family(fam), generate_family(fam)
    assert [cid for cid, _ in a] == [cid for cid, _ in b]
    assert all(np.array_equal(c1.points, c2.points) for (_, c1), (_, c2) in zip(a, b))
    sq = unit_square()
    for cid, c in a:
        assert sq.contains(c.points, tol=1e-9).all(), cid
        assert is_convex_loop(c.points[:-1])
    ids = [cid for cid, _ in a]
    assert ids[:3] == ["circle-centroid-r1", "circle-centroid-r0.5", "circle-centroid-r0.25"]
    assert sum(cid.startswith("poly") for cid in ids) == 12
    circ = generate_family(CurveFamily("circle_family", count=4, seed=1, samples=256))
    assert sum(cid.startswith("circle0") for cid, _ in circ) == 4
    with pytest.raises(ValueError):
        CurveFamily(kind="bogus")


def test_family_3d():
    for kind in ("sphere_sections", "coord_convex_family"):
        curves = generate_family(CurveFamily(kind, count=5, seed=2, samples=256))
        assert len(curves) == 6 and all(c.dim == 3 for _, c in curves)


def test_hot_spot_localizes_cone():
    f = lambda q: np.hypot(q[..., 0] - 0.3, q[..., 1] + 0.4)  # noqa: E731
    p = hot_spot_search(f, unit_square())
    assert np.linalg.norm(p - [0.3, -0.4]) < 0.02


def test_diagnose_verdicts():
    fam = CurveFamily(count=8, seed=0)
    assert dc_diagnose(get_builtin("osc"), family=fam, refinement=(1024, 2048, 4096, 8192)).verdict == "divergent"
    res = dc_diagnose(get_builtin("saddle"), family=fam, refinement=(1024, 2048, 4096, 8192))
    assert res.verdict == "likely_dc"
    assert res.constant_estimate == pytest.approx(max(r.levels[-1][1] for r in res.reports))
    assert res.hot_spot is not None and np.linalg.norm(res.hot_spot) < 0.05
    d = res.to_dict()
    assert d["worst_curve"] in {r["curve_id"] for r in d["reports"]}


def test_osc_worst_curve_is_a_circle():
    res = dc_diagnose(get_builtin("osc"), family=CurveFamily(count=4, seed=0))
    assert res.verdict == "divergent" and res.worst_curve.startswith("circle")


def test_linear_constant_is_gradient_times_curve_turn():
    res = dc_diagnose(get_builtin("linear", "1,-2"), family=CurveFamily(count=6, seed=1), hot_spots=False)
    assert res.verdict == "likely_dc"
    for r in res.reports:
        assert r.levels[-1][1] <= np.sqrt(5) * r.extra["curve_variation"] * (1 + 1e-6)


def test_threads_do_not_change_results(monkeypatch):
    fam = CurveFamily(count=5, seed=3)
    a = dc_diagnose(get_builtin("maxcoord"), family=fam, refinement=SCHED, threads=1).to_dict()
    b = dc_diagnose(get_builtin("maxcoord"), family=fam, refinement=SCHED, threads=4).to_dict()
    assert a == b
    monkeypatch.setenv("DCSPLIT_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("DCSPLIT_THREADS", "x")
    assert thread_count() >= 1
    assert _map(lambda x: x * x, range(10), 4) == [x * x for x in range(10)]


def test_diagnose_nd():
    res = dc_diagnose_nd(get_builtin("norm1"), CurveFamily("sphere_sections", count=4, seed=0), SCHED)
    assert res.verdict == "likely_dc"
    with pytest.raises(UnsupportedDimension):
        dc_diagnose_nd(get_builtin("norm2"), [("flat", circle_curve(1, 64))], SCHED)
    with pytest.raises(EmptyFamily):
        dc_diagnose_nd(get_builtin("norm2"), [], SCHED)
    with pytest.raises(ValueError):
        dc_diagnose(get_builtin("norm2"), family=CurveFamily("sphere_sections"))


def _circle_traces(f, at, alphas, n=1024):
    t = uniform_angles(n)
    d = np.column_stack([np.cos(t), np.sin(t)])
    at = np.asarray(at, float)
    fx = float(f(at[None])[0])
    return [trace_from_values(t, (f(at + a * d) - fx) / a, True, 2 * np.pi) for a in alphas]


def test_qd_sequence_smooth_point():
    alphas = [0.1 / 2**k for k in range(6)]
    res = qd_sequence_test(_circle_traces(get_builtin("poly2"), [0.2, 0.1], alphas))
    assert res.conditions_hold and res.condition_a and res.condition_b
    assert res.limit_variation_bound == pytest.approx(2 * res.c_estimate)


def test_qd_sequence_with_limit_and_failures():
    t = uniform_angles(512)
    lim = trace_from_values(t, np.cos(2 * t), True, 2 * np.pi)
    seq = [trace_from_values(t, np.cos(2 * t) + 2.0**-k * np.sin(t), True, 2 * np.pi) for k in range(5)]
    res = qd_sequence_test(seq, limit=lim)
    assert res.conditions_hold and res.limit_variation == pytest.approx(16, rel=1e-3)
    # non-converging sequence violates (a)
    bad = [trace_from_values(t, np.cos(2 * t) + (-1) ** k * np.sin(t), True, 2 * np.pi) for k in range(5)]
    assert not qd_sequence_test(bad).condition_a
    # growing variation violates (b)
    grow = [trace_from_values(t, 2.0**-k * np.cos(2**k * t), True, 2 * np.pi) for k in range(1, 6)]
    assert not qd_sequence_test(grow).condition_b
    with pytest.raises(GridMismatch):
        qd_sequence_test([seq[0], trace_from_values(uniform_angles(256), np.zeros(256), True, 2 * np.pi)])
    with pytest.raises(GridMismatch):
        qd_sequence_test([seq[0]])


def test_qd_sequence_scaled_saddle():
    t = uniform_angles(2048)
    seq = [trace_from_values(t, (1 - 1 / k) * np.cos(2 * t), True, 2 * np.pi) for k in range(1, 21)]
    res = qd_sequence_test(seq)
    assert res.conditions_hold
    assert 15 < res.c_estimate <= 16 + 1e-6
    assert res.limit_variation_bound == pytest.approx(2 * res.c_estimate)
    short = qd_sequence_test(seq[:5])
    assert short.conditions_hold


def test_qd_sequence_plateau_limit_fails():
    # f_k plateau functions: directional derivatives 0 at the point, limit 1
    t = uniform_angles(256)
    seq = [trace_from_values(t, np.zeros(256), True, 2 * np.pi) for _ in range(5)]
    lim = trace_from_values(t, np.ones(256), True, 2 * np.pi)
    res = qd_sequence_test(seq, limit=lim)
    assert not res.condition_a and not res.conditions_hold
