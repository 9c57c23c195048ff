import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcsplit.builtins import all_builtins, get_builtin
from dcsplit.decompose import (
    aleksandrov_decompose,
    collect_ridges,
    ridge_from_edge,
    shift_linear,
    steiner_point,
    subdifferential_zero,
    verify_convex,
)
from dcsplit.errors import NotConvexEdge, NotConvexInput
from dcsplit.pwl import build_sector_fan, edge_table, enumerate_edges, fan_from_function, lipschitz_constant, uniform_angles

from conftest import grid_mesh


def _check_pair(f, pair, pts):
    assert verify_convex(pair.f1).ok and verify_convex(pair.f2).ok
    assert np.allclose(pair(pts), f(pts), atol=1e-9)


@pytest.mark.parametrize("key", ["saddle", "norm1", "maxcoord", "poly2", "osc", "smooth", "absdiff"])
@pytest.mark.parametrize("m", [8, 33, 128])
def test_fan_decomposition(key, m):
    fan = fan_from_function(get_builtin(key), m, t0=0.1)
    pair = aleksandrov_decompose(fan)
    pts = np.random.default_rng(m).normal(size=(200, 2))
    _check_pair(fan, pair, pts)


def test_convex_fan_has_linear_f2():
    fan = fan_from_function(get_builtin("norm1"), 64)
    pair = aleksandrov_decompose(fan)
    assert pair.edge_counts["concave"] == 0
    assert (edge_table(pair.f2).kind == 0).all()


def test_concave_fan_has_zero_f1():
    fan = fan_from_function(lambda q: -get_builtin("norm2")(q), 64)
    pair = aleksandrov_decompose(fan)
    assert np.allclose(pair.f1.ray_values, 0.0, atol=1e-12)
    assert pair.edge_counts["ridges"] == 0


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=5, max_size=40), st.floats(0, 1))
def test_fan_decomposition_property(vals, t0):
    fan = build_sector_fan(vals, uniform_angles(len(vals), t0))
    pair = aleksandrov_decompose(fan)
    assert np.allclose(pair(fan.rays), fan.ray_values, atol=1e-9)
    assert verify_convex(pair.f1).ok and verify_convex(pair.f2).ok


@pytest.mark.parametrize("key", ["saddle", "norm1", "maxcoord", "poly2", "absdiff", "smooth"])
@pytest.mark.parametrize("jitter", [0.0, 0.25])
def test_mesh_decomposition(key, jitter):
    f = get_builtin(key)
    mesh = grid_mesh(f, 5, jitter, seed=3)
    pair = aleksandrov_decompose(mesh)
    pts = np.random.default_rng(1).uniform(-1, 1, (300, 2))
    _check_pair(mesh, pair, pts)
    assert np.allclose(pair.f1.values - pair.f2.values, pair.base.values, atol=1e-12)


def test_mesh_normalization():
    mesh = grid_mesh(get_builtin("saddle"), 5)
    pair = aleksandrov_decompose(mesh, normalize_at=[0.25, 0.25])
    assert abs(float(pair.f1(np.array([[0.25, 0.25]]))[0])) < 1e-12


def test_ridges_and_errors():
    fan = fan_from_function(get_builtin("norm2"), 16)
    ridges, tab = collect_ridges(fan)
    assert len(ridges) == 8  # 16 rays on 8 lines through the origin
    for r in ridges:
        assert r(np.zeros((1, 2)))[0] == 0.0
    concave = next(e for e in enumerate_edges(fan_from_function(lambda q: -get_builtin("norm2")(q), 8)))
    with pytest.raises(NotConvexEdge):
        ridge_from_edge(concave)
    with pytest.raises(NotConvexInput):
        subdifferential_zero(fan_from_function(get_builtin("saddle"), 16))


def test_subdifferential_and_steiner():
    fan = fan_from_function(get_builtin("norm1"), 64)
    sub = subdifferential_zero(fan)
    assert sub.vertices.shape == (4, 2)
    assert np.allclose(np.abs(sub.vertices), 1.0)
    assert np.allclose(steiner_point(fan), 0.0, atol=1e-12)
    lin = fan_from_function(get_builtin("linear", "0.5,-2"), 32)
    assert np.allclose(steiner_point(lin), [0.5, -2])
    shifted = shift_linear(lin, [0.5, -2])
    assert np.allclose(shifted.ray_values, 0.0, atol=1e-12)


def test_lipschitz_of_parts_bounded_for_fans():
    # for fans, parts stay Lipschitz uniformly in m for finite-variation data
    lips = [lipschitz_constant(aleksandrov_decompose(fan_from_function(get_builtin("saddle"), m)).f1)
            for m in (64, 256, 1024)]
    assert max(lips) < 3.0
