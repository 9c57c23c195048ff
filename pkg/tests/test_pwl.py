import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcsplit.builtins import get_builtin
from dcsplit.errors import DegenerateTriangle, NonConforming, OutOfDomain, PWLError, SectorTooWide
from dcsplit.pwl import (
    build_sector_fan,
    build_triangulated,
    edge_table,
    enumerate_edges,
    evaluate,
    fan_from_function,
    fan_gradient_at,
    lipschitz_constant,
    locate,
    uniform_angles,
)

from conftest import grid_mesh, grid_points, grid_triangles


def test_fan_interpolates_rays_and_is_homogeneous():
    fan = fan_from_function(get_builtin("saddle"), 12)
    u = fan.rays
    assert np.allclose(fan(u), fan.ray_values)
    x = np.array([[0.3, -0.7], [2.0, 1.0]])
    assert np.allclose(fan(3.5 * x), 3.5 * fan(x))
    assert evaluate(fan, [0.0, 0.0]) == 0.0


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=6, max_size=24), st.floats(0.01, 100))
def test_fan_homogeneity_property(vals, lam):
    fan = build_sector_fan(vals, uniform_angles(len(vals), 0.1))
    rng = np.random.default_rng(len(vals))
    x = rng.normal(size=(20, 2))
    assert np.allclose(fan(lam * x), lam * fan(x), rtol=1e-9, atol=1e-9)
    # continuity across rays: both neighbouring gradients agree on the ray
    g = fan.sector_gradients
    assert np.allclose((g * fan.rays).sum(1), fan.ray_values, atol=1e-9)
    assert np.allclose((np.roll(g, 1, axis=0) * fan.rays).sum(1), fan.ray_values, atol=1e-9)


def test_fan_errors():
    with pytest.raises(PWLError):
        build_sector_fan([1, 1], [0, 1])
    with pytest.raises(SectorTooWide):
        build_sector_fan([1, 1, 1], [0, 0.5, 1.0])
    with pytest.raises(PWLError):
        build_sector_fan([1, 1, 1, 1], [0, 2, 1, 3])
    fan = build_sector_fan([1, 1, 1, 1], [0, 1.5, 3, 4.5, 2 * math.pi])
    assert fan.m == 4


def test_fan_gradient_and_lipschitz_norm2():
    fan = fan_from_function(get_builtin("norm2"), 8)
    assert lipschitz_constant(fan) == pytest.approx(1 / math.cos(math.pi / 8), abs=1e-12)
    g = fan_gradient_at(fan, [1.0, 0.2])
    assert np.linalg.norm(g) == pytest.approx(1 / math.cos(math.pi / 8))


def test_mesh_exact_on_linear():
    f = get_builtin("linear", "1,-2")
    mesh = grid_mesh(f, 5, jitter=0.2, seed=1)
    assert np.allclose(mesh.gradients, [1, -2])
    q = np.random.default_rng(0).uniform(-1, 1, (100, 2))
    assert np.allclose(mesh(q), f(q))
    assert lipschitz_constant(mesh) == pytest.approx(math.sqrt(5))


def test_mesh_locate_and_out_of_domain():
    mesh = grid_mesh(get_builtin("norm2"), 3)
    assert (locate(mesh, [[0.1, 0.1], [-0.9, 0.9]]) >= 0).all()
    assert locate(mesh, [[2.0, 0.0]])[0] == -1
    with pytest.raises(OutOfDomain):
        mesh([[1.5, 0.0]])


def test_mesh_validation():
    P = grid_points(3)
    T = grid_triangles(3)
    with pytest.raises(NonConforming):
        build_triangulated(P, T[:-1], np.zeros(len(P)))
    with pytest.raises(DegenerateTriangle):
        build_triangulated([[0, 0], [1, 0], [2, 0]], [[0, 1, 2]], [0, 0, 0])
    with pytest.raises(PWLError):
        build_triangulated(P, T, np.zeros(3))
    with pytest.raises(NonConforming):
        build_triangulated(P, np.array([[0, 1, 99]]), np.zeros(len(P)))
    # clockwise triangles are reoriented
    m = build_triangulated([[0, 0], [0, 1], [1, 0]], [[0, 1, 2]], [0, 1, 2])
    assert np.allclose(m.gradients, [[2, 1]])


def test_edge_table_classification():
    # |x| on a mesh with the kink along x = 0 -> convex edges only on that line
    mesh = grid_mesh(lambda p: np.abs(p[:, 0]), 5)
    tab = edge_table(mesh)
    convex = tab.kind == 1
    assert convex.any() and not (tab.kind == -1).any()
    assert np.allclose(tab.anchor[convex][:, 0], 0.0)
    neg = grid_mesh(lambda p: -np.abs(p[:, 0]), 5)
    assert (edge_table(neg).kind == -1).sum() == convex.sum()
    edges = enumerate_edges(mesh)
    assert len(edges) == len(tab)
    e = next(e for e in edges if e.kind == "convex")
    assert e.strength > 0 and np.dot(e.jump, e.normal) == pytest.approx(e.strength)


def test_fan_edge_table_saddle():
    fan = fan_from_function(get_builtin("saddle"), 64)
    tab = edge_table(fan)
    assert len(tab) == 64
    assert (tab.kind == 1).sum() + (tab.kind == -1).sum() + (tab.kind == 0).sum() == 64
    assert (tab.kind == 1).any() and (tab.kind == -1).any()
