import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcsplit.errors import BadRadius, DuplicatePoints, EmptyInput, GeometryError, NoIntersection, TooFewPoints
from dcsplit.geometry import (
    Polygon,
    circle_curve,
    convex_hull_2d,
    convex_polygon_curve,
    coord_convex_curve,
    hausdorff_convex,
    is_convex_loop,
    natural_parametrize,
    projections_convex,
    sphere_section_curve,
)

coords = st.integers(-1000, 1000).map(lambda k: k / 100.0)
point_sets = st.lists(st.tuples(coords, coords), min_size=1, max_size=40)


def test_natural_parametrize_open_and_closed():
    c = natural_parametrize([[0, 0], [3, 0], [3, 4]])
    assert c.length == pytest.approx(7.0)
    assert not c.closed
    sq = natural_parametrize([[0, 0], [1, 0], [1, 1], [0, 1]], closed=True)
    assert sq.length == pytest.approx(4.0)
    assert np.allclose(sq.points[0], sq.points[-1])


def test_natural_parametrize_errors():
    with pytest.raises(TooFewPoints):
        natural_parametrize([[0, 0]])
    with pytest.raises(DuplicatePoints):
        natural_parametrize([[0, 0], [0, 0], [1, 1]])


def test_sample_uniform_in_arclength():
    c = natural_parametrize([[0, 0], [1, 0], [1, 1], [0, 1]], closed=True)
    t, pts = c.sample(8)
    assert np.allclose(np.diff(t), 0.5)
    assert np.allclose(pts[2], [1, 0])
    t, pts = natural_parametrize([[0, 0], [2, 0]]).sample(5)
    assert np.allclose(pts[:, 0], [0, 0.5, 1, 1.5, 2])


def test_circle_curve():
    c = circle_curve(2.0, 720, (1.0, -1.0))
    assert c.class_tag == "circle"
    assert c.length == pytest.approx(2 * 720 * 2.0 * math.sin(math.pi / 720))
    assert np.allclose(np.linalg.norm(c.points - [1, -1], axis=1), 2.0)
    with pytest.raises(BadRadius):
        circle_curve(0.0)
    with pytest.raises(TooFewPoints):
        circle_curve(1.0, 2)


def test_sphere_section():
    c = sphere_section_curve([0, 0, 1], 0.6, 400)
    assert c.dim == 3
    assert np.allclose(c.points[:, 2], 0.6)
    assert np.allclose(np.linalg.norm(c.points, axis=1), 1.0)
    assert projections_convex(c)
    with pytest.raises(NoIntersection):
        sphere_section_curve([1, 0, 0], 1.5)
    with pytest.raises(GeometryError):
        sphere_section_curve([0, 0, 0], 0.0)


def test_convex_loops():
    assert is_convex_loop(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float))
    assert not is_convex_loop(np.array([[0, 0], [2, 0], [1, 0.2], [1, 2]], float))
    with pytest.raises(GeometryError):
        convex_polygon_curve([[0, 0], [2, 0], [1, 0.2], [1, 2]])
    assert convex_polygon_curve([[0, 0], [1, 0], [0, 1]]).class_tag == "convex_boundary"
    with pytest.raises(GeometryError):
        coord_convex_curve([[0, 0, 0], [2, 0, 0], [1, 0.2, 0], [1, 2, 0]])


def test_hull_basic():
    h = convex_hull_2d([[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5], [1, 0.5]])
    assert len(h) == 4
    assert h.area == pytest.approx(1.0)
    assert h.perimeter == pytest.approx(4.0)
    assert np.allclose(h.centroid, [0.5, 0.5])
    assert h.diameter == pytest.approx(math.sqrt(2))
    with pytest.raises(EmptyInput):
        convex_hull_2d([])
    assert len(convex_hull_2d([[1, 1], [1, 1]])) == 1
    seg = convex_hull_2d([[0, 0], [1, 0], [2, 0]])
    assert len(seg) == 2 and seg.perimeter == pytest.approx(4.0)


@settings(max_examples=60, deadline=None)
@given(point_sets)
def test_hull_properties(pts):
    pts = np.array(pts, dtype=float)
    h = convex_hull_2d(pts)
    assert h.contains(pts, tol=1e-9).all()
    assert set(map(tuple, h.vertices)) <= set(map(tuple, pts))
    if len(h) >= 3:
        assert is_convex_loop(h.vertices)
        assert h.area > 0
    # support function of hull equals that of the point set
    u = np.array([[1, 0], [0, 1], [-0.6, 0.8], [0.28, -0.96]])
    assert np.allclose(h.support(u), (u @ pts.T).max(1))


def test_hausdorff():
    sq = Polygon(np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], float))
    assert hausdorff_convex(sq, sq) == pytest.approx(0.0, abs=1e-15)
    assert hausdorff_convex(sq, disk=(np.zeros(2), 1.0)) == pytest.approx(math.sqrt(2) - 1, rel=1e-9)
    pt = Polygon(np.array([[0.0, 0.0]]))
    assert hausdorff_convex(sq, pt) == pytest.approx(math.sqrt(2), rel=1e-6)


def test_boundary_distance_and_contains():
    sq = Polygon(np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], float))
    assert sq.boundary_distance([[0, 0], [0.5, 0]]) == pytest.approx([1.0, 0.5])
    assert sq.contains([[1, 0]]).all()
    assert not sq.contains([[1, 0]], tol=-1e-12).any()


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(coords, coords), min_size=3, max_size=60))
def test_hull_matches_scipy(pts):
    from scipy.spatial import ConvexHull, QhullError

    pts = np.array(pts, dtype=float)
    try:
        ref = ConvexHull(pts)
    except QhullError:
        return  # degenerate (collinear) input; covered by test_hull_basic
    h = convex_hull_2d(pts)
    assert h.area == pytest.approx(ref.volume, rel=1e-9)
    assert h.perimeter == pytest.approx(ref.area, rel=1e-9)
