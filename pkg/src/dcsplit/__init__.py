"""dcsplit: difference-of-convex decompositions and DC diagnostics.

Modules: :mod:`geometry` (curves, convex polygons), :mod:`pwl`
(piecewise-linear functions on meshes and sector fans), :mod:`decompose`
(Aleksandrov decomposition), :mod:`variation` (derivative variation and
turn along curves), :mod:`homogeneous` (positively homogeneous functions,
quasidifferentials), :mod:`dctest` (DC diagnosis) and :mod:`cli`.
"""

__version__ = "1.0.0"

from .builtins import BUILTIN_KEYS, Builtin, all_builtins, get_builtin, linear
from .decompose import DCPair, aleksandrov_decompose, steiner_point, subdifferential_zero, verify_convex
from .dctest import (
    CurveFamily,
    DCVerdict,
    QDSequenceResult,
    dc_decompose_general,
    dc_diagnose,
    dc_diagnose_nd,
    generate_family,
    hot_spot_search,
    qd_sequence_test,
)
from .errors import DCSplitError
from .geometry import (
    Curve,
    Polygon,
    circle_curve,
    convex_hull_2d,
    convex_polygon_curve,
    natural_parametrize,
    sphere_section_curve,
)
from .homogeneous import (
    PHFunction,
    dc_decompose_ph,
    degree_drop,
    degree_lift,
    ph_from_function,
    qd_point_test,
)
from .pwl import (
    SectorFanPH,
    TriangulatedPWL,
    build_sector_fan,
    build_triangulated,
    edge_table,
    enumerate_edges,
    evaluate,
    fan_from_function,
    lipschitz_constant,
)
from .variation import (
    VariationReport,
    circle_trace,
    cumulative_decomposition,
    curve_turn,
    derivative_variation,
    refine_verdict,
    trace,
    variation_report,
)

__all__ = [n for n in dir() if not n.startswith("_")]
