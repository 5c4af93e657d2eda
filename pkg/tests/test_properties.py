"""Property tests over randomly generated inputs."""

import math

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from thinlat.enumeration import collect_points, count_points
from thinlat.geometry import gauge_many, lp_ball_body, polytope_body, translate_body
from thinlat.lattice import LatticeBasis, adjoin, directional_basis, same_lattice
from thinlat.refcheck import Polygon2D, clip, coeff_box_scan, exact_area, kb_area, polytope_gauge

coord = st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False)
small_int = st.integers(-3, 3)
FAST = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def _basis(entries):
    B = np.array(entries, float).reshape(2, 2) + 1.5 * np.eye(2)
    return B if abs(np.linalg.det(B)) > 0.5 else None


@FAST
@given(st.lists(coord, min_size=4, max_size=4), st.lists(coord, min_size=2, max_size=2),
       st.floats(0.5, 2.5))
def test_enumeration_matches_box_scan(entries, shift, radius):
    B = _basis(entries)
    if B is None:
        return
    lat = LatticeBasis(B)
    A = np.array([[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1]], float)
    b = np.array([radius, radius, radius, radius, 1.5 * radius])
    t = np.array(shift)
    K = translate_body(polytope_body(A, b), t)
    ours = {tuple(np.round(p, 7)) for p in collect_points(K, lat)}
    strict = coeff_box_scan(lambda x: polytope_gauge(A, b, x - t) <= 1 - 1e-7, t,
                            radius * 2.5, B)
    loose = coeff_box_scan(lambda x: polytope_gauge(A, b, x - t) <= 1 + 1e-7, t,
                           radius * 2.5, B)
    assert {tuple(np.round(p, 7)) for p in strict} <= ours
    assert ours <= {tuple(np.round(p, 7)) for p in loose}


@FAST
@given(st.lists(coord, min_size=4, max_size=4),
       st.lists(st.lists(small_int, min_size=2, max_size=2), min_size=2, max_size=2))
def test_directional_basis_preserves_lattice(entries, T):
    B = _basis(entries)
    T = np.array(T, float)
    if B is None or round(abs(np.linalg.det(T))) < 1:
        return
    ref = LatticeBasis(B)
    M = LatticeBasis(B @ T)
    D = directional_basis(M, ref)
    assert same_lattice(D, M)
    assert math.isclose(D.det_abs, M.det_abs, rel_tol=1e-9)
    idx = D.det_abs / ref.det_abs
    assert abs(idx - round(idx)) < 1e-6


@FAST
@given(st.lists(coord, min_size=4, max_size=4),
       st.tuples(st.integers(-1, 1), st.integers(-1, 1)).filter(lambda a: any(a)))
def test_adjoin_divides_det_by_three(entries, a):
    B = _basis(entries)
    if B is None:
        return
    lat = LatticeBasis(B)
    L = adjoin(lat, B @ np.array(a, float) / 3)
    assert math.isclose(lat.det_abs / L.det_abs, 3.0, rel_tol=1e-9)
    assert same_lattice(directional_basis(lat, L), lat)


@FAST
@given(st.floats(0.3, 3.0), st.lists(coord, min_size=2, max_size=2))
def test_gauge_homogeneous_and_subadditive(s, x):
    K = polytope_body([[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [-1, -1]],
                      [1, 1, 1, 1, 1.5, 1.5])
    x = np.array(x)
    y = np.array([0.7, -0.3])
    g = gauge_many(K, np.array([x, s * x, y, x + y]), tol=1e-10)
    assert math.isclose(g[1], s * g[0], rel_tol=1e-7, abs_tol=1e-9)
    assert g[3] <= g[0] + g[2] + 1e-8


@FAST
@given(st.lists(st.tuples(coord, coord), min_size=3, max_size=8),
       st.lists(st.tuples(coord, coord), min_size=3, max_size=8))
def test_clip_commutative(P, Q):
    from scipy.spatial import ConvexHull, QhullError
    try:
        P = Polygon2D(np.array(P)[ConvexHull(P).vertices])
        Q = Polygon2D(np.array(Q)[ConvexHull(Q).vertices])
    except (QhullError, ValueError):
        return
    a, b = clip(P, Q), clip(Q, P)
    area = lambda R: 0.0 if R.is_empty() else exact_area(R)
    assert abs(area(a) - area(b)) <= 1e-9 * (1 + area(P))
    assert abs(area(clip(P, P)) - area(P)) <= 1e-9 * (1 + area(P))


@FAST
@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.05, 0.95),
       st.floats(0.05, 0.95))
def test_sqrt_kb_area_is_midpoint_concave(u1, v1, u2, v2):
    P = Polygon2D([(0, 0), (3, 0), (2, 2), (0, 1)])
    V = P.vertices

    def inside(u, v):
        # bilinear patch of a convex quadrilateral stays inside it
        return (1 - u) * (1 - v) * V[0] + u * (1 - v) * V[1] + u * v * V[2] + (1 - u) * v * V[3]

    x, y = inside(u1, v1), inside(u2, v2)
    f = lambda c: math.sqrt(kb_area(P, c))
    assert f(0.5 * (x + y)) >= 0.5 * (f(x) + f(y)) - 1e-9


@FAST
@given(st.floats(1.1, 4.0))
def test_count_monotone_in_radius(r):
    Z = LatticeBasis.identity(2)
    assert count_points(lp_ball_body(2, r, 2), Z) <= count_points(lp_ball_body(2, r + 0.3, 2), Z)
    if abs(r - round(r)) > 1e-6:
        # off the tolerance band the box count is exact
        assert count_points(lp_ball_body("inf", r, 2), Z) == (2 * math.floor(r) + 1) ** 2
