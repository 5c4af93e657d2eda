import math

import numpy as np
import pytest

from helpers import polygon_body, random_polygon, symmetric_polygon
from thinlat.geometry import (
    BadDescriptor, gauge_many, kb_body, lp_ball_body,
    polytope_body, scale_body,
)
from thinlat.lattice import LatticeBasis
from thinlat.refcheck import Polygon2D, brute_kb, exact_area, kb_area
from thinlat.enumeration import count_points
from thinlat.volume import (
    estimate_volume, improve, improve_schedule, kb_counts, kb_point, operator_norm,
    polar_body, polyhedral_approx,
)

SQUARE = lp_ball_body("inf", 1.0, 2)
TRIANGLE = Polygon2D([(0, 0), (1, 0), (0, 1)])


def test_volume_square_quarter():
    est = estimate_volume(SQUARE, 0.25)
    assert 4.0 <= est.V <= 4.0 * 1.25 ** 2
    assert est.V == (0.125 ** 2) * est.lattice_det * est.points_counted
    assert est.interval == pytest.approx((est.V / 1.25 ** 2, est.V))


def test_volume_triangle_quarter():
    est = estimate_volume(polygon_body(TRIANGLE), 0.25)
    assert 0.5 <= est.V <= 0.78125


def test_volume_nested_intervals_disk():
    K = lp_ball_body(2, 1.0, 2)
    for eps in (1.0, 0.5, 0.25, 0.125):
        est = estimate_volume(K, eps)
        assert math.pi <= est.V <= (1 + eps) ** 2 * math.pi


def test_volume_random_polygons(rng):
    for _ in range(3):
        P = random_polygon(rng, shift=rng.normal(size=2))
        est = estimate_volume(polygon_body(P), 0.5)
        a = exact_area(P)
        assert a * (1 - 1e-9) <= est.V <= 2.25 * a


def test_volume_rejects_bad_eps():
    with pytest.raises(BadDescriptor):
        estimate_volume(SQUARE, 0.0)
    with pytest.raises(BadDescriptor):
        estimate_volume(SQUARE, 1.5)


def test_improve_schedule_example():
    eps0, J = improve_schedule(1 / 6, 0.5)
    assert eps0 == pytest.approx(1 / 15)
    assert J == math.floor(math.log(6) / math.log(15 / 14)) == 25


def test_kb_counts_match_enumeration(rng):
    P = random_polygon(rng)
    A = polygon_body(P)
    lat = LatticeBasis(np.array([[0.11, 0.03], [0.0, 0.09]]))
    Y = np.array([P.centroid(), P.centroid() + [0.05, -0.02]])
    ours = kb_counts(A, Y, 1.3, lat)
    for y, c in zip(Y, ours):
        assert c == count_points(scale_body(kb_body(A, y), 1.3), lat)


def test_improve_symmetric_center_stays_good():
    res = improve(SQUARE, np.zeros(2), 1 / 6, 0.5)
    assert kb_area(Polygon2D([(-1, -1), (1, -1), (1, 1), (-1, 1)]), res.x) / 4 >= 1 / 1.5 ** 2


def test_improve_triangle_progress():
    A = polygon_body(TRIANGLE)
    incenter = np.array([1, 1]) * (1 / (2 + math.sqrt(2)))
    res = improve(A, incenter, 1 / 6, 0.5)
    values = [r["value_lower"] for r in res.rounds]
    assert values == sorted(values)
    c, best = brute_kb(TRIANGLE, 0.02)
    assert kb_area(TRIANGLE, res.x) / 0.5 >= best / 1.5 ** 2 - 1e-3


def test_kb_point_symmetric_and_triangle():
    K = polytope_body([[1, 0], [-1, 0], [0, 1], [0, -1]], [3, -1, 2, 0])
    res = kb_point(K, 0.5)
    P = Polygon2D([(1, 0), (3, 0), (3, 2), (1, 2)])
    assert kb_area(P, res.c) / 4 >= 1 / 1.5 ** 2 - 1e-3
    tri = kb_point(polygon_body(TRIANGLE), 0.5)
    assert TRIANGLE.contains(tri.c)
    _, best = brute_kb(TRIANGLE, 0.02)
    assert kb_area(TRIANGLE, tri.c) / 0.5 >= best / 1.5 ** 2 - 1e-3
    assert tri.nu <= 1 + 1e-9
    assert tri.to_json()["iterations"] == tri.iterations


def test_kb_point_beats_centroid_bound(rng):
    P = random_polygon(rng, k=5)
    res = kb_point(polygon_body(P), 0.5)
    assert kb_area(P, res.c) / exact_area(P) >= 1.5 ** -2 * 2 ** -2


def test_operator_norm_examples():
    L2 = lp_ball_body(2, 1.0, 2)
    res = operator_norm(np.eye(2), L2, L2, 0.5)
    assert 0.75 <= res.V <= 1.0 + 1e-9
    assert res.bracket[0] == res.V and res.bracket[1] >= 1.0 - 1e-9
    Linf = lp_ball_body("inf", 1.0, 2)
    res = operator_norm(np.diag([2.0, 1.0]), Linf, Linf, 0.5)
    assert 2 * 0.75 <= res.V <= 2.0 + 1e-9
    assert operator_norm(np.zeros((2, 2)), L2, L2, 0.5).V == 0.0


def test_operator_norm_callable_target(rng):
    T = rng.normal(size=(3, 2))
    L2 = lp_ball_body(2, 1.0, 2)
    res = operator_norm(T, L2, lambda Y: np.linalg.norm(Y, axis=1), 0.25)
    true = np.linalg.norm(T, 2)
    assert (1 - 0.125) * true <= res.V <= true * (1 + 1e-9)


def test_polar_body_square_and_disk():
    P = polar_body(SQUARE)
    assert P.contains([0.49, 0.49]) and not P.contains([0.6, 0.6])
    D = polar_body(lp_ball_body(2, 2.0, 2))
    assert D.contains([0.49, 0.0]) and not D.contains([0.51, 0.0])


def test_polyhedral_approx_square_and_disk():
    for K, eps in [(SQUARE, 0.5), (lp_ball_body(2, 1.0, 2), 0.25)]:
        desc = polyhedral_approx(K, eps)
        A = np.array(desc["A"])
        assert desc["b"] == [1.0] * len(A)
        ang = np.linspace(0, 2 * np.pi, 360, endpoint=False)
        U = np.column_stack([np.cos(ang), np.sin(ang)])
        # K inside P: boundary points of K satisfy every row
        kb = U / gauge_many(K, U, tol=1e-12)[:, None]
        assert np.all(kb @ A.T <= 1 + 1e-7)
        # P inside (1+eps) K: the boundary of P along each direction has gauge <= 1 + eps
        t = 1 / np.max(U @ A.T, axis=1)
        assert np.all(gauge_many(K, U * t[:, None], tol=1e-12) <= 1 + eps + 1e-6)


def test_polyhedral_approx_facet_counts_reported(rng):
    counts = []
    for _ in range(3):
        P = symmetric_polygon(rng)
        desc = polyhedral_approx(polygon_body(P), 0.5)
        counts.append(len(desc["b"]) / (1 + 1 / 0.5) ** 2)
    # the constant is empirical: reported, not bounded
    print("facets / (1 + 1/eps)^2:", [round(c, 2) for c in counts])
    assert all(c > 0 for c in counts)
