import math

import numpy as np
import pytest

from helpers import polygon_body, random_ellipsoid, random_polygon, random_polytope
from thinlat.convexopt import (
    EllipsoidProjection, PolytopeProjection, fiber_distance, gls_round, line_intervals,
    projection_oracle, support_value, weak_minimize,
)
from thinlat.geometry import (
    ellipsoid_body, kb_body, lp_ball_body, minkowski_sum, polytope_body, scale_body,
    translate_body,
)
from thinlat.refcheck import polytope_vertices

BOX = dict(A=[[1, 0], [-1, 0], [0, 1], [0, -1]], b=[1, 1, 1, 1])


def test_weak_minimize_linear_over_ball():
    K = lp_ball_body(2, 1.0, 2)
    y, val = weak_minimize(K, lambda x: x[0], 1.0, 1e-6)
    assert val == pytest.approx(-1.0, abs=1e-5)
    assert K.contains(y, 1e-6)


def test_weak_minimize_distance_over_box():
    K = polytope_body(**BOX)
    f = lambda x: float(np.linalg.norm(x - np.array([3.0, 0.0])))
    _, val = weak_minimize(K, f, 1.0, 1e-6)
    assert val == pytest.approx(2.0, abs=1e-5)


def test_weak_minimize_matches_vertex_enumeration(rng):
    for _ in range(5):
        A, b = random_polytope(rng, 3)
        K = polytope_body(A, b)
        w = rng.normal(size=3)
        _, val = weak_minimize(K, lambda x: float(w @ x), float(np.linalg.norm(w)), 1e-7)
        best = float(np.min(polytope_vertices(A, b) @ w))
        assert val == pytest.approx(best, abs=1e-5 * (1 + abs(best)))


def _sandwich_holds(K, r, boundary):
    L = np.linalg.cholesky(np.linalg.inv(r.A))
    ang = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    U = np.column_stack([np.cos(ang), np.sin(ang)])
    inner = r.t + U @ L.T
    assert K.contains_many(inner, 1e-7).all()
    d = boundary - r.t
    q = np.einsum("ij,jk,ik->i", d, r.A, d)
    assert np.all(np.sqrt(q) <= r.sandwich_factor * (1 + 1e-7))


def test_gls_round_sandwich(rng):
    for _ in range(5):
        P = random_polygon(rng, shift=rng.normal(size=2))
        K = polygon_body(P)
        _sandwich_holds(K, gls_round(K), P.vertices)
    E, _ = random_ellipsoid(rng, 2)
    K = ellipsoid_body(E)
    r = gls_round(K)
    w, V = np.linalg.eigh(E)
    axes = (V / np.sqrt(w)).T
    _sandwich_holds(K, r, np.vstack([axes, -axes]))


def test_gls_round_translation_equivariance(rng):
    P = random_polygon(rng)
    K = polygon_body(P)
    t = np.array([3.0, -2.0])
    r0 = gls_round(K)
    r1 = gls_round(translate_body(K, t))
    assert np.allclose(r1.t, r0.t + t, atol=1e-8)
    assert np.allclose(r1.A, r0.A, rtol=1e-6, atol=1e-8)


def test_gls_round_one_dimensional():
    K = polytope_body([[1.0], [-1.0]], [3.0, 1.0])
    r = gls_round(K)
    assert r.t == pytest.approx([1.0])
    assert r.A[0, 0] == pytest.approx(0.25)


def test_fiber_distance_lines_through_square():
    K = polytope_body(**BOX)
    B = np.eye(2)
    d, w = fiber_distance(K, B, [0.5])
    assert d == 0.0 and K.contains(w)
    d, _ = fiber_distance(K, B, [2.0])
    assert d == pytest.approx(1.0, abs=1e-6)


def test_line_intervals_square_and_disk():
    K = polytope_body(**BOX)
    lo, hi = line_intervals(K, np.array([[0.0, 0.5], [0.0, 2.0]]), np.array([1.0, 0.0]))
    assert (lo[0], hi[0]) == pytest.approx((-1.0, 1.0), abs=1e-7)
    assert lo[1] > hi[1]
    D = lp_ball_body(2, 1.0, 2)
    lo, hi = line_intervals(D, np.array([[0.0, 0.6]]), np.array([2.0, 0.0]))
    assert (lo[0], hi[0]) == pytest.approx((-0.4, 0.4), abs=1e-6)


def test_support_value(rng):
    A, b = random_polytope(rng, 2)
    K = polytope_body(A, b)
    V = polytope_vertices(A, b)
    for _ in range(5):
        w = rng.normal(size=2)
        assert support_value(K, w) == pytest.approx(float(np.max(V @ w)), abs=1e-6)
    E = lp_ball_body(2, 2.0, 2)
    assert support_value(E, np.array([3.0, 4.0])) == pytest.approx(10.0, abs=1e-4)


def test_projection_oracles_match_closed_forms(rng):
    # the z_1-range of {z : B z in K} is the range of w.x over K, w = row 1 of B^-1
    B = np.array([[1.0, 0.4], [0.2, 1.3]])
    w = np.linalg.inv(B)[1]
    A, b = random_polytope(rng, 2)
    V = polytope_vertices(A, b)
    oracle = projection_oracle(polytope_body(A, b), B)
    assert isinstance(oracle, PolytopeProjection)
    lo, hi = oracle.intervals(1, np.zeros((1, 0)))
    assert (lo[0], hi[0]) == pytest.approx((np.min(V @ w), np.max(V @ w)), abs=1e-8)
    E, t = random_ellipsoid(rng, 2, t=[0.3, -0.2])
    oracle = projection_oracle(ellipsoid_body(E, t), B)
    assert isinstance(oracle, EllipsoidProjection)
    half = math.sqrt(w @ np.linalg.solve(E, w))
    lo, hi = oracle.intervals(1, np.zeros((1, 0)))
    assert (lo[0], hi[0]) == pytest.approx((w @ t - half, w @ t + half), abs=1e-8)
    # level 0: the line through B (0, z_1) meets K in a segment of z_0 values
    tails = np.array([[0.25]])
    lo, hi = oracle.intervals(0, tails)
    ref_lo, ref_hi = line_intervals(ellipsoid_body(E, t), tails @ B[:, 1:].T, B[:, 0], 0.0)
    assert (lo[0], hi[0]) == pytest.approx((ref_lo[0], ref_hi[0]), abs=1e-7)


def test_projection_oracle_for_minkowski_difference():
    K = polytope_body(**BOX)
    diff = minkowski_sum(K, scale_body(K, 0.25), -1.0)
    oracle = projection_oracle(diff, np.eye(2))
    assert oracle is not None
    lo, hi = oracle.intervals(1, np.zeros((1, 0)))
    assert (lo[0], hi[0]) == pytest.approx((-1.25, 1.25), abs=1e-6)
    assert projection_oracle(kb_body(K, [0.1, 0.0]), np.eye(2)) is not None


def test_projection_oracle_absent_for_lp_bodies():
    assert projection_oracle(lp_ball_body(3, 1.0, 2), np.eye(2)) is None
