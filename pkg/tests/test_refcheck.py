import ast
import math
import pathlib

import numpy as np
import pytest

from helpers import random_polygon, symmetric_polygon
from thinlat import refcheck
from thinlat.refcheck import (
    GridTooCoarse, Polygon2D, brute_covering_number, brute_kb, clip, coeff_box_scan,
    ellipsoid_volume, exact_area, hexagon_area, kb_area, polytope_volume, ray_polygon_gauge,
    regular_polygon,
)

UNIT = Polygon2D([(0, 0), (1, 0), (1, 1), (0, 1)])


def test_refcheck_is_independent_of_the_pipeline():
    tree = ast.parse(pathlib.Path(refcheck.__file__).read_text())
    for node in ast.walk(tree):
        if isinstance(node, ast.ImportFrom):
            assert node.level == 0 and not (node.module or "").startswith("thinlat")
        elif isinstance(node, ast.Import):
            assert not any(a.name.startswith("thinlat") for a in node.names)


def test_exact_areas():
    assert exact_area(UNIT) == 1.0
    assert exact_area(Polygon2D([(0, 0), (1, 0), (0, 1)])) == 0.5
    assert exact_area(regular_polygon(6)) == pytest.approx(3 * math.sqrt(3) / 2)
    assert hexagon_area(1.0) == pytest.approx(3 * math.sqrt(3) / 2)


def test_clip_cases():
    assert exact_area(clip(UNIT, UNIT)) == pytest.approx(1.0)
    assert exact_area(clip(UNIT, UNIT.translated([0.5, 0.5]))) == pytest.approx(0.25)
    assert clip(UNIT, UNIT.translated([3, 0])).is_empty()


def test_clip_commutative_and_idempotent(rng):
    for _ in range(20):
        P, Q = random_polygon(rng), random_polygon(rng, shift=rng.normal(size=2) * 0.5)
        a, b = exact_area(clip(P, Q)), exact_area(clip(Q, P))
        assert a == pytest.approx(b, abs=1e-12)
        assert exact_area(clip(P, P)) == pytest.approx(exact_area(P), abs=1e-12)


def test_polytope_and_ellipsoid_volumes():
    A = np.vstack([np.eye(3), -np.eye(3)])
    assert polytope_volume(A, np.ones(6)) == pytest.approx(8.0)
    assert ellipsoid_volume(np.diag([1.0, 4.0])) == pytest.approx(math.pi / 2)


def test_ray_gauge():
    square = Polygon2D([(-1, -1), (1, -1), (1, 1), (-1, 1)])
    assert ray_polygon_gauge(square, [0.5, 0.25]) == pytest.approx(0.5)
    assert ray_polygon_gauge(square, [0, 0]) == 0.0


def test_covering_number_bounds():
    K = Polygon2D([(-1, -1), (1, -1), (1, 1), (-1, 1)])
    up, lo = brute_covering_number(K, K, 0.25)
    assert (up, lo) == (1, 1)
    up, lo = brute_covering_number(K.scaled(2.0), K, 0.25)
    assert up <= 4 and lo >= 1
    disk = regular_polygon(64, 1.0)
    up, lo = brute_covering_number(regular_polygon(64, 2.0), disk, 0.2)
    assert lo >= 3 and up >= lo
    with pytest.raises(GridTooCoarse):
        brute_covering_number(K, K, 1.0)


def test_covering_number_upper_at_least_lower(rng):
    for _ in range(3):
        K = symmetric_polygon(rng, spread=0.6)
        C = random_polygon(rng, spread=1.5)
        step = refcheck.inradius(K) / 4
        up, lo = brute_covering_number(C, K, step)
        assert up >= lo


def test_brute_kb():
    c, v = brute_kb(Polygon2D([(-1, -1), (1, -1), (1, 1), (-1, 1)]), 0.1)
    assert v == pytest.approx(1.0) and np.allclose(c, 0, atol=1e-9)
    tri = Polygon2D([(0, 0), (1, 0), (0, 1)])
    c, v = brute_kb(tri, 0.02)
    assert v == pytest.approx(2 / 3, abs=2e-3)
    sliver = Polygon2D([(0, 0), (10, 0), (0, 0.3)])
    assert kb_area(sliver, sliver.centroid()) / exact_area(sliver) >= 0.25


def test_coeff_box_scan():
    pts = coeff_box_scan(lambda x: np.max(np.abs(x)) <= 1.5, [0, 0], 1.5 * math.sqrt(2),
                         np.eye(2))
    assert len(pts) == 9
    assert len(coeff_box_scan(lambda x: np.max(np.abs(x)) <= 0.5, [0, 0], 1.0,
                              3 * np.eye(2))) == 1
    assert len(coeff_box_scan(lambda x: False, [0, 0], 1.0, np.eye(2))) == 0
