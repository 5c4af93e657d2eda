"""Random body generators shared by the tests."""

import numpy as np
from scipy.spatial import ConvexHull

from thinlat.geometry import polytope_body
from thinlat.refcheck import Polygon2D


def polygon_body(P):
    A, b = P.halfplanes()
    return polytope_body(A, b)


def random_polygon(rng, k=6, spread=1.0, shift=None):
    """Convex hull of k random points, shifted so its centroid sits at ``shift``."""
    while True:
        pts = rng.normal(size=(k, 2)) * spread
        hull = ConvexHull(pts)
        P = Polygon2D(pts[hull.vertices])
        if len(P) >= 3 and _fat(P):
            break
    c = P.centroid()
    target = np.zeros(2) if shift is None else np.asarray(shift, float)
    return P.translated(target - c)


def symmetric_polygon(rng, k=3, spread=1.0):
    """Hull of k random points and their negatives."""
    while True:
        pts = rng.normal(size=(k, 2)) * spread
        pts = np.vstack([pts, -pts])
        hull = ConvexHull(pts)
        P = Polygon2D(pts[hull.vertices])
        if _fat(P):
            return P


def _fat(P):
    from thinlat.refcheck import exact_area
    V = P.vertices
    diam = max(np.linalg.norm(a - b) for a in V for b in V)
    return exact_area(P) > 0.15 * diam ** 2


def random_polytope(rng, n, m=None):
    """Bounded {A x <= b} with 0 strictly inside."""
    m = 2 * n + 3 if m is None else m
    A = rng.normal(size=(m, n))
    A = np.vstack([A, np.eye(n), -np.eye(n)])
    b = np.concatenate([rng.uniform(0.8, 2.5, size=m), np.full(2 * n, 2.5)])
    return A, b


def random_symmetric_polytope(rng, n, m=None):
    m = n + 2 if m is None else m
    A = rng.normal(size=(m, n))
    A = np.vstack([A, np.eye(n)])
    b = np.concatenate([rng.uniform(0.8, 2.0, size=m), np.full(n, 2.0)])
    return np.vstack([A, -A]), np.concatenate([b, b])


def random_ellipsoid(rng, n, t=None):
    Q = rng.normal(size=(n, n))
    A = Q @ Q.T + 0.5 * np.eye(n)
    A = A / np.max(np.linalg.eigvalsh(A)) * rng.uniform(0.3, 1.5)
    return A, (np.zeros(n) if t is None else np.asarray(t, float))
