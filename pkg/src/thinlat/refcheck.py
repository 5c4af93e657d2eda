"""Brute-force reference oracles used to check the main pipeline.

Nothing here imports from the rest of the package: each routine is an
independent, deliberately naive reimplementation (shoelace areas, polygon
clipping, grid searches, box scans) so agreement with the pipeline is
meaningful.
"""

import itertools
import math

import numpy as np
from scipy.spatial import ConvexHull


class DegeneratePolygon(Exception):
    pass


class GridTooCoarse(Exception):
    pass


class Polygon2D:
    """Convex polygon with counterclockwise vertices."""

    def __init__(self, vertices):
        V = np.asarray(vertices, dtype=float).reshape(-1, 2)
        if len(V) >= 3 and _signed_area(V) < 0:
            V = V[::-1]
        self.vertices = V

    def __len__(self):
        return len(self.vertices)

    def is_empty(self):
        return len(self.vertices) < 3 or abs(_signed_area(self.vertices)) < 1e-15

    def halfplanes(self):
        """(A, b) with the polygon equal to {x : A x <= b}."""
        V = self.vertices
        E = np.roll(V, -1, axis=0) - V
        A = np.column_stack([E[:, 1], -E[:, 0]])
        b = np.einsum("ij,ij->i", A, V)
        return A, b

    def contains(self, x, tol=1e-12):
        A, b = self.halfplanes()
        norms = np.linalg.norm(A, axis=1)
        return bool(np.all(A @ np.asarray(x, float) - b <= tol * norms))

    def translated(self, t):
        return Polygon2D(self.vertices + np.asarray(t, float))

    def scaled(self, s, about=(0.0, 0.0)):
        about = np.asarray(about, float)
        V = about + s * (self.vertices - about)
        return Polygon2D(V if s > 0 else V[::-1])

    def reflected(self, c):
        """The point reflection 2c - P."""
        return Polygon2D(2 * np.asarray(c, float) - self.vertices)

    def centroid(self):
        V = self.vertices
        W = np.roll(V, -1, axis=0)
        cross = V[:, 0] * W[:, 1] - W[:, 0] * V[:, 1]
        a = cross.sum() / 2
        return np.array([((V[:, 0] + W[:, 0]) * cross).sum(),
                         ((V[:, 1] + W[:, 1]) * cross).sum()]) / (6 * a)


def _signed_area(V):
    x, y = V[:, 0], V[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def exact_area(P):
    V = P.vertices if isinstance(P, Polygon2D) else np.asarray(P, float)
    if len(V) < 3:
        raise DegeneratePolygon("fewer than three vertices")
    a = abs(_signed_area(V))
    if a == 0:
        raise DegeneratePolygon("zero area")
    return a


def area_or_zero(P):
    return 0.0 if P.is_empty() else abs(_signed_area(P.vertices))


def clip(P, Q):
    """Sutherland-Hodgman intersection of two convex polygons."""
    out = [tuple(v) for v in P.vertices]
    Qv = Q.vertices
    for i in range(len(Qv)):
        a, b = Qv[i], Qv[(i + 1) % len(Qv)]
        inp, out = out, []
        if not inp:
            break

        def side(p):
            return (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])

        for j in range(len(inp)):
            cur, prev = inp[j], inp[j - 1]
            sc, sp = side(cur), side(prev)
            if sc >= 0:
                if sp < 0:
                    out.append(_cross_point(prev, cur, sp, sc))
                out.append(cur)
            elif sp >= 0:
                out.append(_cross_point(prev, cur, sp, sc))
    return Polygon2D(_dedupe(out))


def _cross_point(p, q, sp, sq):
    t = sp / (sp - sq)
    return (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]))


def _dedupe(pts, eps=1e-14):
    keep = []
    for p in pts:
        if not keep or math.dist(p, keep[-1]) > eps:
            keep.append(p)
    if len(keep) > 1 and math.dist(keep[0], keep[-1]) <= eps:
        keep.pop()
    return np.array(keep, dtype=float).reshape(-1, 2)


def polygon_from_halfplanes(A, b, box=1e3):
    """Polygon {x : A x <= b} by clipping a large box."""
    P = Polygon2D([(-box, -box), (box, -box), (box, box), (-box, box)])
    for a, beta in zip(np.asarray(A, float), np.asarray(b, float)):
        # the halfplane a.x <= beta as a long edge, interior on the left
        a = np.asarray(a)
        p0 = a * beta / (a @ a)
        tangent = np.array([a[1], -a[0]])
        tangent /= np.linalg.norm(tangent)
        big = 4 * box
        far = p0 - a / np.linalg.norm(a) * big
        H = Polygon2D([p0 - big * tangent, p0 + big * tangent,
                       far + big * tangent, far - big * tangent])
        P = clip(P, H)
    return P


def kb_area(P, c):
    """Area of (P - c) & (c - P)."""
    c = np.asarray(c, float)
    return area_or_zero(clip(P.translated(-c), P.reflected(c).translated(-c)))


def minkowski_polygon(P, Q):
    pts = (P.vertices[:, None, :] + Q.vertices[None, :, :]).reshape(-1, 2)
    hull = ConvexHull(pts)
    return Polygon2D(pts[hull.vertices])


def regular_polygon(k, radius=1.0, phase=0.0, center=(0.0, 0.0)):
    ang = phase + 2 * np.pi * np.arange(k) / k
    return Polygon2D(np.column_stack([radius * np.cos(ang), radius * np.sin(ang)]) + center)


# ---------------------------------------------------------------- polytopes and ellipsoids

def polytope_vertices(A, b, tol=1e-9):
    """Vertices of {A x <= b} by brute force over n-subsets of rows."""
    A = np.asarray(A, float)
    b = np.asarray(b, float)
    m, n = A.shape
    verts = []
    for rows in itertools.combinations(range(m), n):
        S = A[list(rows)]
        if abs(np.linalg.det(S)) < 1e-12:
            continue
        v = np.linalg.solve(S, b[list(rows)])
        if np.all(A @ v <= b + tol * (1 + np.abs(b))):
            verts.append(v)
    return np.array(verts)


def polytope_volume(A, b):
    """Exact volume of a bounded H-polytope (n <= 3) via its vertex hull."""
    V = polytope_vertices(A, b)
    if A.shape[1] == 1:
        return float(V.max() - V.min())
    return float(ConvexHull(V).volume)


def ellipsoid_volume(A):
    """Volume of {x : x^T A x <= 1}."""
    A = np.asarray(A, float)
    n = A.shape[0]
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1) / math.sqrt(np.linalg.det(A))


def polytope_gauge(A, b, x):
    """Gauge of x for {A x <= b} with b > 0: the largest ratio a.x / b."""
    A = np.asarray(A, float)
    b = np.asarray(b, float)
    return max(0.0, float(np.max(A @ np.asarray(x, float) / b)))


def ray_polygon_gauge(P, x):
    """Gauge about the origin of a polygon containing 0, by exact ray/edge intersection."""
    x = np.asarray(x, float)
    if not np.any(x):
        return 0.0
    V = P.vertices
    best = math.inf
    for i in range(len(V)):
        p, q = V[i], V[(i + 1) % len(V)]
        e = q - p
        M = np.column_stack([x, -e])
        if abs(np.linalg.det(M)) < 1e-15:
            continue
        t, s = np.linalg.solve(M, p)
        if t > 0 and -1e-12 <= s <= 1 + 1e-12:
            best = min(best, t)
    return 1.0 / best


# ---------------------------------------------------------------- lattice scans

def coeff_box_scan(contains, center, radius, basis):
    """All lattice points B z with contains(B z), scanning the coefficient box.

    The body is assumed to lie inside the ball of ``radius`` about ``center``.
    """
    B = np.asarray(basis, float)
    Binv = np.linalg.inv(B)
    z0 = Binv @ np.asarray(center, float)
    half = radius * np.linalg.norm(Binv, axis=1)
    ranges = [range(math.floor(z0[i] - half[i]), math.ceil(z0[i] + half[i]) + 1)
              for i in range(len(z0))]
    pts = []
    for z in itertools.product(*ranges):
        x = B @ np.array(z, float)
        if contains(x):
            pts.append(x)
    return np.array(pts).reshape(-1, B.shape[0])


def shortest_vector_scan(gauge, basis, radius):
    """Min gauge over nonzero lattice points with coefficients inside the radius box."""
    B = np.asarray(basis, float)
    half = radius * np.linalg.norm(np.linalg.inv(B), axis=1)
    ranges = [range(-math.ceil(h), math.ceil(h) + 1) for h in half]
    best = math.inf
    for z in itertools.product(*ranges):
        if any(z):
            best = min(best, gauge(B @ np.array(z, float)))
    return best


def brute_distance(gauge, basis, x, radius):
    """min over lattice v of gauge(x - v), scanning coefficients near x."""
    B = np.asarray(basis, float)
    Binv = np.linalg.inv(B)
    z0 = Binv @ np.asarray(x, float)
    half = radius * np.linalg.norm(Binv, axis=1)
    ranges = [range(math.floor(z0[i] - half[i]), math.ceil(z0[i] + half[i]) + 1)
              for i in range(len(z0))]
    return min(gauge(np.asarray(x, float) - B @ np.array(z, float))
               for z in itertools.product(*ranges))


# ---------------------------------------------------------------- covering numbers and KB

def inradius(P):
    A, b = P.halfplanes()
    c = P.centroid()
    norms = np.linalg.norm(A, axis=1)
    # lower bound: distance from the centroid to the nearest edge line
    return float(np.min((b - A @ c) / norms))


def brute_covering_number(C, K, grid_step):
    """(upper, lower) bounds on the number of translates of symmetric K covering C.

    upper: greedy cover of a fine sample of C by translates centered on a grid;
    lower: ceil(area(C - K) / area(2K)).
    """
    if grid_step > inradius(K) / 4:
        raise GridTooCoarse(f"grid step {grid_step} exceeds a quarter of the inradius")
    CK = minkowski_polygon(C, K.scaled(-1.0))
    lower = math.ceil(exact_area(CK) / (4 * exact_area(K)) - 1e-12)
    # samples: grid points of C plus points along its boundary
    V = C.vertices
    lo, hi = V.min(axis=0), V.max(axis=0)
    xs = np.arange(math.floor(lo[0] / grid_step), math.ceil(hi[0] / grid_step) + 1) * grid_step
    ys = np.arange(math.floor(lo[1] / grid_step), math.ceil(hi[1] / grid_step) + 1) * grid_step
    G = np.array([(x, y) for x in xs for y in ys])
    A, b = C.halfplanes()
    norms = np.linalg.norm(A, axis=1)
    inside = np.all(G @ A.T - b <= 1e-12 * norms, axis=1)
    samples = [G[inside]]
    for i in range(len(V)):
        p, q = V[i], V[(i + 1) % len(V)]
        k = max(2, int(math.ceil(np.linalg.norm(q - p) / grid_step)))
        s = np.linspace(0, 1, k, endpoint=False)[:, None]
        samples.append(p + s * (q - p))
    S = np.vstack(samples)
    # candidate centers: grid points of C - K
    Ac, bc = CK.halfplanes()
    lo2, hi2 = CK.vertices.min(axis=0), CK.vertices.max(axis=0)
    xs = np.arange(math.floor(lo2[0] / grid_step), math.ceil(hi2[0] / grid_step) + 1) * grid_step
    ys = np.arange(math.floor(lo2[1] / grid_step), math.ceil(hi2[1] / grid_step) + 1) * grid_step
    cand = np.array([(x, y) for x in xs for y in ys])
    cand = cand[np.all(cand @ Ac.T - bc <= 1e-12 * np.linalg.norm(Ac, axis=1), axis=1)]
    Ak, bk = K.halfplanes()
    scale = np.linalg.norm(Ak, axis=1)
    uncovered = np.ones(len(S), dtype=bool)
    cover = np.zeros((len(cand), len(S)), dtype=bool)
    for j, c in enumerate(cand):
        cover[j] = np.all((S - c) @ Ak.T - bk <= 1e-12 * scale, axis=1)
    upper = 0
    while uncovered.any():
        gain = cover[:, uncovered].sum(axis=1)
        j = int(np.argmax(gain))
        if gain[j] == 0:
            raise GridTooCoarse("grid candidates cannot cover the samples")
        uncovered &= ~cover[j]
        upper += 1
    return upper, lower


def brute_kb(P, grid_step, refinements=2):
    """Grid argmax of area(P[c]) / area(P) over c in P; returns (c, value)."""
    total = exact_area(P)
    center = P.vertices.mean(axis=0)
    V = P.vertices
    best_c, best_v = None, -1.0
    step = grid_step
    lo_box, hi_box = V.min(axis=0), V.max(axis=0)
    for level in range(refinements + 1):
        xs = center[0] + step * np.arange(math.floor((lo_box[0] - center[0]) / step),
                                          math.ceil((hi_box[0] - center[0]) / step) + 1)
        ys = center[1] + step * np.arange(math.floor((lo_box[1] - center[1]) / step),
                                          math.ceil((hi_box[1] - center[1]) / step) + 1)
        for x in xs:
            for y in ys:
                c = (x, y)
                if not P.contains(c):
                    continue
                v = kb_area(P, c) / total
                if v > best_v:
                    best_c, best_v = np.array(c), v
        center = best_c
        lo_box, hi_box = best_c - 2 * step, best_c + 2 * step
        step /= 8
    return best_c, best_v


def hexagon_area(radius):
    return 3 * math.sqrt(3) / 2 * radius ** 2
