"""Lattice-count volume estimates, approximate Kovner-Besicovitch points and two
applications of thin covering lattices (operator norms, polyhedral approximation).

Every routine here rests on one fact: if a lattice L covers a symmetric body
K0 with K0 contained in K - c, then eps^n det(L) |eps L & (K - eps K0)| is an
upper bound on vol(K) that is off by at most a (1 + 2 eps)^n factor.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull

from .convexopt import gls_round, line_intervals, support_value
from .enumeration import collect_points, count_points
from .geometry import (
    DEFAULT_TOL, BadDescriptor, CenteredBody, NonCenteredBody,
    ThinLatError, affine_body, gauge_many, intersect_bodies, kb_body, lp_ball_body,
    oracle_body, scale_body, translate_body,
)
from .lattice import LatticeBasis
from .thinlattice import DEFAULT_C0, thin_lattice_general, thin_lattice_symmetric

log = logging.getLogger(__name__)

KB_LADDER_EPS = 0.5
KB_LADDER_ALPHA = 1.0 / 6.0
FAMILY_CHUNK = 200000


class CertificateMissing(ThinLatError):
    pass


def _check_eps(eps, upper):
    if not (isinstance(eps, (int, float)) and math.isfinite(eps) and 0 < eps <= upper):
        raise BadDescriptor("eps", f"eps must lie in (0, {upper}]")


def _covering(K0, provider, c0, tol):
    """A certified K0-covering lattice; a bracket above 1 is absorbed by rescaling."""
    cov = thin_lattice_symmetric(K0, provider, c0, tol)
    if cov.mu_bracket is None:
        raise CertificateMissing("covering radius bracket is missing")
    hi = cov.mu_bracket[1]
    if hi > 1:
        cov = cov.scaled(1.0 / hi)
    return cov


# ---------------------------------------------------------------- volume

@dataclass
class VolumeEstimate:
    V: float
    eps: float
    points_counted: int
    lattice_det: float
    interval: tuple
    center: np.ndarray = None
    lattice: object = None

    def to_json(self):
        return {"V": self.V, "eps": self.eps, "interval": list(self.interval),
                "points": self.points_counted, "lattice_det": self.lattice_det,
                "center": None if self.center is None else self.center.tolist()}


def estimate_volume(K, eps, provider=None, c0=DEFAULT_C0, tol=DEFAULT_TOL,
                    node_budget=None):
    """V with vol(K) <= V <= (1 + eps)^n vol(K), for 0 < eps <= 1."""
    _check_eps(eps, 1.0)
    n = K.n
    if K.symmetric:
        c = K.center.copy()
        cov = thin_lattice_symmetric(translate_body(K, -c), provider, c0, tol)
    else:
        cov, c = thin_lattice_general(K, provider, c0, tol)
    if cov.mu_bracket is None:
        raise CertificateMissing("covering radius bracket is missing")
    if cov.mu_bracket[1] > 1:
        cov = cov.scaled(1.0 / cov.mu_bracket[1])
    half = eps / 2.0
    body = affine_body(K, (1 + half) * np.eye(n), -half * c)
    count = count_points(body, cov.basis.scaled(half), tol, node_budget)
    V = half ** n * cov.basis.det_abs * count
    return VolumeEstimate(V, eps, count, cov.basis.det_abs, (V * (1 + eps) ** -n, V), c, cov)


# ---------------------------------------------------------------- KB points

@dataclass
class ImproveResult:
    x: np.ndarray
    value_lower: float
    rounds: list = field(default_factory=list)


@dataclass
class KBResult:
    c: np.ndarray
    nu: float
    eps: float
    iterations: int

    def to_json(self):
        return {"c": self.c.tolist(), "nu_lower": self.nu, "eps": self.eps,
                "iterations": self.iterations}


def improve_schedule(alpha, eps):
    """(eps0, J): net resolution and worst-case round count."""
    eps0 = eps / (6 + 3 * eps)
    return eps0, math.floor(math.log(1 / alpha) / math.log(1 / (1 - eps0)))


def _rounds_to_target(value, eps, step):
    # rounds after which a known lower bound `value` on nu forces nu >= gamma/(1+eps)
    if (1 + eps) * value >= 1:
        return 0
    return math.ceil(math.log(1 / ((1 + eps) * value)) / step)


def _short_plane_basis(lat):
    """Lagrange-Gauss reduced basis of a planar lattice (same lattice, short rows)."""
    u, v = lat.B[:, 0].copy(), lat.B[:, 1].copy()
    if u @ u > v @ v:
        u, v = v, u
    while True:
        v = v - round(float(u @ v) / float(u @ u)) * u
        if v @ v >= u @ u:
            return LatticeBasis(np.column_stack([u, v]))
        u, v = v, u


def _kb_counts_plane(A, Y, rho, lat, tol):
    """|lat & rho A[y]| for each row y of Y, for a planar body A.

    x lies in rho A[y] iff y + x/rho and y - x/rho both lie in A, so each
    lattice row is the intersection of two line intervals through A.
    """
    lat = _short_plane_basis(lat)
    b0, b1 = lat.B[:, 0], lat.B[:, 1]
    w = lat._inv[1]
    hmax = support_value(A, w, tol)
    hmin = -support_value(A, -w, tol)
    wy = Y @ w
    first = np.ceil(rho * np.maximum(hmin - wy, wy - hmax) - 1e-9).astype(np.int64)
    last = np.floor(rho * np.minimum(hmax - wy, wy - hmin) + 1e-9).astype(np.int64)
    rows = np.maximum(last - first + 1, 0)
    owner = np.repeat(np.arange(len(Y)), rows)
    z1 = (np.arange(int(rows.sum())) - np.repeat(np.cumsum(rows) - rows, rows)
          + np.repeat(first, rows))
    counts = np.zeros(len(Y), dtype=np.int64)
    for s in range(0, len(owner), FAMILY_CHUNK):
        o, z = owner[s:s + FAMILY_CHUNK], z1[s:s + FAMILY_CHUNK, None]
        shift = z * b1 / rho
        lo1, hi1 = line_intervals(A, Y[o] + shift, b0 / rho, tol)
        lo2, hi2 = line_intervals(A, Y[o] - shift, -b0 / rho, tol)
        lo = np.ceil(np.maximum(lo1, lo2))
        hi = np.floor(np.minimum(hi1, hi2))
        counts += np.bincount(o, np.maximum(hi - lo + 1, 0), minlength=len(Y)).astype(np.int64)
    return counts


def kb_counts(A, Y, rho, lat, tol=DEFAULT_TOL):
    """|lat & rho A[y]| for every row y of Y."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if A.n == 2 and A.system.q == 0 and A._membership is None:
        return _kb_counts_plane(A, Y, rho, lat, tol)
    return np.array([count_points(scale_body(kb_body(A, y, tol), rho), lat, tol) for y in Y],
                    dtype=np.int64)


def improve(A, x, alpha, eps, provider=None, c0=DEFAULT_C0, tol=DEFAULT_TOL):
    """Move x toward a point of maximum KB value of A.

    Needs vol(A[x]) >= alpha^n vol(A).  Each round takes the best point of a
    net of (A + x)/2 by (eps0/2) A[x], judged by lattice-count volumes of A[y].
    Stops once the measured values certify nu >= gamma/(1+eps), and never
    after the worst-case round count.
    """
    eps = min(eps, 0.5)
    eps0, J = improve_schedule(alpha, eps)
    step = math.log(1 / (1 - eps0))
    n = A.n
    x = np.asarray(x, dtype=float)
    # every net point y has A[x] inside spread * A[y]; counting on the net
    # lattice then overestimates vol(A[y]) by at most (1 - eps0)^-n
    spread = 2.0 / (1 - eps0)
    fine = eps0 / 2.0
    rho = 1 + fine * spread
    stop = min(J, _rounds_to_target(alpha, eps, step))
    lower = alpha
    rounds = []
    j = 0
    while j < stop:
        j += 1
        cov = _covering(kb_body(A, x, tol), provider, c0, tol)
        L = cov.basis
        shifted = translate_body(A, -x)
        lat = L.scaled(fine)
        Y = x + collect_points(scale_body(shifted, 0.5 + eps0 / 2), lat, tol)
        counts = kb_counts(A, Y, rho, lat, tol)
        whole = count_points(scale_body(shifted, 1 + fine), lat, tol)
        k = int(np.argmax(counts))
        moved = not np.array_equal(Y[k], x)
        x = Y[k]
        lower = max((counts[k] / whole) ** (1.0 / n) / rho, 1e-300)
        stop = min(stop, j + _rounds_to_target(lower, eps, step))
        rounds.append({"round": j, "net_size": len(Y), "value_lower": lower,
                       "count": int(counts[k]), "reference_count": int(whole)})
        log.debug("improve round %d: net %d, nu >= %.6f", j, len(Y), lower)
        if not moved:
            # a round is a function of x alone, so every later round repeats this one
            break
    return ImproveResult(x, lower, rounds)


def _sqrtm(A):
    w, V = np.linalg.eigh(A)
    return (V * np.sqrt(w)) @ V.T


def kb_point(K, eps, provider=None, c0=DEFAULT_C0, tol=DEFAULT_TOL):
    """c in K with vol(K[c]) >= (1+eps)^-n max_y vol(K[y]); eps is clamped to 1/2.

    The body is rounded so the unit ball lies inside it and it lies inside f
    times the ball; the ladder K_i = 2^i B & K then keeps each start point
    good enough for the next call.  The result is mapped back to K's
    coordinates.
    """
    if not (isinstance(eps, (int, float)) and eps > 0):
        raise BadDescriptor("eps", "eps must be positive")
    eps = min(eps, 0.5)
    n = K.n
    rounding = gls_round(K)
    root = _sqrtm(rounding.A)
    rounded = affine_body(K, root, -root @ rounding.t)
    steps = max(1, math.ceil(math.log2(rounding.sandwich_factor)))
    c = np.zeros(n)
    iterations = 0
    for i in range(1, steps):
        rung = intersect_bodies(rounded, lp_ball_body(2, 2.0 ** i, n))
        res = improve(rung, c, KB_LADDER_ALPHA, KB_LADDER_EPS, provider, c0, tol)
        c = res.x
        iterations += len(res.rounds)
    res = improve(rounded, c, KB_LADDER_ALPHA, eps, provider, c0, tol)
    iterations += len(res.rounds)
    back = rounding.t + np.linalg.solve(root, res.x)
    return KBResult(back, res.value_lower, eps, iterations)


# ---------------------------------------------------------------- applications

@dataclass
class OperatorNorm:
    V: float
    bracket: tuple
    net_size: int


def _net_in_body(K, eps, provider, c0, tol):
    """Points of a K-covering lattice scaled by eps/2, inside K.

    Every point of K is within eps K of the set.
    """
    cov = _covering(K, provider, c0, tol)
    return collect_points(K, cov.basis.scaled(eps / 2), tol)


def operator_norm(T, BX, BY, eps, provider=None, c0=DEFAULT_C0, tol=DEFAULT_TOL):
    """max ||T x||_Y over a net of the unit ball BX: (1 - eps/2)||T|| <= V <= ||T||.

    BY is either a symmetric body (the unit ball of Y) or a callable mapping
    an (k, m) array to gauge values.
    """
    _check_eps(eps, 0.5)
    T = np.atleast_2d(np.asarray(T, dtype=float))
    if T.shape[1] != BX.n:
        raise BadDescriptor("matrix", f"matrix needs {BX.n} columns")
    if np.linalg.norm(BX.center) > 1e-9 * (1 + BX.outer_radius) or not BX.symmetric:
        raise NonCenteredBody("the domain ball must be symmetric about the origin")
    if not np.any(T):
        return OperatorNorm(0.0, (0.0, 0.0), 0)
    pts = _net_in_body(BX, eps / 2, provider, c0, tol)
    images = pts @ T.T
    if isinstance(BY, CenteredBody):
        if BY.n != T.shape[0]:
            raise BadDescriptor("target_body", f"target body must have dimension {T.shape[0]}")
        values = gauge_many(BY, images, tol=1e-12)
    else:
        values = np.asarray(BY(images), dtype=float)
    V = float(np.max(values))
    return OperatorNorm(V, (V, V / (1 - eps / 2)), len(pts))


def polar_body(K, tol=DEFAULT_TOL):
    """The polar {u : <u, x> <= 1 for all x in K} of a body containing the origin."""
    n = K.n
    atoms = K.system.atoms
    plain = K._membership is None and K.system.q == 0 and len(atoms) == 1
    if plain and atoms[0].kind == "lin" and np.all(atoms[0].r < 0):
        verts = atoms[0].P / (-atoms[0].r)[:, None]
        if n == 1:
            return _polytope_from_rows(np.array([[1.0], [-1.0]]),
                                       np.array([verts.max(), -verts.min()]))
        hull = ConvexHull(verts)
        return _polytope_from_rows(hull.equations[:, :-1], -hull.equations[:, -1])
    if plain and atoms[0].kind in ("ball", "lp") and np.allclose(atoms[0].r, 0):
        p = atoms[0].p if atoms[0].kind == "lp" else 2.0
        q = math.inf if p == 1 else (1.0 if math.isinf(p) else p / (p - 1))
        return affine_body(lp_ball_body(q, 1.0, n), atoms[0].P.T)
    if not K.contains(np.zeros(n), 0.0):
        raise NonCenteredBody("the origin must be interior to the body")
    member = lambda u, t: support_value(K, u, tol) <= 1 + t
    return oracle_body(member, np.zeros(n), 1.0 / K.outer_radius,
                       1.0 / K.inner_radius, K.symmetric)


def _polytope_from_rows(A, b):
    from .geometry import polytope_body
    return polytope_body(A, b)


def polyhedral_approx(K, eps, provider=None, c0=DEFAULT_C0, tol=DEFAULT_TOL):
    """A symmetric polytope P (as an hpolytope descriptor) with K <= P <= (1+eps) K."""
    _check_eps(eps, 1.0)
    if np.linalg.norm(K.center) > 1e-9 * (1 + K.outer_radius) or not K.symmetric:
        raise NonCenteredBody("polyhedral_approx needs a body symmetric about the origin")
    # a delta-net of the polar with delta = eps/(1+eps) gives P inside K/(1-delta) = (1+eps)K
    delta = eps / (1 + eps)
    net = _net_in_body(polar_body(K, tol), delta, provider, c0, tol)
    net = net[np.linalg.norm(net, axis=1) > 1e-12]
    keyed = {}
    for a in net:
        s = a if tuple(np.round(a, 12)) > tuple(np.round(-a, 12)) else -a
        keyed.setdefault(tuple(np.round(s, 12)), s)
    rows = np.array([keyed[k] for k in sorted(keyed)])
    A = np.vstack([rows, -rows])
    return {"type": "hpolytope", "A": A.tolist(), "b": [1.0] * len(A)}
