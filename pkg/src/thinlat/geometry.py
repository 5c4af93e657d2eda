"""Convex bodies as membership oracles, and the algebra used to build them.

Every body compiles to a :class:`ConstraintSystem`: a list of convex atoms
``g(P z + r) <= 0`` over joint variables ``z = (x, u)``, where ``u`` holds
auxiliary coordinates (only Minkowski sums and polars need them).  Keeping
the structure around lets the optimization engine solve fiber problems
exactly for halfspaces and ellipsoids instead of probing the oracle.

Tolerances: an atom's violation is measured in normalized units that never
exceed the Euclidean distance to the atom's zero set, so ``contains(x, tol)``
accepts everything within ``tol`` of the body and possibly a little more
near sharp corners.
"""

import itertools
import math

import numpy as np

DEFAULT_TOL = 1e-9
GAUGE_BUDGET = 128


class ThinLatError(Exception):
    """Base class for computation errors; the class name is the error id."""


class BadDescriptor(ThinLatError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class UnboundedBody(ThinLatError):
    pass


class EmptyInterior(ThinLatError):
    pass


class NonCenteredBody(ThinLatError):
    pass


class ToleranceTooSmall(ThinLatError):
    pass


class CenterOutsideBody(ThinLatError):
    pass


def ball_volume(n):
    """Volume of the n-dimensional Euclidean unit ball."""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def _spectral_norm(P):
    if P.size == 0:
        return 0.0
    return float(np.linalg.norm(P, 2))


class Atom:
    """One convex constraint g(P z + r) <= 0.

    kinds: "lin" (rowwise P z + r <= 0), "ball" (||P z + r||_2 <= 1),
    "lp" (||P z + r||_p <= 1) and "oracle" (fn(P z + r) <= 1 for a convex,
    positively homogeneous fn such as a gauge).
    """

    __slots__ = ("kind", "P", "r", "p", "scale", "fn")

    def __init__(self, kind, P, r, p=2.0, scale=None, fn=None):
        self.kind = kind
        self.P = np.asarray(P, dtype=float)
        self.r = np.asarray(r, dtype=float)
        self.p = p
        self.fn = fn
        self.scale = self._natural_scale() if scale is None else scale

    def _natural_scale(self):
        if self.kind == "lin":
            norms = np.linalg.norm(self.P, axis=1)
            return np.where(norms > 0, norms, 1.0)
        L = _spectral_norm(self.P)
        if self.kind == "lp" and self.p < 2:
            L *= self.P.shape[0] ** (1.0 / self.p - 0.5)
        if self.kind == "oracle":
            L *= self.fn.lipschitz
        return L if L > 0 else 1.0

    @property
    def dim(self):
        return self.P.shape[1]

    def raw(self, Z):
        return Z @ self.P.T + self.r

    def violation(self, Z):
        """Normalized violation for each row of Z (shape (k, d))."""
        Y = self.raw(Z)
        if self.kind == "lin":
            if Y.shape[1] == 0:
                return np.full(Y.shape[0], -np.inf)
            return np.max(Y / self.scale, axis=1)
        if self.kind == "ball":
            return (np.linalg.norm(Y, axis=1) - 1.0) / self.scale
        if self.kind == "lp":
            return (_lp_norm(Y, self.p) - 1.0) / self.scale
        return (self.fn(Y) - 1.0) / self.scale

    def subgradient(self, z):
        """A subgradient of the violation at a single point z."""
        y = self.P @ z + self.r
        if self.kind == "lin":
            k = int(np.argmax(y / self.scale))
            return self.P[k] / self.scale[k]
        if self.kind == "ball":
            ny = np.linalg.norm(y)
            if ny == 0:
                return np.zeros(self.dim)
            return self.P.T @ (y / ny) / self.scale
        if self.kind == "lp":
            ny = _lp_norm(y[None, :], self.p)[0]
            if ny == 0:
                return np.zeros(self.dim)
            if math.isinf(self.p):
                g = np.zeros_like(y)
                k = int(np.argmax(np.abs(y)))
                g[k] = np.sign(y[k])
            else:
                g = np.sign(y) * (np.abs(y) / ny) ** (self.p - 1)
            return self.P.T @ g / self.scale
        return self.P.T @ self.fn.gradient(y) / self.scale

    def reduce(self, M, o):
        """Substitute z = M v + o, keeping the normalization (fiber reduction)."""
        return Atom(self.kind, self.P @ M, self.r + self.P @ o, self.p, self.scale, self.fn)

    def transform(self, M, o):
        """Substitute z = M v + o and renormalize in the new coordinates."""
        return Atom(self.kind, self.P @ M, self.r + self.P @ o, self.p, None, self.fn)

    def padded(self, left, right):
        d = self.P.shape[0]
        P = np.hstack([np.zeros((d, left)), self.P, np.zeros((d, right))])
        return Atom(self.kind, P, self.r, self.p, self.scale, self.fn)


def _lp_norm(Y, p):
    if math.isinf(p):
        return np.max(np.abs(Y), axis=1)
    return np.sum(np.abs(Y) ** p, axis=1) ** (1.0 / p)


class GaugeFunction:
    """Gauge of a membership-oracle body about its center, by bisection."""

    def __init__(self, membership, inner_radius, outer_radius):
        self.membership = membership
        self.r = inner_radius
        self.R = outer_radius
        self.lipschitz = 1.0 / inner_radius

    def __call__(self, Y):
        return np.array([_bisect_gauge(self.membership, y, self.r, self.R, 1e-12)
                         for y in np.atleast_2d(Y)])

    def gradient(self, y):
        h = 1e-6 * max(1.0, float(np.linalg.norm(y)))
        g = np.zeros_like(y)
        for i in range(len(y)):
            e = np.zeros_like(y)
            e[i] = h
            g[i] = (self(y + e)[0] - self(y - e)[0]) / (2 * h)
        return g


def _bisect_gauge(membership, x, r, R, tol):
    nx = float(np.linalg.norm(x))
    if nx == 0.0:
        return 0.0
    lo, hi = nx / R, nx / r
    for _ in range(GAUGE_BUDGET):
        if hi - lo <= tol * max(1.0, hi):
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        if membership(x / mid):
            hi = mid
        else:
            lo = mid
    raise ToleranceTooSmall(f"gauge bisection did not reach {tol}")


class ConstraintSystem:
    """Atoms over joint variables (x, u); x has n coordinates, u has q."""

    def __init__(self, n, atoms, q=0, u_center=None, u_radius=0.0):
        self.n = n
        self.q = q
        self.atoms = list(atoms)
        self.u_center = np.zeros(q) if u_center is None else np.asarray(u_center, float)
        self.u_radius = float(u_radius)

    @property
    def linear(self):
        return all(a.kind == "lin" for a in self.atoms)

    def violation(self, Z):
        Z = np.atleast_2d(Z)
        out = np.full(Z.shape[0], -np.inf)
        for a in self.atoms:
            out = np.maximum(out, a.violation(Z))
        return out

    def worst_atom(self, z):
        best, best_v = None, -np.inf
        for a in self.atoms:
            v = a.violation(z[None, :])[0]
            if v > best_v:
                best, best_v = a, v
        return best, best_v

    def affine(self, M, t):
        """System for {M x + t : x in body}."""
        Minv = np.linalg.inv(M)
        J = np.eye(self.n + self.q)
        J[:self.n, :self.n] = Minv
        o = np.zeros(self.n + self.q)
        o[:self.n] = -Minv @ t
        return ConstraintSystem(self.n, [a.transform(J, o) for a in self.atoms],
                                self.q, self.u_center, self.u_radius)

    def intersect(self, other):
        n, q1, q2 = self.n, self.q, other.q
        atoms = []
        for a in self.atoms:
            atoms.append(_split_pad(a, n, q1, 0, q2))
        for a in other.atoms:
            atoms.append(_split_pad(a, n, q2, q1, 0))
        return ConstraintSystem(n, atoms, q1 + q2,
                                np.concatenate([self.u_center, other.u_center]),
                                math.hypot(self.u_radius, other.u_radius))

    def minkowski(self, other, s, other_center, other_radius):
        """System for self + s*other via the lifted point v of other."""
        n, q1, q2 = self.n, self.q, other.q
        d = n + q1 + n + q2
        atoms = []
        # self atoms at (x - s v, u1)
        M = np.zeros((n + q1, d))
        M[:n, :n] = np.eye(n)
        M[:n, n + q1:n + q1 + n] = -s * np.eye(n)
        M[n:, n:n + q1] = np.eye(q1)
        for a in self.atoms:
            atoms.append(Atom(a.kind, a.P @ M, a.r, a.p, a.scale, a.fn))
        # other atoms at (v, u2)
        M2 = np.zeros((n + q2, d))
        M2[:n, n + q1:n + q1 + n] = np.eye(n)
        M2[n:, n + q1 + n:] = np.eye(q2)
        for a in other.atoms:
            atoms.append(Atom(a.kind, a.P @ M2, a.r, a.p, a.scale, a.fn))
        uc = np.concatenate([self.u_center, other_center, other.u_center])
        ur = math.sqrt(self.u_radius ** 2 + other_radius ** 2 + other.u_radius ** 2)
        return ConstraintSystem(n, atoms, q1 + n + q2, uc, ur)


def _split_pad(a, n, q, before, after):
    Px, Pu = a.P[:, :n], a.P[:, n:]
    P = np.hstack([Px, np.zeros((Px.shape[0], before)), Pu, np.zeros((Px.shape[0], after))])
    return Atom(a.kind, P, a.r, a.p, a.scale, a.fn)


class CenteredBody:
    """A convex body with a center a0, radii r <= R and a symmetry flag.

    a0 + r*B is inside the body and the body is inside a0 + R*B.
    """

    def __init__(self, system, center, inner_radius, outer_radius, symmetric=False,
                 descriptor=None, membership=None):
        self.system = system
        self.center = np.asarray(center, dtype=float)
        self.inner_radius = float(inner_radius)
        self.outer_radius = float(outer_radius)
        self.symmetric = bool(symmetric)
        self.descriptor = descriptor
        self._membership = membership

    @property
    def n(self):
        return self.center.shape[0]

    @property
    def lifted(self):
        return self.system.q > 0

    def contains(self, x, tol=DEFAULT_TOL):
        return bool(self.contains_many(np.asarray(x, float)[None, :], tol)[0])

    membership = contains

    def contains_many(self, X, tol=DEFAULT_TOL):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self._membership is not None:
            return np.array([bool(self._membership(x, tol)) for x in X], dtype=bool)
        if self.system.q == 0:
            return self.system.violation(X) <= tol
        from . import convexopt
        return np.array([convexopt.point_in_lifted(self, x, tol) for x in X], dtype=bool)

    def slack(self, x):
        """Lower bound on the distance from x to the boundary (negative outside)."""
        if self.system.q == 0 and self._membership is None:
            return -float(self.system.violation(np.asarray(x, float)[None, :])[0])
        g = gauge(self, np.asarray(x, float) - self.center, tol=1e-10, about=self.center)
        return (1.0 - g) * self.inner_radius

    def with_descriptor(self, descriptor):
        self.descriptor = descriptor
        return self

    def __repr__(self):
        return (f"CenteredBody(n={self.n}, center={self.center.tolist()}, "
                f"r={self.inner_radius:.6g}, R={self.outer_radius:.6g}, "
                f"symmetric={self.symmetric})")


def oracle_body(membership, center, inner_radius, outer_radius, symmetric=False):
    """Wrap a plain membership callable ``membership(x, tol) -> bool``."""
    center = np.asarray(center, dtype=float)
    n = center.shape[0]
    fn = GaugeFunction(lambda y: membership(center + y, 0.0), inner_radius, outer_radius)
    atom = Atom("oracle", np.eye(n), -center, fn=fn)
    return CenteredBody(ConstraintSystem(n, [atom]), center, inner_radius, outer_radius,
                        symmetric, membership=membership)


# ---------------------------------------------------------------- gauge

def gauge(body, x, tol=DEFAULT_TOL, about=None):
    """||x||_K about the origin (or ``about``), by bisection on the ray."""
    return float(gauge_many(body, np.asarray(x, float)[None, :], tol, about)[0])


def gauge_many(body, X, tol=DEFAULT_TOL, about=None):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    origin = np.zeros(body.n) if about is None else np.asarray(about, float)
    r0, R0 = _radii_about(body, origin)
    norms = np.linalg.norm(X, axis=1)
    lo = norms / R0
    hi = norms / r0
    out = np.zeros(len(X))
    active = norms > 0
    for _ in range(GAUGE_BUDGET):
        todo = active & (hi - lo > tol)
        if not todo.any():
            break
        mid = 0.5 * (lo[todo] + hi[todo])
        inside = body.contains_many(origin + X[todo] / mid[:, None], 0.0)
        idx = np.flatnonzero(todo)
        hi[idx[inside]] = mid[inside]
        lo[idx[~inside]] = mid[~inside]
    else:
        if (active & (hi - lo > tol)).any():
            raise ToleranceTooSmall(f"gauge bisection did not reach tolerance {tol}")
    out[active] = 0.5 * (lo[active] + hi[active])
    return out


def _radii_about(body, origin):
    off = float(np.linalg.norm(origin - body.center))
    if off == 0.0:
        r0 = body.inner_radius
    elif body.system.q == 0 and body._membership is None:
        r0 = -float(body.system.violation(origin[None, :])[0])
    else:
        r0 = body.inner_radius - off
    if r0 <= 0:
        raise NonCenteredBody("origin of the gauge is not interior to the body")
    return r0, body.outer_radius + off


# ---------------------------------------------------------------- algebra

def affine_body(K, M, t=None):
    """Image {M x + t : x in K} for nonsingular M."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    t = np.zeros(K.n) if t is None else np.asarray(t, dtype=float)
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[-1] <= 1e-14 * sv[0]:
        raise BadDescriptor("M", "matrix is singular")
    member = None
    if K._membership is not None:
        Minv = np.linalg.inv(M)
        inner = K._membership
        member = lambda x, tol: inner(Minv @ (np.asarray(x) - t), tol)
    return CenteredBody(K.system.affine(M, t), M @ K.center + t, K.inner_radius * sv[-1],
                        K.outer_radius * sv[0], K.symmetric, membership=member)


def scale_body(K, s):
    return affine_body(K, s * np.eye(K.n))


def translate_body(K, t):
    return affine_body(K, np.eye(K.n), t)


def intersect_bodies(K1, K2):
    if K1.n != K2.n:
        raise BadDescriptor("right", "dimension mismatch")
    system = K1.system.intersect(K2.system)
    member = None
    if K1._membership is not None or K2._membership is not None:
        member = lambda x, tol: K1.contains(x, tol) and K2.contains(x, tol)
    same_center = np.linalg.norm(K1.center - K2.center) <= 1e-12 * (1 + np.linalg.norm(K1.center))
    if same_center:
        center = K1.center
        r = min(K1.inner_radius, K2.inner_radius)
        symmetric = K1.symmetric and K2.symmetric
    else:
        from . import convexopt
        probe = CenteredBody(system, K1.center, K1.inner_radius, K1.outer_radius,
                             membership=member)
        center, r = convexopt.deepest_point(probe, K1.center, K1.outer_radius)
        if r <= 0:
            raise EmptyInterior("intersection has empty interior")
        symmetric = False
    R = min(K1.outer_radius + np.linalg.norm(center - K1.center),
            K2.outer_radius + np.linalg.norm(center - K2.center))
    return CenteredBody(system, center, r, R, symmetric, membership=member)


def kb_body(K, c, tol=DEFAULT_TOL):
    """The symmetrization K[c] = (K - c) & (c - K), centered at the origin."""
    c = np.asarray(c, dtype=float)
    if not K.contains(c, tol):
        raise CenterOutsideBody("c is not in K")
    if K.system.q == 0 and K._membership is None:
        r = -float(K.system.violation(c[None, :])[0])
    else:
        r = K.slack(c)
    if r <= 0:
        raise EmptyInterior("c lies on the boundary of K")
    n = K.n
    left = translate_body(K, -c)
    right = affine_body(K, -np.eye(n), c)
    system = left.system.intersect(right.system)
    member = None
    if K._membership is not None:
        member = lambda x, t: K.contains(np.asarray(x) + c, t) and K.contains(c - np.asarray(x), t)
    R = K.outer_radius + float(np.linalg.norm(K.center - c))
    return CenteredBody(system, np.zeros(n), r, R, True, membership=member)


def minkowski_sum(K1, K2, s=1.0):
    """K1 + s*K2; membership needs an optimization over the lifted point."""
    if K1._membership is not None or K2._membership is not None:
        raise BadDescriptor("minkowski", "oracle-only bodies cannot be summed")
    system = K1.system.minkowski(K2.system, s, K2.center, K2.outer_radius)
    return CenteredBody(system, K1.center + s * K2.center,
                        K1.inner_radius + abs(s) * K2.inner_radius,
                        K1.outer_radius + abs(s) * K2.outer_radius,
                        K1.symmetric and K2.symmetric)


# ---------------------------------------------------------------- primitives

def polytope_body(A, b):
    """{x : A x <= b}, rejecting unbounded or flat inputs."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    if A.ndim != 2 or A.shape[0] != b.shape[0] or A.shape[0] == 0:
        raise BadDescriptor("A", "A must be m x n with m = len(b) > 0")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise BadDescriptor("A", "non-finite entries")
    norms = np.linalg.norm(A, axis=1)
    zero = norms == 0
    if np.any(zero & (b < 0)):
        raise EmptyInterior("a zero row has a negative right-hand side")
    A, b, norms = A[~zero], b[~zero], norms[~zero]
    A, b = A / norms[:, None], b / norms
    n = A.shape[1]
    from . import convexopt
    center, r = convexopt.chebyshev_center(A, b)
    symmetric = False
    mid = _symmetry_center(A, b)
    if mid is not None and np.min(b - A @ mid) > 0:
        # the Chebyshev center of a symmetric polytope need not be its center of symmetry
        center, r, symmetric = mid, float(np.min(b - A @ mid)), True
    R = _polytope_outer_radius(A, b, center)
    atom = Atom("lin", A, -b)
    return CenteredBody(ConstraintSystem(n, [atom]), center, r, R, symmetric)


def _symmetry_center(A, b):
    """c with the polytope equal to its reflection 2c - P (rows paired as a, -a), or None."""
    keys = {}
    for i, a in enumerate(A):
        keys.setdefault(tuple(np.round(a, 9)), i)
    rows, rhs = [], []
    for i, a in enumerate(A):
        j = keys.get(tuple(np.round(-a, 9)))
        if j is None:
            return None
        # a.c is the midpoint of the slab -b_j <= a.x <= b_i
        rows.append(a)
        rhs.append(0.5 * (b[i] - b[j]))
    M, h = np.array(rows), np.array(rhs)
    c = np.linalg.lstsq(M, h, rcond=None)[0]
    if np.max(np.abs(M @ c - h)) > 1e-9 * (1 + np.max(np.abs(b))):
        return None
    return c


def _polytope_outer_radius(A, b, center):
    m, n = A.shape
    if math.comb(m, n) <= 20000:
        best = 0.0
        for rows in itertools.combinations(range(m), n):
            S = A[list(rows)]
            if abs(np.linalg.det(S)) < 1e-12:
                continue
            v = np.linalg.solve(S, b[list(rows)])
            if np.all(A @ v <= b + 1e-9 * (1 + np.abs(b))):
                best = max(best, float(np.linalg.norm(v - center)))
        if best > 0:
            return best * (1 + 1e-12)
    from . import convexopt
    lo, hi = convexopt.bounding_box(A, b)
    far = np.maximum(np.abs(lo - center), np.abs(hi - center))
    return float(np.linalg.norm(far))


def ellipsoid_body(A, t=None):
    """{x : (x - t)^T A (x - t) <= 1} for SPD A."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    if A.shape != (n, n) or not np.allclose(A, A.T, atol=1e-12 * (1 + np.abs(A).max())):
        raise BadDescriptor("A", "ellipsoid matrix must be square and symmetric")
    t = np.zeros(n) if t is None else np.asarray(t, dtype=float)
    if t.shape != (n,):
        raise BadDescriptor("t", "center has the wrong dimension")
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise BadDescriptor("A", "ellipsoid matrix is not positive definite") from None
    w = np.linalg.eigvalsh(A)
    atom = Atom("ball", L.T, -L.T @ t)
    return CenteredBody(ConstraintSystem(n, [atom]), t, 1 / math.sqrt(w[-1]),
                        1 / math.sqrt(w[0]), True)


def lp_ball_body(p, radius, dim):
    """{x : ||x||_p <= radius} for p >= 1 (p may be inf)."""
    if isinstance(p, str):
        if p.lower() not in ("inf", "infinity"):
            raise BadDescriptor("p", f"unknown exponent {p!r}")
        p = math.inf
    p = float(p)
    if not p >= 1:
        raise BadDescriptor("p", "exponent must be >= 1")
    if not radius > 0:
        raise BadDescriptor("radius", "radius must be positive")
    if int(dim) != dim or dim < 1:
        raise BadDescriptor("dim", "dimension must be a positive integer")
    n = int(dim)
    if p <= 2:
        R, r = radius, radius * n ** (0.5 - 1 / p)
    else:
        e = 0.0 if math.isinf(p) else 1 / p
        r, R = radius, radius * n ** (0.5 - e)
    if p == 1 and n <= 12:
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=n)))
        atom = Atom("lin", signs / math.sqrt(n), -np.full(len(signs), radius / math.sqrt(n)))
    elif math.isinf(p):
        atom = Atom("lin", np.vstack([np.eye(n), -np.eye(n)]), -np.full(2 * n, radius))
    elif p == 2:
        atom = Atom("ball", np.eye(n) / radius, np.zeros(n))
    else:
        atom = Atom("lp", np.eye(n) / radius, np.zeros(n), p=p)
    return CenteredBody(ConstraintSystem(n, [atom]), np.zeros(n), r, R, True)


# ---------------------------------------------------------------- descriptors

def _matrix(desc, key, path):
    if key not in desc:
        raise BadDescriptor(f"{path}.{key}", "missing")
    try:
        M = np.array(_numbers(desc[key]), dtype=float)
    except (TypeError, ValueError):
        raise BadDescriptor(f"{path}.{key}", "not a numeric array") from None
    if not np.all(np.isfinite(M)):
        raise BadDescriptor(f"{path}.{key}", "non-finite entries")
    return M


def _numbers(value):
    if isinstance(value, list):
        return [_numbers(v) for v in value]
    if isinstance(value, str):
        from fractions import Fraction
        return float(Fraction(value))
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TypeError(value)
    return value


def _scalar(desc, key, path):
    if key not in desc:
        raise BadDescriptor(f"{path}.{key}", "missing")
    v = desc[key]
    if isinstance(v, str) and v.lower() in ("inf", "infinity"):
        return math.inf
    try:
        v = float(_numbers(v))
    except (TypeError, ValueError):
        raise BadDescriptor(f"{path}.{key}", "not a number") from None
    return v


def compile_body(desc, path="body"):
    """Compile a JSON-style descriptor dict into a CenteredBody."""
    if not isinstance(desc, dict):
        raise BadDescriptor(path, "descriptor must be an object")
    if "body" in desc and "type" not in desc:
        return compile_body(desc["body"], path)
    kind = desc.get("type")
    if kind == "hpolytope":
        A = _matrix(desc, "A", path)
        b = _matrix(desc, "b", path)
        if A.ndim != 2 or b.ndim != 1 or A.shape[0] != b.shape[0]:
            raise BadDescriptor(f"{path}.A", "A must be m x n and b of length m")
        try:
            body = polytope_body(A, b)
        except BadDescriptor as e:
            raise BadDescriptor(f"{path}.{e.field}", str(e)) from None
    elif kind == "ellipsoid":
        A = _matrix(desc, "A", path)
        t = _matrix(desc, "t", path) if "t" in desc else None
        try:
            body = ellipsoid_body(A, t)
        except BadDescriptor as e:
            raise BadDescriptor(f"{path}.{e.field}", str(e).split(": ", 1)[-1]) from None
    elif kind == "lpball":
        p = desc.get("p")
        if p is None:
            raise BadDescriptor(f"{path}.p", "missing")
        if not isinstance(p, str):
            p = _scalar(desc, "p", path)
        radius = _scalar(desc, "radius", path) if "radius" in desc else 1.0
        dim = desc.get("dim")
        if not isinstance(dim, int) or isinstance(dim, bool):
            raise BadDescriptor(f"{path}.dim", "must be a positive integer")
        try:
            body = lp_ball_body(p, radius, dim)
        except BadDescriptor as e:
            raise BadDescriptor(f"{path}.{e.field}", str(e).split(": ", 1)[-1]) from None
    elif kind == "scale":
        s = _scalar(desc, "s", path)
        if s == 0 or not math.isfinite(s):
            raise BadDescriptor(f"{path}.s", "scale must be finite and nonzero")
        body = scale_body(compile_body(desc.get("inner"), f"{path}.inner"), s)
    elif kind == "translate":
        inner = compile_body(desc.get("inner"), f"{path}.inner")
        t = _matrix(desc, "t", path)
        if t.shape != (inner.n,):
            raise BadDescriptor(f"{path}.t", "wrong dimension")
        body = translate_body(inner, t)
    elif kind == "affine":
        inner = compile_body(desc.get("inner"), f"{path}.inner")
        M = _matrix(desc, "M", path)
        if M.shape != (inner.n, inner.n):
            raise BadDescriptor(f"{path}.M", "must be n x n")
        t = _matrix(desc, "t", path) if "t" in desc else None
        try:
            body = affine_body(inner, M, t)
        except BadDescriptor:
            raise BadDescriptor(f"{path}.M", "matrix is singular") from None
    elif kind == "intersect":
        body = intersect_bodies(compile_body(desc.get("left"), f"{path}.left"),
                                compile_body(desc.get("right"), f"{path}.right"))
    elif kind == "kbsym":
        inner = compile_body(desc.get("inner"), f"{path}.inner")
        c = _matrix(desc, "c", path)
        if c.shape != (inner.n,):
            raise BadDescriptor(f"{path}.c", "wrong dimension")
        body = kb_body(inner, c)
    elif kind == "minkowski":
        s = _scalar(desc, "s", path) if "s" in desc else 1.0
        left = compile_body(desc.get("left"), f"{path}.left")
        right = compile_body(desc.get("right"), f"{path}.right")
        if left.n != right.n:
            raise BadDescriptor(f"{path}.right", "dimension mismatch")
        body = minkowski_sum(left, right, s)
    elif kind is None:
        raise BadDescriptor(f"{path}.type", "missing")
    else:
        raise BadDescriptor(f"{path}.type", f"unknown body type {kind!r}")
    return body.with_descriptor(desc)


def hpolytope(A, b):
    return {"type": "hpolytope", "A": np.asarray(A, float).tolist(),
            "b": np.asarray(b, float).tolist()}


def ellipsoid(A, t=None):
    A = np.asarray(A, float)
    t = np.zeros(A.shape[0]) if t is None else np.asarray(t, float)
    return {"type": "ellipsoid", "A": A.tolist(), "t": t.tolist()}


def lpball(p, radius, dim):
    return {"type": "lpball", "p": "inf" if p == math.inf else p, "radius": radius, "dim": dim}
