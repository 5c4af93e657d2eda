"""Lattice bases, Hermite normal forms and the sub/superlattice moves of the pipeline."""

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .geometry import BadDescriptor, ThinLatError

INTEGRALITY_TOL = 1e-9


class NotCommensurable(ThinLatError):
    pass


class NotOrderThree(ThinLatError):
    pass


class AlreadyMember(ThinLatError):
    pass


class LatticeBasis:
    """Nonsingular basis with columns b_1..b_n and cached Gram-Schmidt data."""

    def __init__(self, B):
        B = np.array(B, dtype=float)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise BadDescriptor("basis", "basis must be a square matrix")
        self.B = B
        self.n = B.shape[0]
        self.gs, self.mu = _gram_schmidt(B)
        self.gs_norms = np.linalg.norm(self.gs, axis=0)
        if np.min(self.gs_norms) <= 1e-14 * max(1.0, float(np.max(np.abs(B)))):
            raise BadDescriptor("basis", "basis is singular")
        self.det_abs = float(abs(np.linalg.det(B)))
        self._inv = np.linalg.inv(B)

    def coords(self, x):
        """Coefficients of a point, or of each row of a (k, n) array."""
        x = np.asarray(x, dtype=float)
        return x @ self._inv.T if x.ndim == 2 else self._inv @ x

    def point(self, z):
        return self.B @ np.asarray(z, dtype=float)

    def project(self, i, x):
        """Projection onto the orthogonal complement of span(b_1..b_i) (0 <= i <= n)."""
        x = np.asarray(x, dtype=float).copy()
        for j in range(i):
            g = self.gs[:, j]
            x = x - (x @ g) / (g @ g) * g
        return x

    def scaled(self, s):
        return LatticeBasis(s * self.B)

    def to_json(self):
        return {"basis": self.B.T.tolist()}

    @classmethod
    def from_json(cls, data):
        if isinstance(data, dict):
            if "basis" not in data:
                raise BadDescriptor("basis", "missing")
            data = data["basis"]
        try:
            cols = [[float(Fraction(v)) if isinstance(v, str) else float(v) for v in col]
                    for col in data]
        except (TypeError, ValueError):
            raise BadDescriptor("basis", "entries must be numbers or decimal strings") from None
        M = np.array(cols, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise BadDescriptor("basis", "basis must be n vectors of length n")
        return cls(M.T)

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n))

    def __repr__(self):
        return f"LatticeBasis(det={self.det_abs:.6g}, B={self.B.tolist()})"


def _gram_schmidt(B):
    n = B.shape[1]
    gs = np.zeros_like(B)
    mu = np.eye(n)
    for i in range(n):
        v = B[:, i].copy()
        for j in range(i):
            mu[i, j] = (B[:, i] @ gs[:, j]) / (gs[:, j] @ gs[:, j])
            v -= mu[i, j] * gs[:, j]
        gs[:, i] = v
    return gs, mu


@dataclass(frozen=True)
class SublatticeSpec:
    """M = {y : <a, y> = 0 mod p} in coordinates of the parent basis."""
    a: tuple
    p: int

    def __post_init__(self):
        if not is_prime(self.p):
            raise BadDescriptor("p", f"{self.p} is not prime")
        if all(x % self.p == 0 for x in self.a):
            raise BadDescriptor("a", "a is zero mod p")


def is_prime(p):
    if p < 2:
        return False
    for d in range(2, math.isqrt(p) + 1):
        if p % d == 0:
            return False
    return True


def _rounded_integers(X, tol=INTEGRALITY_TOL):
    R = np.rint(X)
    if np.max(np.abs(X - R), initial=0.0) > tol * max(1.0, float(np.max(np.abs(X), initial=0.0))):
        return None
    return [[int(v) for v in row] for row in R]


def hnf_upper(Y):
    """Upper-triangular basis (list of n integer columns) of the lattice spanned by the columns of Y.

    Y is a list of rows with Python ints, n x m with m >= n and full row rank.
    The diagonal is positive and every entry above a pivot is reduced into
    [0, pivot).
    """
    n = len(Y)
    cols = [[Y[i][j] for i in range(n)] for j in range(len(Y[0]))]
    active = list(cols)
    pivots = [None] * n
    for i in range(n - 1, -1, -1):
        nz = [c for c in active if c[i] != 0]
        rest = [c for c in active if c[i] == 0]
        while len(nz) > 1:
            nz.sort(key=lambda c: abs(c[i]))
            piv = nz[0]
            nxt = [piv]
            for c in nz[1:]:
                f = c[i] // piv[i]
                c = [x - f * y for x, y in zip(c, piv)]
                if c[i] != 0:
                    nxt.append(c)
                else:
                    rest.append(c)
            nz = nxt
        if not nz:
            raise NotCommensurable("generators do not have full rank")
        piv = nz[0]
        if piv[i] < 0:
            piv = [-x for x in piv]
        pivots[i] = piv
        active = rest
    T = [[pivots[j][i] for j in range(n)] for i in range(n)]
    for j in range(n):
        for i in range(j - 1, -1, -1):
            f = T[i][j] // T[i][i]
            if f:
                for r in range(n):
                    T[r][j] -= f * T[r][i]
    return T


def directional_basis(M_basis, reference):
    """Basis of M whose prefix spans agree with those of ``reference``."""
    H = reference.B
    X = np.linalg.solve(H, M_basis.B)
    Y = _rounded_integers(X)
    s = 1
    if Y is None:
        det = abs(float(np.linalg.det(X)))
        if det <= 0 or det >= 1:
            raise NotCommensurable("M is neither a sublattice nor a superlattice")
        s = int(round(1.0 / det))
        Y = _rounded_integers(s * X)
        if Y is None:
            raise NotCommensurable("M is neither a sublattice nor a superlattice")
    T = np.array(hnf_upper(Y), dtype=float)
    return LatticeBasis(H @ T / s)


def parity_sublattice_basis(reference, spec):
    """Closed-form directional basis of {y : <a, y> = 0 mod p} over ``reference``."""
    p = spec.p
    a = [x % p for x in spec.a]
    n = len(a)
    j = next(i for i, x in enumerate(a) if x != 0)
    inv = pow(a[j], -1, p)
    a = [(x * inv) % p for x in a]
    T = np.zeros((n, n))
    for i in range(j):
        T[i, i] = 1
    T[j, j] = p
    for i in range(j + 1, n):
        T[j, i] = -a[i]
        T[i, i] = 1
    return LatticeBasis(reference.B @ T)


def adjoin(lat, c):
    """Basis of lat + Z c for a point c with 3c in lat and c not in lat."""
    z = 3 * lat.coords(c)
    zi = _rounded_integers(z[:, None])
    if zi is None:
        raise NotOrderThree("3c is not a lattice vector")
    zi = [row[0] for row in zi]
    if all(v % 3 == 0 for v in zi):
        raise AlreadyMember("c already lies in the lattice")
    n = lat.n
    Y = [[3 if i == j else 0 for j in range(n)] + [zi[i]] for i in range(n)]
    T = np.array(hnf_upper(Y), dtype=float)
    return LatticeBasis(lat.B @ T / 3)


def index_in(sub, parent):
    """[parent : sub] as a float (a positive integer for true sublattices)."""
    return sub.det_abs / parent.det_abs


def same_lattice(L1, L2, tol=INTEGRALITY_TOL):
    X = np.linalg.solve(L1.B, L2.B)
    return _rounded_integers(X, tol) is not None and abs(abs(np.linalg.det(X)) - 1) < 1e-6


def mod_p_cosets(lat, p, centered=False):
    """Stream the p^n representatives B a / p in lexicographic order of a."""
    if p < 2:
        raise BadDescriptor("p", "p must be at least 2")
    start = -((p - 1) // 2) if centered else 0
    values = range(start, start + p)
    for a in itertools.product(values, repeat=lat.n):
        yield lat.B @ np.array(a, dtype=float) / p


def babai_point(lat, x):
    """Nearest-plane lattice vector close to x."""
    x = np.asarray(x, dtype=float)
    z = np.zeros(lat.n)
    t = x.copy()
    for i in range(lat.n - 1, -1, -1):
        g = lat.gs[:, i]
        c = round(float(t @ g) / float(g @ g))
        z[i] = c
        t = t - c * lat.B[:, i]
    return lat.B @ z
