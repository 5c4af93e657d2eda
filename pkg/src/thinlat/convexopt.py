"""Ellipsoid-method engine, GLS rounding and fiber feasibility.

All routines operate on the atom lists of a :class:`ConstraintSystem`.
Linear systems go to an LP solver; everything else runs a deep-cut
ellipsoid method whose separating hyperplanes come from atom subgradients.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .geometry import (
    DEFAULT_TOL, EmptyInterior, NonCenteredBody, ThinLatError, UnboundedBody,
)


class IterationBudgetExceeded(ThinLatError):
    def __init__(self, message, best=None, value=None):
        super().__init__(message)
        self.best = best
        self.value = value


class LPFailure(ThinLatError):
    pass


@dataclass
class EngineConfig:
    tol: float = DEFAULT_TOL
    budget_slack: int = 64
    max_iterations: int = 200000


DEFAULT_CONFIG = EngineConfig()


@dataclass
class RoundingResult:
    """E(A) + t is inside K and K is inside sandwich_factor * E(A) + t.

    E(A) = {x : x^T A x <= 1}.
    """
    A: np.ndarray
    t: np.ndarray
    sandwich_factor: float
    iterations: int = 0


# ---------------------------------------------------------------- LP

def solve_lp(c, A_ub=None, b_ub=None, bounds=None, A_eq=None, b_eq=None):
    """scipy/HiGHS linprog; returns the result object, raising on solver errors."""
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                  method="highs")
    if res.status not in (0, 2, 3):
        raise LPFailure(f"LP solver failed: {res.message}")
    return res


def chebyshev_center(A, b):
    """Center and radius of the largest ball in {A x <= b}; rows must be unit."""
    m, n = A.shape
    lo, hi = bounding_box(A, b)
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    G = np.hstack([A, np.ones((m, 1))])
    res = solve_lp(cost, G, b, bounds=[(None, None)] * n + [(None, None)])
    if res.status == 2:
        raise EmptyInterior("polytope is empty")
    r = float(res.x[-1])
    if r <= 1e-12 * (1 + float(np.max(np.abs(hi - lo)))):
        raise EmptyInterior("polytope has empty interior")
    return res.x[:n], r


def bounding_box(A, b):
    """Coordinate extents of {A x <= b}; raises UnboundedBody."""
    n = A.shape[1]
    lo, hi = np.zeros(n), np.zeros(n)
    for i in range(n):
        for sign, out in ((1.0, lo), (-1.0, hi)):
            c = np.zeros(n)
            c[i] = sign
            res = solve_lp(c, A, b, bounds=[(None, None)] * n)
            if res.status == 3:
                raise UnboundedBody(f"polytope is unbounded along coordinate {i}")
            if res.status == 2:
                raise EmptyInterior("polytope is empty")
            out[i] = res.x[i]
    return lo, hi


# ---------------------------------------------------------------- reduced systems

class ReducedSystem:
    """Atoms of a body rewritten over v, where z = M v + o."""

    def __init__(self, atoms, dim):
        self.atoms = atoms
        self.dim = dim

    @classmethod
    def from_system(cls, system, M, o):
        return cls([a.reduce(M, o) for a in system.atoms], M.shape[1])

    @property
    def linear(self):
        return all(a.kind == "lin" for a in self.atoms)

    def violation(self, v):
        return max(float(a.violation(v[None, :])[0]) for a in self.atoms)

    def cut(self, v):
        best, best_v = None, -np.inf
        for a in self.atoms:
            val = float(a.violation(v[None, :])[0])
            if val > best_v:
                best, best_v = a, val
        return best_v, best.subgradient(v)

    def lipschitz(self):
        L = 0.0
        for a in self.atoms:
            P = a.P / (a.scale[:, None] if a.kind == "lin" else a.scale)
            if a.kind == "lin":
                L = max(L, float(np.max(np.linalg.norm(P, axis=1))) if P.size else 0.0)
            else:
                L = max(L, _spectral(P) * (a.fn.lipschitz if a.kind == "oracle" else 1.0)
                        * (max(1.0, P.shape[0] ** (1 / a.p - 0.5)) if a.kind == "lp" else 1.0))
        return L if L > 0 else 1.0

    def linear_rows(self):
        G = np.vstack([a.P / a.scale[:, None] for a in self.atoms])
        h = np.concatenate([a.r / a.scale for a in self.atoms])
        return G, h


def _spectral(P):
    return float(np.linalg.norm(P, 2)) if P.size else 0.0


# ---------------------------------------------------------------- ellipsoid method

def _update(c, Q, g, alpha):
    d = len(c)
    gQg = float(g @ Q @ g)
    b = Q @ g / math.sqrt(gQg)
    c = c - (1 + d * alpha) / (d + 1) * b
    Q = d * d * (1 - alpha * alpha) / (d * d - 1.0) * (
        Q - 2 * (1 + d * alpha) / ((d + 1) * (1 + alpha)) * np.outer(b, b))
    return c, 0.5 * (Q + Q.T)


@dataclass
class EllipsoidOutcome:
    feasible: bool
    point: np.ndarray = None
    value: float = math.inf
    lower_bound: float = -math.inf
    iterations: int = 0


def ellipsoid_method(system, center, radius, objective=None, eps=1e-9, tol=DEFAULT_TOL,
                     budget=None, stop_when_feasible=False):
    """Minimize a convex objective over {v : system.violation(v) <= tol}.

    ``objective(v)`` returns (value, subgradient).  Without an objective the
    method stops at the first point with violation <= tol.  Infeasibility is
    certified for the set {violation <= 0} inside the starting ball.
    """
    d = system.dim
    center = np.asarray(center, dtype=float).copy()
    if d == 0:
        v = np.zeros(0)
        if system.violation(v) <= tol:
            val = objective(v)[0] if objective else 0.0
            return EllipsoidOutcome(True, v, val, val, 0)
        return EllipsoidOutcome(False)
    if d == 1:
        return _interval_method(system, center, radius, objective, eps, tol, budget,
                                stop_when_feasible)
    L = system.lipschitz()
    target = 0.5 * tol
    rho = target / L
    log_ratio = max(math.log(radius / rho), 1.0) if radius > rho else 1.0
    if budget is None:
        budget = int(2 * (d + 1) ** 2 * log_ratio) + DEFAULT_CONFIG.budget_slack
        if objective is not None:
            budget *= 2
    min_logvol = d * math.log(rho)
    Q = np.eye(d) * radius * radius
    logvol = d * math.log(radius)
    best, best_val, lb = None, math.inf, -math.inf
    for it in range(budget):
        viol, g = system.cut(center) if system.atoms else (-math.inf, None)
        if viol > tol:
            gQg = float(g @ Q @ g)
            if gQg <= 0:
                break
            alpha = (viol - target) / math.sqrt(gQg)
        else:
            if objective is None:
                return EllipsoidOutcome(True, center, 0.0, 0.0, it)
            val, g = objective(center)
            if val < best_val:
                best, best_val = center.copy(), val
            if stop_when_feasible and val <= 0:
                return EllipsoidOutcome(True, best, best_val, lb, it)
            gQg = float(g @ Q @ g)
            width = math.sqrt(max(gQg, 0.0))
            lb = max(lb, val - width)
            if best_val - lb <= eps:
                return EllipsoidOutcome(True, best, best_val, lb, it)
            if gQg <= 0:
                return EllipsoidOutcome(True, best, best_val, best_val, it)
            alpha = (val - best_val) / width
        if alpha >= 1.0:
            # the remaining ellipsoid holds no useful point
            if best is not None:
                return EllipsoidOutcome(True, best, best_val, best_val, it)
            return EllipsoidOutcome(False, iterations=it)
        logvol += 0.5 * (d * math.log(d * d * (1 - alpha * alpha) / (d * d - 1.0))
                         + math.log(1 - 2 * (1 + d * alpha) / ((d + 1) * (1 + alpha))))
        center, Q = _update(center, Q, g, alpha)
        if logvol < min_logvol:
            if best is not None:
                return EllipsoidOutcome(True, best, best_val, best_val, it)
            return EllipsoidOutcome(False, iterations=it)
    if best is not None and objective is not None:
        raise IterationBudgetExceeded("ellipsoid method ran out of iterations", best, best_val)
    if objective is None:
        raise IterationBudgetExceeded("feasibility search ran out of iterations")
    return EllipsoidOutcome(False, iterations=budget)


def _interval_method(system, center, radius, objective, eps, tol, budget, stop_when_feasible):
    lo, hi = float(center[0]) - radius, float(center[0]) + radius
    target = 0.5 * tol
    rho = target / system.lipschitz()
    best, best_val, lb = None, math.inf, -math.inf
    budget = budget or 400
    for it in range(budget):
        if hi - lo < rho:
            break
        x = 0.5 * (lo + hi)
        v = np.array([x])
        viol, g = system.cut(v) if system.atoms else (-math.inf, None)
        if viol > tol:
            g0 = float(g[0])
            if g0 == 0:
                break
            # keep {y : viol + g0 (y - x) <= target}
            bound = x - (viol - target) / g0
            if g0 > 0:
                hi = min(hi, bound)
            else:
                lo = max(lo, bound)
        else:
            if objective is None:
                return EllipsoidOutcome(True, v, 0.0, 0.0, it)
            val, g = objective(v)
            if val < best_val:
                best, best_val = v.copy(), val
            if stop_when_feasible and val <= 0:
                return EllipsoidOutcome(True, best, best_val, lb, it)
            g0 = float(g[0])
            lb = max(lb, val - abs(g0) * max(hi - x, x - lo))
            if best_val - lb <= eps or g0 == 0:
                return EllipsoidOutcome(True, best, best_val, max(lb, best_val - eps), it)
            bound = x - (val - best_val) / g0
            if g0 > 0:
                hi = min(hi, bound)
            else:
                lo = max(lo, bound)
        if lo > hi:
            break
    if best is not None:
        return EllipsoidOutcome(True, best, best_val, best_val, budget)
    return EllipsoidOutcome(False, iterations=budget)


# ---------------------------------------------------------------- body level

def _joint_start(body):
    c = np.concatenate([body.center, body.system.u_center])
    r = math.sqrt(body.outer_radius ** 2 + body.system.u_radius ** 2)
    return c, 1.05 * r + 1e-6


def point_in_lifted(body, x, tol=DEFAULT_TOL):
    """Membership for a lifted system: is there u with violation(x, u) <= tol?"""
    n, q = body.system.n, body.system.q
    M = np.vstack([np.zeros((n, q)), np.eye(q)])
    o = np.concatenate([np.asarray(x, float), np.zeros(q)])
    red = ReducedSystem.from_system(body.system, M, o)
    if red.linear:
        ok, _ = _linear_feasible(red, tol)
        return ok
    dist = float(np.linalg.norm(np.asarray(x, float) - body.center))
    radius = 1.05 * (body.system.u_radius + 1.0 * (body.outer_radius + dist)) + 1e-6
    out = ellipsoid_method(red, body.system.u_center, radius, tol=tol)
    return out.feasible


def _linear_feasible(red, tol, floor=1e6):
    """LP: minimize the worst normalized row violation; returns (ok, witness)."""
    G, h = red.linear_rows()
    k = red.dim
    if k == 0:
        return bool(np.max(h) <= tol), np.zeros(0)
    cost = np.zeros(k + 1)
    cost[-1] = 1.0
    A = np.hstack([G, -np.ones((G.shape[0], 1))])
    res = solve_lp(cost, A, -h, bounds=[(None, None)] * k + [(-floor, None)])
    if res.status != 0:
        return False, None
    return bool(res.x[-1] <= tol), res.x[:k]


def deepest_point(body, start, radius):
    """A point maximizing the depth lower bound -violation; returns (x, depth)."""
    n = body.n
    if body._membership is None and body.system.linear:
        red = ReducedSystem(body.system.atoms, n + body.system.q)
        ok, w = _linear_feasible(red, 0.0)
        if w is None:
            raise EmptyInterior("intersection is empty")
        return w[:n], -red.violation(w)
    c, r = _joint_start(body)

    def objective(v):
        val, g = red.cut(v)
        return val, g

    red = ReducedSystem(body.system.atoms, n + body.system.q)
    out = ellipsoid_method(ReducedSystem([], n + body.system.q), c, r, objective,
                           eps=1e-10 * (1 + r))
    return out.point[:n], -out.value


def weak_minimize(K, f, L, eps, grad=None, config=DEFAULT_CONFIG):
    """Approximately minimize a convex f over K.

    Returns (y, omega) with omega = f(y) and omega - eps <= min_K f <= omega
    up to the engine tolerance.  ``grad`` may supply subgradients; otherwise
    central differences are used.
    """
    if K.inner_radius <= 0:
        raise NonCenteredBody("body has no interior ball")
    n, q = K.n, K.system.q

    def objective(v):
        x = v[:n]
        val = float(f(x))
        if grad is not None:
            g = np.asarray(grad(x), float)
        else:
            h = 1e-7 * max(1.0, float(np.linalg.norm(x)))
            g = np.array([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(n)])
        return val, np.concatenate([g, np.zeros(q)])

    d = n + q
    budget = int(2 * d * d * math.log(max(K.outer_radius * max(L, 1e-12) / (K.inner_radius * eps),
                                          math.e))) + config.budget_slack
    budget = max(budget, 64) * 4
    c, r = _joint_start(K)
    if K._membership is not None:
        red = _oracle_reduced(K)
    else:
        red = ReducedSystem(K.system.atoms, d)
    out = ellipsoid_method(red, c, r, objective, eps=eps, tol=config.tol, budget=budget)
    if not out.feasible:
        raise NonCenteredBody("no feasible point found")
    y = out.point[:n]
    return y, float(f(y))


def _oracle_reduced(K):
    return ReducedSystem(K.system.atoms, K.n)


# ---------------------------------------------------------------- GLS rounding

def _separate(K, p):
    """Return (violation, g) with g.(x - p) <= -violation for every x in K, or None if p in K."""
    if K.system.q == 0 and K._membership is None:
        a, viol = K.system.worst_atom(np.asarray(p, float))
        if viol <= 0:
            return None
        return viol, a.subgradient(np.asarray(p, float))
    if K.contains(p, 0.0):
        return None
    from .geometry import gauge
    g0 = gauge(K, p - K.center, tol=1e-12, about=K.center)
    h = 1e-6 * max(1.0, float(np.linalg.norm(p - K.center)))
    grad = np.zeros(K.n)
    for i in range(K.n):
        e = np.zeros(K.n)
        e[i] = h
        grad[i] = (gauge(K, p - K.center + e, 1e-12, about=K.center)
                   - gauge(K, p - K.center - e, 1e-12, about=K.center)) / (2 * h)
    # the gauge is 1/r Lipschitz; scale back to distance units
    return (g0 - 1.0) * K.inner_radius, grad * K.inner_radius


def gls_round(K, config=DEFAULT_CONFIG):
    """Shallow-cut ellipsoid rounding with factor sqrt(n)(n+1)."""
    n = K.n
    if K.inner_radius <= 0:
        raise NonCenteredBody("body has no interior ball")
    if n == 1:
        lo, hi = line_intervals(K, K.center[None, :], np.ones(1), 0.0)
        lo, hi = float(lo[0]), float(hi[0])
        half = 0.5 * (hi - lo)
        t = K.center + 0.5 * (lo + hi)
        return RoundingResult(np.array([[1.0 / half ** 2]]), t, 2.0, 0)
    f = math.sqrt(n) * (n + 1)
    t = K.center.astype(float).copy()
    Q = np.eye(n) * K.outer_radius ** 2 * (1 + 1e-9)
    budget = int(50 * n * n * (n + 1) * max(1.0, math.log(K.outer_radius / K.inner_radius * f))) + 200
    for it in range(min(budget, config.max_iterations)):
        sep = _separate(K, t)
        if sep is not None:
            viol, g = sep
            gQg = float(g @ Q @ g)
            alpha = min(viol / math.sqrt(gQg), 0.999)
        else:
            w, V = np.linalg.eigh(Q)
            ends = []
            for i in range(n):
                axis = math.sqrt(max(w[i], 0.0)) * V[:, i] / (n + 1)
                ends.extend([t + axis, t - axis])
            ends = np.array(ends)
            if K.system.q == 0 and K._membership is None:
                bad = np.flatnonzero(K.system.violation(ends) > 0)
                chosen = ends[bad[0]] if len(bad) else None
            else:
                inside = K.contains_many(ends, 0.0)
                chosen = ends[np.flatnonzero(~inside)[0]] if not inside.all() else None
            if chosen is None:
                A = f * f * np.linalg.inv(Q)
                return RoundingResult(0.5 * (A + A.T), t, f, it)
            viol, g = _separate(K, chosen)
            gQg = float(g @ Q @ g)
            alpha = (-float(g @ (chosen - t)) + viol) / math.sqrt(gQg)
            alpha = max(alpha, -1.0 / (n + 1))
        center, Q = _update(t, Q, g, alpha)
        t = center
    raise IterationBudgetExceeded("rounding did not converge")


# ---------------------------------------------------------------- fibers

class Fiber:
    """The fiber {o + D w} of a body, with o supplied per query.

    Queries reduce the atoms to variables (w, u) and decide whether some point
    has violation <= tol.
    """

    def __init__(self, body, D, tol=DEFAULT_TOL):
        self.body = body
        self.D = np.asarray(D, dtype=float).reshape(body.n, -1)
        self.k = self.D.shape[1]
        self.tol = tol
        n, q = body.n, body.system.q
        self.q = q
        M = np.zeros((n + q, self.k + q))
        M[:n, :self.k] = self.D
        M[n:, self.k:] = np.eye(q)
        self.M = M
        self._ball = (q == 0 and body._membership is None and len(body.system.atoms) == 1
                      and body.system.atoms[0].kind == "ball")

    def reduced(self, o):
        full = np.concatenate([o, np.zeros(self.q)])
        return ReducedSystem.from_system(self.body.system, self.M, full)

    def feasible(self, o):
        """(ok, witness w) for the fiber through offset o."""
        tol = self.tol
        o = np.asarray(o, dtype=float)
        if self.k == 0:
            return bool(self.body.contains(o, tol)), np.zeros(0)
        if self.k == 1 and self.q == 0:
            lo, hi = line_intervals(self.body, o[None, :], self.D[:, 0], tol)
            if lo[0] <= hi[0]:
                return True, np.array([0.5 * (lo[0] + hi[0])])
            return False, None
        if self._ball:
            a = self.body.system.atoms[0]
            PD = a.P @ self.D
            y0 = a.P @ o + a.r
            w, *_ = np.linalg.lstsq(PD, -y0, rcond=None)
            res = float(np.linalg.norm(PD @ w + y0))
            return (res - 1.0) / a.scale <= tol, w
        if self.body._membership is None:
            red = self.reduced(o)
            if red.linear:
                ok, v = _linear_feasible(red, tol)
                return ok, (v[:self.k] if v is not None else None)
            start, radius = self._start(o)
            out = ellipsoid_method(red, start, radius, tol=tol)
            if out.feasible:
                return True, out.point[:self.k]
            return False, None
        red = self.reduced(o)
        start, radius = self._start(o)
        out = ellipsoid_method(red, start, radius, tol=tol)
        return out.feasible, (out.point[:self.k] if out.feasible else None)

    def _start(self, o):
        body = self.body
        # least-squares coordinates of the body's center in the fiber
        w0, *_ = np.linalg.lstsq(self.D, body.center - o, rcond=None)
        dist = float(np.linalg.norm(self.D @ w0 + o - body.center))
        smin = float(np.linalg.svd(self.D, compute_uv=False)[-1])
        rw = (body.outer_radius + dist) / smin
        start = np.concatenate([w0, body.system.u_center])
        radius = 1.05 * math.sqrt(rw ** 2 + body.system.u_radius ** 2) + 1e-6
        return start, radius


def fiber_distance(K, B, tail, tol=DEFAULT_TOL, eps=1e-9):
    """Distance from K to the affine subspace {B (w, tail)}.

    Returns (d, witness) where witness is a point of K attaining d (a point of
    the fiber inside K when d = 0).
    """
    B = np.asarray(B, dtype=float)
    tail = np.asarray(tail, dtype=float).ravel()
    n = K.n
    k = n - len(tail)
    D = B[:, :k]
    o = B[:, k:] @ tail if len(tail) else np.zeros(n)
    fib = Fiber(K, D, tol)
    ok, w = fib.feasible(o)
    if ok:
        return 0.0, D @ w + o
    if k > 0:
        Qd, _ = np.linalg.qr(D)
        proj = np.eye(n) - Qd @ Qd.T
    else:
        proj = np.eye(n)
    q = K.system.q

    def objective(z):
        r = proj @ (z[:n] - o)
        nr = float(np.linalg.norm(r))
        g = proj @ r / nr if nr > 0 else np.zeros(n)
        return nr, np.concatenate([g, np.zeros(q)])

    c, r = _joint_start(K)
    red = _oracle_reduced(K) if K._membership is not None else ReducedSystem(K.system.atoms, n + q)
    out = ellipsoid_method(red, c, r, objective, eps=eps, tol=tol)
    if not out.feasible:
        raise EmptyInterior("body has no feasible point")
    return float(out.value), out.point[:n]


# ---------------------------------------------------------------- line intervals

def line_intervals(K, origins, direction, tol=DEFAULT_TOL):
    """For each origin o, the interval [lo, hi] of t with o + t*direction in K.

    Empty intervals come back with lo > hi.
    """
    O = np.atleast_2d(np.asarray(origins, dtype=float))
    d = np.asarray(direction, dtype=float)
    m = O.shape[0]
    if K.system.q > 0:
        return _lifted_intervals(K, O, d, tol)
    lo = np.full(m, -np.inf)
    hi = np.full(m, np.inf)
    for a in K.system.atoms:
        alo, ahi = _atom_interval(a, O, d, tol, K)
        lo = np.maximum(lo, alo)
        hi = np.minimum(hi, ahi)
    bad = ~(lo <= hi)
    lo[bad], hi[bad] = 1.0, 0.0
    return lo, hi


def _atom_interval(a, O, d, tol, K):
    m = O.shape[0]
    if a.kind == "lin":
        G = a.P / a.scale[:, None]
        h = a.r / a.scale
        rhs = tol - O @ G.T - h            # (m, rows): slope * t <= rhs
        slope = G @ d
        lo = np.full(m, -np.inf)
        hi = np.full(m, np.inf)
        pos, neg, zero = slope > 0, slope < 0, slope == 0
        if pos.any():
            hi = np.min(rhs[:, pos] / slope[pos], axis=1)
        if neg.any():
            lo = np.max(rhs[:, neg] / slope[neg], axis=1)
        if zero.any():
            dead = np.any(rhs[:, zero] < 0, axis=1)
            lo = np.where(dead, np.inf, lo)
        return lo, hi
    if a.kind == "ball":
        y0 = O @ a.P.T + a.r
        y1 = a.P @ d
        rho = 1.0 + tol * a.scale
        A2 = float(y1 @ y1)
        B2 = y0 @ y1
        C2 = np.einsum("ij,ij->i", y0, y0) - rho * rho
        disc = B2 * B2 - A2 * C2
        ok = disc >= 0
        s = np.sqrt(np.where(ok, disc, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            lo = np.where(ok, (-B2 - s) / A2, np.inf)
            hi = np.where(ok, (-B2 + s) / A2, -np.inf)
        return lo, hi
    return _convex_interval(a, O, d, tol, K)


def _convex_interval(a, O, d, tol, K):
    """Golden-section minimum then bisection for both endpoints, vectorized over origins."""
    def viol(t):
        Z = O + t[:, None] * d[None, :]
        return a.violation(Z)

    dn = float(np.linalg.norm(d))
    reach = (K.outer_radius + np.linalg.norm(O - K.center, axis=1)) / dn + 1.0
    lo, hi = -reach, reach.copy()
    invphi = (math.sqrt(5) - 1) / 2
    for _ in range(120):
        x1 = hi - invphi * (hi - lo)
        x2 = lo + invphi * (hi - lo)
        left = viol(x1) < viol(x2)
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        if np.all(hi - lo < 1e-13 * (1 + reach)):
            break
    tmin = 0.5 * (lo + hi)
    fmin = viol(tmin)
    feasible = fmin <= tol
    a_lo, a_hi = -reach, tmin.copy()
    b_lo, b_hi = tmin.copy(), reach.copy()
    for _ in range(100):
        mid = 0.5 * (a_lo + a_hi)
        inside = viol(mid) <= tol
        a_hi = np.where(inside, mid, a_hi)
        a_lo = np.where(inside, a_lo, mid)
        mid = 0.5 * (b_lo + b_hi)
        inside = viol(mid) <= tol
        b_lo = np.where(inside, mid, b_lo)
        b_hi = np.where(inside, b_hi, mid)
        if np.all(a_hi - a_lo < 1e-14 * (1 + reach)) and np.all(b_hi - b_lo < 1e-14 * (1 + reach)):
            break
    lo = np.where(feasible, a_hi, np.inf)
    hi = np.where(feasible, b_lo, -np.inf)
    return lo, hi


def _lifted_intervals(K, O, d, tol):
    n, q = K.n, K.system.q
    M = np.zeros((n + q, 1 + q))
    M[:n, 0] = d
    M[n:, 1:] = np.eye(q)
    m = O.shape[0]
    lo = np.ones(m)
    hi = np.zeros(m)
    dn = float(np.linalg.norm(d))
    for i, o in enumerate(O):
        red = ReducedSystem.from_system(K.system, M, np.concatenate([o, np.zeros(q)]))
        if red.linear:
            G, h = red.linear_rows()
            ends = []
            for sign in (1.0, -1.0):
                cost = np.zeros(1 + q)
                cost[0] = sign
                res = solve_lp(cost, G, tol - h, bounds=[(None, None)] * (1 + q))
                if res.status != 0:
                    ends = None
                    break
                ends.append(float(res.x[0]))
            if ends is not None:
                lo[i], hi[i] = ends
            continue
        t0 = float(d @ (K.center - o)) / (dn * dn)
        reach = (K.outer_radius + float(np.linalg.norm(o + t0 * d - K.center))) / dn
        start = np.concatenate([[t0], K.system.u_center])
        radius = 1.05 * math.sqrt(reach ** 2 + K.system.u_radius ** 2) + 1e-6
        ends = []
        for sign in (1.0, -1.0):
            g = np.zeros(1 + q)
            g[0] = sign
            out = ellipsoid_method(red, start, radius, lambda v, g=g: (float(g @ v), g),
                                   eps=1e-10 * (1 + reach), tol=tol)
            if not out.feasible:
                ends = None
                break
            ends.append(float(out.point[0]))
        if ends is not None:
            lo[i], hi[i] = ends
    return lo, hi


# ---------------------------------------------------------------- exact projections

MAX_PROJECTION_ROWS = 40000


class ProjectionTooLarge(ThinLatError):
    pass


def _row_keys(G):
    norms = np.linalg.norm(G, axis=1)
    D = np.round(G / np.where(norms > 0, norms, 1.0)[:, None], 11)
    _, groups = np.unique(D, axis=0, return_inverse=True)
    return norms, groups.ravel()


class LinearProjection:
    """Fourier-Motzkin projections of {(u, z) : G [u; z] <= h} onto (z_k, ..., z_{n-1}).

    The combination matrices depend only on G, so one instance serves every
    right-hand side (translates and dilates of the same polytope).
    """

    def __init__(self, G, q):
        G = np.asarray(G, dtype=float)
        m, d = G.shape
        n = d - q
        self.n = n
        self.systems = []
        C = np.eye(m)
        cur = G.copy()
        for j in range(q + n):
            if j >= q:
                self.systems.append(self._freeze(cur[:, j:], C))
            if j == q + n - 1:
                break
            col = cur[:, j]
            scale = np.linalg.norm(cur, axis=1)
            col = np.where(np.abs(col) <= 1e-12 * scale, 0.0, col)
            pos, neg, zero = col > 0, col < 0, col == 0
            P, N = np.flatnonzero(pos), np.flatnonzero(neg)
            rows = np.count_nonzero(zero) + len(P) * len(N)
            if rows > MAX_PROJECTION_ROWS:
                raise ProjectionTooLarge(f"projection needs {rows} rows")
            wp = 1.0 / col[P]
            wn = -1.0 / col[N]
            newC = [C[zero]]
            newG = [cur[zero]]
            if len(P) and len(N):
                newC.append((C[P][:, None, :] * wp[:, None, None]
                             + C[N][None, :, :] * wn[None, :, None]).reshape(-1, m))
                newG.append((cur[P][:, None, :] * wp[:, None, None]
                             + cur[N][None, :, :] * wn[None, :, None]).reshape(-1, d))
            C = np.vstack(newC)
            cur = np.vstack(newG)
            cur[:, j] = 0.0
            C, cur = self._prune(C, cur, j + 1)

    @staticmethod
    def _prune(C, cur, start):
        # identical rows (same direction and same combination) are redundant
        if len(C) == 0:
            return C, cur
        key = np.round(np.hstack([cur[:, start:], C]), 12)
        _, idx = np.unique(key, axis=0, return_index=True)
        idx.sort()
        return C[idx], cur[idx]

    @staticmethod
    def _freeze(Gsys, C):
        norms, groups = _row_keys(Gsys)
        const = norms <= 1e-12
        return Gsys, C, groups, const

    def bind(self, h):
        """Right-hand sides for every projection level."""
        bound = []
        for Gsys, C, groups, const in self.systems:
            H = C @ h
            empty = bool(np.any(H[const] < 0))
            keep = ~const
            Gk, Hk, gk = Gsys[keep], H[keep], groups[keep]
            if len(Gk):
                norms = np.linalg.norm(Gk, axis=1)
                ratio = Hk / norms
                order = np.lexsort((ratio, gk))
                first = np.ones(len(order), dtype=bool)
                first[1:] = gk[order][1:] != gk[order][:-1]
                sel = order[first]
                Gk, Hk = Gk[sel], Hk[sel]
            bound.append((Gk, Hk, empty))
        return bound


def _halfline_intervals(slope, rhs):
    """Per batch row, the t with slope * t <= rhs for all columns."""
    b = rhs.shape[0]
    lo = np.full(b, -np.inf)
    hi = np.full(b, np.inf)
    pos, neg, zero = slope > 0, slope < 0, slope == 0
    if pos.any():
        hi = np.min(rhs[:, pos] / slope[pos], axis=1)
    if neg.any():
        lo = np.max(rhs[:, neg] / slope[neg], axis=1)
    if zero.any():
        dead = np.any(rhs[:, zero] < 0, axis=1)
        lo = np.where(dead, np.inf, lo)
    return lo, hi


class ProjectionOracle:
    """Exact coefficient intervals for each enumeration level.

    ``intervals(i, tails)`` gives, per row of tails (coefficients i+1..n-1),
    the range of z_i for which the fiber meets the body.
    """

    def intervals(self, i, tails):
        raise NotImplementedError


class PolytopeProjection(ProjectionOracle):
    _cache = {}

    def __init__(self, body, B, tol=DEFAULT_TOL):
        n, q = body.n, body.system.q
        G = []
        h = []
        for a in body.system.atoms:
            Px, Pu = a.P[:, :n], a.P[:, n:]
            G.append(np.hstack([Pu, Px @ B]))
            h.append(-a.r + tol * a.scale)
        G = np.vstack(G)
        h = np.concatenate(h)
        norms = np.linalg.norm(G, axis=1)
        # rounding perturbs the body far below any tolerance and makes the cache exact
        G = np.round(G / norms[:, None], 12)
        h = h / norms
        key = (q, G.shape, G.tobytes())
        proj = self._cache.get(key)
        if proj is None:
            proj = LinearProjection(G, q)
            if len(self._cache) > 256:
                self._cache.clear()
            self._cache[key] = proj
        self.levels = proj.bind(h)

    def intervals(self, i, tails):
        G, H, empty = self.levels[i]
        b = tails.shape[0]
        if empty:
            return np.ones(b), np.zeros(b)
        rhs = H[None, :] - tails @ G[:, 1:].T
        lo, hi = _halfline_intervals(G[:, 0], rhs)
        bad = ~(lo <= hi)
        lo[bad], hi[bad] = 1.0, 0.0
        return lo, hi


class EllipsoidProjection(ProjectionOracle):
    """Projections of {z : ||M z + y0|| <= rho} via residual projectors."""

    def __init__(self, body, B, tol=DEFAULT_TOL):
        a = body.system.atoms[0]
        M = a.P @ B
        self.y0 = a.r
        self.rho = 1.0 + tol * a.scale
        n = B.shape[0]
        self.parts = []
        for i in range(n):
            if i:
                Qm, _ = np.linalg.qr(M[:, :i])
                proj = np.eye(M.shape[0]) - Qm @ Qm.T
            else:
                proj = np.eye(M.shape[0])
            self.parts.append((proj @ M[:, i], proj @ M[:, i + 1:], proj @ self.y0))

    def intervals(self, i, tails):
        a, Mt, c0 = self.parts[i]
        c = tails @ Mt.T + c0
        A2 = float(a @ a)
        B2 = c @ a
        C2 = np.einsum("ij,ij->i", c, c) - self.rho ** 2
        disc = B2 * B2 - A2 * C2
        ok = disc >= 0
        s = np.sqrt(np.where(ok, disc, 0.0))
        lo = np.where(ok, (-B2 - s) / A2, 1.0)
        hi = np.where(ok, (-B2 + s) / A2, 0.0)
        return lo, hi


def projection_oracle(body, B, tol=DEFAULT_TOL):
    """An exact interval oracle when the body's structure allows one, else None."""
    if body._membership is not None:
        return None
    atoms = body.system.atoms
    if all(a.kind == "lin" for a in atoms):
        try:
            return PolytopeProjection(body, B, tol)
        except ProjectionTooLarge:
            return None
    if body.system.q == 0 and len(atoms) == 1 and atoms[0].kind == "ball":
        return EllipsoidProjection(body, B, tol)
    return None


def support_value(K, w, tol=DEFAULT_TOL):
    """An upper bound on max {<w, x> : x in K}, tight to about tol * |w|."""
    w = np.asarray(w, dtype=float)
    n, q = K.n, K.system.q
    scale = float(np.linalg.norm(w))
    if scale == 0:
        return 0.0
    if K._membership is None and K.system.linear:
        G, h = ReducedSystem(K.system.atoms, n + q).linear_rows()
        res = solve_lp(-np.concatenate([w, np.zeros(q)]), G, -h + tol,
                       bounds=[(None, None)] * (n + q))
        if res.status != 0:
            raise LPFailure(f"support LP failed: {res.message}")
        return float(-res.fun)
    eps = 1e-9 * scale * (1 + K.outer_radius)
    _, val = weak_minimize(K, lambda x: -float(w @ x), scale, eps, grad=lambda x: -w)
    return -val + eps
