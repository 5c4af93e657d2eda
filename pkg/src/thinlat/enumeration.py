"""Schnorr-Euchner enumeration of lattice points in a convex body.

Coefficients are fixed from the last basis vector down to the first.  A
candidate value for coefficient i is accepted when the fiber through the
partially fixed point still meets the body; by convexity the accepted values
form an integer interval around any continuous feasible value, so each level
scans outward from the seed until the first rejection.  Polytopes and
ellipsoids skip the scan: their fiber projections are computed in closed
form and whole batches of partial points are expanded at once.

Points are emitted in lexicographic order of (z_{n-1}, ..., z_0).
"""

import contextlib
import contextvars
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .convexopt import Fiber, IterationBudgetExceeded, line_intervals, projection_oracle
from .geometry import DEFAULT_TOL, ThinLatError, gauge_many, scale_body, translate_body
from .lattice import babai_point, mod_p_cosets

log = logging.getLogger(__name__)

DEFAULT_NODE_BUDGET = 10 ** 8
# per-context default so a front end can cap every enumeration of one job
_budget = contextvars.ContextVar("node_budget", default=DEFAULT_NODE_BUDGET)
BATCH_ROWS = 4096


class BudgetExceeded(ThinLatError):
    pass


class FiberSolveFailure(ThinLatError):
    pass


class NoNonzeroPoint(ThinLatError):
    pass


@dataclass
class EnumerationReport:
    points_emitted: int = 0
    level_node_counts: list = field(default_factory=list)
    fiber_solves: int = 0
    tolerance_used: float = DEFAULT_TOL

    def to_json(self):
        return {"points_emitted": self.points_emitted,
                "level_node_counts": list(self.level_node_counts),
                "fiber_solves": self.fiber_solves,
                "tolerance_used": self.tolerance_used}

    def merge(self, other):
        if not self.level_node_counts:
            self.level_node_counts = [0] * len(other.level_node_counts)
        self.points_emitted += other.points_emitted
        self.level_node_counts = [a + b for a, b in zip(self.level_node_counts,
                                                        other.level_node_counts)]
        self.fiber_solves += other.fiber_solves


class _Stop(Exception):
    pass


class _Search:
    def __init__(self, K, lat, sink, tol, node_budget):
        self.K = K
        self.B = lat.B
        self.n = lat.n
        self.sink = sink
        self.tol = tol
        self.budget = node_budget
        self.nodes = 0
        self.report = EnumerationReport(0, [0] * self.n, 0, tol)
        self.oracle = projection_oracle(K, self.B, tol) if self.n > 1 else None
        if self.oracle is None:
            self.fibers = {i: Fiber(K, self.B[:, :i], tol) for i in range(2, self.n)}

    def _tick(self, k):
        self.nodes += k
        if self.nodes > self.budget:
            raise BudgetExceeded(f"enumeration exceeded the node budget {self.budget}")

    def run(self, seed):
        n = self.n
        try:
            if self.oracle is not None:
                self._batch(n - 1, np.zeros((1, 0)))
            elif n == 1:
                lo, hi = line_intervals(self.K, np.zeros((1, 1)), self.B[:, 0], self.tol)
                self.report.fiber_solves += 1
                self._emit_row(np.zeros(0), lo[0], hi[0])
            else:
                self._level(n - 1, np.zeros(0), seed[n - 1])
        except _Stop:
            pass
        return self.report

    def _batch(self, i, tails):
        lo, hi = self.oracle.intervals(i, tails)
        self.report.fiber_solves += len(tails)
        first = np.ceil(lo).astype(np.int64)
        counts = np.maximum(np.floor(hi).astype(np.int64) - first + 1, 0)
        ends = np.cumsum(counts)
        total = int(ends[-1]) if len(ends) else 0
        # children are generated in slices so an early stop never pays for a whole level
        for start in range(0, total, BATCH_ROWS):
            idx = np.arange(start, min(start + BATCH_ROWS, total))
            owner = np.searchsorted(ends, idx, side="right")
            offs = idx - (ends[owner] - counts[owner])
            self.report.level_node_counts[self.n - 1 - i] += len(idx)
            self._tick(len(idx))
            children = np.column_stack([first[owner] + offs, tails[owner]]).astype(float)
            if i > 0:
                self._batch(i - 1, children)
                continue
            self.report.points_emitted += len(idx)
            if self.sink is None:
                continue
            for x in children @ self.B.T:
                if self.sink(x):
                    raise _Stop

    # level i chooses coefficient i with coefficients i+1.. fixed to `tail`
    def _level(self, i, tail, c):
        if i == 1:
            self._line_level(tail, c)
            return
        accepted = []
        for direction in (1, -1):
            v = math.ceil(c) if direction == 1 else math.floor(c)
            if direction == -1 and v == math.ceil(c):
                v -= 1
            while True:
                ok, w = self._fiber(i, v, tail)
                if not ok:
                    break
                accepted.append((v, w))
                v += direction
        accepted.sort(key=lambda t: t[0])
        self.report.level_node_counts[self.n - 1 - i] += len(accepted)
        self._tick(len(accepted))
        for v, w in accepted:
            self._level(i - 1, np.concatenate([[v], tail]), w[i - 1])

    def _fiber(self, i, v, tail):
        o = self.B[:, i:] @ np.concatenate([[v], tail])
        self.report.fiber_solves += 1
        try:
            return self.fibers[i].feasible(o)
        except IterationBudgetExceeded as e:
            raise FiberSolveFailure(
                f"fiber solve failed at level {i}, coefficients {[v, *tail.tolist()]}: {e}"
            ) from e

    def _line_level(self, tail, c):
        """Level 1: each candidate's line interval directly yields its leaf range."""
        d = self.B[:, 0]
        rows = []
        for direction in (1, -1):
            v = math.ceil(c) if direction == 1 else math.floor(c)
            if direction == -1 and v == math.ceil(c):
                v -= 1
            block = 1
            done = False
            while not done:
                vals = v + direction * np.arange(block)
                tails = np.column_stack([vals, np.tile(tail, (block, 1))])
                origins = tails @ self.B[:, 1:].T
                lo, hi = line_intervals(self.K, origins, d, self.tol)
                self.report.fiber_solves += block
                for val, a, b in zip(vals, lo, hi):
                    if a > b:
                        done = True
                        break
                    rows.append((int(val), a, b))
                v += direction * block
                block = min(block * 2, 64)
        rows.sort(key=lambda t: t[0])
        self.report.level_node_counts[self.n - 2] += len(rows)
        self._tick(len(rows))
        for val, a, b in rows:
            self._emit_row(np.concatenate([[val], tail]), a, b)

    def _emit_row(self, tail, a, b):
        lo, hi = math.ceil(a), math.floor(b)
        k = hi - lo + 1
        if k <= 0:
            return
        self.report.level_node_counts[self.n - 1] += k
        self.report.points_emitted += k
        self._tick(k)
        if self.sink is None:
            return
        base = self.B[:, 1:] @ tail if len(tail) else np.zeros(self.n)
        for z0 in range(lo, hi + 1):
            if self.sink(base + z0 * self.B[:, 0]):
                raise _Stop


@contextlib.contextmanager
def node_budget_limit(budget):
    """Default node budget for enumerations started inside the block."""
    token = _budget.set(int(budget))
    try:
        yield
    finally:
        _budget.reset(token)


def enumerate_points(K, lat, sink=None, tol=DEFAULT_TOL, node_budget=None):
    """Visit every point of lat inside K (up to the tolerance band) exactly once.

    ``sink(point)`` is called per point; a truthy return value stops the
    search early.  Returns an EnumerationReport.
    """
    if K.n != lat.n:
        raise ValueError("body and lattice dimensions differ")
    seed = lat.coords(K.center)
    budget = _budget.get() if node_budget is None else node_budget
    return _Search(K, lat, sink, tol, budget).run(seed)


def count_points(K, lat, tol=DEFAULT_TOL, node_budget=None):
    return enumerate_points(K, lat, None, tol, node_budget).points_emitted


def collect_points(K, lat, tol=DEFAULT_TOL, node_budget=None):
    pts = []
    enumerate_points(K, lat, lambda x: pts.append(x), tol, node_budget)
    return np.array(pts).reshape(-1, lat.n)


def lambda1(K, lat, search_radius, tol=DEFAULT_TOL):
    """Shortest nonzero lattice vector in the gauge of symmetric K, looking inside s*K."""
    pts = collect_points(scale_body(K, search_radius), lat, tol)
    scale = max(1.0, float(np.max(np.abs(lat.B))))
    nonzero = pts[np.linalg.norm(pts, axis=1) > 1e-9 * scale]
    if len(nonzero) == 0:
        raise NoNonzeroPoint(f"no nonzero lattice point within radius {search_radius}")
    g = gauge_many(K, nonzero, tol=1e-12 * search_radius)
    k = int(np.argmin(g))
    return float(g[k]), nonzero[k]


def is_far(K, lat, x, lam, tol=DEFAULT_TOL):
    """True iff no lattice point lies in x + lam*K (band points count as near)."""
    body = translate_body(scale_body(K, lam), np.asarray(x, dtype=float))
    found = []
    enumerate_points(body, lat, lambda p: found.append(p) or True, tol)
    return not found


def distance_upper_bound(K, lat, x):
    """Gauge distance from x to the nearest-plane lattice vector."""
    v = babai_point(lat, x)
    return float(gauge_many(K, (np.asarray(x) - v)[None, :], tol=1e-12)[0])


def covering_radius_bracket(K, lat, p, rel_tol=1e-9, tol=DEFAULT_TOL, coset_budget=10 ** 6):
    """(m, m p/(p-1)) where m is the largest coset distance over lat/p mod lat."""
    if p < 2:
        raise ValueError("p must be at least 2")
    if p ** lat.n > coset_budget:
        log.warning("scanning %d cosets", p ** lat.n)
    best_lo, best_hi = 0.0, 0.0
    for c in mod_p_cosets(lat, p):
        hi = distance_upper_bound(K, lat, c)
        if hi <= best_hi:
            continue
        if best_lo > 0 and not is_far(K, lat, c, best_lo, tol):
            continue
        lo = best_lo
        while hi - lo > rel_tol * hi:
            mid = 0.5 * (lo + hi)
            if is_far(K, lat, c, mid, tol):
                lo = mid
            else:
                hi = mid
        best_lo = max(best_lo, lo)
        best_hi = max(best_hi, hi)
    if best_hi == 0.0:
        return 0.0, 0.0
    return best_lo, best_hi * p / (p - 1)
