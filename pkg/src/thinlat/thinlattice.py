"""Thin covering lattices: M-lattice, sparsification, densification.

The symmetric pipeline is

    m_lattice -> packing_lattice -> lambda1 -> rogers_densify -> scale by 2/(3 lambda)

and yields a lattice whose packing-to-covering ratio for K is at least 1/3.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .convexopt import gls_round
from .enumeration import (
    EnumerationReport, collect_points, covering_radius_bracket, enumerate_points, is_far,
    lambda1,
)
from .geometry import DEFAULT_TOL, ThinLatError, ball_volume, kb_body, minkowski_sum
from .lattice import (
    LatticeBasis, SublatticeSpec, adjoin, mod_p_cosets, parity_sublattice_basis,
)

DEFAULT_C0 = 4.0
ADJOIN_MARGIN = 1e-6


class ProviderFailure(ThinLatError):
    pass


class NoPrimeFound(ThinLatError):
    pass


class GreedyStuck(ThinLatError):
    pass


class IterationOverflow(ThinLatError):
    pass


# ---------------------------------------------------------------- ellipsoid providers

class GLSProvider:
    """Inner ellipsoid from shallow-cut rounding, grown to the largest inscribed multiple
    when that multiple has a closed form."""
    name = "gls"

    def __call__(self, K):
        r = gls_round(K)
        return r.A / inscribed_scale(K, r.A, r.t) ** 2


def inscribed_scale(K, A, t):
    """A factor s >= 1 with t + s E(A) inside K, given t + E(A) inside K.

    Exact for polytopes; a safe lower bound for intersections with ellipsoids;
    1 for other bodies.
    """
    atoms = K.system.atoms
    if K.system.q or K._membership is not None or any(a.kind not in ("lin", "ball")
                                                        for a in atoms):
        return 1.0
    w, V = np.linalg.eigh(A)
    root_inv = (V / np.sqrt(w)) @ V.T
    s = math.inf
    for a in atoms:
        at_t = a.P @ t + a.r
        if a.kind == "lin":
            reach = np.linalg.norm(a.P @ root_inv, axis=1)
            ok = reach > 0
            if ok.any():
                s = min(s, float(np.min(-at_t[ok] / reach[ok])))
        else:
            s = min(s, (1.0 - float(np.linalg.norm(at_t))) / float(np.linalg.norm(a.P @ root_inv, 2)))
    return max(1.0, s * (1 - 1e-9)) if math.isfinite(s) else 1.0


class FixedProvider:
    """A caller-supplied SPD matrix (E(A) must lie inside K)."""
    name = "fixed"

    def __init__(self, A):
        self.A = np.asarray(A, dtype=float)

    def __call__(self, K):
        return self.A


def _provider(provider):
    if provider is None or provider == "gls":
        return GLSProvider()
    if isinstance(provider, str):
        raise ValueError(f"unknown provider {provider!r}")
    return provider


def _sqrt_inv(A):
    w, V = np.linalg.eigh(A)
    return (V / np.sqrt(w)) @ V.T


def m_lattice(K, provider=None, c0=DEFAULT_C0):
    """Lattice with det = 2^-(n+1) c0^-n vol(E(A)), aligned with the provider's ellipsoid."""
    prov = _provider(provider)
    try:
        A = np.asarray(prov(K), dtype=float)
        np.linalg.cholesky(A)
    except np.linalg.LinAlgError as e:
        raise ProviderFailure(f"provider returned a non-SPD matrix: {e}") from e
    n = K.n
    scale = ball_volume(n) ** (1.0 / n) / (2 ** (1 + 1.0 / n) * c0)
    return LatticeBasis(scale * _sqrt_inv(A)), A


# ---------------------------------------------------------------- sparsification

def next_prime(N):
    """Smallest prime p > N, by trial division."""
    if N < 2:
        raise NoPrimeFound(f"need N >= 2 nonzero points, got {N}")
    p = N + 1
    while True:
        if all(p % d for d in range(2, math.isqrt(p) + 1)):
            return p
        p += 1


def _integer_coords(lat, pts):
    if not len(pts):
        return np.zeros((0, lat.n), np.int64)
    return np.rint(lat.coords(pts)).astype(np.int64)


def greedy_parity_vector(Z, p):
    """Greedy a (lowest candidate first) so no row of Z satisfies <a, z> = 0 mod p.

    Coordinate i is fixed after 0..i-1; a candidate is rejected when some
    z with z[i+1:] = 0 mod p would satisfy <a[:i+1], z[:i+1]> = 0 mod p.
    """
    n = Z.shape[1]
    Zm = Z % p
    a = []
    for i in range(n):
        tail_zero = np.all(Zm[:, i + 1:] == 0, axis=1)
        rows = Zm[tail_zero]
        xi = rows[:, i]
        partial = (rows[:, :i] @ np.array(a, dtype=np.int64)) % p if i else np.zeros(len(rows), np.int64)
        live = xi != 0
        # a_i * x_i = -partial  (mod p)
        bad = set(((-partial[live]) * np.array([pow(int(v), -1, p) for v in xi[live]],
                                                dtype=np.int64)) % p)
        if np.any(~live & (partial % p == 0)):
            raise GreedyStuck(f"a point is fixed at zero before coordinate {i}")
        choice = next((v for v in range(p) if v not in bad), None)
        if choice is None:
            raise GreedyStuck(f"every candidate for coordinate {i} is blocked")
        a.append(choice)
    return tuple(int(v) for v in a)


@dataclass
class PackingResult:
    basis: LatticeBasis
    spec: SublatticeSpec
    N: int
    report: EnumerationReport


def packing_lattice(K, lat, tol=DEFAULT_TOL):
    """Sublattice M of index p with M & K = {0}."""
    pts = []
    report = enumerate_points(K, lat, lambda x: pts.append(x), tol)
    pts = np.array(pts).reshape(-1, lat.n)
    Z = _integer_coords(lat, pts)
    Z = Z[np.any(Z != 0, axis=1)]
    N = len(Z)
    p = next_prime(N)
    a = greedy_parity_vector(Z, p)
    spec = SublatticeSpec(a, p)
    M = parity_sublattice_basis(lat, spec)
    check = collect_points(K, M, tol)
    nonzero = np.linalg.norm(check, axis=1) > 1e-9 * max(1.0, float(np.max(np.abs(M.B))))
    if np.any(nonzero):
        raise GreedyStuck("sparsified lattice still meets K outside the origin")
    return PackingResult(M, spec, N, report)


# ---------------------------------------------------------------- densification

@dataclass
class DensifyResult:
    basis: LatticeBasis
    adjoined: list


def adjoin_limit(n, c0):
    return math.ceil(n * math.log(4 * c0, 3)) + 8


def rogers_densify(K, M, lam, c0=DEFAULT_C0, tol=DEFAULT_TOL, limit=None):
    """Adjoin far index-3 cosets until every coset is within lam of the lattice."""
    limit = adjoin_limit(M.n, c0) if limit is None else limit
    lat = M
    added = []
    threshold = lam * (1 + ADJOIN_MARGIN)
    while True:
        for c in mod_p_cosets(lat, 3, centered=True):
            if not np.any(np.abs(c) > 0):
                continue
            if is_far(K, lat, c, threshold, tol):
                lat = adjoin(lat, c)
                added.append(c)
                break
        else:
            return DensifyResult(lat, added)
        if len(added) > limit:
            raise IterationOverflow(f"more than {limit} cosets adjoined")


# ---------------------------------------------------------------- pipelines

@dataclass
class CoveringLattice:
    basis: LatticeBasis
    lambda1_bracket: tuple
    mu_bracket: tuple
    thinness: float = None
    index_trace: list = field(default_factory=list)
    provider: str = "gls"
    config: dict = field(default_factory=dict)
    node_stats: dict = field(default_factory=dict)
    body_ref: dict = None

    @property
    def certified(self):
        return self.mu_bracket is not None and self.mu_bracket[1] <= 1 + 1e-6

    def scaled(self, s):
        return CoveringLattice(
            self.basis.scaled(s),
            tuple(s * v for v in self.lambda1_bracket),
            tuple(s * v for v in self.mu_bracket) if self.mu_bracket else None,
            self.thinness, list(self.index_trace) + [["scale", s]], self.provider,
            dict(self.config), dict(self.node_stats), self.body_ref)

    def to_json(self):
        return {
            "schema": "thinlat/1",
            "basis": self.basis.B.T.tolist(),
            "lambda1_bracket": list(self.lambda1_bracket),
            "mu_bracket": list(self.mu_bracket) if self.mu_bracket else None,
            "thinness": self.thinness,
            "det": self.basis.det_abs,
            "index_trace": [list(t) for t in self.index_trace],
            "provider": self.provider,
            "config": self.config,
            "node_stats": self.node_stats,
            "body": self.body_ref,
        }

    @classmethod
    def from_json(cls, data):
        return cls(LatticeBasis(np.array(data["basis"], dtype=float).T),
                   tuple(data["lambda1_bracket"]),
                   tuple(data["mu_bracket"]) if data.get("mu_bracket") else None,
                   data.get("thinness"), [list(t) for t in data.get("index_trace", [])],
                   data.get("provider", "gls"), data.get("config", {}),
                   data.get("node_stats", {}), data.get("body"))


def minkowski_radius(det, vol_lower, n, margin=1.01):
    """Radius s with lambda_1 <= s guaranteed by the Minkowski bound."""
    return margin * 2 * (det / vol_lower) ** (1.0 / n)


def thin_lattice_symmetric(K, provider=None, c0=DEFAULT_C0, tol=DEFAULT_TOL, vol_ref=None):
    """A K-covering lattice with packing-to-covering ratio at least 1/3 (K symmetric about 0).

    ``vol_ref``, a trusted value of vol(K), fills in the thinness vol(K)/det.
    """
    if np.linalg.norm(K.center) > 1e-9 * max(1.0, K.outer_radius):
        raise ThinLatError("thin_lattice_symmetric needs a body centered at the origin")
    prov = _provider(provider)
    n = K.n
    lat0, A = m_lattice(K, prov, c0)
    stats = {}
    pack = packing_lattice(K, lat0, tol)
    stats["m_lattice"] = pack.report.to_json()
    M = pack.basis
    vol_inner = ball_volume(n) / math.sqrt(float(np.linalg.det(A)))
    s = minkowski_radius(M.det_abs, vol_inner, n)
    lam, _ = lambda1(K, M, s, tol)
    dens = rogers_densify(K, M, lam, c0, tol)
    final = dens.basis.scaled(2.0 / (3.0 * lam))
    lam_final, _ = lambda1(K, final, 1.1 * 2.0 / 3.0, tol)
    lam_lo = lam_final * (1 - 1e-9)
    mu = covering_radius_bracket(K, final, 3, tol=tol)
    trace = [["m_lattice", 1], ["packing", pack.spec.p]] + [["adjoin", 3] for _ in dens.adjoined]
    trace.append(["scale", 2.0 / (3.0 * lam)])
    stats["packing"] = {"N": pack.N, "p": pack.spec.p, "a": list(pack.spec.a)}
    stats["lambda1_before"] = lam
    thinness = None if vol_ref is None else vol_ref / final.det_abs
    return CoveringLattice(final, (lam_lo, lam_final), mu, thinness, trace, prov.name,
                           {"c0": c0, "tol": tol}, stats,
                           K.descriptor if isinstance(K.descriptor, dict) else None)


def thin_lattice_general(K, provider=None, c0=DEFAULT_C0, tol=DEFAULT_TOL, kb_eps=1.0 / 6.0,
                         vol_ref=None):
    """Covering lattice for K[c] with c an approximate KB point; also covers K - c.

    With ``vol_ref`` = vol(K) the thinness is reported relative to K itself.
    """
    if K.symmetric:
        c = K.center.copy()
    else:
        from .volume import kb_point
        c = kb_point(K, kb_eps, provider=provider, c0=c0, tol=tol).c
    Kc = kb_body(K, c)
    cov = thin_lattice_symmetric(Kc, provider, c0, tol, vol_ref)
    return cov, c


def epsilon_net(C, K_cov, lattice, sink=None, difference=None, tol=DEFAULT_TOL):
    """Points of the lattice in C - K_cov; with a K_cov-covering lattice this is a net of C.

    ``difference`` may supply C - K_cov directly when it has a closed form.
    Returns (points or None, report).
    """
    basis = lattice.basis if isinstance(lattice, CoveringLattice) else lattice
    body = difference if difference is not None else minkowski_sum(C, K_cov, -1.0)
    if sink is not None:
        return None, enumerate_points(body, basis, sink, tol)
    pts = []
    rep = enumerate_points(body, basis, lambda x: pts.append(x), tol)
    return np.array(pts).reshape(-1, basis.n), rep
