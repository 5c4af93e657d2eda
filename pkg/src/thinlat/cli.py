"""thinlat command line: covering lattices, nets, volumes and KB points from JSON bodies.

Reports go to stdout (or --out) as JSON, point streams to --points-out, logs
to stderr.  Exit codes: 0 success, 2 invalid input, 3 computation error.
"""

import argparse
import json
import logging
import math
import sys
import time

import numpy as np

from .enumeration import covering_radius_bracket, node_budget_limit
from .geometry import (
    DEFAULT_TOL, BadDescriptor, ThinLatError, compile_body, lp_ball_body, scale_body,
    translate_body,
)
from .lattice import LatticeBasis
from .thinlattice import (
    DEFAULT_C0, epsilon_net, thin_lattice_general, thin_lattice_symmetric,
)
from .volume import estimate_volume, kb_point, operator_norm, polyhedral_approx

SCHEMA = "thinlat/1"
log = logging.getLogger("thinlat")


class UsageError(Exception):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


def _load_json(path, field):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as e:
        raise UsageError(field, f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise UsageError(field, f"invalid JSON in {path}: {e.msg}") from None


def _body(args, attr="body", required=True):
    path = getattr(args, attr)
    field = attr.replace("_", "-")
    if path is None:
        if required:
            raise UsageError(field, "required")
        return None
    return compile_body(_load_json(path, field), field)


def _lattice(args):
    if args.lattice is None:
        raise UsageError("lattice", "required")
    try:
        return LatticeBasis.from_json(_load_json(args.lattice, "lattice"))
    except BadDescriptor as e:
        raise UsageError("lattice", str(e)) from None


def _matrix(args):
    if args.matrix is None:
        raise UsageError("matrix", "required")
    text = args.matrix.strip()
    if text.startswith("["):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise UsageError("matrix", f"invalid inline JSON: {e.msg}") from None
    else:
        data = _load_json(args.matrix, "matrix")
    if isinstance(data, dict):
        data = data.get("matrix")
    try:
        M = np.array(data, dtype=float)
    except (TypeError, ValueError):
        raise UsageError("matrix", "must be a list of numeric rows") from None
    if M.ndim != 2 or not np.all(np.isfinite(M)):
        raise UsageError("matrix", "must be a finite 2-D array")
    return M


def _eps(args, upper):
    if args.eps is None:
        raise UsageError("eps", "required")
    if not (0 < args.eps <= upper):
        raise UsageError("eps", f"must lie in (0, {upper}]")
    return args.eps


def _fmt(x):
    return " ".join(f"{v + 0.0:.12f}" for v in x)


def _write_points(path, points):
    with open(path, "w") as fh:
        for x in points:
            fh.write(_fmt(x) + "\n")


def _same_shape(body, other, field):
    if other.n != body.n:
        raise UsageError(field, f"dimension {other.n} does not match the body's {body.n}")


def _default_norm(args, n):
    return _body(args, "norm", required=False) or lp_ball_body(2, 1.0, n)


# ---------------------------------------------------------------- commands

def cmd_thin_lattice(args):
    K = _body(args)
    if K.symmetric:
        cov = thin_lattice_symmetric(translate_body(K, -K.center), c0=args.c0, tol=args.tolerance)
        center = K.center
    else:
        cov, center = thin_lattice_general(K, c0=args.c0, tol=args.tolerance)
    out = cov.to_json()
    out["center"] = [float(v) for v in center]
    out["body"] = K.descriptor
    return out, None


def cmd_net(args):
    C = _body(args)
    eps = _eps(args, 1.0)
    norm = _default_norm(args, C.n)
    _same_shape(C, norm, "norm")
    if np.linalg.norm(norm.center) > 1e-9 or not norm.symmetric:
        raise UsageError("norm", "norm ball must be symmetric about the origin")
    cov = thin_lattice_symmetric(norm, c0=args.c0, tol=args.tolerance)
    if cov.mu_bracket[1] > 1:
        cov = cov.scaled(1.0 / cov.mu_bracket[1])
    lattice = cov.scaled(eps)
    pts, rep = epsilon_net(C, scale_body(norm, eps), lattice, tol=args.tolerance)
    out = {"eps": eps, "points": int(len(pts)), "lattice": lattice.to_json(),
           "enumeration": rep.to_json()}
    return out, pts


def cmd_volume(args):
    K = _body(args)
    est = estimate_volume(K, _eps(args, 1.0), c0=args.c0, tol=args.tolerance)
    out = {"V": est.V, "eps": est.eps, "interval": list(est.interval),
           "points": est.points_counted,
           "lattice": {"det": est.lattice_det, "basis": est.lattice.basis.B.T.tolist(),
                       "center": est.center.tolist()}}
    return out, None


def cmd_kb_point(args):
    K = _body(args)
    eps = args.eps if args.eps is not None else 0.5
    if not eps > 0:
        raise UsageError("eps", "must be positive")
    res = kb_point(K, eps, c0=args.c0, tol=args.tolerance)
    out = res.to_json()
    return out, None


def cmd_covering_radius(args):
    K = _body(args)
    lat = _lattice(args)
    if lat.n != K.n:
        raise UsageError("lattice", f"dimension {lat.n} does not match the body's {K.n}")
    if args.p is None or args.p < 2:
        raise UsageError("p", "must be an integer >= 2")
    lo, hi = covering_radius_bracket(K, lat, args.p, tol=args.tolerance)
    return {"p": args.p, "bracket": [lo, hi]}, None


def cmd_opnorm(args):
    T = _matrix(args)
    eps = _eps(args, 0.5)
    n, m = T.shape[1], T.shape[0]
    BX = _default_norm(args, n)
    if BX.n != n:
        raise UsageError("norm", f"domain ball must have dimension {n}")
    BY = _body(args, "target_body", required=False) or lp_ball_body(2, 1.0, m)
    res = operator_norm(T, BX, BY, eps, c0=args.c0, tol=args.tolerance)
    return {"V": res.V, "bracket": list(res.bracket), "eps": eps, "net_size": res.net_size}, None


def cmd_polyapprox(args):
    K = _body(args)
    eps = _eps(args, 1.0)
    P = polyhedral_approx(K, eps, c0=args.c0, tol=args.tolerance)
    return {"eps": eps, "facets": len(P["b"]), "polytope": P}, None


COMMANDS = {
    "net": (cmd_net, "epsilon-net of --body under the --norm ball"),
    "volume": (cmd_volume, "lattice-count volume estimate"),
    "kb-point": (cmd_kb_point, "approximate Kovner-Besicovitch point"),
    "thin-lattice": (cmd_thin_lattice, "covering lattice with certificates"),
    "covering-radius": (cmd_covering_radius, "covering radius bracket of --lattice"),
    "opnorm": (cmd_opnorm, "operator norm of --matrix between two norms"),
    "polyapprox": (cmd_polyapprox, "symmetric polytope between K and (1+eps)K"),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="thinlat", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--body", help="body descriptor JSON file")
        p.add_argument("--lattice", help="lattice JSON file ({\"basis\": [columns]})")
        p.add_argument("--norm", help="symmetric unit ball JSON file (net, opnorm domain)")
        p.add_argument("--target-body", dest="target_body",
                       help="unit ball of the target norm (opnorm)")
        p.add_argument("--matrix", help="matrix as a JSON file or inline JSON rows (opnorm)")
        p.add_argument("--eps", type=float)
        p.add_argument("--p", type=int, help="coset modulus for covering-radius")
        p.add_argument("--c0", type=float, default=DEFAULT_C0)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--node-budget", dest="node_budget", type=int, default=10 ** 8)
        p.add_argument("--tolerance", type=float, default=DEFAULT_TOL)
        p.add_argument("--out", help="report path (default stdout)")
        p.add_argument("--points-out", dest="points_out", help="point stream path")
        p.add_argument("--timing", action="store_true", help="record runtime_ms in the report")
        p.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def _validate_common(args):
    if args.c0 < 1 or not math.isfinite(args.c0):
        raise UsageError("c0", "must be a finite number >= 1")
    if args.threads < 1:
        raise UsageError("threads", "must be >= 1")
    if args.node_budget < 1:
        raise UsageError("node-budget", "must be >= 1")
    if not (0 <= args.tolerance < 1e-3):
        raise UsageError("tolerance", "must lie in [0, 1e-3)")


def run(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    handler, _ = COMMANDS[args.command]
    start = time.perf_counter()
    try:
        _validate_common(args)
        if args.threads > 1:
            log.info("--threads %d: running single-threaded", args.threads)
        with node_budget_limit(args.node_budget):
            report, points = handler(args)
    except UsageError as e:
        print(f"thinlat: invalid {e}", file=sys.stderr)
        return 2
    except BadDescriptor as e:
        print(f"thinlat: invalid {e}", file=sys.stderr)
        return 2
    except ThinLatError as e:
        print(f"thinlat: {type(e).__name__}: {e}", file=sys.stderr)
        return 3
    report["schema"] = SCHEMA
    report["command"] = args.command
    report["runtime_ms"] = (round(1000 * (time.perf_counter() - start), 3)
                            if args.timing else None)
    if points is not None:
        if args.points_out:
            _write_points(args.points_out, points)
            report["points_file"] = args.points_out
    text = json.dumps(report, sort_keys=True, indent=2, default=_json_default) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _json_default(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(type(v).__name__)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
