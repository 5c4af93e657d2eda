"""Thin covering lattices for convex bodies and the algorithms built on them."""

from .enumeration import (
    EnumerationReport, collect_points, count_points, covering_radius_bracket, enumerate_points,
    is_far, lambda1,
)
from .geometry import (
    CenteredBody, ThinLatError, compile_body, ellipsoid, gauge, hpolytope, kb_body, lpball,
)
from .lattice import LatticeBasis, SublatticeSpec
from .thinlattice import (
    CoveringLattice, epsilon_net, m_lattice, packing_lattice, rogers_densify,
    thin_lattice_general, thin_lattice_symmetric,
)
from .volume import (
    estimate_volume, improve, kb_point, operator_norm, polyhedral_approx,
)

__all__ = [
    "CenteredBody", "CoveringLattice", "EnumerationReport", "LatticeBasis", "SublatticeSpec",
    "ThinLatError", "collect_points", "compile_body", "count_points", "covering_radius_bracket",
    "ellipsoid", "enumerate_points", "epsilon_net", "estimate_volume", "gauge", "hpolytope",
    "improve", "is_far", "kb_body", "kb_point", "lambda1", "lpball", "m_lattice",
    "operator_norm", "packing_lattice", "polyhedral_approx", "rogers_densify",
    "thin_lattice_general", "thin_lattice_symmetric",
]
__version__ = "0.1.0"
