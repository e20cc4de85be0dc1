"""fpx: arbitrary-point field evaluation on high-order curvilinear meshes."""

from fpx.basis import (
    BasisEnvelope,
    ReferenceBasis,
    build_basis_envelope,
    gll_nodes,
    lagrange_eval,
    legendre_coeffs,
)

__version__ = "0.1.0"

__all__ = [
    "BasisEnvelope",
    "ReferenceBasis",
    "build_basis_envelope",
    "gll_nodes",
    "lagrange_eval",
    "legendre_coeffs",
    "__version__",
]
