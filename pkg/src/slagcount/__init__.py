"""Exact constant chain and numerical checks for isotropic lattice counts in SO(p, q)."""

from .exponent_calculus import AsymptoticMonomial, DeltaReport, balance, delta_chain
from .harish_chandra import iwasawa, xi_decay_fit, xi_value
from .isotropic_census import census, fit_exponent
from .lie_data import GroupSpec, dimensions, rho_H, root_datum
from .quadratic_lattice import GramLattice, PositivePlane, k3_lattice

__version__ = "0.1.0"

__all__ = [
    "AsymptoticMonomial", "DeltaReport", "GramLattice", "GroupSpec", "PositivePlane",
    "balance", "census", "delta_chain", "dimensions", "fit_exponent", "iwasawa",
    "k3_lattice", "rho_H", "root_datum", "xi_decay_fit", "xi_value",
]
