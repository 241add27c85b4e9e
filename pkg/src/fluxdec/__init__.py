"""Numerical toolkit for flux-density cost decompositions of Markov jump and
lattice-gas models: cost/force/dissipation evaluation, identity verification,
zero-cost flow integration and exact particle sampling."""

from .models import (
    AffineCappedEta,
    CrnModel,
    ForceTriple,
    IpfgModel,
    LatticeGasModel,
    PowerEta,
    TabulatedEta,
    ZeroRangeModel,
    check_complex_balance,
    normalize_zero_range,
    stationary_measure,
)
from .modelio import bundled_fixtures, parse_model_spec

__version__ = "0.1.0"

__all__ = [
    "AffineCappedEta",
    "CrnModel",
    "ForceTriple",
    "IpfgModel",
    "LatticeGasModel",
    "PowerEta",
    "TabulatedEta",
    "ZeroRangeModel",
    "check_complex_balance",
    "normalize_zero_range",
    "stationary_measure",
    "bundled_fixtures",
    "parse_model_spec",
]
