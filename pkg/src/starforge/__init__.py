"""Exact deformation-quantization toolkit over the rationals."""

__version__ = "0.1.0"

from .algebra import Context, HbarSeries, Poly, taylor_shift
from .errors import StarforgeError
from .polydiff import PolyDiffOp, gerstenhaber_bracket, hkr_u1, hochschild_d
from .polyvector import FormalPoisson, PolyVector, poisson_bracket, poisson_check, schouten_bracket

__all__ = [
    "Context",
    "FormalPoisson",
    "HbarSeries",
    "Poly",
    "PolyDiffOp",
    "PolyVector",
    "StarforgeError",
    "gerstenhaber_bracket",
    "hkr_u1",
    "hochschild_d",
    "poisson_bracket",
    "poisson_check",
    "schouten_bracket",
    "taylor_shift",
]
