"""Order-by-order quantization of formal Poisson structures, and the Moyal oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .algebra import HbarSeries
from .deformation.dgla import MCElement, mc_residual
from .deformation.gauge import gauge_compare_star
from .deformation.star import StarProduct
from .errors import DegreeError, InternalConsistencyError, PreconditionError, WindowError
from .polydiff import (
    OperatorSpaceBasis,
    PolyDiffOp,
    coboundary_search,
    hkr_u1,
    hochschild_d,
    skew_biderivation_part,
    symbol_product,
)
from .polyvector import FormalPoisson, PolyVector

__all__ = ["QuantizationRun", "first_order_term", "gauge_compare_star", "moyal_star", "quantize"]


def first_order_term(alpha: PolyVector) -> PolyDiffOp:
    """sum over ordered pairs alpha^{ij} d_i (x) d_j, i.e. twice the HKR image."""
    if alpha.degree != 1:
        raise DegreeError("expected a bivector")
    return hkr_u1(alpha) * 2


def moyal_star(alpha0: PolyVector, order: int, scale=1) -> StarProduct:
    """beta_j = (c P)^j / j! with P the first-order term of alpha0.

    scale = 1 gives the commutator 2 hbar {f, g}; scale = 1/2 starts from the
    bare HKR image.
    """
    if alpha0.degree != 1:
        raise DegreeError("moyal_star needs a bivector")
    if not alpha0.is_constant():
        raise PreconditionError("moyal_star needs constant coefficients")
    n = alpha0.nvars
    P = first_order_term(alpha0) * Fraction(scale)
    betas = []
    power = PolyDiffOp.multiplication(n)
    for j in range(1, order + 1):
        power = symbol_product(power, P)
        betas.append(power * Fraction(1, math.factorial(j)))
    return StarProduct(n, betas)


@dataclass
class QuantizationRun:
    alpha: FormalPoisson
    order: int
    coeff_caps: list
    deriv_caps: list
    star: StarProduct
    log: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"star": self.star.to_json(), "log": self.log}


def _caps(alpha: FormalPoisson, k: int, coeff_cap, deriv_cap) -> tuple[int, int]:
    deg = max(alpha.coefficient_degree(), 0)
    c = coeff_cap if coeff_cap is not None else deg * k + 2
    d = deriv_cap if deriv_cap is not None else k + 1
    return c, d


def quantize(alpha: FormalPoisson, order: int | None = None, coeff_cap: int | None = None,
             deriv_cap: int | None = None) -> QuantizationRun:
    """Build beta_1, ..., beta_N with vanishing Maurer-Cartan residual.

    beta_k = eta + 2 U1(alpha_k) - (skew biderivation part of eta), where
    d(eta) = -o_k. Coboundaries have symmetric biderivation parts and skew
    biderivations are cocycles, so the correction keeps d(beta_k) = -o_k
    while fixing the first-order class to 2 alpha_k.
    """
    if not isinstance(alpha, FormalPoisson):
        alpha = FormalPoisson(alpha)
    if not alpha.is_poisson():
        raise PreconditionError("input is not a formal Poisson structure")
    N = alpha.order if order is None else order
    if N > alpha.order:
        raise PreconditionError(f"alpha is only known to order {alpha.order}")
    n = alpha.nvars
    zero = PolyDiffOp.zero(1, n)
    betas = [zero] * (N + 1)
    run = QuantizationRun(alpha, N, [], [], StarProduct.trivial(n, N))
    for k in range(1, N + 1):
        ccap, dcap = _caps(alpha, k, coeff_cap, deriv_cap)
        run.coeff_caps.append(ccap)
        run.deriv_caps.append(dcap)
        # betas[k] is still zero here
        o_k = mc_residual(MCElement(HbarSeries(betas), "polydiff"))[k]
        entry = {"order": k, "obstruction_terms": sum(len(c) for c in o_k.terms.values())}
        if not hochschild_d(o_k).is_zero():
            raise InternalConsistencyError(f"obstruction at order {k} is not Hochschild closed", location=f"order {k}")
        basis = OperatorSpaceBasis(1, n, ccap, dcap, normalized=True)
        res = coboundary_search(-o_k, basis, check_closed=False)
        entry["unknowns"] = res.unknowns
        entry["solution_dim"] = res.free
        if not res.found:
            entry["status"] = res.status
            run.log.append(entry)
            raise WindowError(
                f"no correction at order {k} within coefficient degree {ccap}, derivative order {dcap}"
                + (" (obstruction is not exact)" if res.status == "not_exact" else ""),
                location=f"order {k}",
            )
        eta = res.eta
        a_k = alpha.series[k] if k <= alpha.order else PolyVector.zero(1, n)
        betas[k] = eta - skew_biderivation_part(eta) + first_order_term(a_k)
        entry["status"] = "solved"
        run.log.append(entry)
    final = MCElement(HbarSeries(betas), "polydiff")
    if not mc_residual(final).is_zero():
        raise InternalConsistencyError("constructed product is not associative")
    run.star = StarProduct(n, betas[1:])
    return run
