"""Seeded random generators for polynomials, polyvectors, operators and series."""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations

from .algebra import HbarSeries, Poly, multi_indices
from .polydiff import PolyDiffOp
from .polyvector import PolyVector


def make_rng(seed) -> random.Random:
    return seed if isinstance(seed, random.Random) else random.Random(seed)


def rational(rng: random.Random, size: int = 3, denominators: bool = True) -> Fraction:
    num = rng.randint(-size, size)
    den = rng.randint(1, size) if denominators else 1
    return Fraction(num, den)


def poly(rng: random.Random, nvars: int, degree: int, terms: int = 3) -> Poly:
    monos = multi_indices(nvars, degree)
    pick = rng.sample(monos, min(terms, len(monos)))
    return Poly(nvars, {e: rational(rng) for e in pick})


def polyvector(rng: random.Random, nvars: int, degree: int, coeff_degree: int = 1, terms: int = 2) -> PolyVector:
    frames = list(combinations(range(nvars), degree + 1))
    if not frames:
        return PolyVector.zero(degree, nvars)
    return PolyVector(degree, nvars, {f: poly(rng, nvars, coeff_degree, terms) for f in frames})


def operator(rng: random.Random, nvars: int, degree: int, coeff_degree: int = 1, deriv_order: int = 2,
             terms: int = 3, normalized: bool = True) -> PolyDiffOp:
    slots = multi_indices(nvars, deriv_order, 1 if normalized else 0)
    monos = multi_indices(nvars, coeff_degree)
    out = {}
    for _ in range(terms):
        d = tuple(rng.choice(slots) for _ in range(degree + 1))
        out[d] = Poly(nvars, {rng.choice(monos): rational(rng)})
    return PolyDiffOp(degree, nvars, out)


def series(rng: random.Random, order: int, make, zero, plus: bool = False, density: float = 1.0) -> HbarSeries:
    coeffs = []
    for k in range(order + 1):
        if (plus and k == 0) or rng.random() > density:
            coeffs.append(zero)
        else:
            coeffs.append(make())
    return HbarSeries(coeffs)


def polyvector_series(rng, nvars: int, order: int, degree: int, coeff_degree: int = 1, plus: bool = False) -> HbarSeries:
    return series(rng, order, lambda: polyvector(rng, nvars, degree, coeff_degree), PolyVector.zero(degree, nvars), plus)


def operator_series(rng, nvars: int, order: int, degree: int, coeff_degree: int = 1, deriv_order: int = 2,
                    plus: bool = False) -> HbarSeries:
    return series(rng, order, lambda: operator(rng, nvars, degree, coeff_degree, deriv_order),
                  PolyDiffOp.zero(degree, nvars), plus)


def linfty_samples(rng, source: str, nvars: int, order: int, degrees=(-1, 0, 1), coeff_degree: int = 1,
                   count: int = 4, arity: int = 3) -> list:
    """Tuples of homogeneous series with degrees drawn from ``degrees``."""
    out = []
    for _ in range(count):
        tup = []
        for _ in range(arity):
            d = rng.choice(list(degrees))
            if source == "polydiff":
                tup.append(operator_series(rng, nvars, order, d, coeff_degree, 1))
            else:
                tup.append(polyvector_series(rng, nvars, order, d, coeff_degree))
        out.append(tup)
    return out
