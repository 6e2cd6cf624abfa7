"""The two DG Lie algebras and their truncated hbar-adic extensions.

``PolyvectorDGLA`` is polyvector fields with the Schouten bracket and d = 0.
``PolydiffDGLA`` is polydifferential operators with the Gerstenhaber bracket
and d = [mu, -]. ``SeriesDGLA`` extends either one to hbar-series of a fixed
order, optionally twisted by a Maurer-Cartan element.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Any

from ..algebra import HbarSeries, hbar_combine
from ..errors import DegreeError, MalformedInputError, StructuralError
from ..polydiff import PolyDiffOp, gerstenhaber_bracket, hochschild_d
from ..polyvector import PolyVector, schouten_bracket

HALF = Fraction(1, 2)


class PolyvectorDGLA:
    flavor = "polyvector"
    payload = PolyVector

    def __init__(self, nvars: int):
        self.nvars = nvars

    def bracket(self, a: PolyVector, b: PolyVector) -> PolyVector:
        return schouten_bracket(a, b)

    def d(self, a: PolyVector) -> PolyVector:
        return PolyVector.zero(a.degree + 1, a.nvars)

    def zero(self, degree: int) -> PolyVector:
        return PolyVector.zero(degree, self.nvars)

    def check(self, a: Any) -> None:
        if not isinstance(a, PolyVector) or a.nvars != self.nvars:
            raise StructuralError(f"expected a polyvector in {self.nvars} variables")

    def __eq__(self, other) -> bool:
        return type(other) is type(self) and other.nvars == self.nvars


class PolydiffDGLA:
    flavor = "polydiff"
    payload = PolyDiffOp

    def __init__(self, nvars: int):
        self.nvars = nvars

    def bracket(self, a: PolyDiffOp, b: PolyDiffOp) -> PolyDiffOp:
        return gerstenhaber_bracket(a, b)

    def d(self, a: PolyDiffOp) -> PolyDiffOp:
        return hochschild_d(a)

    def zero(self, degree: int) -> PolyDiffOp:
        return PolyDiffOp.zero(degree, self.nvars)

    def check(self, a: Any) -> None:
        if not isinstance(a, PolyDiffOp) or a.nvars != self.nvars:
            raise StructuralError(f"expected a polydifferential operator in {self.nvars} variables")

    def __eq__(self, other) -> bool:
        return type(other) is type(self) and other.nvars == self.nvars


def base_algebra(flavor: str, nvars: int):
    if flavor == "polyvector":
        return PolyvectorDGLA(nvars)
    if flavor == "polydiff":
        return PolydiffDGLA(nvars)
    raise MalformedInputError(f"unknown algebra flavor {flavor!r}")


def flavor_of(payload: Any) -> str:
    if isinstance(payload, PolyVector):
        return "polyvector"
    if isinstance(payload, PolyDiffOp):
        return "polydiff"
    raise StructuralError(f"no DG Lie algebra holds {type(payload).__name__}")


def series_degree(x: HbarSeries) -> int:
    degs = {c.degree for c in x.coeffs}
    if len(degs) != 1:
        raise DegreeError(f"series mixes degrees {sorted(degs)}")
    return degs.pop()


class SeriesDGLA:
    """base[[hbar]] / hbar^{N+1}, with differential d + ad(twist)."""

    def __init__(self, base, order: int, twist: HbarSeries | None = None):
        self.base = base
        self.order = order
        if twist is not None:
            if twist.order != order:
                raise StructuralError("twisting element has the wrong order")
            if not twist.is_plus():
                raise StructuralError("twisting element must be a plus-series")
            if series_degree(twist) != 1:
                raise DegreeError("twisting element must have degree 1")
        self.twist = twist

    @property
    def flavor(self) -> str:
        return self.base.flavor

    @property
    def nvars(self) -> int:
        return self.base.nvars

    def zero(self, degree: int) -> HbarSeries:
        return HbarSeries.zeros(self.order, self.base.zero(degree))

    def degree(self, x: HbarSeries) -> int:
        return series_degree(x)

    def check(self, x: HbarSeries) -> None:
        if not isinstance(x, HbarSeries) or x.order != self.order:
            raise StructuralError(f"expected a series of order {self.order}")
        for c in x.coeffs:
            self.base.check(c)
        series_degree(x)

    def bracket(self, x: HbarSeries, y: HbarSeries) -> HbarSeries:
        return hbar_combine(x, y, self.base.bracket)

    def d(self, x: HbarSeries) -> HbarSeries:
        out = x.map(self.base.d)
        if self.twist is not None:
            out = out + self.bracket(self.twist, x)
        return out

    def untwisted_d(self, x: HbarSeries) -> HbarSeries:
        return x.map(self.base.d)

    def twisted(self, omega: HbarSeries) -> "SeriesDGLA":
        tw = omega if self.twist is None else self.twist + omega
        return SeriesDGLA(self.base, self.order, tw)

    def mc_residual(self, omega: HbarSeries) -> HbarSeries:
        return self.d(omega) + self.bracket(omega, omega) * HALF

    def is_mc(self, omega: HbarSeries) -> bool:
        return self.mc_residual(omega).is_zero()


class MCElement:
    """A degree-1 plus-series in one of the two algebras."""

    __slots__ = ("flavor", "series")

    def __init__(self, series: HbarSeries, flavor: str | None = None):
        flavor = flavor or flavor_of(series[0])
        if series_degree(series) != 1:
            raise DegreeError("Maurer-Cartan candidates have degree 1")
        if not series.is_plus():
            raise StructuralError("Maurer-Cartan candidates must be plus-series", location="coeffs[0]")
        base_algebra(flavor, series[0].nvars).check(series[0])
        self.flavor = flavor
        self.series = series

    @property
    def order(self) -> int:
        return self.series.order

    @property
    def nvars(self) -> int:
        return self.series[0].nvars

    def algebra(self) -> SeriesDGLA:
        return SeriesDGLA(base_algebra(self.flavor, self.nvars), self.order)

    def __eq__(self, other) -> bool:
        return isinstance(other, MCElement) and self.flavor == other.flavor and self.series == other.series

    def to_json(self) -> dict:
        return {"flavor": self.flavor, "series": self.series.to_json()}

    @classmethod
    def from_json(cls, obj: Any) -> "MCElement":
        try:
            flavor = obj["flavor"]
            payload = base_algebra(flavor, 0).payload
            series = HbarSeries.from_json(obj["series"], payload.from_json)
        except (KeyError, TypeError) as exc:
            raise MalformedInputError(f"bad MC element JSON: {exc}") from None
        return cls(series, flavor)


def mc_residual(omega: MCElement) -> HbarSeries:
    """d(omega) + 1/2 [omega, omega], truncated."""
    return omega.algebra().mc_residual(omega.series)
