"""Star products f * g = fg + sum_j beta_j(f, g) hbar^j and their gauge group."""

from __future__ import annotations

from fractions import Fraction
from typing import Any, Sequence

from ..algebra import HbarSeries, Poly, poly_series
from ..errors import DegreeError, MalformedInputError, NotNormalizedError, StructuralError
from ..polydiff import PolyDiffOp, apply, compose, compose_slots, is_normalized
from .dgla import MCElement, mc_residual


def _as_series(x, order: int) -> HbarSeries:
    if isinstance(x, Poly):
        return poly_series(order, [x])
    if isinstance(x, HbarSeries):
        if x.order != order:
            raise StructuralError(f"series of order {x.order} used with a product of order {order}")
        return x
    raise StructuralError("expected a polynomial or a series of polynomials")


class StarProduct:
    __slots__ = ("order", "nvars", "betas")

    def __init__(self, nvars: int, betas: Sequence[PolyDiffOp]):
        betas = tuple(betas)
        for j, b in enumerate(betas, start=1):
            if not isinstance(b, PolyDiffOp) or b.degree != 1:
                raise DegreeError("star product terms are bidifferential operators", location=f"betas[{j - 1}]")
            if b.nvars != nvars:
                raise StructuralError("variable count mismatch", location=f"betas[{j - 1}]")
            if not is_normalized(b):
                raise NotNormalizedError(
                    f"beta_{j} does not vanish on constants; star products need normalized terms",
                    location=f"betas[{j - 1}]",
                )
        self.nvars = nvars
        self.betas = betas
        self.order = len(betas)

    @classmethod
    def trivial(cls, nvars: int, order: int) -> "StarProduct":
        return cls(nvars, [PolyDiffOp.zero(1, nvars)] * order)

    def beta(self, j: int) -> PolyDiffOp:
        """beta_0 is the commutative product."""
        if j == 0:
            return PolyDiffOp.multiplication(self.nvars)
        return self.betas[j - 1]

    def operator_series(self) -> HbarSeries:
        return HbarSeries([self.beta(j) for j in range(self.order + 1)])

    def truncate(self, order: int) -> "StarProduct":
        if order > self.order:
            raise StructuralError("cannot extend a star product past its order")
        return StarProduct(self.nvars, self.betas[:order])

    def __eq__(self, other) -> bool:
        return isinstance(other, StarProduct) and self.nvars == other.nvars and self.betas == other.betas

    def to_json(self) -> dict:
        return {"order": self.order, "nvars": self.nvars, "betas": [b.to_json() for b in self.betas]}

    @classmethod
    def from_json(cls, obj: Any) -> "StarProduct":
        try:
            betas = [PolyDiffOp.from_json(b) for b in obj["betas"]]
            order = obj["order"]
            nvars = obj.get("nvars", betas[0].nvars if betas else None)
        except (KeyError, TypeError, AttributeError) as exc:
            raise MalformedInputError(f"bad star product JSON: {exc}") from None
        if nvars is None:
            raise MalformedInputError("an order-0 star product needs an explicit nvars")
        if len(betas) != order:
            raise MalformedInputError(f"order {order} needs {order} betas, got {len(betas)}")
        return cls(nvars, betas)


def star_from_mc(beta: MCElement | HbarSeries) -> StarProduct:
    s = beta.series if isinstance(beta, MCElement) else beta
    if isinstance(beta, MCElement) and beta.flavor != "polydiff":
        raise StructuralError("star products come from MC elements of the polydifferential algebra")
    return StarProduct(s[0].nvars, list(s.coeffs[1:]))


def mc_from_star(s: StarProduct) -> MCElement:
    coeffs = [PolyDiffOp.zero(1, s.nvars)] + list(s.betas)
    return MCElement(HbarSeries(coeffs), "polydiff")


def star_multiply(s: StarProduct, f, g) -> HbarSeries:
    N = s.order
    f, g = _as_series(f, N), _as_series(g, N)
    out = [Poly.zero(s.nvars) for _ in range(N + 1)]
    for j in range(N + 1):
        b = s.beta(j)
        if b.is_zero():
            continue
        for a in range(N + 1 - j):
            if f[a].is_zero():
                continue
            for c in range(N + 1 - j - a):
                if g[c].is_zero():
                    continue
                out[j + a + c] = out[j + a + c] + apply(b, [f[a], g[c]])
    return HbarSeries(out)


def star_associator(s: StarProduct, f, g, h) -> HbarSeries:
    """(f*g)*h - f*(g*h), truncated."""
    return star_multiply(s, star_multiply(s, f, g), h) - star_multiply(s, f, star_multiply(s, g, h))


def associator_operator(s: StarProduct) -> HbarSeries:
    """The associator as a series of tridifferential operators.

    With the bracket conventions of ``polydiff`` this is exactly minus the
    Maurer-Cartan residual of the betas.
    """
    return -mc_residual(mc_from_star(s))


def star_first_order_bracket(s: StarProduct, f: Poly, g: Poly) -> Poly:
    if s.order < 1:
        raise StructuralError("first-order bracket needs order >= 1")
    b = s.betas[0]
    return apply(b, [f, g]) - apply(b, [g, f])


def star_commutator_bracket(s: StarProduct, f: Poly, g: Poly) -> Poly:
    """hbar^{-1}(f*g - g*f) mod hbar^2."""
    if s.order < 1:
        raise StructuralError("first-order bracket needs order >= 1")
    c = star_multiply(s, f, g) - star_multiply(s, g, f)
    if not c[0].is_zero():
        raise StructuralError("commutator has an hbar^0 term")
    return c[1]


# ---------------------------------------------------------------------------
# series of arity-1 operators


def _id(n: int) -> PolyDiffOp:
    return PolyDiffOp.identity(n)


def op_series_compose(a: Sequence[PolyDiffOp], b: Sequence[PolyDiffOp]) -> list[PolyDiffOp]:
    """Coefficients of (sum a_i hbar^i) o (sum b_j hbar^j)."""
    N = len(a) - 1
    n = a[0].nvars
    out = [PolyDiffOp.zero(0, n) for _ in range(N + 1)]
    for i, x in enumerate(a):
        if x.is_zero():
            continue
        for j in range(N + 1 - i):
            y = b[j]
            if y.is_zero():
                continue
            out[i + j] = out[i + j] + compose(x, y)
    return out


def op_series_inverse(a: Sequence[PolyDiffOp]) -> list[PolyDiffOp]:
    """Inverse of a series with leading term the identity (geometric series)."""
    n = a[0].nvars
    if a[0] != _id(n):
        raise StructuralError("gauge series must start with the identity")
    N = len(a) - 1
    inv = [_id(n)] + [PolyDiffOp.zero(0, n) for _ in range(N)]
    for k in range(1, N + 1):
        acc = PolyDiffOp.zero(0, n)
        for i in range(1, k + 1):
            if not a[i].is_zero() and not inv[k - i].is_zero():
                acc = acc + compose(a[i], inv[k - i])
        inv[k] = -acc
    return inv


def op_series_exp(g: Sequence[PolyDiffOp]) -> list[PolyDiffOp]:
    """exp of a plus-series of arity-1 operators (composition powers)."""
    n = g[0].nvars
    if not g[0].is_zero():
        raise StructuralError("exp needs a plus-series")
    N = len(g) - 1
    total = [_id(n)] + [PolyDiffOp.zero(0, n) for _ in range(N)]
    term = list(total)
    for k in range(1, N + 1):
        term = [c * Fraction(1, k) for c in op_series_compose(g, term)]
        total = [x + y for x, y in zip(total, term)]
    return total


def op_series_log(a: Sequence[PolyDiffOp]) -> list[PolyDiffOp]:
    n = a[0].nvars
    if a[0] != _id(n):
        raise StructuralError("log needs a series starting with the identity")
    N = len(a) - 1
    x = [PolyDiffOp.zero(0, n)] + list(a[1:])
    total = [PolyDiffOp.zero(0, n) for _ in range(N + 1)]
    power = x
    for k in range(1, N + 1):
        sign = 1 if k % 2 else -1
        total = [t + p * Fraction(sign, k) for t, p in zip(total, power)]
        power = op_series_compose(power, x)
    return total


class GaugeElement:
    """Gamma = 1 + gamma_1 hbar + ... + gamma_N hbar^N with gamma_k(1) = 0."""

    __slots__ = ("nvars", "gammas")

    def __init__(self, nvars: int, gammas: Sequence[PolyDiffOp]):
        gammas = tuple(gammas)
        for k, g in enumerate(gammas, start=1):
            if not isinstance(g, PolyDiffOp) or g.degree != 0:
                raise DegreeError("gauge terms are arity-1 operators", location=f"gammas[{k - 1}]")
            if g.nvars != nvars:
                raise StructuralError("variable count mismatch", location=f"gammas[{k - 1}]")
            if not is_normalized(g):
                raise NotNormalizedError(f"gamma_{k}(1) must vanish", location=f"gammas[{k - 1}]")
        self.nvars = nvars
        self.gammas = gammas

    @property
    def order(self) -> int:
        return len(self.gammas)

    @classmethod
    def identity(cls, nvars: int, order: int) -> "GaugeElement":
        return cls(nvars, [PolyDiffOp.zero(0, nvars)] * order)

    def full(self) -> list[PolyDiffOp]:
        return [_id(self.nvars)] + list(self.gammas)

    @classmethod
    def from_full(cls, ops: Sequence[PolyDiffOp]) -> "GaugeElement":
        return cls(ops[0].nvars, list(ops[1:]))

    @classmethod
    def exp(cls, gamma: HbarSeries) -> "GaugeElement":
        """exp(gamma) for a plus-series of normalized arity-1 operators."""
        return cls.from_full(op_series_exp(list(gamma.coeffs)))

    def log(self) -> HbarSeries:
        return HbarSeries(op_series_log(self.full()))

    def inverse(self) -> "GaugeElement":
        return GaugeElement.from_full(op_series_inverse(self.full()))

    def compose(self, other: "GaugeElement") -> "GaugeElement":
        """self o other as automorphisms of C[[hbar]]."""
        if other.order != self.order:
            raise StructuralError("truncation mismatch")
        return GaugeElement.from_full(op_series_compose(self.full(), other.full()))

    def apply(self, f) -> HbarSeries:
        f = _as_series(f, self.order)
        full = self.full()
        n = self.nvars
        out = [Poly.zero(n) for _ in range(self.order + 1)]
        for i, g in enumerate(full):
            for j in range(self.order + 1 - i):
                if not f[j].is_zero():
                    out[i + j] = out[i + j] + apply(g, [f[j]])
        return HbarSeries(out)

    def __eq__(self, other) -> bool:
        return isinstance(other, GaugeElement) and self.nvars == other.nvars and self.gammas == other.gammas

    def to_json(self) -> dict:
        return {"order": self.order, "nvars": self.nvars, "gammas": [g.to_json() for g in self.gammas]}

    @classmethod
    def from_json(cls, obj: Any) -> "GaugeElement":
        try:
            gammas = [PolyDiffOp.from_json(g) for g in obj["gammas"]]
            order = obj["order"]
            nvars = obj.get("nvars", gammas[0].nvars if gammas else None)
        except (KeyError, TypeError, AttributeError) as exc:
            raise MalformedInputError(f"bad gauge element JSON: {exc}") from None
        if nvars is None:
            raise MalformedInputError("an order-0 gauge element needs an explicit nvars")
        if len(gammas) != order:
            raise MalformedInputError(f"order {order} needs {order} gammas, got {len(gammas)}")
        return cls(nvars, gammas)


def gauge_act_star(gauge: GaugeElement, s: StarProduct) -> StarProduct:
    """f *' g = Gamma^{-1}(Gamma f * Gamma g)."""
    if gauge.order != s.order or gauge.nvars != s.nvars:
        raise StructuralError("gauge element and star product do not match")
    N, n = s.order, s.nvars
    G = gauge.full()
    Ginv = op_series_inverse(G)
    inner = [PolyDiffOp.zero(1, n) for _ in range(N + 1)]
    for j in range(N + 1):
        m = s.beta(j)
        if m.is_zero():
            continue
        for b in range(N + 1 - j):
            if G[b].is_zero():
                continue
            for c in range(N + 1 - j - b):
                if G[c].is_zero():
                    continue
                inner[j + b + c] = inner[j + b + c] + compose_slots(m, [G[b], G[c]])
    out = [PolyDiffOp.zero(1, n) for _ in range(N + 1)]
    for a in range(N + 1):
        if Ginv[a].is_zero():
            continue
        for k in range(N + 1 - a):
            if not inner[k].is_zero():
                out[a + k] = out[a + k] + compose(Ginv[a], inner[k])
    if out[0] != PolyDiffOp.multiplication(n):
        raise StructuralError("conjugated product lost its commutative leading term")
    return StarProduct(n, out[1:])
