"""Exact rationals, polynomials over Q, truncated hbar-series and Taylor shifts."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Any, Callable, Iterable, Iterator, Mapping, Sequence

from .errors import DegreeError, MalformedInputError, ResourceError, StructuralError

Exp = tuple  # tuple[int, ...]

ZERO = Fraction(0)
ONE = Fraction(1)


# ---------------------------------------------------------------------------
# rationals


def as_rational(x: Any) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise MalformedInputError(f"not a rational: {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return parse_rational(x)
    raise MalformedInputError(f"not an exact rational: {x!r}")


def parse_rational(text: str) -> Fraction:
    s = text.strip()
    num, sep, den = s.partition("/")
    try:
        n = int(num)
        d = int(den) if sep else 1
    except ValueError:
        raise MalformedInputError(f"bad rational literal {text!r}") from None
    if d == 0:
        raise MalformedInputError(f"zero denominator in {text!r}")
    return Fraction(n, d)


def format_rational(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


# ---------------------------------------------------------------------------
# resource fuse


def max_terms() -> int | None:
    raw = os.environ.get("STARFORGE_MAX_TERMS")
    if not raw:
        return None
    try:
        return int(raw)
    except ValueError:
        raise MalformedInputError(f"STARFORGE_MAX_TERMS must be an integer, got {raw!r}") from None


def check_terms(count: int, what: str) -> None:
    cap = max_terms()
    if cap is not None and count > cap:
        raise ResourceError(f"{what} has {count} terms, over STARFORGE_MAX_TERMS={cap}")


# ---------------------------------------------------------------------------
# multi-indices


def grlex_key(e: Exp) -> tuple:
    """Graded lex: lower total degree first, then t1 > t2 > ... within a degree."""
    return (sum(e), tuple(-v for v in e))


def falling(n: int, k: int) -> int:
    """n (n-1) ... (n-k+1); n may be negative (Laurent exponents)."""
    out = 1
    for j in range(k):
        out *= n - j
    return out


def multi_factorial(a: Exp) -> int:
    out = 1
    for v in a:
        out *= math.factorial(v)
    return out


def add_exp(a: Exp, b: Exp) -> Exp:
    return tuple(x + y for x, y in zip(a, b))


def sub_exp(a: Exp, b: Exp) -> Exp:
    return tuple(x - y for x, y in zip(a, b))


def exp_le(a: Exp, b: Exp) -> bool:
    return all(x <= y for x, y in zip(a, b))


def sub_indices(a: Exp) -> Iterator[Exp]:
    """All b <= a componentwise."""
    return product(*(range(v + 1) for v in a))


def multi_indices(nvars: int, max_order: int, min_order: int = 0) -> list[Exp]:
    """Multi-indices with total order in [min_order, max_order], grlex order."""
    out = [e for e in product(range(max_order + 1), repeat=nvars) if min_order <= sum(e) <= max_order]
    out.sort(key=grlex_key)
    return out


_SPLIT_CACHE: dict[tuple, list] = {}


def splits(a: Exp, parts: int) -> list[tuple[int, tuple[Exp, ...]]]:
    """Ordered decompositions a = c_0 + ... + c_{parts-1} with multinomial weights.

    This is the general Leibniz rule: d^a (f_0 ... f_{parts-1}) expands as
    sum of weight * prod d^{c_k} f_k.
    """
    key = (a, parts)
    hit = _SPLIT_CACHE.get(key)
    if hit is not None:
        return hit
    if parts < 1:
        raise StructuralError("need at least one part")
    if parts == 1:
        res = [(1, (a,))]
    else:
        res = []
        for c0 in sub_indices(a):
            rest = sub_exp(a, c0)
            w0 = 1
            for x, y in zip(a, c0):
                w0 *= math.comb(x, y)
            for w, tail in splits(rest, parts - 1):
                res.append((w0 * w, (c0,) + tail))
    _SPLIT_CACHE[key] = res
    return res


# ---------------------------------------------------------------------------
# polynomials


class Poly:
    """Polynomial over Q in ``nvars`` variables, stored as {exponent tuple: Fraction}."""

    __slots__ = ("nvars", "terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping | Iterable = ()):
        if nvars < 0:
            raise StructuralError("negative variable count")
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Exp, Fraction] = {}
        for e, c in items:
            e = tuple(int(v) for v in e)
            if len(e) != nvars:
                raise StructuralError(f"exponent {e} has length {len(e)}, expected {nvars}")
            if any(v < 0 for v in e):
                raise StructuralError(f"negative exponent in {e}")
            acc[e] = acc.get(e, ZERO) + as_rational(c)
        self.nvars = nvars
        self.terms = {e: c for e, c in acc.items() if c}
        self._hash = None
        check_terms(len(self.terms), "polynomial")

    @classmethod
    def _raw(cls, nvars: int, terms: dict) -> "Poly":
        # trusted constructor: terms already canonical
        p = object.__new__(cls)
        p.nvars = nvars
        p.terms = terms
        p._hash = None
        return p

    # constructors

    @classmethod
    def zero(cls, nvars: int) -> "Poly":
        return cls._raw(nvars, {})

    @classmethod
    def constant(cls, nvars: int, c) -> "Poly":
        c = as_rational(c)
        return cls._raw(nvars, {(0,) * nvars: c} if c else {})

    @classmethod
    def one(cls, nvars: int) -> "Poly":
        return cls.constant(nvars, 1)

    @classmethod
    def var(cls, nvars: int, i: int) -> "Poly":
        if not 0 <= i < nvars:
            raise StructuralError(f"variable index {i} out of range for {nvars} variables")
        e = [0] * nvars
        e[i] = 1
        return cls._raw(nvars, {tuple(e): ONE})

    @classmethod
    def monomial(cls, exp: Sequence[int], c=1) -> "Poly":
        return cls(len(exp), {tuple(exp): c})

    # basic queries

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self.terms), default=-1)

    def coefficient_degree(self) -> int:
        return self.degree()

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * self.nvars, ZERO)

    def sorted_terms(self) -> list[tuple[Exp, Fraction]]:
        return sorted(self.terms.items(), key=lambda kv: grlex_key(kv[0]))

    def __len__(self) -> int:
        return len(self.terms)

    # arithmetic

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise StructuralError(f"variable count mismatch: {self.nvars} vs {other.nvars}")
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return Poly.constant(self.nvars, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not other.terms:
            return self
        out = dict(self.terms)
        for e, c in other.terms.items():
            v = out.get(e, ZERO) + c
            if v:
                out[e] = v
            else:
                out.pop(e, None)
        return Poly._raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly._raw(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def scale(self, c) -> "Poly":
        c = as_rational(c)
        if not c:
            return Poly.zero(self.nvars)
        return Poly._raw(self.nvars, {e: c * v for e, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict[Exp, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(x + y for x, y in zip(e1, e2))
                out[e] = out.get(e, ZERO) + c1 * c2
        out = {e: c for e, c in out.items() if c}
        check_terms(len(out), "polynomial product")
        return Poly._raw(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Poly":
        if k < 0:
            raise StructuralError("negative power of a polynomial")
        out = Poly.one(self.nvars)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.nvars == other.nvars and self.terms == other.terms
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.terms == Poly.constant(self.nvars, other).terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self.terms.items())))
        return self._hash

    # calculus

    def diff(self, i: int, k: int = 1) -> "Poly":
        if not 0 <= i < self.nvars:
            raise StructuralError(f"variable index {i} out of range for {self.nvars} variables")
        out = {}
        for e, c in self.terms.items():
            if e[i] >= k:
                f = falling(e[i], k)
                e2 = e[:i] + (e[i] - k,) + e[i + 1:]
                out[e2] = c * f
        return Poly._raw(self.nvars, out)

    def diff_multi(self, a: Exp) -> "Poly":
        """Apply the mixed partial d^a."""
        if not any(a):
            return self
        out = {}
        for e, c in self.terms.items():
            if exp_le(a, e):
                f = 1
                for x, y in zip(e, a):
                    f *= falling(x, y)
                out[sub_exp(e, a)] = c * f
        return Poly._raw(self.nvars, out)

    # substitution

    def substitute(self, values: Sequence["Poly"]) -> "Poly":
        """Replace t_i by values[i] (all in a common variable count)."""
        if len(values) != self.nvars:
            raise StructuralError("substitution needs one value per variable")
        if not values:
            return self
        m = values[0].nvars
        powers: dict[tuple[int, int], Poly] = {}

        def pw(i: int, k: int) -> Poly:
            key = (i, k)
            if key not in powers:
                powers[key] = Poly.one(m) if k == 0 else pw(i, k - 1) * values[i]
            return powers[key]

        out = Poly.zero(m)
        for e, c in self.sorted_terms():
            term = Poly.constant(m, c)
            for i, k in enumerate(e):
                if k:
                    term = term * pw(i, k)
            out = out + term
        return out

    def linear_substitute(self, matrix: Sequence[Sequence]) -> "Poly":
        """f(M t): t_i -> sum_j M[i][j] t_j."""
        n = self.nvars
        vals = [
            Poly(n, {tuple(1 if k == j else 0 for k in range(n)): matrix[i][j] for j in range(n) if matrix[i][j]})
            for i in range(n)
        ]
        return self.substitute(vals)

    def embed(self, nvars: int, offset: int = 0) -> "Poly":
        """View as a polynomial in more variables, occupying positions offset..offset+n-1."""
        if offset + self.nvars > nvars:
            raise StructuralError("embedding does not fit")
        pre, post = (0,) * offset, (0,) * (nvars - offset - self.nvars)
        return Poly._raw(nvars, {pre + e + post: c for e, c in self.terms.items()})

    def evaluate(self, point: Sequence) -> Fraction:
        total = ZERO
        pt = [as_rational(x) for x in point]
        for e, c in self.terms.items():
            v = c
            for x, k in zip(pt, e):
                if k:
                    v *= x ** k
            total += v
        return total

    # io

    def to_json(self) -> dict:
        return {
            "nvars": self.nvars,
            "terms": [{"exp": list(e), "coeff": format_rational(c)} for e, c in self.sorted_terms()],
        }

    @classmethod
    def from_json(cls, obj: Any) -> "Poly":
        try:
            n = obj["nvars"]
            terms = [(t["exp"], as_rational(t["coeff"])) for t in obj["terms"]]
        except (KeyError, TypeError) as exc:
            raise MalformedInputError(f"bad polynomial JSON: {exc}") from None
        if not isinstance(n, int) or isinstance(n, bool):
            raise MalformedInputError("nvars must be an integer")
        return cls(n, terms)

    def __repr__(self) -> str:
        return f"Poly({self})"

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            mono = "*".join(f"t{i + 1}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k)
            if not mono:
                parts.append(format_rational(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{format_rational(c)}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")


def poly_arith(a: Poly, b: Poly, op: str) -> Poly:
    if a.nvars != b.nvars:
        raise StructuralError(f"variable count mismatch: {a.nvars} vs {b.nvars}")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise StructuralError(f"unknown polynomial operation {op!r}")


def partial_derivative(p: Poly, i: int) -> Poly:
    return p.diff(i)


# ---------------------------------------------------------------------------
# hbar series


@dataclass(frozen=True)
class Context:
    """Truncation settings shared by a computation.

    ``order`` is the largest retained power of hbar. ``degree_cap`` bounds the
    total degree of every polynomial coefficient produced; going over it raises
    instead of truncating.
    """

    order: int
    degree_cap: int | None = None

    def check(self, series: "HbarSeries") -> "HbarSeries":
        if series.order != self.order:
            raise StructuralError(f"series has order {series.order}, context expects {self.order}")
        if self.degree_cap is not None:
            for k, c in enumerate(series.coeffs):
                d = c.coefficient_degree()
                if d > self.degree_cap:
                    raise DegreeError(
                        f"coefficient degree {d} exceeds cap {self.degree_cap}", location=f"coeffs[{k}]"
                    )
        return series


class HbarSeries:
    """c_0 + c_1 hbar + ... + c_N hbar^N with payloads of a single type.

    Payloads must support +, -, unary -, scalar ``*`` and ``is_zero()``.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence):
        if not coeffs:
            raise StructuralError("a series needs at least the hbar^0 coefficient")
        self.coeffs = tuple(coeffs)

    @classmethod
    def zeros(cls, order: int, zero) -> "HbarSeries":
        return cls([zero] * (order + 1))

    @classmethod
    def monomial(cls, order: int, k: int, payload) -> "HbarSeries":
        zero = payload * 0
        return cls([payload if j == k else zero for j in range(order + 1)])

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, k: int):
        return self.coeffs[k]

    def __iter__(self):
        return iter(self.coeffs)

    def __len__(self) -> int:
        return len(self.coeffs)

    def _check(self, other: "HbarSeries") -> None:
        if not isinstance(other, HbarSeries):
            raise StructuralError("expected an hbar series")
        if other.order != self.order:
            raise StructuralError(f"truncation mismatch: {self.order} vs {other.order}")

    def __add__(self, other: "HbarSeries") -> "HbarSeries":
        self._check(other)
        return HbarSeries([a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other: "HbarSeries") -> "HbarSeries":
        self._check(other)
        return HbarSeries([a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __neg__(self) -> "HbarSeries":
        return HbarSeries([-a for a in self.coeffs])

    def __mul__(self, c) -> "HbarSeries":
        return HbarSeries([a * c for a in self.coeffs])

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, HbarSeries):
            return NotImplemented
        return self.order == other.order and all(a == b for a, b in zip(self.coeffs, other.coeffs))

    __hash__ = None

    def map(self, fn: Callable) -> "HbarSeries":
        return HbarSeries([fn(c) for c in self.coeffs])

    def truncate(self, order: int) -> "HbarSeries":
        if order > self.order:
            zero = self.coeffs[0] * 0
            return HbarSeries(list(self.coeffs) + [zero] * (order - self.order))
        return HbarSeries(self.coeffs[: order + 1])

    def shift(self, k: int) -> "HbarSeries":
        """Multiply by hbar^k, dropping what falls past the order."""
        zero = self.coeffs[0] * 0
        return HbarSeries(([zero] * k + list(self.coeffs))[: self.order + 1])

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def is_plus(self) -> bool:
        return self.coeffs[0].is_zero()

    def valuation(self) -> int | None:
        """Lowest k with c_k != 0, None for the zero series."""
        for k, c in enumerate(self.coeffs):
            if not c.is_zero():
                return k
        return None

    def to_json(self) -> dict:
        return {"order": self.order, "coeffs": [c.to_json() for c in self.coeffs]}

    @classmethod
    def from_json(cls, obj: Any, payload_from_json: Callable) -> "HbarSeries":
        try:
            order = obj["order"]
            coeffs = [payload_from_json(c) for c in obj["coeffs"]]
        except (KeyError, TypeError) as exc:
            raise MalformedInputError(f"bad series JSON: {exc}") from None
        if len(coeffs) != order + 1:
            raise MalformedInputError(f"series of order {order} needs {order + 1} coefficients, got {len(coeffs)}")
        return cls(coeffs)

    def __repr__(self) -> str:
        return f"HbarSeries({list(self.coeffs)!r})"


def hbar_combine(a: HbarSeries, b: HbarSeries, op: Callable, ctx: Context | None = None) -> HbarSeries:
    """Truncated Cauchy product: c_k = sum_{i+j=k} op(a_i, b_j)."""
    if a.order != b.order:
        raise StructuralError(f"truncation mismatch: {a.order} vs {b.order}")
    out = []
    for k in range(a.order + 1):
        acc = None
        for i in range(k + 1):
            ai, bj = a.coeffs[i], b.coeffs[k - i]
            if ai.is_zero() or bj.is_zero():
                continue
            v = op(ai, bj)
            acc = v if acc is None else acc + v
        out.append(acc)
    # orders with no contributing pair get a typed zero
    zero = next((c * 0 for c in out if c is not None), None)
    if zero is None:
        zero = op(a.coeffs[0], b.coeffs[0]) * 0
    res = HbarSeries([zero if c is None else c for c in out])
    return ctx.check(res) if ctx is not None else res


def poly_series(order: int, polys: Sequence[Poly]) -> HbarSeries:
    """Pad a list of polynomials to a series of the given order."""
    if not polys:
        raise StructuralError("need at least one coefficient")
    n = polys[0].nvars
    coeffs = list(polys)[: order + 1]
    coeffs += [Poly.zero(n)] * (order + 1 - len(coeffs))
    return HbarSeries(coeffs)


# ---------------------------------------------------------------------------
# Taylor shift


@dataclass(frozen=True)
class TaylorExpansion:
    """f(s + u) = sum_i a_i(s) u^i, with a_i = d^i f / i!."""

    nvars: int
    coeffs: tuple  # tuple of (multi-index, Poly), grlex order

    def coefficient(self, index: Sequence[int]) -> Poly:
        index = tuple(index)
        for i, a in self.coeffs:
            if i == index:
                return a
        return Poly.zero(self.nvars)

    def reassemble(self) -> Poly:
        """Sum a_i(s) (s' - s)^i as a polynomial in 2n variables (s first, then s')."""
        n = self.nvars
        m = 2 * n
        shifted = [Poly.var(m, n + i) - Poly.var(m, i) for i in range(n)]
        out = Poly.zero(m)
        for idx, a in self.coeffs:
            term = a.embed(m, 0)
            for i, k in enumerate(idx):
                if k:
                    term = term * shifted[i] ** k
            out = out + term
        return out

    def to_json(self) -> dict:
        return {
            "nvars": self.nvars,
            "coeffs": [{"index": list(i), "poly": a.to_json()} for i, a in self.coeffs],
        }


def taylor_shift(f: Poly) -> TaylorExpansion:
    n = f.nvars
    d = max(f.degree(), 0)
    out = []
    for idx in multi_indices(n, d):
        a = f.diff_multi(idx)
        if a:
            out.append((idx, a.scale(Fraction(1, multi_factorial(idx)))))
    return TaylorExpansion(n, tuple(out))
