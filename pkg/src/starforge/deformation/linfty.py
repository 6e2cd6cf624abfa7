"""L-infinity morphisms between the two DG Lie algebras, on truncated hbar-series.

Conventions. Work in the shifted grading s(x) = deg(x) - 1, where

    l1 = d,    l2(x, y) = (-1)^{s(x)} [x, y]

are graded symmetric of degree +1. A morphism is a family F_n of graded
symmetric maps of shifted degree 0 (ordinary degree 1 - n) such that, for
every tuple x_1..x_n,

    l1' F_n(x) + 1/2 sum_{I, J} e(I, J) l2'(F(x_I), F(x_J))
        = sum_i e_i F_n(.., l1 x_i, ..) + sum_{i<j} e_ij F_{n-1}(l2(x_i, x_j), ..)

with e the Koszul signs of the shifted degrees. Maurer-Cartan elements have
s = 0, and the push-forward is sum_j F_j(w, .., w) / j!.

Components act on whole hbar-series; morphisms built from maps of the
underlying algebras extend them hbar-multilinearly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Callable, Sequence

from ..algebra import HbarSeries
from ..errors import DegreeError, PreconditionError, StructuralError
from ..polydiff import PolyDiffOp, hkr_u1, symbol_product
from ..polyvector import PolyVector, linear_pushforward
from .dgla import MCElement, SeriesDGLA, base_algebra, series_degree

Component = Callable[[Sequence[HbarSeries]], "HbarSeries | None"]


def koszul_sign(degrees: Sequence[int], order: Sequence[int]) -> int:
    """Sign of reordering elements of the given (shifted) degrees into ``order``."""
    sign = 1
    for a in range(len(order)):
        for b in range(a + 1, len(order)):
            if order[a] > order[b] and degrees[order[a]] % 2 and degrees[order[b]] % 2:
                sign = -sign
    return sign


def _shifted(x: HbarSeries) -> int:
    return series_degree(x) - 1


def _zero_like(alg: SeriesDGLA, order: int, degree: int) -> HbarSeries:
    return HbarSeries.zeros(order, alg.base.zero(degree))


class LInftyMorphism:
    """A truncated family F_1..F_J; components beyond ``arity_cap`` vanish.

    ``component(xs)`` returns F_{len(xs)}(xs) as a series, or None for zero.
    ``source_twist`` and ``target_twist`` twist the differentials.
    """

    def __init__(self, source: str, target: str, nvars: int, arity_cap: int, component: Component,
                 name: str = "morphism", source_twist: HbarSeries | None = None,
                 target_twist: HbarSeries | None = None):
        self.source = source
        self.target = target
        self.nvars = nvars
        self.arity_cap = arity_cap
        self._component = component
        self.name = name
        self.source_twist = source_twist
        self.target_twist = target_twist

    def source_algebra(self, order: int) -> SeriesDGLA:
        return SeriesDGLA(base_algebra(self.source, self.nvars), order, self.source_twist)

    def target_algebra(self, order: int) -> SeriesDGLA:
        return SeriesDGLA(base_algebra(self.target, self.nvars), order, self.target_twist)

    def __call__(self, xs: Sequence[HbarSeries]) -> HbarSeries:
        """F_n(xs), always returned as a series of the correct degree."""
        n = len(xs)
        if n == 0:
            raise StructuralError("Taylor coefficients start at arity 1")
        order = xs[0].order
        degree = sum(series_degree(x) for x in xs) + 1 - n
        out = self._component(xs) if n <= self.arity_cap else None
        if out is None:
            return _zero_like(self.target_algebra(order), order, degree)
        if series_degree(out) != degree:
            raise DegreeError(f"{self.name}: F_{n} produced degree {series_degree(out)}, expected {degree}")
        return out

    def with_component(self, n: int, fn: Callable[[HbarSeries], HbarSeries], name: str) -> "LInftyMorphism":
        """Same morphism with F_n replaced by fn(F_n)."""
        base = self._component

        def comp(xs):
            out = base(xs)
            if len(xs) == n and out is not None:
                return fn(out)
            return out

        return LInftyMorphism(self.source, self.target, self.nvars, self.arity_cap, comp, name,
                              self.source_twist, self.target_twist)


# ---------------------------------------------------------------------------
# multilinear extension


def lift_multilinear(fn: Callable[[Sequence], object | None], zero_of: Callable[[int], object]) -> Component:
    """Extend a map on payloads to series by the truncated Cauchy rule."""

    def comp(xs: Sequence[HbarSeries]) -> HbarSeries | None:
        N = xs[0].order
        n = len(xs)
        degree = sum(series_degree(x) for x in xs) + 1 - n
        acc: list = [None] * (N + 1)
        supports = [[k for k in range(N + 1) if not x[k].is_zero()] for x in xs]
        for ks in product(*supports):
            tot = sum(ks)
            if tot > N:
                continue
            v = fn([x[k] for x, k in zip(xs, ks)])
            if v is None or v.is_zero():
                continue
            acc[tot] = v if acc[tot] is None else acc[tot] + v
        if all(a is None for a in acc):
            return None
        return HbarSeries([a if a is not None else zero_of(degree) for a in acc])

    return comp


# ---------------------------------------------------------------------------
# the identity check


@dataclass
class LInftyReport:
    passed: bool
    max_violation: Fraction
    checked: int
    failures: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "max_violation": str(self.max_violation),
            "checked": self.checked,
            "failures": self.failures,
        }


def _max_abs(x: HbarSeries) -> Fraction:
    best = Fraction(0)
    for c in x.coeffs:
        polys = c.terms.values() if isinstance(c, PolyDiffOp) else c.comps.values()
        for p in polys:
            for v in p.terms.values():
                best = max(best, abs(v))
    return best


def _l2(alg: SeriesDGLA, x: HbarSeries, y: HbarSeries) -> HbarSeries:
    out = alg.bracket(x, y)
    return -out if _shifted(x) % 2 else out


def _nonempty_splits(n: int):
    """Unordered splits {I, J} of range(n), listed once with 0 in I."""
    rest = list(range(1, n))
    for r in range(0, n - 1):
        for extra in combinations(rest, r):
            I = (0,) + extra
            J = tuple(i for i in range(n) if i not in I)
            yield I, J


def linfty_defect(F: LInftyMorphism, xs: Sequence[HbarSeries]) -> HbarSeries:
    """Left side minus right side of the arity-len(xs) identity."""
    n = len(xs)
    order = xs[0].order
    src, tgt = F.source_algebra(order), F.target_algebra(order)
    s = [_shifted(x) for x in xs]
    lhs = tgt.d(F(xs))
    for I, J in _nonempty_splits(n):
        sign = koszul_sign(s, I + J)
        term = _l2(tgt, F([xs[i] for i in I]), F([xs[j] for j in J]))
        lhs = lhs + term if sign > 0 else lhs - term
    rhs = None
    prefix = 0
    for i in range(n):
        args = list(xs)
        args[i] = src.d(xs[i])
        term = F(args)
        term = -term if prefix % 2 else term
        rhs = term if rhs is None else rhs + term
        prefix += s[i]
    if n >= 2:
        for i, j in combinations(range(n), 2):
            rest = [k for k in range(n) if k not in (i, j)]
            sign = koszul_sign(s, [i, j] + rest)
            term = F([_l2(src, xs[i], xs[j])] + [xs[k] for k in rest])
            rhs = rhs + term if sign > 0 else rhs - term
    return lhs - rhs


def linfty_check(F: LInftyMorphism, samples: Sequence[Sequence[HbarSeries]], max_arity: int | None = None) -> LInftyReport:
    """Evaluate the identities on every prefix of every sample tuple.

    The identities are checked up to the sample arity even past
    ``F.arity_cap``: a strict morphism still owes bracket compatibility.
    """
    worst = Fraction(0)
    failures = []
    checked = 0
    for idx, tup in enumerate(samples):
        top = len(tup) if max_arity is None else min(max_arity, len(tup))
        for n in range(1, top + 1):
            v = _max_abs(linfty_defect(F, tup[:n]))
            checked += 1
            if v:
                failures.append({"sample": idx, "arity": n})
                worst = max(worst, v)
    return LInftyReport(not failures, worst, checked, failures)


# ---------------------------------------------------------------------------
# pushing and twisting


def linfty_mc_push(F: LInftyMorphism, omega: MCElement | HbarSeries) -> HbarSeries:
    """sum_{j>=1} F_j(w^j) / j!; terms with j > N vanish since w is a plus-series."""
    w = omega.series if isinstance(omega, MCElement) else omega
    if not w.is_plus():
        raise StructuralError("can only push plus-series")
    N = w.order
    total = F([w])
    for j in range(2, min(N, F.arity_cap) + 1):
        total = total + F([w] * j) * Fraction(1, math.factorial(j))
    return total


def linfty_twist(F: LInftyMorphism, omega: MCElement | HbarSeries, check: bool = True) -> LInftyMorphism:
    """F^w_n(x) = sum_k F_{n+k}(w^k, x) / k!, between the twisted algebras."""
    w = omega.series if isinstance(omega, MCElement) else omega
    if series_degree(w) != 1 or not w.is_plus():
        raise DegreeError("twisting element must be a degree-1 plus-series")
    N = w.order
    if check and not F.source_algebra(N).is_mc(w):
        raise PreconditionError("twisting element is not a Maurer-Cartan element of the source")
    pushed = linfty_mc_push(F, w)
    tw_src = w if F.source_twist is None else F.source_twist + w
    tw_tgt = pushed if F.target_twist is None else F.target_twist + pushed

    def comp(xs):
        total = F(list(xs))
        for k in range(1, min(N, F.arity_cap - len(xs)) + 1):
            total = total + F([w] * k + list(xs)) * Fraction(1, math.factorial(k))
        return total

    return LInftyMorphism(F.source, F.target, F.nvars, F.arity_cap, comp, f"{F.name}^w", tw_src, tw_tgt)


# ---------------------------------------------------------------------------
# composition


def _set_partitions(items: list):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


def compose_linfty(G: LInftyMorphism, F: LInftyMorphism) -> LInftyMorphism:
    """(G o F)_n(x) = sum over set partitions B_1..B_k of e G_k(F(x_B1), .., F(x_Bk)).

    Blocks are unordered and each partition is visited once with blocks
    sorted by their first element, so no factorial appears.
    """
    if F.target != G.source or F.nvars != G.nvars:
        raise StructuralError("morphisms do not compose")

    def comp(xs):
        n = len(xs)
        s = [_shifted(x) for x in xs]
        total = None
        for part in _set_partitions(list(range(n))):
            if len(part) > G.arity_cap or any(len(b) > F.arity_cap for b in part):
                continue
            part = sorted((sorted(b) for b in part), key=lambda b: b[0])
            flat = [i for b in part for i in b]
            sign = koszul_sign(s, flat)
            term = G([F([xs[i] for i in b]) for b in part])
            term = term if sign > 0 else -term
            total = term if total is None else total + term
        return total

    return LInftyMorphism(F.source, G.target, F.nvars, F.arity_cap * G.arity_cap, comp,
                          f"{G.name}.{F.name}", F.source_twist, G.target_twist)


# ---------------------------------------------------------------------------
# catalog of morphisms


def _zero_of(flavor: str, nvars: int) -> Callable[[int], object]:
    alg = base_algebra(flavor, nvars)
    return alg.zero


def identity_morphism(flavor: str, nvars: int) -> LInftyMorphism:
    def comp(xs):
        return xs[0] if len(xs) == 1 else None

    return LInftyMorphism(flavor, flavor, nvars, 1, comp, "id")


def strict_morphism(source: str, target: str, nvars: int, fn: Callable, name: str) -> LInftyMorphism:
    """F_1 = hbar-linear extension of fn, F_{>=2} = 0."""
    lifted = lift_multilinear(lambda ps: fn(ps[0]), _zero_of(target, nvars))

    def comp(xs):
        return lifted(xs) if len(xs) == 1 else None

    return LInftyMorphism(source, target, nvars, 1, comp, name)


def series_linear_morphism(flavor: str, nvars: int, fn: Callable[[HbarSeries], HbarSeries], name: str) -> LInftyMorphism:
    def comp(xs):
        return fn(xs[0]) if len(xs) == 1 else None

    return LInftyMorphism(flavor, flavor, nvars, 1, comp, name)


def linear_change_morphism(nvars: int, matrix) -> LInftyMorphism:
    """Push-forward of polyvectors along t -> M t, a strict automorphism of T_poly."""
    return strict_morphism("polyvector", "polyvector", nvars, lambda p: linear_pushforward(p, matrix), "GL")


def exp_ad_morphism(flavor: str, X, name: str = "exp_ad") -> LInftyMorphism:
    """exp(ad(hbar X)) for a vector field X (a derivation in the operator picture).

    It commutes with d because derivations are Hochschild cocycles, and it
    is a bracket automorphism; hbar makes the exponential finite.
    """
    nvars = X.nvars
    alg = base_algebra(flavor, nvars)
    if X.degree != 0:
        raise DegreeError("exp_ad needs a degree-0 generator")

    if isinstance(X, PolyDiffOp) and any(sum(d[0]) != 1 for d in X.terms):
        raise PreconditionError("exp_ad in the operator algebra needs a derivation")

    def fn(x: HbarSeries) -> HbarSeries:
        N = x.order
        series = SeriesDGLA(alg, N)
        gen = HbarSeries([alg.zero(0), X] + [alg.zero(0)] * (N - 1)) if N else series.zero(0)
        total, term = x, x
        for k in range(1, N + 1):
            term = series.bracket(gen, term) * Fraction(1, k)
            total = total + term
        return total

    return series_linear_morphism(flavor, nvars, fn, name)


def hkr_low_degree_morphism(nvars: int) -> LInftyMorphism:
    """U1 on functions and vector fields, where it is a strict DGLA map."""

    def fn(p: PolyVector) -> PolyDiffOp:
        if p.degree > 0:
            raise DegreeError("this morphism is only defined on functions and vector fields")
        return hkr_u1(p)

    return strict_morphism("polyvector", "polydiff", nvars, fn, "U1|low")


def hkr_first_order_morphism(nvars: int) -> LInftyMorphism:
    """psi_1 = U1 on everything, psi_{>=2} = 0. Not an L-infinity morphism above degree 0."""
    return strict_morphism("polyvector", "polydiff", nvars, hkr_u1, "U1")


def moyal_morphism(nvars: int, scale=1) -> LInftyMorphism:
    """Exponential morphism from constant polyvectors of degree <= 1 into operators.

    F_1 is U1 on functions and vector fields and alpha -> c P_alpha on
    bivectors; F_n(alpha_1, .., alpha_n) = c^n P_alpha_1 ... P_alpha_n (a
    symbol product) and F_n = 0 once a non-bivector enters with n >= 2.
    The source brackets vanish, and the identities become the polarized
    Maurer-Cartan equation of the Moyal exponential.
    """
    c = Fraction(scale)
    zero_of = _zero_of("polydiff", nvars)

    def first(p: PolyVector) -> PolyDiffOp:
        if not p.is_constant():
            raise PreconditionError("the Moyal morphism is defined on constant polyvectors")
        if p.degree > 1:
            raise DegreeError("the Moyal morphism is defined up to bivectors")
        if p.degree == 1:
            return hkr_u1(p) * (2 * c)
        return hkr_u1(p)

    def fn(ps):
        if len(ps) == 1:
            return first(ps[0])
        if any(p.degree != 1 for p in ps):
            for p in ps:
                first(p)  # still validate the domain
            return None
        out = first(ps[0])
        for p in ps[1:]:
            out = symbol_product(out, first(p))
        return out

    lifted = lift_multilinear(fn, zero_of)
    return LInftyMorphism("polyvector", "polydiff", nvars, 1 << 30, lifted, "moyal")


def catalog_morphism(kind: str, nvars: int, **params) -> LInftyMorphism:
    """Named constructors, used by the CLI."""
    if kind == "identity":
        return identity_morphism(params.get("flavor", "polyvector"), nvars)
    if kind == "linear":
        return linear_change_morphism(nvars, params["matrix"])
    if kind == "exp_ad":
        X = params["generator"]
        return exp_ad_morphism(params.get("flavor", "polyvector"), X)
    if kind == "hkr_low":
        return hkr_low_degree_morphism(nvars)
    if kind == "hkr_first_order":
        return hkr_first_order_morphism(nvars)
    if kind == "moyal":
        return moyal_morphism(nvars, params.get("scale", 1))
    raise StructuralError(f"unknown morphism kind {kind!r}")


CATALOG_KINDS = ("identity", "linear", "exp_ad", "hkr_low", "hkr_first_order", "moyal")


def sample_domain(kind: str) -> tuple[tuple[int, ...], int]:
    """(allowed input degrees, coefficient degree) on which a catalog morphism is defined."""
    if kind == "moyal":
        return (-1, 0, 1, 1), 0
    if kind == "hkr_low":
        return (-1, 0), 1
    return (-1, 0, 1), 1
