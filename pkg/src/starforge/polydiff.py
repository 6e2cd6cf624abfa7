"""Polydifferential operators over Q[t] and the Hochschild/Gerstenhaber calculus.

A degree-p operator has arity p+1 and is stored as
{(a_0, ..., a_p): c(t)}, meaning (f_0, ..., f_p) -> sum c * prod d^{a_k} f_k.
Degree -1 operators are functions, stored under the empty key.

Sign conventions
----------------
For D of arity m and E of arity k the pre-composition is

    D o E = sum_i (-1)^{(k-1)(m-1-i)} D(x_0, ..., E(x_i, ..), ...)

and [D, E] = D o E - (-1)^{(m-1)(k-1)} E o D. With mu the product,
d = [mu, -] sends an arity-1 D to (f, g) -> D(f) g + f D(g) - D(fg), and
[[beta, f], g] = beta(g, f) - beta(f, g) for a bidifferential beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations, product
from typing import Any, Iterable, Mapping, Sequence

from .algebra import Exp, Poly, add_exp, as_rational, check_terms, grlex_key, multi_indices, splits
from .errors import DegreeError, MalformedInputError, NotClosedError, StructuralError
from .linalg import SparseSystem
from .polyvector import PolyVector

Derivs = tuple  # tuple of multi-indices, one per argument slot


def _perm_sign(p: Sequence[int]) -> int:
    sign = 1
    p = list(p)
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                sign = -sign
    return sign


class PolyDiffOp:
    __slots__ = ("degree", "nvars", "terms")

    def __init__(self, degree: int, nvars: int, terms: Mapping | Iterable = ()):
        if degree < -1:
            raise DegreeError(f"operator degree must be >= -1, got {degree}")
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Derivs, Poly] = {}
        for derivs, c in items:
            derivs = tuple(tuple(int(v) for v in a) for a in derivs)
            if len(derivs) != degree + 1:
                raise StructuralError(f"term has {len(derivs)} slots, arity is {degree + 1}")
            for a in derivs:
                if len(a) != nvars or any(v < 0 for v in a):
                    raise StructuralError(f"bad multi-index {a} for {nvars} variables")
            if not isinstance(c, Poly):
                c = Poly.constant(nvars, as_rational(c))
            if c.nvars != nvars:
                raise StructuralError("coefficient has the wrong variable count")
            acc[derivs] = acc[derivs] + c if derivs in acc else c
        self.degree = degree
        self.nvars = nvars
        self.terms = {d: c for d, c in acc.items() if c}
        check_terms(len(self.terms), "operator")

    @classmethod
    def _raw(cls, degree: int, nvars: int, terms: dict) -> "PolyDiffOp":
        o = object.__new__(cls)
        o.degree, o.nvars, o.terms = degree, nvars, terms
        return o

    # constructors

    @classmethod
    def zero(cls, degree: int, nvars: int) -> "PolyDiffOp":
        return cls._raw(degree, nvars, {})

    @classmethod
    def function(cls, f: Poly) -> "PolyDiffOp":
        return cls._raw(-1, f.nvars, {(): f} if f else {})

    @classmethod
    def multiplication(cls, nvars: int) -> "PolyDiffOp":
        z = (0,) * nvars
        return cls._raw(1, nvars, {(z, z): Poly.one(nvars)})

    @classmethod
    def identity(cls, nvars: int) -> "PolyDiffOp":
        return cls._raw(0, nvars, {((0,) * nvars,): Poly.one(nvars)})

    @classmethod
    def multiply_by(cls, f: Poly) -> "PolyDiffOp":
        """The arity-1 operator g -> f g."""
        return cls._raw(0, f.nvars, {((0,) * f.nvars,): f} if f else {})

    @classmethod
    def derivative(cls, nvars: int, a: Sequence[int], coeff=1) -> "PolyDiffOp":
        c = coeff if isinstance(coeff, Poly) else Poly.constant(nvars, coeff)
        return cls(0, nvars, [((tuple(a),), c)])

    @classmethod
    def monomial(cls, derivs: Sequence[Sequence[int]], coeff: Poly) -> "PolyDiffOp":
        return cls(len(derivs) - 1, coeff.nvars, [(derivs, coeff)])

    # queries

    @property
    def arity(self) -> int:
        return self.degree + 1

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient_degree(self) -> int:
        return max((c.degree() for c in self.terms.values()), default=-1)

    def deriv_order(self) -> int:
        """Largest derivative order in any single slot."""
        return max((sum(a) for d in self.terms for a in d), default=0)

    def is_constant(self) -> bool:
        return all(c.is_constant() for c in self.terms.values())

    def sorted_terms(self) -> list[tuple[Derivs, Poly]]:
        return sorted(self.terms.items(), key=lambda kv: tuple(grlex_key(a) for a in kv[0]))

    def as_function(self) -> Poly:
        if self.degree != -1:
            raise DegreeError("not a function")
        return self.terms.get((), Poly.zero(self.nvars))

    # linear structure

    def _same(self, other: "PolyDiffOp") -> None:
        if not isinstance(other, PolyDiffOp):
            raise StructuralError("expected an operator")
        if other.nvars != self.nvars:
            raise StructuralError(f"variable count mismatch: {self.nvars} vs {other.nvars}")
        if other.degree != self.degree:
            raise DegreeError(f"cannot add operators of degrees {self.degree} and {other.degree}")

    def __add__(self, other: "PolyDiffOp") -> "PolyDiffOp":
        self._same(other)
        if not other.terms:
            return self
        out = dict(self.terms)
        for d, c in other.terms.items():
            v = out[d] + c if d in out else c
            if v:
                out[d] = v
            else:
                out.pop(d, None)
        return PolyDiffOp._raw(self.degree, self.nvars, out)

    def __neg__(self) -> "PolyDiffOp":
        return PolyDiffOp._raw(self.degree, self.nvars, {d: -c for d, c in self.terms.items()})

    def __sub__(self, other: "PolyDiffOp") -> "PolyDiffOp":
        return self + (-other)

    def __mul__(self, c) -> "PolyDiffOp":
        if isinstance(c, Poly):
            out = {}
            for d, v in self.terms.items():
                w = c * v
                if w:
                    out[d] = w
            return PolyDiffOp._raw(self.degree, self.nvars, out)
        c = as_rational(c)
        if not c:
            return PolyDiffOp.zero(self.degree, self.nvars)
        return PolyDiffOp._raw(self.degree, self.nvars, {d: v.scale(c) for d, v in self.terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyDiffOp):
            return NotImplemented
        return (self.degree, self.nvars, self.terms) == (other.degree, other.nvars, other.terms)

    def __hash__(self) -> int:
        return hash((self.degree, self.nvars, frozenset(self.terms.items())))

    # evaluation

    def __call__(self, *args: Poly) -> Poly:
        return apply(self, list(args))

    # io

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "nvars": self.nvars,
            "terms": [{"coeff": c.to_json(), "derivs": [list(a) for a in d]} for d, c in self.sorted_terms()],
        }

    @classmethod
    def from_json(cls, obj: Any) -> "PolyDiffOp":
        try:
            degree, n = obj["degree"], obj["nvars"]
            terms = [(t["derivs"], Poly.from_json(t["coeff"])) for t in obj["terms"]]
        except (KeyError, TypeError) as exc:
            raise MalformedInputError(f"bad operator JSON: {exc}") from None
        return cls(degree, n, terms)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for d, c in self.sorted_terms():
            slots = ",".join(
                "".join(f"d{i + 1}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(a) if k) or "1" for a in d
            )
            parts.append(f"({c})[{slots}]")
        return " + ".join(parts)

    __repr__ = __str__


# ---------------------------------------------------------------------------
# evaluation and composition


def apply(D: PolyDiffOp, args: Sequence[Poly]) -> Poly:
    if len(args) != D.arity:
        raise StructuralError(f"operator of arity {D.arity} applied to {len(args)} arguments")
    for a in args:
        if a.nvars != D.nvars:
            raise StructuralError("argument has the wrong variable count")
    out = Poly.zero(D.nvars)
    cache: dict[tuple[int, Exp], Poly] = {}
    for derivs, c in D.terms.items():
        term = c
        for k, a in enumerate(derivs):
            key = (k, a)
            if key not in cache:
                cache[key] = args[k].diff_multi(a)
            v = cache[key]
            if not v:
                term = None
                break
            term = term * v
        if term is not None:
            out = out + term
    return out


def insert(D: PolyDiffOp, i: int, E: PolyDiffOp) -> PolyDiffOp:
    """D(x_0, .., x_{i-1}, E(x_i, ..), ..) in normal form (no sign)."""
    if D.nvars != E.nvars:
        raise StructuralError(f"variable count mismatch: {D.nvars} vs {E.nvars}")
    if not 0 <= i < D.arity:
        raise StructuralError(f"slot {i} out of range for arity {D.arity}")
    k = E.arity
    out: dict[Derivs, Poly] = {}
    for dd, c in D.terms.items():
        a = dd[i]
        before, after = dd[:i], dd[i + 1:]
        for ee, e in E.terms.items():
            if k == 0:
                ce = e.diff_multi(a)
                if ce:
                    v = c * ce
                    key = before + after
                    out[key] = out[key] + v if key in out else v
                continue
            for w, parts in splits(a, k + 1):
                ce = e.diff_multi(parts[0])
                if not ce:
                    continue
                v = (c * ce).scale(w) if w != 1 else c * ce
                key = before + tuple(add_exp(ee[j], parts[j + 1]) for j in range(k)) + after
                out[key] = out[key] + v if key in out else v
    out = {d: c for d, c in out.items() if c}
    check_terms(len(out), "operator composition")
    return PolyDiffOp._raw(D.degree + E.degree, D.nvars, out)


def compose(D: PolyDiffOp, E: PolyDiffOp) -> PolyDiffOp:
    """D o E for arity-1 operators (or E a function)."""
    if D.arity != 1:
        raise StructuralError("compose() needs an arity-1 outer operator")
    return insert(D, 0, E)


def compose_slots(D: PolyDiffOp, inner: Sequence[PolyDiffOp]) -> PolyDiffOp:
    """D(E_0 x_0, ..., E_{m-1} x_{m-1}) for arity-1 operators E_j."""
    if len(inner) != D.arity:
        raise StructuralError("need one inner operator per slot")
    out = D
    for j, E in enumerate(inner):
        if E.arity != 1:
            raise StructuralError("inner operators must have arity 1")
        out = insert(out, j, E)
    return out


def pre_composition(D: PolyDiffOp, E: PolyDiffOp) -> PolyDiffOp:
    m, k = D.arity, E.arity
    out = PolyDiffOp.zero(D.degree + E.degree, D.nvars)
    for i in range(m):
        term = insert(D, i, E)
        if ((k - 1) * (m - 1 - i)) % 2:
            term = -term
        out = out + term
    return out


def gerstenhaber_bracket(D: PolyDiffOp, E: PolyDiffOp) -> PolyDiffOp:
    if D.nvars != E.nvars:
        raise StructuralError(f"variable count mismatch: {D.nvars} vs {E.nvars}")
    left = pre_composition(D, E)
    right = pre_composition(E, D)
    if (D.degree * E.degree) % 2:
        return left + right
    return left - right


def hochschild_d(D: PolyDiffOp) -> PolyDiffOp:
    return gerstenhaber_bracket(PolyDiffOp.multiplication(D.nvars), D)


def is_normalized(D: PolyDiffOp) -> bool:
    if D.degree < 0:
        raise DegreeError("normalization is defined for operators of degree >= 0")
    return all(all(any(a) for a in d) for d in D.terms)


def symbol_product(A: PolyDiffOp, B: PolyDiffOp) -> PolyDiffOp:
    """Slotwise product of symbols: derivatives add, coefficients multiply.

    For constant coefficients this is the composition product of commuting
    operators, e.g. the powers P^j in the Moyal formula.
    """
    if A.degree != B.degree or A.nvars != B.nvars:
        raise StructuralError("symbol product needs operators of equal shape")
    out: dict[Derivs, Poly] = {}
    for da, ca in A.terms.items():
        for db, cb in B.terms.items():
            key = tuple(add_exp(x, y) for x, y in zip(da, db))
            v = ca * cb
            out[key] = out[key] + v if key in out else v
    return PolyDiffOp._raw(A.degree, A.nvars, {d: c for d, c in out.items() if c})


# ---------------------------------------------------------------------------
# HKR


def hkr_u1(gamma: PolyVector) -> PolyDiffOp:
    """Antisymmetrization xi_0 ^ ... ^ xi_p -> 1/(p+1)! sum sgn(s) xi_s(0)(c_0) ... xi_s(p)(c_p)."""
    n = gamma.nvars
    if gamma.degree == -1:
        return PolyDiffOp.function(gamma.as_function())
    k = gamma.degree + 1
    w = Fraction(1, math.factorial(k))
    out: dict[Derivs, Poly] = {}
    units = [tuple(int(j == i) for j in range(n)) for i in range(n)]
    for frame, c in gamma.comps.items():
        for perm in permutations(range(k)):
            key = tuple(units[frame[perm[r]]] for r in range(k))
            v = c.scale(w * _perm_sign(perm))
            out[key] = out[key] + v if key in out else v
    return PolyDiffOp._raw(gamma.degree, n, {d: c for d, c in out.items() if c})


def skew_biderivation_part(beta: PolyDiffOp) -> PolyDiffOp:
    """Antisymmetric part of the first-order-in-each-slot terms of a bidifferential operator."""
    if beta.degree != 1:
        raise DegreeError("needs a bidifferential operator")
    out = PolyDiffOp.zero(1, beta.nvars)
    half = Fraction(1, 2)
    for (a, b), c in beta.terms.items():
        if sum(a) == 1 and sum(b) == 1:
            out = out + PolyDiffOp._raw(1, beta.nvars, {(a, b): c.scale(half)})
            out = out - PolyDiffOp._raw(1, beta.nvars, {(b, a): c.scale(half)})
    return out


# ---------------------------------------------------------------------------
# finite windows and the coboundary solver


@dataclass(frozen=True)
class OperatorSpaceBasis:
    """Operators of a fixed degree with coefficient degree <= coeff_cap and per-slot order <= deriv_cap."""

    degree: int
    nvars: int
    coeff_cap: int
    deriv_cap: int
    normalized: bool = True

    def slot_indices(self) -> list[Exp]:
        return multi_indices(self.nvars, self.deriv_cap, 1 if self.normalized else 0)

    def coefficient_monomials(self) -> list[Exp]:
        return multi_indices(self.nvars, self.coeff_cap)

    def elements(self) -> list[tuple[Exp, Derivs]]:
        """(coefficient monomial, derivative tuple), deterministic order."""
        slots = self.slot_indices()
        derivs = list(product(slots, repeat=self.degree + 1))
        return [(c, d) for c in self.coefficient_monomials() for d in derivs]

    def __len__(self) -> int:
        return len(self.coefficient_monomials()) * len(self.slot_indices()) ** (self.degree + 1)

    def contains(self, D: PolyDiffOp) -> bool:
        if D.degree != self.degree or D.nvars != self.nvars:
            return False
        if D.coefficient_degree() > self.coeff_cap:
            return False
        for d in D.terms:
            for a in d:
                if sum(a) > self.deriv_cap or (self.normalized and not any(a)):
                    return False
        return True

    def coordinates(self, D: PolyDiffOp) -> dict[tuple[Exp, Derivs], Fraction]:
        if not self.contains(D):
            raise StructuralError("operator lies outside the basis window")
        return {(e, d): c for d, p in D.terms.items() for e, c in p.terms.items()}

    def element(self, key: tuple[Exp, Derivs]) -> PolyDiffOp:
        e, d = key
        return PolyDiffOp._raw(self.degree, self.nvars, {d: Poly._raw(self.nvars, {e: Fraction(1)})})


def default_window(Z: PolyDiffOp, normalized: bool = False) -> OperatorSpaceBasis:
    return OperatorSpaceBasis(
        degree=Z.degree - 1,
        nvars=Z.nvars,
        coeff_cap=max(Z.coefficient_degree(), 0) + 2,
        # d spreads the derivatives of eta over the slots of Z
        deriv_cap=max((sum(sum(a) for a in d) for d in Z.terms), default=1) or 1,
        normalized=normalized,
    )


_D_CACHE: dict[tuple[int, Derivs], PolyDiffOp] = {}


def _d_constant(nvars: int, derivs: Derivs) -> PolyDiffOp:
    key = (nvars, derivs)
    hit = _D_CACHE.get(key)
    if hit is None:
        op = PolyDiffOp._raw(len(derivs) - 1, nvars, {derivs: Poly.one(nvars)})
        hit = _D_CACHE[key] = hochschild_d(op)
    return hit


def _compositions(v: Exp, parts: int, cap: int, normalized: bool) -> list[Derivs]:
    out = []
    for _, ps in splits(v, parts):
        if all(sum(a) <= cap and (any(a) or not normalized) for a in ps):
            out.append(ps)
    out.sort(key=lambda d: tuple(grlex_key(a) for a in d))
    return out


@dataclass
class CoboundaryResult:
    status: str  # "found" | "none_in_window" | "not_exact"
    eta: PolyDiffOp | None = None
    blocks: int = 0
    unknowns: int = 0
    free: int = 0
    failing: list = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.status == "found"


def coboundary_search(Z: PolyDiffOp, basis: OperatorSpaceBasis | None = None, check_closed: bool = True) -> CoboundaryResult:
    """Find eta in the window with d(eta) = Z.

    d is left-linear over Q[t] and keeps the total derivative multi-index
    of every term, so the system splits into small blocks keyed by
    (coefficient monomial, total derivative multi-index). Inside a block the
    unknowns are constant-coefficient operators. A failing block whose
    candidate set was not cut by the window proves Z is not exact.
    """
    if Z.degree < 0:
        # nothing maps to degree -1
        return CoboundaryResult("found", PolyDiffOp.zero(-1, Z.nvars)) if Z.is_zero() else CoboundaryResult("not_exact")
    if check_closed and not hochschild_d(Z).is_zero():
        raise NotClosedError("coboundary_solve needs a Hochschild cocycle")
    if basis is None:
        basis = default_window(Z, normalized=False)
    if basis.degree != Z.degree - 1 or basis.nvars != Z.nvars:
        raise StructuralError("basis window has the wrong shape")
    n = Z.nvars
    res = CoboundaryResult("found")
    if Z.is_zero():
        res.eta = PolyDiffOp.zero(Z.degree - 1, n)
        return res
    if Z.degree == 0:
        # d vanishes on functions, so a nonzero arity-1 cocycle is never exact
        res.status = "not_exact"
        return res

    blocks: dict[tuple[Exp, Exp], dict[Derivs, Fraction]] = {}
    for derivs, c in Z.terms.items():
        v = derivs[0]
        for a in derivs[1:]:
            v = add_exp(v, a)
        for e, x in c.terms.items():
            blocks.setdefault((e, v), {})[derivs] = x

    eta_terms: dict[Derivs, dict[Exp, Fraction]] = {}
    for (e, v) in sorted(blocks, key=lambda k: (grlex_key(k[0]), grlex_key(k[1]))):
        rhs = blocks[(e, v)]
        res.blocks += 1
        if sum(e) > basis.coeff_cap:
            res.failing.append({"coeff": list(e), "total": list(v), "reason": "coefficient cap"})
            continue
        full = _compositions(v, basis.degree + 1, sum(v), False)
        cands = _compositions(v, basis.degree + 1, basis.deriv_cap, basis.normalized)
        block_cut = len(cands) < len(full)
        res.unknowns += len(cands)
        system = SparseSystem(cands)
        rows: dict[Derivs, dict[Derivs, Fraction]] = {}
        for col in cands:
            for rd, rc in _d_constant(n, col).terms.items():
                rows.setdefault(rd, {})[col] = rc.constant_term()
        for rd in sorted(set(rows) | set(rhs), key=lambda d: tuple(grlex_key(a) for a in d)):
            system.add(rows.get(rd, {}), rhs.get(rd, Fraction(0)))
        sol = system.solve(with_nullspace=False)
        if not sol.consistent:
            res.failing.append({"coeff": list(e), "total": list(v), "reason": "inconsistent"})
            if not block_cut:
                res.status = "not_exact"
            continue
        res.free += sol.ncols - sol.rank
        for col, x in sol.particular.items():
            eta_terms.setdefault(col, {})[e] = x
    if res.failing:
        if res.status != "not_exact":
            res.status = "none_in_window"
        return res
    res.eta = PolyDiffOp._raw(
        Z.degree - 1, n, {d: Poly._raw(n, terms) for d, terms in eta_terms.items() if terms}
    )
    return res


def coboundary_solve(Z: PolyDiffOp, basis: OperatorSpaceBasis | None = None) -> PolyDiffOp | None:
    """eta with d(eta) = Z inside the window, or None."""
    r = coboundary_search(Z, basis)
    return r.eta if r.found else None
