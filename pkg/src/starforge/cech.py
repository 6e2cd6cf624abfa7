"""Trivializing a gauge 1-cocycle on a Laurent cover model by successive approximation.

Operators are finite sums of c z^e d^a in one variable z with e in Z and
a >= 0. A chart gauge is 1 + g_1 hbar + ... + g_N hbar^N with each g_k
killing constants (a >= 1). The default model has two charts: chart 0
holds the exponents e >= 0, chart 1 the exponents e < 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Any, Callable, Sequence

from .algebra import as_rational, format_rational, parse_rational
from .errors import MalformedInputError, NotNormalizedError, PreconditionError, StructuralError, WindowError, \
    InternalConsistencyError


def _falling(f: int, j: int) -> int:
    out = 1
    for r in range(j):
        out *= f - r
    return out


class LaurentOp:
    """sum c_{e,a} z^e d^a, stored as {(e, a): c}."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        items = terms.items() if isinstance(terms, dict) else (terms or [])
        acc: dict[tuple[int, int], Fraction] = {}
        for (e, a), c in items:
            if a < 0:
                raise StructuralError("derivative order must be >= 0")
            c = as_rational(c)
            acc[(int(e), int(a))] = acc.get((int(e), int(a)), Fraction(0)) + c
        self.terms = {k: v for k, v in acc.items() if v}

    @classmethod
    def zero(cls) -> "LaurentOp":
        return cls()

    @classmethod
    def identity(cls) -> "LaurentOp":
        return cls({(0, 0): 1})

    @classmethod
    def monomial(cls, e: int, a: int, c=1) -> "LaurentOp":
        return cls({(e, a): c})

    def is_zero(self) -> bool:
        return not self.terms

    def is_normalized(self) -> bool:
        return all(a >= 1 for _, a in self.terms)

    def exponents(self) -> set[int]:
        return {e for e, _ in self.terms}

    def __add__(self, other: "LaurentOp") -> "LaurentOp":
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, Fraction(0)) + v
        return LaurentOp(out)

    def __neg__(self) -> "LaurentOp":
        return LaurentOp({k: -v for k, v in self.terms.items()})

    def __sub__(self, other: "LaurentOp") -> "LaurentOp":
        return self + (-other)

    def scale(self, c) -> "LaurentOp":
        c = as_rational(c)
        return LaurentOp({k: v * c for k, v in self.terms.items()})

    def __matmul__(self, other: "LaurentOp") -> "LaurentOp":
        """Composition: z^e d^a o z^f d^b = sum_j C(a,j) (f)_j z^{e+f-j} d^{a-j+b}."""
        out: dict[tuple[int, int], Fraction] = {}
        for (e, a), c in self.terms.items():
            for (f, b), d in other.terms.items():
                for j in range(a + 1):
                    w = math.comb(a, j) * _falling(f, j)
                    if not w:
                        continue
                    k = (e + f - j, a - j + b)
                    out[k] = out.get(k, Fraction(0)) + c * d * w
        return LaurentOp(out)

    def split(self, keep: Callable[[int], bool]) -> tuple["LaurentOp", "LaurentOp"]:
        a = {k: v for k, v in self.terms.items() if keep(k[0])}
        b = {k: v for k, v in self.terms.items() if not keep(k[0])}
        return LaurentOp(a), LaurentOp(b)

    def apply(self, f: dict[int, Fraction]) -> dict[int, Fraction]:
        """Act on a Laurent polynomial {exponent: coeff}."""
        out: dict[int, Fraction] = {}
        for (e, a), c in self.terms.items():
            for m, x in f.items():
                w = _falling(m, a)
                if w:
                    k = m - a + e
                    out[k] = out.get(k, Fraction(0)) + c * x * w
        return {k: v for k, v in out.items() if v}

    def __eq__(self, other) -> bool:
        return isinstance(other, LaurentOp) and self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def to_json(self) -> dict:
        return {"terms": [{"exp": e, "deriv": a, "coeff": format_rational(c)} for (e, a), c in sorted(self.terms.items())]}

    @classmethod
    def from_json(cls, obj: Any) -> "LaurentOp":
        try:
            items = [((int(t["exp"]), int(t["deriv"])), parse_rational(str(t["coeff"]))) for t in obj["terms"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedInputError(f"bad Laurent operator JSON: {exc}") from None
        return cls(items)

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"{c}*z^{e}*d^{a}" for (e, a), c in sorted(self.terms.items()))


# ---------------------------------------------------------------------------
# gauge series


class LaurentGauge:
    """1 + sum_k g_k hbar^k, truncated at order N."""

    __slots__ = ("coeffs",)

    def __init__(self, gammas: Sequence[LaurentOp]):
        for k, g in enumerate(gammas, start=1):
            if not g.is_normalized():
                raise NotNormalizedError(f"gauge term {k} does not kill constants", location=f"gammas[{k - 1}]")
        self.coeffs = [LaurentOp.identity()] + list(gammas)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def gammas(self) -> list[LaurentOp]:
        return self.coeffs[1:]

    @classmethod
    def identity(cls, order: int) -> "LaurentGauge":
        return cls([LaurentOp.zero()] * order)

    @classmethod
    def _from_full(cls, full: Sequence[LaurentOp]) -> "LaurentGauge":
        if full[0] != LaurentOp.identity():
            raise InternalConsistencyError("gauge series lost its unit term")
        return cls(list(full[1:]))

    def __matmul__(self, other: "LaurentGauge") -> "LaurentGauge":
        if other.order != self.order:
            raise StructuralError("truncation mismatch")
        N = self.order
        out = [LaurentOp.zero() for _ in range(N + 1)]
        for i, a in enumerate(self.coeffs):
            if a.is_zero():
                continue
            for j in range(N + 1 - i):
                if not other.coeffs[j].is_zero():
                    out[i + j] = out[i + j] + (a @ other.coeffs[j])
        return LaurentGauge._from_full(out)

    def inverse(self) -> "LaurentGauge":
        N = self.order
        inv = [LaurentOp.identity()] + [LaurentOp.zero() for _ in range(N)]
        for k in range(1, N + 1):
            acc = LaurentOp.zero()
            for i in range(1, k + 1):
                if not self.coeffs[i].is_zero() and not inv[k - i].is_zero():
                    acc = acc + (self.coeffs[i] @ inv[k - i])
            inv[k] = -acc
        return LaurentGauge._from_full(inv)

    def valuation_defect(self) -> int | None:
        """Least k >= 1 with a nonzero coefficient, or None for the identity."""
        for k in range(1, self.order + 1):
            if not self.coeffs[k].is_zero():
                return k
        return None

    def exponents(self) -> set[int]:
        out: set[int] = set()
        for g in self.gammas:
            out |= g.exponents()
        return out

    def apply(self, f: Sequence[dict]) -> list[dict]:
        """Act on a series of Laurent polynomials."""
        N = self.order
        out = [dict() for _ in range(N + 1)]
        for i, g in enumerate(self.coeffs):
            for j in range(N + 1 - i):
                for k, v in g.apply(f[j]).items():
                    out[i + j][k] = out[i + j].get(k, Fraction(0)) + v
        return [{k: v for k, v in d.items() if v} for d in out]

    def __eq__(self, other) -> bool:
        return isinstance(other, LaurentGauge) and self.coeffs == other.coeffs

    def to_json(self) -> dict:
        return {"order": self.order, "gammas": [g.to_json() for g in self.gammas]}

    @classmethod
    def from_json(cls, obj: Any) -> "LaurentGauge":
        try:
            gammas = [LaurentOp.from_json(g) for g in obj["gammas"]]
            order = int(obj["order"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedInputError(f"bad gauge JSON: {exc}") from None
        if len(gammas) != order:
            raise MalformedInputError(f"order {order} needs {order} gammas")
        return cls(gammas)


# ---------------------------------------------------------------------------
# cover model and cocycles


@dataclass(frozen=True)
class Region:
    """Exponents lo <= e <= hi; None means unbounded."""

    lo: int | None = None
    hi: int | None = None

    def __contains__(self, e: int) -> bool:
        return (self.lo is None or e >= self.lo) and (self.hi is None or e <= self.hi)

    def to_json(self) -> dict:
        return {"min": self.lo, "max": self.hi}


@dataclass(frozen=True)
class CoverModel:
    """Charts with regular exponent regions; the (0, 1) splitting keeps chart-0 exponents on chart 0."""

    charts: int
    window: int
    regular: tuple

    @classmethod
    def two_chart(cls, window: int = 4) -> "CoverModel":
        return cls(2, window, (Region(0, None), Region(None, -1)))

    def split(self, D: LaurentOp) -> tuple[LaurentOp, LaurentOp]:
        """(pi_0 D, pi_1 D) with pi_0 + pi_1 = id."""
        return D.split(lambda e: e in self.regular[0])

    def is_regular(self, chart: int, g: LaurentGauge) -> bool:
        return all(e in self.regular[chart] for e in g.exponents())

    def to_json(self) -> dict:
        return {"charts": self.charts, "window": self.window, "regular": [r.to_json() for r in self.regular]}

    @classmethod
    def from_json(cls, obj: Any) -> "CoverModel":
        try:
            charts = int(obj.get("charts", 2))
            window = int(obj.get("window", 4))
            if "regular" in obj:
                regular = tuple(Region(r.get("min"), r.get("max")) for r in obj["regular"])
            elif charts == 2:
                regular = cls.two_chart(window).regular
            else:
                raise MalformedInputError("models with more than two charts need explicit regular regions")
        except (AttributeError, TypeError, ValueError) as exc:
            raise MalformedInputError(f"bad cover model JSON: {exc}") from None
        if len(regular) != charts or charts < 1:
            raise MalformedInputError("need one regular region per chart")
        return cls(charts, window, regular)


class GaugeCocycle:
    """rho[(i, j)] for i < j; the reversed pairs are the inverses and rho[(i, i)] = 1."""

    def __init__(self, charts: int, order: int, pairs: dict):
        self.charts = charts
        self.order = order
        self.pairs: dict[tuple[int, int], LaurentGauge] = {}
        for (i, j), g in pairs.items():
            if not (0 <= i < charts and 0 <= j < charts):
                raise StructuralError(f"pair ({i}, {j}) out of range")
            if g.order != order:
                raise StructuralError(f"pair ({i}, {j}) has order {g.order}, expected {order}")
            self.pairs[(i, j)] = g
        for i, j in combinations(range(charts), 2):
            if (i, j) not in self.pairs and (j, i) not in self.pairs:
                raise StructuralError(f"missing overlap gauge for ({i}, {j})")

    def rho(self, i: int, j: int) -> LaurentGauge:
        if i == j:
            return LaurentGauge.identity(self.order)
        if (i, j) in self.pairs:
            return self.pairs[(i, j)]
        return self.pairs[(j, i)].inverse()

    @classmethod
    def coboundary(cls, gauges: Sequence[LaurentGauge]) -> "GaugeCocycle":
        """rho_ij = rho_j o rho_i^{-1}."""
        m = len(gauges)
        pairs = {(i, j): gauges[j] @ gauges[i].inverse() for i, j in combinations(range(m), 2)}
        return cls(m, gauges[0].order, pairs)

    def to_json(self) -> dict:
        return {
            "charts": self.charts,
            "order": self.order,
            "pairs": [{"i": i, "j": j, "gauge": g.to_json()} for (i, j), g in sorted(self.pairs.items())],
        }

    @classmethod
    def from_json(cls, obj: Any) -> "GaugeCocycle":
        try:
            charts = int(obj["charts"])
            order = int(obj["order"])
            pairs = {(int(p["i"]), int(p["j"])): LaurentGauge.from_json(p["gauge"]) for p in obj["pairs"]}
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedInputError(f"bad cocycle JSON: {exc}") from None
        return cls(charts, order, pairs)


@dataclass
class CocycleReport:
    ok: bool
    failing: tuple | None = None

    def to_json(self) -> dict:
        return {"cocycle": self.ok, "failing": list(self.failing) if self.failing else None}


def cocycle_check(rho: GaugeCocycle) -> CocycleReport:
    """rho_jk o rho_ij = rho_ik on all triples, and supplied reversed pairs are inverses."""
    for (i, j), g in sorted(rho.pairs.items()):
        if (j, i) in rho.pairs and i < j and rho.pairs[(j, i)] @ g != LaurentGauge.identity(rho.order):
            return CocycleReport(False, (i, j, i))
    for i, j, k in combinations(range(rho.charts), 3):
        if rho.rho(j, k) @ rho.rho(i, j) != rho.rho(i, k):
            return CocycleReport(False, (i, j, k))
    return CocycleReport(True)


# ---------------------------------------------------------------------------
# the recursion


@dataclass
class Trivialization:
    gauges: list
    stages: list = field(default_factory=list)
    defects: list = field(default_factory=list)  # per stage: {(i, j): LaurentOp}

    def to_json(self) -> dict:
        return {
            "gauges": [g.to_json() for g in self.gauges],
            "stages": self.stages,
        }


def _defect(gauges, rho: GaugeCocycle, i: int, j: int) -> LaurentGauge:
    return gauges[j] @ gauges[i].inverse() @ rho.rho(i, j).inverse()


def _with_term(g: LaurentGauge, k: int, E: LaurentOp) -> LaurentGauge:
    gammas = list(g.gammas)
    gammas[k - 1] = gammas[k - 1] + E
    return LaurentGauge(gammas)


def trivialize(rho: GaugeCocycle, model: CoverModel | None = None) -> Trivialization:
    """Chart gauges rho_i with rho_ij = rho_j o rho_i^{-1}.

    At stage k every defect rho_j rho_i^{-1} rho_ij^{-1} is 1 + D_ij hbar^{k+1}
    modulo hbar^{k+2}. The D_ij form an additive cocycle, so correcting
    chart gauges at order k+1 by E_i with E_j - E_i = -D_ij removes them;
    E_0 comes from the (0, 1) splitting and E_j = E_0 - D_0j.
    """
    model = model or CoverModel.two_chart()
    if model.charts != rho.charts:
        raise StructuralError(f"model has {model.charts} charts, cocycle has {rho.charts}")
    rep = cocycle_check(rho)
    if not rep.ok:
        raise PreconditionError(f"cocycle condition fails on {rep.failing}", location=str(rep.failing))
    W = model.window
    for (i, j), g in sorted(rho.pairs.items()):
        bad = [e for e in g.exponents() if not -W <= e <= W]
        if bad:
            raise WindowError(f"overlap gauge ({i}, {j}) has exponent {min(bad, key=abs)} outside [-{W}, {W}]",
                              location=f"pairs[{i},{j}]")
    N = rho.order
    m = rho.charts
    gauges = [LaurentGauge.identity(N) for _ in range(m)]
    out = Trivialization(gauges)
    for k in range(0, N):
        D = {}
        for j in range(1, m):
            d = _defect(gauges, rho, 0, j)
            v = d.valuation_defect()
            if v is not None and v <= k:
                raise InternalConsistencyError(f"defect ({0}, {j}) is not in the stage-{k} filtration")
            D[(0, j)] = d.coeffs[k + 1]
        if m == 1:
            out.stages.append({"stage": k, "defect_terms": 0})
            out.defects.append({})
            continue
        E0, _ = model.split(D[(0, 1)])
        E = [E0] + [E0 - D[(0, j)] for j in range(1, m)]
        out.defects.append(D)
        out.stages.append({"stage": k, "defect_terms": sum(len(x.terms) for x in D.values())})
        for i in range(m):
            if not E[i].is_zero():
                gauges[i] = _with_term(gauges[i], k + 1, E[i])
    for i in range(m):
        if not model.is_regular(i, gauges[i]):
            bad = sorted(e for e in gauges[i].exponents() if e not in model.regular[i])
            raise WindowError(f"chart {i} gauge uses exponents {bad} that are not regular there", location=f"chart {i}")
    for i, j in combinations(range(m), 2):
        if gauges[j] @ gauges[i].inverse() != rho.rho(i, j):
            raise InternalConsistencyError(f"trivialization fails on ({i}, {j})")
    out.gauges = gauges
    return out
