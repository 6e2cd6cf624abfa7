"""Polyvector fields over Q[t]: wedge, Schouten bracket, Poisson brackets.

A degree-p polyvector is a sum of c_I(t) d_{i_0} ^ ... ^ d_{i_p} over strictly
increasing frames I. Internally the bracket is computed with odd variables
theta_i standing for d_i, so that a frame is the monomial theta_I:

    [P, Q] = sum_i (P <d/dtheta_i)(d_i Q) - (-1)^{(a-1)(b-1)} (Q <d/dtheta_i)(d_i P)

where a, b are the theta-degrees (p+1) and <d/dtheta is the right derivative.
This gives [xi, f] = xi(f), the usual Lie bracket on vector fields, and
makes (polyvectors[1], ^, [,]) a Gerstenhaber algebra.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Any, Iterable, Mapping, Sequence

from .algebra import HbarSeries, Poly, as_rational, check_terms, hbar_combine
from .errors import DegreeError, MalformedInputError, StructuralError
from .linalg import matrix_inverse

Frame = tuple


def _sort_frame(frame: Sequence[int]) -> tuple[int, Frame] | None:
    """Sign and sorted frame of d_{i_0} ^ ... ; None if an index repeats."""
    idx = list(frame)
    if len(set(idx)) != len(idx):
        return None
    sign = 1
    for i in range(len(idx)):
        for j in range(i + 1, len(idx)):
            if idx[i] > idx[j]:
                sign = -sign
    return sign, tuple(sorted(idx))


def _merge(a: Frame, b: Frame) -> tuple[int, Frame] | None:
    if set(a) & set(b):
        return None
    inv = sum(1 for x in a for y in b if x > y)
    return (-1 if inv & 1 else 1), tuple(sorted(a + b))


def _right_dtheta(frame: Frame, i: int) -> tuple[int, Frame] | None:
    if i not in frame:
        return None
    r = frame.index(i)
    sign = -1 if (len(frame) - 1 - r) & 1 else 1
    return sign, frame[:r] + frame[r + 1:]


class PolyVector:
    __slots__ = ("degree", "nvars", "comps")

    def __init__(self, degree: int, nvars: int, comps: Mapping | Iterable = ()):
        if degree < -1:
            raise DegreeError(f"polyvector degree must be >= -1, got {degree}")
        if degree + 1 > nvars and degree >= 0:
            # such spaces are zero; allowed, but only the empty value
            pass
        items = comps.items() if isinstance(comps, Mapping) else comps
        acc: dict[Frame, Poly] = {}
        for frame, c in items:
            frame = tuple(int(v) for v in frame)
            if len(frame) != degree + 1:
                raise StructuralError(f"frame {frame} does not have length {degree + 1}")
            if any(not 0 <= v < nvars for v in frame):
                raise StructuralError(f"frame {frame} out of range for {nvars} variables")
            if not isinstance(c, Poly):
                c = Poly.constant(nvars, as_rational(c))
            if c.nvars != nvars:
                raise StructuralError("component has the wrong variable count")
            s = _sort_frame(frame)
            if s is None:
                continue
            sign, f = s
            acc[f] = acc.get(f, Poly.zero(nvars)) + (c if sign > 0 else -c)
        self.degree = degree
        self.nvars = nvars
        self.comps = {f: c for f, c in acc.items() if c}

    @classmethod
    def _raw(cls, degree: int, nvars: int, comps: dict) -> "PolyVector":
        v = object.__new__(cls)
        v.degree, v.nvars, v.comps = degree, nvars, comps
        return v

    # constructors

    @classmethod
    def zero(cls, degree: int, nvars: int) -> "PolyVector":
        return cls._raw(degree, nvars, {})

    @classmethod
    def function(cls, f: Poly) -> "PolyVector":
        return cls._raw(-1, f.nvars, {(): f} if f else {})

    @classmethod
    def vector_field(cls, coeffs: Sequence[Poly]) -> "PolyVector":
        n = len(coeffs)
        return cls(0, n, {(i,): c for i, c in enumerate(coeffs)})

    @classmethod
    def basis(cls, nvars: int, frame: Sequence[int], coeff=1) -> "PolyVector":
        c = coeff if isinstance(coeff, Poly) else Poly.constant(nvars, coeff)
        return cls(len(frame) - 1, nvars, [(tuple(frame), c)])

    @classmethod
    def bivector(cls, nvars: int, entries: Mapping) -> "PolyVector":
        """From {(i, j): coefficient}; (j, i) entries count with the opposite sign."""
        return cls(1, nvars, [((i, j), c) for (i, j), c in entries.items()])

    # queries

    def is_zero(self) -> bool:
        return not self.comps

    def component(self, frame: Sequence[int]) -> Poly:
        s = _sort_frame(frame)
        if s is None:
            return Poly.zero(self.nvars)
        sign, f = s
        c = self.comps.get(f)
        if c is None:
            return Poly.zero(self.nvars)
        return c if sign > 0 else -c

    def tensor(self, i: int, j: int) -> Poly:
        """Antisymmetric coefficient alpha^{ij} of a bivector."""
        if self.degree != 1:
            raise DegreeError("tensor() needs a bivector")
        return self.component((i, j))

    def as_function(self) -> Poly:
        if self.degree != -1:
            raise DegreeError("not a function")
        return self.comps.get((), Poly.zero(self.nvars))

    def coefficient_degree(self) -> int:
        return max((c.degree() for c in self.comps.values()), default=-1)

    def is_constant(self) -> bool:
        return all(c.is_constant() for c in self.comps.values())

    def sorted_components(self) -> list[tuple[Frame, Poly]]:
        return sorted(self.comps.items())

    # linear structure

    def _same(self, other: "PolyVector") -> None:
        if not isinstance(other, PolyVector):
            raise StructuralError("expected a polyvector")
        if other.nvars != self.nvars:
            raise StructuralError(f"variable count mismatch: {self.nvars} vs {other.nvars}")
        if other.degree != self.degree:
            raise DegreeError(f"cannot add polyvectors of degrees {self.degree} and {other.degree}")

    def __add__(self, other: "PolyVector") -> "PolyVector":
        self._same(other)
        out = dict(self.comps)
        for f, c in other.comps.items():
            v = out[f] + c if f in out else c
            if v:
                out[f] = v
            else:
                out.pop(f, None)
        return PolyVector._raw(self.degree, self.nvars, out)

    def __neg__(self) -> "PolyVector":
        return PolyVector._raw(self.degree, self.nvars, {f: -c for f, c in self.comps.items()})

    def __sub__(self, other: "PolyVector") -> "PolyVector":
        return self + (-other)

    def __mul__(self, c) -> "PolyVector":
        if isinstance(c, Poly):
            return PolyVector._raw(self.degree, self.nvars, {f: v * c for f, v in self.comps.items() if v * c})
        c = as_rational(c)
        if not c:
            return PolyVector.zero(self.degree, self.nvars)
        return PolyVector._raw(self.degree, self.nvars, {f: v.scale(c) for f, v in self.comps.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyVector):
            return NotImplemented
        return (self.degree, self.nvars, self.comps) == (other.degree, other.nvars, other.comps)

    def __hash__(self) -> int:
        return hash((self.degree, self.nvars, frozenset(self.comps.items())))

    # vector fields act on functions

    def apply(self, f: Poly) -> Poly:
        if self.degree != 0:
            raise DegreeError("only vector fields act on functions")
        out = Poly.zero(self.nvars)
        for (i,), c in self.comps.items():
            out = out + c * f.diff(i)
        return out

    # io

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "nvars": self.nvars,
            "components": [{"frame": list(f), "poly": c.to_json()} for f, c in self.sorted_components()],
        }

    @classmethod
    def from_json(cls, obj: Any) -> "PolyVector":
        try:
            degree, n = obj["degree"], obj["nvars"]
            comps = [(c["frame"], Poly.from_json(c["poly"])) for c in obj["components"]]
        except (KeyError, TypeError) as exc:
            raise MalformedInputError(f"bad polyvector JSON: {exc}") from None
        for f, _ in comps:
            if list(f) != sorted(set(f)):
                raise MalformedInputError(f"frame {f} is not strictly increasing")
        return cls(degree, n, comps)

    def __str__(self) -> str:
        if not self.comps:
            return "0"
        parts = []
        for f, c in self.sorted_components():
            basis = "^".join(f"d{i + 1}" for i in f)
            parts.append(f"({c})" + (f"*{basis}" if basis else ""))
        return " + ".join(parts)

    __repr__ = __str__


def _check_pair(a: PolyVector, b: PolyVector) -> None:
    if a.nvars != b.nvars:
        raise StructuralError(f"variable count mismatch: {a.nvars} vs {b.nvars}")


def wedge(a: PolyVector, b: PolyVector) -> PolyVector:
    _check_pair(a, b)
    out: dict[Frame, Poly] = {}
    for fa, ca in a.comps.items():
        for fb, cb in b.comps.items():
            m = _merge(fa, fb)
            if m is None:
                continue
            sign, f = m
            v = ca * cb
            out[f] = out[f] + (v if sign > 0 else -v) if f in out else (v if sign > 0 else -v)
    out = {f: c for f, c in out.items() if c}
    check_terms(len(out), "wedge product")
    return PolyVector._raw(a.degree + b.degree + 1, a.nvars, out)


def _half_bracket(p: PolyVector, q: PolyVector, out: dict, sign: int) -> None:
    # accumulates sign * sum_i (p <d/dtheta_i)(d_i q)
    for fp, cp in p.comps.items():
        for i in fp:
            rd = _right_dtheta(fp, i)
            s1, rest = rd
            for fq, cq in q.comps.items():
                dq = cq.diff(i)
                if not dq:
                    continue
                m = _merge(rest, fq)
                if m is None:
                    continue
                s2, f = m
                v = cp * dq
                if s1 * s2 * sign < 0:
                    v = -v
                out[f] = out[f] + v if f in out else v


def schouten_bracket(a: PolyVector, b: PolyVector) -> PolyVector:
    _check_pair(a, b)
    pa, pb = a.degree + 1, b.degree + 1
    out: dict[Frame, Poly] = {}
    _half_bracket(a, b, out, 1)
    _half_bracket(b, a, out, -1 if ((pa - 1) * (pb - 1)) % 2 == 0 else 1)
    out = {f: c for f, c in out.items() if c}
    check_terms(len(out), "Schouten bracket")
    return PolyVector._raw(a.degree + b.degree, a.nvars, out)


def poisson_bracket(alpha: PolyVector, f: Poly, g: Poly) -> Poly:
    """{f, g} = sum_{i<j} alpha^{ij} (d_i f d_j g - d_j f d_i g)."""
    if alpha.degree != 1:
        raise DegreeError(f"Poisson bracket needs a bivector, got degree {alpha.degree}")
    if f.nvars != alpha.nvars or g.nvars != alpha.nvars:
        raise StructuralError("variable count mismatch")
    out = Poly.zero(alpha.nvars)
    for (i, j), c in alpha.comps.items():
        out = out + c * (f.diff(i) * g.diff(j) - f.diff(j) * g.diff(i))
    return out


def jacobiator(alpha: PolyVector, f: Poly, g: Poly, h: Poly) -> Poly:
    pb = lambda x, y: poisson_bracket(alpha, x, y)  # noqa: E731
    return pb(f, pb(g, h)) + pb(g, pb(h, f)) + pb(h, pb(f, g))


@dataclass(frozen=True)
class PoissonReport:
    poisson: bool
    bracket: PolyVector
    witness: tuple | None = None  # (i, j, k) with nonzero Jacobiator
    jacobiator: Poly | None = None

    def to_json(self) -> dict:
        out: dict = {"poisson": self.poisson}
        if not self.poisson:
            out["bracket"] = self.bracket.to_json()
            out["witness"] = list(self.witness) if self.witness else None
        return out


def jacobiator_witness(alpha: PolyVector) -> tuple[tuple, Poly] | None:
    n = alpha.nvars
    ts = [Poly.var(n, i) for i in range(n)]
    for i, j, k in combinations(range(n), 3):
        jac = jacobiator(alpha, ts[i], ts[j], ts[k])
        if jac:
            return (i, j, k), jac
    return None


def poisson_check(alpha: PolyVector) -> PoissonReport:
    if alpha.degree != 1:
        raise DegreeError(f"Poisson check needs a bivector, got degree {alpha.degree}")
    br = schouten_bracket(alpha, alpha)
    if br.is_zero():
        return PoissonReport(True, br)
    hit = jacobiator_witness(alpha)
    if hit is None:
        # [alpha, alpha] and the Jacobiator are proportional; disagreement is a bug
        from .errors import InternalConsistencyError

        raise InternalConsistencyError("nonzero self-bracket but every coordinate Jacobiator vanishes")
    return PoissonReport(False, br, hit[0], hit[1])


# ---------------------------------------------------------------------------
# series


def series_schouten(a: HbarSeries, b: HbarSeries) -> HbarSeries:
    return hbar_combine(a, b, schouten_bracket)


class FormalPoisson:
    """alpha = alpha_1 hbar + alpha_2 hbar^2 + ... as a plus-series of bivectors."""

    __slots__ = ("series",)

    def __init__(self, series: HbarSeries):
        for k, c in enumerate(series.coeffs):
            if not isinstance(c, PolyVector) or c.degree != 1:
                raise DegreeError("formal Poisson structures have bivector coefficients only", location=f"coeffs[{k}]")
        if not series.is_plus():
            raise StructuralError("formal Poisson structure must have zero hbar^0 term", location="coeffs[0]")
        self.series = series

    @classmethod
    def from_terms(cls, order: int, terms: Sequence[PolyVector]) -> "FormalPoisson":
        """terms[k-1] is the hbar^k coefficient."""
        n = terms[0].nvars
        zero = PolyVector.zero(1, n)
        coeffs = [zero] + list(terms)[:order]
        coeffs += [zero] * (order + 1 - len(coeffs))
        return cls(HbarSeries(coeffs))

    @property
    def order(self) -> int:
        return self.series.order

    @property
    def nvars(self) -> int:
        return self.series[0].nvars

    def self_bracket(self) -> HbarSeries:
        return series_schouten(self.series, self.series)

    def is_poisson(self) -> bool:
        return self.self_bracket().is_zero()

    def coefficient_degree(self) -> int:
        return max(c.coefficient_degree() for c in self.series)

    def to_json(self) -> dict:
        return self.series.to_json()

    @classmethod
    def from_json(cls, obj: Any) -> "FormalPoisson":
        return cls(HbarSeries.from_json(obj, PolyVector.from_json))

    def __eq__(self, other) -> bool:
        return isinstance(other, FormalPoisson) and self.series == other.series


def formal_poisson_check(alpha: HbarSeries | FormalPoisson) -> bool:
    s = alpha.series if isinstance(alpha, FormalPoisson) else alpha
    if not s.is_plus():
        raise StructuralError("formal Poisson check needs a plus-series")
    return series_schouten(s, s).is_zero()


def exp_ad(gamma: HbarSeries, x: HbarSeries, bracket=series_schouten) -> HbarSeries:
    """exp(ad gamma)(x) for a plus-series gamma.

    Each ad(gamma) raises the hbar valuation by at least one, so N steps
    exhaust everything visible at order N.
    """
    if not gamma.is_plus():
        raise StructuralError("gauge parameter must be a plus-series")
    total, term = x, x
    for k in range(1, x.order + 1):
        term = bracket(gamma, term) * Fraction(1, k)
        if term.is_zero():
            break
        total = total + term
    return total


def gauge_act_formal_poisson(gamma: HbarSeries, alpha: FormalPoisson) -> FormalPoisson:
    for k, c in enumerate(gamma.coeffs):
        if not isinstance(c, PolyVector) or c.degree != 0:
            raise DegreeError("polyvector gauge parameters are vector fields", location=f"coeffs[{k}]")
    return FormalPoisson(exp_ad(gamma, alpha.series))


# ---------------------------------------------------------------------------
# linear changes of coordinates


def _wedge_all(vectors: Sequence[dict[int, Fraction]], nvars: int) -> dict[Frame, Fraction]:
    # vectors are constant 1-vectors {i: coeff}; returns their wedge in frame form
    acc: dict[Frame, Fraction] = {(): Fraction(1)}
    for v in vectors:
        nxt: dict[Frame, Fraction] = {}
        for f, c in acc.items():
            for i, w in v.items():
                m = _merge(f, (i,))
                if m is None:
                    continue
                s, g = m
                nxt[g] = nxt.get(g, Fraction(0)) + s * c * w
        acc = {f: c for f, c in nxt.items() if c}
    return acc


def linear_pushforward(p: PolyVector, matrix: Sequence[Sequence]) -> PolyVector:
    """Push p forward along t -> M t.

    (phi_* p)(y) has coefficients c_I(M^{-1} y) and d_a is sent to
    sum_i M[i][a] d_i.
    """
    n = p.nvars
    m = [[Fraction(x) for x in row] for row in matrix]
    minv = matrix_inverse(m)
    out = PolyVector.zero(p.degree, n)
    images = [{i: m[i][a] for i in range(n) if m[i][a]} for a in range(n)]
    for f, c in p.sorted_components():
        c2 = c.linear_substitute(minv)
        frames = _wedge_all([images[a] for a in f], n)
        out = out + PolyVector(p.degree, n, {g: c2.scale(w) for g, w in frames.items()})
    return out


def linear_pullback_function(f: Poly, matrix: Sequence[Sequence]) -> Poly:
    """f o phi for phi(t) = M t."""
    return f.linear_substitute(matrix)
