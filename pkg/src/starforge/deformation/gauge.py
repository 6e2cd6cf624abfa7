"""Affine gauge action on Maurer-Cartan elements and order-by-order gauge search."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from ..algebra import HbarSeries, Poly, multi_indices
from ..errors import DegreeError, InternalConsistencyError, PreconditionError, StructuralError
from ..linalg import SparseSystem
from ..polydiff import PolyDiffOp, hochschild_d
from ..polyvector import PolyVector
from .dgla import MCElement, SeriesDGLA, series_degree
from .star import GaugeElement, StarProduct, associator_operator, gauge_act_star, mc_from_star

# Conjugating a star product by Gamma = exp(g) (f *' g = Gamma^{-1}(Gamma f * Gamma g))
# equals the affine MC action of -g. Pinned by tests/test_gauge.py.
STAR_GAUGE_SIGN = -1


def _check_plus_degree0(alg: SeriesDGLA, gamma: HbarSeries) -> None:
    alg.check(gamma)
    if not gamma.is_plus():
        raise StructuralError("gauge parameter must be a plus-series")
    if series_degree(gamma) != 0:
        raise DegreeError("gauge parameter must have degree 0")


def gauge_action(alg: SeriesDGLA, gamma: HbarSeries, omega: HbarSeries) -> HbarSeries:
    """exp(ad g)(w) + ((1 - exp(ad g)) / ad g)(d g).

    Each ad(g) raises the hbar valuation by at least one, so the sums stop
    after N terms at the latest.
    """
    _check_plus_degree0(alg, gamma)
    N = alg.order
    total = omega
    term = omega
    for k in range(1, N + 1):
        term = alg.bracket(gamma, term) * Fraction(1, k)
        if term.is_zero():
            break
        total = total + term
    dg = alg.d(gamma)
    # - sum_{k>=0} ad(g)^k (dg) / (k+1)!
    term = dg
    fact = 1
    for k in range(0, N + 1):
        fact *= k + 1
        if term.is_zero():
            break
        total = total - term * Fraction(1, fact)
        term = alg.bracket(gamma, term)
    return total


def gauge_act_mc(gamma: HbarSeries, omega: MCElement) -> MCElement:
    return MCElement(gauge_action(omega.algebra(), gamma, omega.series), omega.flavor)


# ---------------------------------------------------------------------------
# searching for a gauge


@dataclass(frozen=True)
class GaugeWindow:
    coeff_cap: int
    deriv_cap: int


def _flatten(x) -> dict:
    if isinstance(x, PolyDiffOp):
        return {(d, e): c for d, p in x.terms.items() for e, c in p.terms.items()}
    if isinstance(x, PolyVector):
        return {(f, e): c for f, p in x.comps.items() for e, c in p.terms.items()}
    raise StructuralError(f"cannot flatten {type(x).__name__}")


def _monomial_op(n: int, e, a) -> PolyDiffOp:
    return PolyDiffOp._raw(0, n, {(a,): Poly._raw(n, {e: Fraction(1)})})


def _vector_fields(alg: SeriesDGLA, cap: int) -> list:
    """Closed degree-0 elements: vector fields in either algebra."""
    n = alg.nvars
    out = []
    for e in multi_indices(n, cap):
        for i in range(n):
            unit = tuple(int(j == i) for j in range(n))
            if alg.flavor == "polydiff":
                out.append(_monomial_op(n, e, unit))
            else:
                out.append(PolyVector._raw(0, n, {(i,): Poly._raw(n, {e: Fraction(1)})}))
    return out


def _normalized_unary(n: int, coeff_cap: int, deriv_cap: int) -> list[PolyDiffOp]:
    return [_monomial_op(n, e, a) for e in multi_indices(n, coeff_cap) for a in multi_indices(n, deriv_cap, 1)]


def default_gauge_window(*series: HbarSeries) -> GaugeWindow:
    cd = max(c.coefficient_degree() for s in series for c in s.coeffs)
    dd = 1
    for s in series:
        for c in s.coeffs:
            if isinstance(c, PolyDiffOp):
                dd = max(dd, c.deriv_order())
    return GaugeWindow(coeff_cap=max(cd, 0) + 2, deriv_cap=dd + 1)


@dataclass
class GaugeSearch:
    gamma: HbarSeries | None
    log: list = field(default_factory=list)
    failed_order: int | None = None

    @property
    def found(self) -> bool:
        return self.gamma is not None


def gauge_search(
    alg: SeriesDGLA, omega: HbarSeries, target: HbarSeries, window: GaugeWindow | None = None
) -> GaugeSearch:
    """Find g with gauge_action(g, omega) = target, one hbar-order at a time.

    At order k the unknowns are g_k, which enters through -d(g_k), and a
    closed correction X to g_{k-1}, which enters linearly through brackets
    with lower terms. Both enter affinely at order k, so each step is an
    exact linear solve.
    """
    if window is None:
        window = default_gauge_window(omega, target)
    N, n = alg.order, alg.nvars
    zero0 = alg.base.zero(0)
    g = [zero0] * (N + 1)
    log = []
    unary = _normalized_unary(n, window.coeff_cap, window.deriv_cap) if alg.flavor == "polydiff" else []
    closed = _vector_fields(alg, window.coeff_cap)
    d_cols = []
    for b in unary:
        db = hochschild_d(b)
        if not db.is_zero():
            d_cols.append((b, _flatten(-db)))
    for k in range(1, N + 1):
        cur = gauge_action(alg, HbarSeries(g), omega)
        residual = target[k] - cur[k]
        entry = {"order": k, "residual_terms": len(_flatten(residual))}
        if residual.is_zero():
            entry["unknowns"] = 0
            log.append(entry)
            continue
        cols: list[tuple[str, int]] = []
        effects: list[dict] = []
        for idx, (b, eff) in enumerate(d_cols):
            cols.append(("g", idx))
            effects.append(eff)
        if k >= 2:
            for idx, x in enumerate(closed):
                trial = list(g)
                trial[k - 1] = trial[k - 1] + x
                eff = _flatten(gauge_action(alg, HbarSeries(trial), omega)[k] - cur[k])
                if eff:
                    cols.append(("x", idx))
                    effects.append(eff)
        entry["unknowns"] = len(cols)
        system = SparseSystem(cols)
        rows: dict = {}
        for col, eff in zip(cols, effects):
            for r, v in eff.items():
                rows.setdefault(r, {})[col] = v
        rhs = _flatten(residual)
        for r in sorted(set(rows) | set(rhs), key=repr):
            system.add(rows.get(r, {}), rhs.get(r, Fraction(0)))
        sol = system.solve(with_nullspace=False)
        entry["rank"] = sol.rank
        log.append(entry)
        if not sol.consistent:
            return GaugeSearch(None, log, failed_order=k)
        for (kind, idx), v in sorted(sol.particular.items()):
            if kind == "g":
                g[k] = g[k] + d_cols[idx][0] * v
            else:
                g[k - 1] = g[k - 1] + closed[idx] * v
    gamma = HbarSeries(g)
    if gauge_action(alg, gamma, omega) != target:
        raise InternalConsistencyError("gauge search produced an element that does not reproduce the target")
    return GaugeSearch(gamma, log)


def gauge_compare_mc(omega: MCElement, other: MCElement, window: GaugeWindow | None = None) -> HbarSeries | None:
    if omega.flavor != other.flavor or omega.order != other.order or omega.nvars != other.nvars:
        raise StructuralError("MC elements live in different algebras")
    alg = omega.algebra()
    if not alg.is_mc(omega.series):
        raise PreconditionError("first argument is not a Maurer-Cartan element")
    if not alg.is_mc(other.series):
        raise PreconditionError("second argument is not a Maurer-Cartan element")
    return gauge_search(alg, omega.series, other.series, window).gamma


def gauge_from_mc_parameter(gamma: HbarSeries) -> GaugeElement:
    """The star-product gauge Gamma matching the MC gauge parameter gamma."""
    return GaugeElement.exp(gamma * STAR_GAUGE_SIGN)


def mc_parameter_from_gauge(gauge: GaugeElement) -> HbarSeries:
    return gauge.log() * STAR_GAUGE_SIGN


def gauge_compare_star(s: StarProduct, other: StarProduct, window: GaugeWindow | None = None) -> GaugeElement | None:
    """Gamma with gauge_act_star(Gamma, s) = other, or None if none is found in the window."""
    if s.order != other.order or s.nvars != other.nvars:
        raise StructuralError("star products of different shapes")
    for name, x in (("first", s), ("second", other)):
        if not associator_operator(x).is_zero():
            raise PreconditionError(f"{name} star product is not associative")
    a, b = mc_from_star(s), mc_from_star(other)
    res = gauge_search(a.algebra(), a.series, b.series, window)
    if res.gamma is None:
        return None
    gauge = gauge_from_mc_parameter(res.gamma)
    if gauge_act_star(gauge, s) != other:
        raise InternalConsistencyError("star gauge does not reproduce the target product")
    return gauge
