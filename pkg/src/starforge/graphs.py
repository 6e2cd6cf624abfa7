"""Admissible graphs, their bidifferential operators, and associativity-constrained weights.

An aerial vertex carries a copy of the bivector and two ordered outgoing
edges. Each edge differentiates its target: another aerial vertex (its
coefficient) or one of the ground slots L, R (the arguments). Edge labels
are summed over; the first edge of a vertex carries the first tensor index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations, product
from typing import Any, Sequence

from .algebra import Poly, multi_indices
from .deformation.star import StarProduct
from .errors import DegreeError, InconsistentSystemError, MalformedInputError, ResourceError, StructuralError
from .linalg import SparseSystem
from .polydiff import PolyDiffOp, gerstenhaber_bracket, hkr_u1, hochschild_d
from .polyvector import PolyVector, schouten_bracket

L, R = "L", "R"
MAX_AERIAL = 4


def _code(t, n: int) -> int:
    if t == L:
        return 0
    if t == R:
        return 1
    return t + 2


@dataclass(frozen=True)
class AdmissibleGraph:
    n_aerial: int
    edges: tuple  # per aerial vertex, a pair of targets (int or "L"/"R")

    def __post_init__(self):
        if len(self.edges) != self.n_aerial:
            raise StructuralError("need one edge pair per aerial vertex")
        for v, pair in enumerate(self.edges):
            if len(pair) != 2:
                raise StructuralError(f"aerial vertex {v} needs exactly two outgoing edges")
            for t in pair:
                if t in (L, R):
                    continue
                if not isinstance(t, int) or not 0 <= t < self.n_aerial:
                    raise StructuralError(f"bad edge target {t!r} at vertex {v}")
                if t == v:
                    raise StructuralError(f"self-loop at vertex {v}")

    @property
    def edge_count(self) -> int:
        return 2 * self.n_aerial

    def key(self) -> tuple:
        return tuple((_code(a, self.n_aerial), _code(b, self.n_aerial)) for a, b in self.edges)

    def relabel(self, perm: Sequence[int]) -> "AdmissibleGraph":
        """Vertex v becomes perm[v]."""
        new = [None] * self.n_aerial
        m = lambda t: t if t in (L, R) else perm[t]
        for v, (a, b) in enumerate(self.edges):
            new[perm[v]] = (m(a), m(b))
        return AdmissibleGraph(self.n_aerial, tuple(new))

    def swap(self, mask: Sequence[bool]) -> "AdmissibleGraph":
        return AdmissibleGraph(self.n_aerial, tuple((b, a) if s else (a, b) for (a, b), s in zip(self.edges, mask)))

    def canonical(self) -> "AdmissibleGraph":
        """Least relabeling under the (L, R, 0, 1, ..) target order."""
        best = None
        for perm in permutations(range(self.n_aerial)):
            g = self.relabel(perm)
            if best is None or g.key() < best.key():
                best = g
        return best if best is not None else self

    def ground_degrees(self) -> tuple[int, int]:
        flat = [t for pair in self.edges for t in pair]
        return flat.count(L), flat.count(R)

    def is_normalizing(self) -> bool:
        """Both arguments are differentiated at least once."""
        a, b = self.ground_degrees()
        return a > 0 and b > 0

    def to_json(self) -> dict:
        return {"aerial": self.n_aerial, "edges": [list(p) for p in self.edges]}

    @classmethod
    def from_json(cls, obj: Any) -> "AdmissibleGraph":
        try:
            n = int(obj["aerial"])
            edges = tuple(tuple(t if t in (L, R) else int(t) for t in p) for p in obj["edges"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedInputError(f"bad graph JSON: {exc}") from None
        return cls(n, edges)

    def __str__(self) -> str:
        return "[" + " ".join(f"{v}->{a},{b}" for v, (a, b) in enumerate(self.edges)) + "]"


def enumerate_graphs(n_aerial: int) -> list[AdmissibleGraph]:
    """All admissible graphs up to relabeling of aerial vertices, sorted by key."""
    if n_aerial < 0:
        raise StructuralError("n_aerial must be >= 0")
    if n_aerial > MAX_AERIAL:
        raise ResourceError(f"enumeration is capped at {MAX_AERIAL} aerial vertices")
    choices = []
    for v in range(n_aerial):
        targets = [L, R] + [w for w in range(n_aerial) if w != v]
        choices.append([(a, b) for a in targets for b in targets])
    seen = {}
    for edges in product(*choices):
        g = AdmissibleGraph(n_aerial, tuple(edges)).canonical()
        seen.setdefault(g.key(), g)
    return [seen[k] for k in sorted(seen)]


def _orientation_orbit(g: AdmissibleGraph):
    """(graph, sign) over relabelings and edge swaps; a swap costs a sign."""
    for perm in permutations(range(g.n_aerial)):
        for mask in product((False, True), repeat=g.n_aerial):
            sign = -1 if sum(mask) % 2 else 1
            yield g.swap(mask).relabel(perm), sign


def oriented_representative(g: AdmissibleGraph) -> tuple[AdmissibleGraph, int] | None:
    """Representative of g modulo swaps (with sign); None if g equals its own negative."""
    best, best_sign = None, 0
    signs: dict[tuple, int] = {}
    for h, s in _orientation_orbit(g):
        k = h.key()
        if k in signs and signs[k] != s:
            return None
        signs[k] = s
        if best is None or k < best.key():
            best, best_sign = h, s
    # g = best_sign * best as operators
    return best, best_sign


def reduced_basis(n_aerial: int, normalizing: bool = True) -> list[AdmissibleGraph]:
    """One representative per signed class, dropping graphs that evaluate to zero by antisymmetry."""
    out = {}
    for g in enumerate_graphs(n_aerial):
        if normalizing and not g.is_normalizing():
            continue
        r = oriented_representative(g)
        if r is None:
            continue
        out.setdefault(r[0].key(), r[0])
    return [out[k] for k in sorted(out)]


# ---------------------------------------------------------------------------
# evaluation


def graph_evaluate(g: AdmissibleGraph, alpha: PolyVector | Sequence[PolyVector],
                   active_vars: int | None = None) -> PolyDiffOp:
    """B_g(alpha): a bidifferential operator.

    ``alpha`` may be a list with one bivector per aerial vertex (for
    polarization). Only the first ``active_vars`` variables are summed over
    and differentiated; the rest act as parameters.
    """
    alphas = list(alpha) if isinstance(alpha, (list, tuple)) else [alpha] * g.n_aerial
    if len(alphas) != g.n_aerial:
        raise StructuralError("need one bivector per aerial vertex")
    if g.n_aerial == 0:
        if not alphas and isinstance(alpha, PolyVector):
            return PolyDiffOp.multiplication(alpha.nvars)
        raise StructuralError("the bare graph needs a bivector to fix the variable count")
    for a in alphas:
        if a.degree != 1:
            raise DegreeError("graphs are evaluated on bivectors")
    nv = alphas[0].nvars
    m = nv if active_vars is None else active_vars
    k = g.n_aerial
    unit = [tuple(int(j == i) for j in range(nv)) for i in range(nv)]
    zero = (0,) * nv
    out: dict = {}
    for labels in product(range(m), repeat=2 * k):
        # derivative multi-index into each target
        into = [zero] * k
        dl, dr = zero, zero
        for v, (a, b) in enumerate(g.edges):
            for t, lab in ((a, labels[2 * v]), (b, labels[2 * v + 1])):
                u = unit[lab]
                if t == L:
                    dl = tuple(x + y for x, y in zip(dl, u))
                elif t == R:
                    dr = tuple(x + y for x, y in zip(dr, u))
                else:
                    into[t] = tuple(x + y for x, y in zip(into[t], u))
        coeff = None
        for v in range(k):
            c = alphas[v].tensor(labels[2 * v], labels[2 * v + 1])
            if not c:
                coeff = None
                break
            c = c.diff_multi(into[v])
            if not c:
                coeff = None
                break
            coeff = c if coeff is None else coeff * c
        if coeff is None:
            continue
        key = (dl, dr)
        out[key] = out[key] + coeff if key in out else coeff
    return PolyDiffOp._raw(1, nv, {d: c for d, c in out.items() if c})


def bare_graph() -> AdmissibleGraph:
    return AdmissibleGraph(0, ())


# ---------------------------------------------------------------------------
# weight systems


@dataclass(frozen=True)
class Probe:
    """A generic bivector in ``nvars`` variables with parametric coefficients of degree <= coeff_degree."""

    nvars: int
    coeff_degree: int

    def alpha(self) -> tuple[PolyVector, int]:
        n = self.nvars
        frames = list(combinations(range(n), 2))
        monos = multi_indices(n, self.coeff_degree)
        P = len(frames) * len(monos)
        total = n + P
        comps = {}
        idx = n
        for f in frames:
            c = Poly.zero(total)
            for e in monos:
                c = c + Poly.monomial(tuple(e) + tuple(int(j == idx) for j in range(n, total)))
                idx += 1
            comps[f] = c
        return PolyVector(1, total, comps), n


DEFAULT_PROBES = (Probe(2, 1), Probe(3, 0))


def _flatten(op: PolyDiffOp, tag) -> dict:
    return {(tag, d, e): c for d, p in op.terms.items() for e, c in p.terms.items()}


@dataclass
class WeightSystem:
    order: int
    graphs: list
    rows: list = field(default_factory=list)  # (dict graph-index -> coeff, rhs)
    lower: list = field(default_factory=list)  # weight dicts for orders 1..order-1
    probes: tuple = DEFAULT_PROBES

    def add_equation(self, coeffs: dict, rhs=0) -> None:
        self.rows.append(({int(k): Fraction(v) for k, v in coeffs.items()}, Fraction(rhs)))

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "graphs": [g.to_json() for g in self.graphs],
            "equations": len(self.rows),
        }


@dataclass
class WeightFamily:
    order: int
    graphs: list
    particular: list  # weight per graph
    homogeneous: list  # list of weight vectors

    def weights(self, params: Sequence = ()) -> dict[AdmissibleGraph, Fraction]:
        w = list(self.particular)
        for t, h in zip(params, self.homogeneous):
            w = [x + Fraction(t) * y for x, y in zip(w, h)]
        return {g: x for g, x in zip(self.graphs, w)}

    @property
    def dimension(self) -> int:
        return len(self.homogeneous)

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "weights": [{"graph": g.to_json(), "weight": str(w)} for g, w in zip(self.graphs, self.particular)],
            "free": [[str(x) for x in h] for h in self.homogeneous],
        }


FIRST_ORDER = {AdmissibleGraph(1, ((L, R),)): Fraction(1)}


def assemble_operator(weights: dict, alpha: PolyVector, active_vars: int | None = None) -> PolyDiffOp:
    out = PolyDiffOp.zero(1, alpha.nvars)
    for g in sorted(weights, key=lambda g: g.key()):
        w = weights[g]
        if w:
            out = out + graph_evaluate(g, alpha, active_vars) * w
    return out


def assemble_star(weight_orders: Sequence[dict], alpha: PolyVector) -> StarProduct:
    """beta_j = sum_g w_g B_g(alpha) with weight_orders[j-1] the order-j weights."""
    return StarProduct(alpha.nvars, [assemble_operator(w, alpha) for w in weight_orders])


def _equivariance_columns(graphs, alpha, m, tag) -> list[dict]:
    """Per graph: L_xi B(alpha) - sum_v B(.., L_xi alpha, ..) for linear xi; identically zero."""
    nv = alpha.nvars
    cols = [dict() for _ in graphs]
    for a in range(m):
        for b in range(m):
            comps = [Poly.var(nv, a) if i == b else Poly.zero(nv) for i in range(nv)]
            xi = PolyVector.vector_field(comps)
            dxi = hkr_u1(xi)
            lie_alpha = schouten_bracket(xi, alpha)
            for gi, g in enumerate(graphs):
                eff = gerstenhaber_bracket(dxi, graph_evaluate(g, alpha, m))
                for v in range(g.n_aerial):
                    args = [alpha] * g.n_aerial
                    args[v] = lie_alpha
                    eff = eff - graph_evaluate(g, args, m)
                for k, val in _flatten(eff, (tag, "eq", a, b)).items():
                    cols[gi][k] = cols[gi].get(k, Fraction(0)) + val
    return cols


def weight_constraint_system(order: int, lower: Sequence[dict] | None = None, probes=DEFAULT_PROBES,
                             equivariance: bool = False, max_equations: int = 200000) -> WeightSystem:
    """Linear equations on the order-k weights from the Maurer-Cartan equation at hbar^k.

    Lower orders are fixed: the first-order weight is 1 on the wedge graph
    and higher ones default to the particular solutions of their own
    systems. The associator is compared at the level of operator normal
    forms, which is the same as testing all argument monomials.
    """
    if not 1 <= order <= 3:
        raise StructuralError("weight systems are supported for orders 1..3")
    if lower is None:
        lower = [FIRST_ORDER]
        for j in range(2, order):
            lower.append(solve_weights(weight_constraint_system(j, lower, probes)).weights())
    lower = list(lower)[: order - 1]
    graphs = reduced_basis(order)
    system = WeightSystem(order, graphs, [], lower, tuple(probes))
    table: dict = {}
    rhs: dict = {}
    for pi, probe in enumerate(probes):
        alpha, m = probe.alpha()
        nv = alpha.nvars
        betas = [assemble_operator(w, alpha, m) for w in lower]
        const = PolyDiffOp.zero(2, nv)
        for i in range(1, order):
            j = order - i
            if i <= len(betas) and j <= len(betas) and i <= j:
                br = gerstenhaber_bracket(betas[i - 1], betas[j - 1])
                const = const + (br if i == j else br * 2) * Fraction(1, 2)
        for k, v in _flatten(const, pi).items():
            rhs[k] = rhs.get(k, Fraction(0)) - v
        for gi, g in enumerate(graphs):
            for k, v in _flatten(hochschild_d(graph_evaluate(g, alpha, m)), pi).items():
                table.setdefault(k, {})[gi] = v
        if equivariance:
            for gi, col in enumerate(_equivariance_columns(graphs, alpha, m, pi)):
                for k, v in col.items():
                    if v:
                        table.setdefault(k, {})[gi] = v
    keys = sorted(set(table) | set(rhs), key=repr)
    if len(keys) > max_equations:
        raise ResourceError(f"weight system has {len(keys)} equations, cap is {max_equations}")
    for k in keys:
        system.rows.append((table.get(k, {}), rhs.get(k, Fraction(0))))
    return system


def solve_weights(system: WeightSystem) -> WeightFamily:
    cols = list(range(len(system.graphs)))
    lin = SparseSystem(cols)
    for row, b in system.rows:
        lin.add(row, b)
    sol = lin.solve(with_nullspace=True)
    if not sol.consistent:
        raise InconsistentSystemError(f"no weight family at order {system.order}", location=f"order {system.order}")
    particular = [sol.particular.get(i, Fraction(0)) for i in cols]
    homogeneous = [[h.get(i, Fraction(0)) for i in cols] for h in sol.nullspace]
    return WeightFamily(system.order, list(system.graphs), particular, homogeneous)
