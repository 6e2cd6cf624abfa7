"""Exact sparse linear algebra over Q.

Columns and rows are arbitrary hashable keys; the caller fixes a
deterministic column order, and pivots are always taken at the earliest
column that is still free, so results do not depend on dict iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Sequence

from .errors import StructuralError

ZERO = Fraction(0)


@dataclass
class SolveResult:
    consistent: bool
    particular: dict = field(default_factory=dict)  # column -> value (free columns set to 0)
    nullspace: list = field(default_factory=list)  # list of {column: value}
    rank: int = 0
    ncols: int = 0


class SparseSystem:
    """Incremental reduced row echelon form of A x = b.

    Equations are fed one at a time as ({column: coeff}, rhs). Pivot rows are
    kept fully reduced, so a new pivot is eliminated from all older rows.
    """

    def __init__(self, columns: Sequence[Hashable]):
        self.columns = list(columns)
        self.rank_of = {c: i for i, c in enumerate(self.columns)}
        if len(self.rank_of) != len(self.columns):
            raise StructuralError("duplicate column keys")
        self.pivots: dict[int, tuple[dict[int, Fraction], Fraction]] = {}
        self.inconsistent = False
        self.equations = 0

    def add(self, row: Mapping[Hashable, Fraction], rhs=ZERO) -> None:
        self.equations += 1
        r: dict[int, Fraction] = {}
        for c, v in row.items():
            if v:
                try:
                    j = self.rank_of[c]
                except KeyError:
                    raise StructuralError(f"unknown column {c!r}") from None
                r[j] = r.get(j, ZERO) + Fraction(v)
        r = {j: v for j, v in r.items() if v}
        b = Fraction(rhs)
        for j in [j for j in r if j in self.pivots]:
            v = r.get(j)
            if not v:
                continue
            prow, pb = self.pivots[j]
            for k, w in prow.items():
                nv = r.get(k, ZERO) - v * w
                if nv:
                    r[k] = nv
                else:
                    r.pop(k, None)
            b -= v * pb
        if not r:
            if b:
                self.inconsistent = True
            return
        p = min(r)
        inv = 1 / r[p]
        r = {k: w * inv for k, w in r.items()}
        b *= inv
        for q, (qrow, qb) in self.pivots.items():
            v = qrow.get(p)
            if v:
                for k, w in r.items():
                    nv = qrow.get(k, ZERO) - v * w
                    if nv:
                        qrow[k] = nv
                    else:
                        qrow.pop(k, None)
                self.pivots[q] = (qrow, qb - v * b)
        self.pivots[p] = (r, b)

    def solve(self, with_nullspace: bool = True) -> SolveResult:
        res = SolveResult(consistent=not self.inconsistent, rank=len(self.pivots), ncols=len(self.columns))
        if self.inconsistent:
            return res
        sol = {}
        for p, (row, b) in self.pivots.items():
            if b:
                sol[self.columns[p]] = b
        res.particular = sol
        if with_nullspace:
            free = [j for j in range(len(self.columns)) if j not in self.pivots]
            # column j -> pivots whose row mentions j
            touches: dict[int, list[int]] = {}
            for p, (row, _) in self.pivots.items():
                for k in row:
                    if k != p:
                        touches.setdefault(k, []).append(p)
            for f in free:
                vec = {self.columns[f]: Fraction(1)}
                for p in touches.get(f, ()):
                    vec[self.columns[p]] = -self.pivots[p][0][f]
                res.nullspace.append(vec)
        return res


def solve_sparse(
    columns: Sequence[Hashable],
    equations: Iterable[tuple[Mapping[Hashable, Fraction], Fraction]],
    with_nullspace: bool = True,
) -> SolveResult:
    sys_ = SparseSystem(columns)
    for row, rhs in equations:
        sys_.add(row, rhs)
    return sys_.solve(with_nullspace)


def matrix_inverse(m: Sequence[Sequence]) -> list[list[Fraction]]:
    """Inverse of a small square rational matrix by Gauss-Jordan."""
    n = len(m)
    a = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(m)]
    if any(len(row) != 2 * n for row in a):
        raise StructuralError("matrix must be square")
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col]), None)
        if piv is None:
            raise StructuralError("matrix is singular")
        a[col], a[piv] = a[piv], a[col]
        inv = 1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]
