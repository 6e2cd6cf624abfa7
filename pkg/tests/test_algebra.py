from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from starforge import sampling
from starforge.algebra import (
    Context,
    HbarSeries,
    Poly,
    as_rational,
    format_rational,
    hbar_combine,
    parse_rational,
    partial_derivative,
    poly_arith,
    poly_series,
    taylor_shift,
)
from starforge.errors import DegreeError, MalformedInputError, ResourceError, StructuralError
from starforge.linalg import SparseSystem, matrix_inverse

from conftest import var

t1, t2 = var(2, 0), var(2, 1)


def test_difference_of_squares():
    assert poly_arith(t1 + t2, t1 - t2, "mul") == t1 * t1 - t2 * t2


def test_additive_identity(rng):
    p = sampling.poly(rng, 2, 3, 5)
    assert poly_arith(p, Poly.zero(2), "add") == p


def test_rational_cancellation():
    assert poly_arith(t1.scale(Fraction(2, 3)), Poly.constant(2, Fraction(3, 2)), "mul") == t1


def test_unknown_op_rejected():
    with pytest.raises(StructuralError):
        poly_arith(t1, t2, "div")


def test_nvars_mismatch():
    with pytest.raises(StructuralError):
        poly_arith(t1, var(3, 0), "add")


def test_partials():
    assert partial_derivative(t1 * t1 * t2, 0) == t1 * t2 * 2
    assert partial_derivative(Poly.var(2, 0) ** 3, 1).is_zero()
    mixed = partial_derivative(partial_derivative(t1 * t2, 1), 0)
    assert mixed == Poly.one(2)
    assert mixed == partial_derivative(partial_derivative(t1 * t2, 0), 1)


def test_partial_index_out_of_range():
    with pytest.raises(StructuralError):
        partial_derivative(t1, 2)


def test_taylor_examples():
    s = Poly.var(1, 0)
    T = taylor_shift(s * s)
    assert T.coefficient((0,)) == s * s
    assert T.coefficient((1,)) == s * 2
    assert T.coefficient((2,)) == Poly.one(1)
    c = taylor_shift(Poly.constant(2, 7))
    assert c.coefficient((0, 0)) == Poly.constant(2, 7)
    assert all(a.is_zero() for i, a in c.coeffs if i != (0, 0))
    B = taylor_shift(t1 * t2)
    assert B.coefficient((0, 0)) == t1 * t2
    assert B.coefficient((1, 0)) == t2
    assert B.coefficient((0, 1)) == t1
    assert B.coefficient((1, 1)) == Poly.one(2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_taylor_reassembles_to_shifted_polynomial(seed):
    # oracle: f(s') as a polynomial in (s, s') built by substitution
    f = sampling.poly(sampling.make_rng(seed), 2, 3, 4)
    T = taylor_shift(f)
    target = f.embed(4, 2)
    assert T.reassemble() == target


def test_series_unit_and_truncation():
    x, y = Poly.var(2, 0), Poly.var(2, 1)
    one = Poly.one(2)
    mul = lambda a, b: a * b  # noqa: E731
    a = poly_series(1, [one])
    b = poly_series(1, [one, x])
    assert hbar_combine(a, b, mul) == b
    hx, hy = poly_series(1, [Poly.zero(2), x]), poly_series(1, [Poly.zero(2), y])
    assert hbar_combine(hx, hy, mul).is_zero()
    a2 = poly_series(2, [one, x])
    b2 = poly_series(2, [one, -x, x * x])
    assert hbar_combine(a2, b2, mul) == poly_series(2, [one])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 3))
def test_series_product_matches_polynomial_product(seed, N):
    # oracle: treat hbar as an extra variable and drop powers above N
    rng = sampling.make_rng(seed)
    a = HbarSeries([sampling.poly(rng, 2, 2) for _ in range(N + 1)])
    b = HbarSeries([sampling.poly(rng, 2, 2) for _ in range(N + 1)])
    lift = lambda s: sum((c.embed(3) * Poly.var(3, 2) ** k for k, c in enumerate(s)), Poly.zero(3))  # noqa: E731
    prod = lift(a) * lift(b)
    expect = Poly(3, {e: c for e, c in prod.terms.items() if e[2] <= N})
    assert lift(hbar_combine(a, b, lambda p, q: p * q)) == expect


def test_context_degree_cap_raises():
    s = poly_series(1, [t1 * t1])
    with pytest.raises(DegreeError):
        Context(1, 1).check(s)
    assert Context(1, 2).check(s) is s


def test_series_order_mismatch():
    with pytest.raises(StructuralError):
        poly_series(1, [t1]) + poly_series(2, [t1])


def test_rational_parsing_round_trip():
    for q in (Fraction(0), Fraction(-7, 3), Fraction(5)):
        assert parse_rational(format_rational(q)) == q
    assert as_rational("3/6") == Fraction(1, 2)
    with pytest.raises(MalformedInputError):
        parse_rational("1.5")
    with pytest.raises(MalformedInputError):
        as_rational(0.5)


def test_poly_json_round_trip(rng):
    p = sampling.poly(rng, 3, 3, 6)
    assert Poly.from_json(p.to_json()) == p


def test_term_fuse(monkeypatch):
    monkeypatch.setenv("STARFORGE_MAX_TERMS", "3")
    with pytest.raises(ResourceError):
        (t1 + t2 + Poly.one(2)) ** 3


def test_sparse_solver_particular_and_nullspace():
    sys_ = SparseSystem(["a", "b", "c"])
    sys_.add({"a": 1, "b": 1}, 2)
    sys_.add({"b": 1, "c": -1}, 1)
    res = sys_.solve()
    assert res.consistent and res.rank == 2
    p = res.particular
    assert p.get("a", 0) + p.get("b", 0) == 2 and p.get("b", 0) - p.get("c", 0) == 1
    (v,) = res.nullspace
    assert v.get("a", 0) + v.get("b", 0) == 0 and v.get("b", 0) - v.get("c", 0) == 0


def test_sparse_solver_inconsistent():
    sys_ = SparseSystem(["a"])
    sys_.add({"a": 1}, 1)
    sys_.add({"a": 2}, 3)
    assert not sys_.solve().consistent


def test_matrix_inverse():
    m = [[2, 1], [1, 1]]
    inv = matrix_inverse(m)
    assert inv == [[1, -1], [-1, 2]]
