"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (the lines show up
in the terminal even when output capture is on).
"""

import json
import random
import subprocess
import sys
import time
from fractions import Fraction
from itertools import combinations, product
from pathlib import Path

import pytest

from starforge import sampling
from starforge.algebra import HbarSeries, Poly, multi_indices
from starforge.cech import CoverModel, GaugeCocycle, LaurentGauge, LaurentOp, trivialize
from starforge.deformation.dgla import MCElement, mc_residual
from starforge.deformation.gauge import gauge_act_mc, gauge_compare_star, gauge_from_mc_parameter
from starforge.deformation.linfty import (
    compose_linfty,
    exp_ad_morphism,
    hkr_low_degree_morphism,
    identity_morphism,
    linear_change_morphism,
    linfty_check,
    linfty_twist,
    moyal_morphism,
)
from starforge.deformation.star import (
    associator_operator,
    gauge_act_star,
    mc_from_star,
    star_associator,
    star_first_order_bracket,
    star_from_mc,
    star_multiply,
)
from starforge.graphs import assemble_star, solve_weights, weight_constraint_system
from starforge.polydiff import coboundary_solve, gerstenhaber_bracket, hkr_u1, hochschild_d
from starforge.polyvector import FormalPoisson, PolyVector, poisson_bracket, poisson_check, schouten_bracket
from starforge.quantizer import moyal_star, quantize

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        assert ok, detail

    return emit


def var(n, i):
    return Poly.var(n, i)


# ---------------------------------------------------------------------------
# 1. Poisson check against a brute-force Jacobiator


def naive_bracket(alpha, f, g):
    out = Poly.zero(alpha.nvars)
    for i, j in combinations(range(alpha.nvars), 2):
        out = out + alpha.component((i, j)) * (f.diff(i) * g.diff(j) - f.diff(j) * g.diff(i))
    return out


def brute_poisson(alpha):
    t = [var(alpha.nvars, i) for i in range(alpha.nvars)]
    for f, g, h in combinations(t, 3):
        jac = (naive_bracket(alpha, naive_bracket(alpha, f, g), h)
               + naive_bracket(alpha, naive_bracket(alpha, g, h), f)
               + naive_bracket(alpha, naive_bracket(alpha, h, f), g))
        if not jac.is_zero():
            return False
    return True


def random_bivector_n3(rng):
    kind = rng.randrange(4)
    if kind == 0:
        # f * (d_i ^ d_j) is always Poisson in three variables
        i, j = rng.sample(range(3), 2)
        return PolyVector.basis(3, tuple(sorted((i, j))), sampling.poly(rng, 3, 2, 3))
    if kind == 1:
        # linear brackets of Bianchi shape; Jacobi holds or not depending on c
        t = [var(3, i) for i in range(3)]
        c = [rng.randint(-2, 2) for _ in range(3)]
        return PolyVector.bivector(3, {(0, 1): t[2] * c[0], (1, 2): t[0] * c[1], (0, 2): t[1] * (-c[2])})
    return sampling.polyvector(rng, 3, 1, 2, 3)


def test_criterion_1_poisson_equivalence(report):
    rng = random.Random(1001)
    start = time.perf_counter()
    disagree, poisson = 0, 0
    for _ in range(200):
        alpha = random_bivector_n3(rng)
        fast = poisson_check(alpha).poisson
        slow = brute_poisson(alpha)
        disagree += fast != slow
        poisson += slow
    dt = time.perf_counter() - start
    ok = disagree == 0 and 0 < poisson < 200 and dt < 60
    report(1, ok, f"200 bivectors, {poisson} Poisson, {disagree} disagreements, {dt:.1f}s (limit 60s)")


# ---------------------------------------------------------------------------
# 2. MC residual vs associativity


def per_slot_order(D):
    return max((max(sum(a) for a in d) for d in D.terms), default=0)


def spanning_degree(betas):
    """Largest per-slot derivative order the associator can have mod hbar^{N+1}."""
    N = len(betas) - 1
    orders = [0] + [per_slot_order(b) for b in betas[1:]]
    return max((orders[i] + orders[j] for i in range(N + 1) for j in range(N + 1 - i)), default=0)


def mc_candidates(rng, count):
    """Half genuine MC elements (gauged Moyal or quantized Poisson), half perturbed."""
    out = []
    omega = PolyVector.basis(2, (0, 1))
    for k in range(count):
        if k % 2 == 0:
            if k % 4 == 0:
                m = mc_from_star(moyal_star(omega, 2, Fraction(rng.randint(1, 3), rng.randint(1, 2))))
            else:
                alpha = sampling.polyvector(rng, 2, 1, 1, 2)
                m = mc_from_star(quantize(FormalPoisson.from_terms(2, [alpha])).star)
            g = sampling.operator_series(rng, 2, 2, 0, 1, 1, plus=True)
            out.append(gauge_act_mc(g, m))
        else:
            series = sampling.operator_series(rng, 2, 2, 1, 1, 1, plus=True)
            out.append(MCElement(series, "polydiff"))
    return out


def test_criterion_2_mc_iff_associative(report):
    rng = random.Random(1002)
    start = time.perf_counter()
    mismatches, mc_count = 0, 0
    for cand in mc_candidates(rng, 50):
        assert all(b.is_zero() or b.degree == 1 for b in cand.series)
        s = star_from_mc(cand)  # also enforces normalization
        residual_zero = mc_residual(cand).is_zero()
        d = spanning_degree(list(cand.series))
        monos = [Poly.monomial(e) for e in multi_indices(2, d)]
        assoc_zero = all(star_associator(s, f, g, h).is_zero() for f, g, h in product(monos, repeat=3))
        mismatches += residual_zero != assoc_zero
        mc_count += residual_zero
    dt = time.perf_counter() - start
    ok = mismatches == 0 and 0 < mc_count < 50 and dt < 120
    report(2, ok, f"50 candidates ({mc_count} MC), {mismatches} mismatches both ways, {dt:.1f}s (limit 120s)")


# ---------------------------------------------------------------------------
# 3. gauge orbits


def test_criterion_3_gauge_orbits(report):
    rng = random.Random(1003)
    bad = 0
    for k in range(50):
        N = 1 + k % 3
        beta = MCElement(sampling.operator_series(rng, 2, N, 1, 1, 2, plus=True), "polydiff")
        gamma = sampling.operator_series(rng, 2, N, 0, 1, 2, plus=True)
        lhs = gauge_act_star(gauge_from_mc_parameter(gamma), star_from_mc(beta))
        rhs = star_from_mc(gauge_act_mc(gamma, beta))
        bad += lhs != rhs
    report(3, bad == 0, f"50 (gamma, beta) pairs, N=1..3, {bad} failures with the frozen sign")


# ---------------------------------------------------------------------------
# 4. HKR


def test_criterion_4_hkr(report):
    n = 2
    basis = []
    for deg in (-1, 0, 1, 2):
        for frame in combinations(range(n), deg + 1):
            for e in multi_indices(n, 2):
                basis.append(PolyVector.basis(n, frame, Poly.monomial(e)) if frame else PolyVector.function(Poly.monomial(e)))
    closed = sum(hochschild_d(hkr_u1(p)).is_zero() for p in basis)
    rng = random.Random(1004)
    witnessed = 0
    for k in range(20):
        da, db = [(1, 1), (1, 0), (0, 0), (1, -1), (0, -1)][k % 5]
        a, b = sampling.polyvector(rng, n, da, 1), sampling.polyvector(rng, n, db, 1)
        Z = gerstenhaber_bracket(hkr_u1(a), hkr_u1(b)) - hkr_u1(schouten_bracket(a, b))
        eta = coboundary_solve(Z)
        witnessed += eta is not None and (Z.is_zero() or hochschild_d(eta) == Z)
    ok = closed == len(basis) and witnessed == 20
    report(4, ok, f"d(U1)=0 on {closed}/{len(basis)} monomial polyvectors; {witnessed}/20 pairs exact")


# ---------------------------------------------------------------------------
# 5. Moyal reproduction


def test_criterion_5_moyal_reproduction(report):
    start = time.perf_counter()
    omega = PolyVector.basis(2, (0, 1))
    run = quantize(FormalPoisson.from_terms(3, [omega]))
    target = moyal_star(omega, 3)
    G = gauge_compare_star(run.star, target)
    equivalent = G is not None and gauge_act_star(G, run.star) == target
    t1, t2 = var(2, 0), var(2, 1)
    bracket_ok = star_first_order_bracket(run.star, t1, t2) == poisson_bracket(omega, t1, t2) * 2
    dt = time.perf_counter() - start
    ok = equivalent and bracket_ok and dt < 300
    report(5, ok, f"gauge equivalent: {equivalent}; first-order bracket = 2{{t1,t2}}: {bracket_ok}; {dt:.1f}s (limit 300s)")


# ---------------------------------------------------------------------------
# 6. linear Poisson


def test_criterion_6_linear_poisson(report):
    t = [var(3, i) for i in range(3)]
    alpha = PolyVector.bivector(3, {(0, 1): t[2], (1, 2): t[0], (0, 2): -t[1]})
    s = quantize(FormalPoisson.from_terms(2, [alpha])).star
    associative = associator_operator(s).is_zero()
    commutators = True
    for i, j in combinations(range(3), 2):
        c = star_multiply(s, t[i], t[j]) - star_multiply(s, t[j], t[i])
        commutators &= c[0].is_zero() and c[1] == poisson_bracket(alpha, t[i], t[j]) * 2
    report(6, associative and commutators, f"so(3) at N=2: associative {associative}, [ti,tj]_* = 2hbar{{ti,tj}}: {commutators}")


# ---------------------------------------------------------------------------
# 7. weight solver


def test_criterion_7_weight_solver(report):
    rng = random.Random(1007)
    fam1 = solve_weights(weight_constraint_system(1))
    fam2 = solve_weights(weight_constraint_system(2))
    checked, failures = 0, 0
    for _ in range(6):
        w1 = fam1.weights([Fraction(rng.randint(1, 4), rng.randint(1, 3))])
        # the second-order system is built on the unit first-order weight; rescale it consistently
        c = w1[next(iter(w1))]
        params = [Fraction(rng.randint(-3, 3), rng.randint(1, 3)) for _ in range(fam2.dimension)]
        w2 = {g: x * c * c for g, x in fam2.weights(params).items()}
        for n in (2, 3):
            entries = {(i, j): Poly.constant(n, Fraction(rng.randint(-3, 3), rng.randint(1, 2)))
                       for i, j in combinations(range(n), 2)}
            alpha = PolyVector.bivector(n, entries)
            s = assemble_star([w1, w2], alpha)
            f, g, h = (sampling.poly(rng, n, 3, 3) for _ in range(3))
            checked += 1
            failures += not (associator_operator(s).is_zero() and star_associator(s, f, g, h).is_zero())
    ok = failures == 0 and fam1.dimension >= 1
    report(7, ok, f"k=1 dim {fam1.dimension}, k=2 dim {fam2.dimension}; {checked - failures}/{checked} assemblies associative mod hbar^3")


# ---------------------------------------------------------------------------
# 8. L-infinity suite


def random_invertible(rng, n):
    while True:
        m = [[rng.randint(-2, 2) for _ in range(n)] for _ in range(n)]
        if m[0][0] * m[1][1] - m[0][1] * m[1][0] != 0:
            return m


def test_criterion_8_linfty(report):
    rng = random.Random(1008)
    n = 2
    strict = [identity_morphism("polyvector", n), identity_morphism("polydiff", n), hkr_low_degree_morphism(n)]
    for _ in range(3):
        strict.append(linear_change_morphism(n, random_invertible(rng, n)))
        strict.append(exp_ad_morphism("polyvector", sampling.polyvector(rng, n, 0, 1)))
        X = sampling.polyvector(rng, n, 0, 1)
        strict.append(exp_ad_morphism("polydiff", hkr_u1(X)))
    strict_ok = 0
    for F in strict:
        degrees = (-1, 0) if F.name == "U1|low" else (-1, 0, 1)
        S = sampling.linfty_samples(rng, F.source, n, 2, degrees, 1, count=3, arity=3)
        strict_ok += linfty_check(F, S).passed
    twisted_ok, twisted_total = 0, 0
    flips_detected, flips_total = 0, 0
    L = linear_change_morphism(n, random_invertible(rng, n))
    for N in (1, 2, 3):
        z = PolyVector.zero(1, n)
        w = HbarSeries([z] + [PolyVector.basis(n, (0, 1), rng.randint(-2, 2)) for _ in range(N)])
        S = sampling.linfty_samples(rng, "polyvector", n, N, (-1, 0, 1, 1), 0, count=2, arity=3)
        for F in (moyal_morphism(n), moyal_morphism(n, 2), identity_morphism("polyvector", n),
                  compose_linfty(moyal_morphism(n), L)):
            T = linfty_twist(F, w)
            twisted_total += 1
            twisted_ok += linfty_check(T, S).passed
            if F.name.startswith("moyal"):
                flips_total += 1
                flipped = T.with_component(2, lambda x: -x, "flip")
                Sb = sampling.linfty_samples(rng, "polyvector", n, N, (1,), 0, count=2, arity=2)
                flips_detected += not linfty_check(flipped, Sb).passed
    ok = strict_ok == len(strict) and twisted_ok == twisted_total and flips_detected == flips_total
    report(8, ok, f"strict {strict_ok}/{len(strict)}, twisted {twisted_ok}/{twisted_total}, "
                  f"sign flips in psi_2 detected {flips_detected}/{flips_total}")


# ---------------------------------------------------------------------------
# 9. Cech gluing


def test_criterion_9_cech(report):
    rng = random.Random(1009)
    model = CoverModel.two_chart(4)
    start = time.perf_counter()
    good = 0
    for _ in range(20):
        ops = [LaurentOp({(rng.randint(-4, 4), rng.randint(1, 3)): Fraction(rng.randint(-3, 3), rng.randint(1, 3))
                          for _ in range(3)}) for _ in range(3)]
        rho = GaugeCocycle(2, 3, {(0, 1): LaurentGauge(ops)})
        g0, g1 = trivialize(rho, model).gauges
        good += (g1 @ g0.inverse() == rho.rho(0, 1)) and model.is_regular(0, g0) and model.is_regular(1, g1)
    dt = time.perf_counter() - start
    ok = good == 20 and dt < 60
    report(9, ok, f"{good}/20 cocycles trivialized exactly with regular chart gauges, {dt:.1f}s (limit 60s)")


# ---------------------------------------------------------------------------
# 10. CLI determinism


def test_criterion_10_determinism(report):
    manifest = json.loads((FIXTURES / "cli_manifest.json").read_text())
    differing = []
    for case in manifest:
        argv = [sys.executable, "-m", "starforge", case["verb"], str(FIXTURES / "cli" / case["input"]), *case["flags"]]
        a = subprocess.run(argv, capture_output=True)
        b = subprocess.run(argv, capture_output=True)
        if (a.returncode, a.stdout) != (b.returncode, b.stdout):
            differing.append(case["input"])
    verbs = {c["verb"] for c in manifest}
    report(10, not differing, f"{len(manifest)} fixtures over {len(verbs)} verbs run twice, {len(differing)} differ")
