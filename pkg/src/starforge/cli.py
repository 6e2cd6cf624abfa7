"""Command-line front end: JSON in, JSON out.

Exit codes: 0 success, 1 domain error (JSON {code, message, location} on
stdout), 2 malformed input or usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Any, Callable

from . import sampling
from .algebra import Context, HbarSeries, Poly, as_rational, taylor_shift
from .cech import CoverModel, GaugeCocycle, cocycle_check, trivialize
from .deformation.dgla import MCElement, mc_residual
from .deformation.gauge import GaugeWindow, gauge_act_mc, gauge_compare_mc, gauge_compare_star
from .deformation.linfty import (
    CATALOG_KINDS,
    LInftyMorphism,
    LInftyReport,
    catalog_morphism,
    compose_linfty,
    linfty_check,
    linfty_mc_push,
    linfty_twist,
    sample_domain,
)
from .deformation.star import (
    GaugeElement,
    StarProduct,
    associator_operator,
    gauge_act_star,
    star_associator,
    star_multiply,
)
from .errors import MalformedInputError, StarforgeError
from .graphs import (
    AdmissibleGraph,
    DEFAULT_PROBES,
    Probe,
    enumerate_graphs,
    graph_evaluate,
    reduced_basis,
    solve_weights,
    weight_constraint_system,
)
from .polydiff import PolyDiffOp, gerstenhaber_bracket, hkr_u1, hochschild_d
from .polyvector import FormalPoisson, PolyVector, poisson_bracket, poisson_check, schouten_bracket
from .quantizer import moyal_star, quantize

VERBS: dict[str, Callable[[Any, argparse.Namespace], Any]] = {}


def verb(name: str):
    def deco(fn):
        VERBS[name] = fn
        return fn

    return deco


_MISSING = object()


def _get(obj: Any, key: str, default=_MISSING):
    if not isinstance(obj, dict):
        raise MalformedInputError("expected a JSON object")
    if key not in obj:
        if default is _MISSING:
            raise MalformedInputError(f"missing field {key!r}")
        return default
    return obj[key]


def _unwrap(obj: Any, key: str) -> Any:
    """Accept either {"key": x} or x itself."""
    if isinstance(obj, dict) and key in obj:
        return obj[key]
    return obj


def _poly_or_series(obj: Any):
    if isinstance(obj, dict) and "coeffs" in obj:
        return HbarSeries.from_json(obj, Poly.from_json)
    return Poly.from_json(obj)


# ---------------------------------------------------------------------------
# algebra-core, polyvector, polydiff


@verb("taylor")
def _taylor(obj, args):
    return taylor_shift(Poly.from_json(_unwrap(obj, "poly"))).to_json()


@verb("poisson-check")
def _poisson_check(obj, args):
    alpha = PolyVector.from_json(_unwrap(obj, "alpha"))
    return poisson_check(alpha).to_json()


@verb("schouten")
def _schouten(obj, args):
    a = PolyVector.from_json(_get(obj, "a"))
    b = PolyVector.from_json(_get(obj, "b"))
    return schouten_bracket(a, b).to_json()


@verb("poisson-bracket")
def _poisson_bracket(obj, args):
    alpha = PolyVector.from_json(_get(obj, "alpha"))
    f = Poly.from_json(_get(obj, "f"))
    g = Poly.from_json(_get(obj, "g"))
    return poisson_bracket(alpha, f, g).to_json()


@verb("gerstenhaber")
def _gerstenhaber(obj, args):
    a = PolyDiffOp.from_json(_get(obj, "a"))
    b = PolyDiffOp.from_json(_get(obj, "b"))
    return gerstenhaber_bracket(a, b).to_json()


@verb("hochschild")
def _hochschild(obj, args):
    return hochschild_d(PolyDiffOp.from_json(_unwrap(obj, "op"))).to_json()


@verb("hkr")
def _hkr(obj, args):
    return hkr_u1(PolyVector.from_json(_unwrap(obj, "polyvector"))).to_json()


# ---------------------------------------------------------------------------
# deformation


def _ctx(args, order: int) -> Context:
    return Context(order, args.degree_cap)


@verb("mc-residual")
def _mc_residual(obj, args):
    omega = MCElement.from_json(_unwrap(obj, "mc"))
    res = _ctx(args, omega.order).check(mc_residual(omega))
    return {"residual": res.to_json(), "zero": res.is_zero()}


def _star(obj) -> StarProduct:
    return StarProduct.from_json(obj)


@verb("star-mul")
def _star_mul(obj, args):
    s = _star(_get(obj, "star"))
    f = _poly_or_series(_get(obj, "f"))
    g = _poly_or_series(_get(obj, "g"))
    return _ctx(args, s.order).check(star_multiply(s, f, g)).to_json()


@verb("star-assoc")
def _star_assoc(obj, args):
    if isinstance(obj, dict) and "betas" in obj:
        s, fgh = _star(obj), None
    else:
        s = _star(_get(obj, "star"))
        fgh = [obj[k] for k in ("f", "g", "h")] if all(k in obj for k in ("f", "g", "h")) else None
    if fgh is None:
        res = associator_operator(s)
    else:
        res = star_associator(s, *[_poly_or_series(x) for x in fgh])
    return {"associator": res.to_json(), "zero": res.is_zero()}


@verb("gauge-star")
def _gauge_star(obj, args):
    gauge = GaugeElement.from_json(_get(obj, "gauge"))
    s = _star(_get(obj, "star"))
    return gauge_act_star(gauge, s).to_json()


def _window(args) -> GaugeWindow | None:
    if args.degree_cap is None and args.deriv_cap is None:
        return None
    return GaugeWindow(args.degree_cap if args.degree_cap is not None else 2,
                       args.deriv_cap if args.deriv_cap is not None else 2)


@verb("gauge-mc")
def _gauge_mc(obj, args):
    omega = MCElement.from_json(_get(obj, "mc"))
    payload = omega.algebra().base.payload
    if "target" in obj:
        target = MCElement.from_json(obj["target"])
        gamma = gauge_compare_mc(omega, target, _window(args))
        return {"equivalent": gamma is not None, "gamma": gamma.to_json() if gamma is not None else None}
    gamma = HbarSeries.from_json(_get(obj, "gamma"), payload.from_json)
    return gauge_act_mc(gamma, omega).to_json()


@verb("star-compare")
def _star_compare(obj, args):
    a = _star(_get(obj, "a"))
    b = _star(_get(obj, "b"))
    g = gauge_compare_star(a, b, _window(args))
    return {"equivalent": g is not None, "gauge": g.to_json() if g is not None else None}


def _morphism(spec: Any, nvars: int) -> LInftyMorphism:
    kind = _get(spec, "kind")
    if kind == "compose":
        inner = _morphism(_get(spec, "inner"), nvars)
        outer = _morphism(_get(spec, "outer"), nvars)
        return compose_linfty(outer, inner)
    if kind not in CATALOG_KINDS:
        raise MalformedInputError(f"unknown morphism kind {kind!r}; known: {', '.join(CATALOG_KINDS) + ', compose'}")
    params = {}
    if kind == "linear":
        params["matrix"] = [[as_rational(x) for x in row] for row in _get(spec, "matrix")]
    if kind == "exp_ad":
        flavor = spec.get("flavor", "polyvector")
        params["flavor"] = flavor
        gen = _get(spec, "generator")
        params["generator"] = PolyDiffOp.from_json(gen) if flavor == "polydiff" else PolyVector.from_json(gen)
    if kind == "identity":
        params["flavor"] = spec.get("flavor", "polyvector")
    if kind == "moyal":
        params["scale"] = as_rational(spec.get("scale", "1"))
    return catalog_morphism(kind, nvars, **params)


def _leaf_kind(spec: Any) -> str:
    while isinstance(spec, dict) and spec.get("kind") == "compose":
        spec = spec.get("inner")
    return _get(spec, "kind")


def _samples(obj, F: LInftyMorphism, args, order: int):
    if "samples" in obj:
        payload = PolyDiffOp if F.source == "polydiff" else PolyVector
        return [[HbarSeries.from_json(x, payload.from_json) for x in tup] for tup in obj["samples"]]
    degrees, cdeg = sample_domain(_leaf_kind(obj["morphism"]))
    rng = sampling.make_rng(args.seed)
    return sampling.linfty_samples(rng, F.source, F.nvars, order, degrees, cdeg,
                                   count=int(obj.get("count", 4)), arity=int(obj.get("arity", 3)))


def _check_parallel(F: LInftyMorphism, samples, jobs: int):
    if jobs <= 1 or len(samples) <= 1:
        return linfty_check(F, samples)
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(lambda s: linfty_check(F, [s]), samples))
    failures = [{"sample": i, "arity": f["arity"]} for i, r in enumerate(parts) for f in r.failures]
    worst = max((r.max_violation for r in parts), default=Fraction(0))
    return LInftyReport(not failures, worst, sum(r.checked for r in parts), failures)


def _order(obj, args, default=2) -> int:
    if args.order is not None:
        return args.order
    return int(obj.get("order", default)) if isinstance(obj, dict) else default


@verb("linfty-check")
def _linfty_check(obj, args):
    nvars = int(_get(obj, "nvars"))
    F = _morphism(_get(obj, "morphism"), nvars)
    samples = _samples(obj, F, args, _order(obj, args))
    return linfty_check_report(F, samples, args.jobs)


def linfty_check_report(F, samples, jobs: int) -> dict:
    rep = _check_parallel(F, samples, jobs)
    out = rep.to_json()
    out["morphism"] = F.name
    return out


@verb("linfty-push")
def _linfty_push(obj, args):
    nvars = int(_get(obj, "nvars"))
    F = _morphism(_get(obj, "morphism"), nvars)
    omega = MCElement.from_json(_get(obj, "mc"))
    pushed = linfty_mc_push(F, omega)
    residual = F.target_algebra(pushed.order).mc_residual(pushed)
    return {"pushed": pushed.to_json(), "mc": residual.is_zero()}


@verb("linfty-twist")
def _linfty_twist(obj, args):
    nvars = int(_get(obj, "nvars"))
    F = _morphism(_get(obj, "morphism"), nvars)
    omega = MCElement.from_json(_get(obj, "twist"))
    T = linfty_twist(F, omega)
    samples = _samples(obj, F, args, omega.order)
    rep = linfty_check_report(T, samples, args.jobs)
    rep["target_twist"] = T.target_twist.to_json()
    return rep


# ---------------------------------------------------------------------------
# graphs and weights


@verb("graphs-enum")
def _graphs_enum(obj, args):
    n = int(obj.get("aerial", args.order if args.order is not None else 1)) if isinstance(obj, dict) else int(obj)
    reduced = bool(obj.get("reduced", False)) if isinstance(obj, dict) else False
    graphs = reduced_basis(n) if reduced else enumerate_graphs(n)
    return {"aerial": n, "count": len(graphs), "graphs": [g.to_json() for g in graphs]}


@verb("graphs-eval")
def _graphs_eval(obj, args):
    g = AdmissibleGraph.from_json(_get(obj, "graph"))
    alpha = PolyVector.from_json(_get(obj, "alpha"))
    return graph_evaluate(g, alpha).to_json()


@verb("weights-solve")
def _weights_solve(obj, args):
    k = int(_get(obj, "order", args.order if args.order is not None else _MISSING)) if isinstance(obj, dict) else int(obj)
    probes = DEFAULT_PROBES
    if isinstance(obj, dict) and "probes" in obj:
        probes = tuple(Probe(int(p["nvars"]), int(p["coeff_degree"])) for p in obj["probes"])
    system = weight_constraint_system(k, probes=probes, equivariance=bool(obj.get("equivariance", False))
                                      if isinstance(obj, dict) else False)
    for eq in (obj.get("extra", []) if isinstance(obj, dict) else []):
        system.add_equation({int(i): as_rational(c) for i, c in _get(eq, "coeffs").items()},
                            as_rational(eq.get("rhs", "0")))
    fam = solve_weights(system)
    out = fam.to_json()
    out["equations"] = len(system.rows)
    return out


# ---------------------------------------------------------------------------
# quantizer


def _formal_poisson(obj) -> FormalPoisson:
    obj = _unwrap(obj, "alpha")
    if isinstance(obj, dict) and "coeffs" in obj:
        return FormalPoisson.from_json(obj)
    raise MalformedInputError("expected a formal Poisson series {order, coeffs}")


@verb("quantize")
def _quantize(obj, args):
    alpha = _formal_poisson(obj)
    run = quantize(alpha, args.order, args.degree_cap, args.deriv_cap)
    return run.to_json()


@verb("moyal")
def _moyal(obj, args):
    alpha = PolyVector.from_json(_unwrap(obj, "alpha"))
    scale = as_rational(obj.get("scale", "1")) if isinstance(obj, dict) and "alpha" in obj else Fraction(1)
    return moyal_star(alpha, _order(obj, args), scale).to_json()


# ---------------------------------------------------------------------------
# Cech gluing


@verb("cech-check")
def _cech_check(obj, args):
    return cocycle_check(GaugeCocycle.from_json(_unwrap(obj, "cocycle"))).to_json()


@verb("cech-trivialize")
def _cech_trivialize(obj, args):
    rho = GaugeCocycle.from_json(_get(obj, "cocycle"))
    model_obj = dict(obj.get("model", {}))
    if args.window is not None:
        model_obj["window"] = args.window
    model_obj.setdefault("charts", rho.charts)
    model = CoverModel.from_json(model_obj)
    result = trivialize(rho, model)
    out = result.to_json()
    out["verified"] = True
    return out


# ---------------------------------------------------------------------------
# driver


def _pretty(x: Any, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(x, dict):
        return "\n".join(f"{pad}{k}:\n{_pretty(v, indent + 1)}" if isinstance(v, (dict, list)) and v
                         else f"{pad}{k}: {v}" for k, v in x.items())
    if isinstance(x, list):
        return "\n".join(_pretty(v, indent) if isinstance(v, (dict, list)) else f"{pad}- {v}" for v in x)
    return f"{pad}{x}"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("input", nargs="?", default="-", help="JSON input file, '-' for stdin")
    common.add_argument("-o", "--output", default="-", help="output file, '-' for stdout")
    common.add_argument("--order", type=int, help="truncation order N")
    common.add_argument("--degree-cap", type=int, help="polynomial degree cap")
    common.add_argument("--deriv-cap", type=int, help="derivative order cap")
    common.add_argument("--window", type=int, help="Laurent window W")
    common.add_argument("--seed", type=int, default=0, help="seed for generated samples")
    common.add_argument("--jobs", type=int, default=1, help="worker threads for sample checks")
    common.add_argument("--pretty", action="store_true", help="human-readable output")
    p = argparse.ArgumentParser(prog="starforge", description="Exact deformation-quantization toolkit.")
    sub = p.add_subparsers(dest="verb", metavar="verb")
    sub.required = True
    for name in VERBS:
        sub.add_parser(name, parents=[common])
    return p


def _read(path: str) -> Any:
    try:
        text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
    except OSError as exc:
        raise MalformedInputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedInputError(f"invalid JSON: {exc.msg}", location=f"line {exc.lineno}") from None


def _dump(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _emit(obj: Any, args) -> None:
    text = _pretty(obj) + "\n" if args.pretty else _dump(obj) + "\n"
    if args.output == "-":
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        obj = _read(args.input)
    except MalformedInputError as exc:
        sys.stdout.write(_dump(exc.to_json()) + "\n")
        return 2
    try:
        result = VERBS[args.verb](obj, args)
    except MalformedInputError as exc:
        sys.stdout.write(_dump(exc.to_json()) + "\n")
        return 2
    except StarforgeError as exc:
        sys.stdout.write(_dump(exc.to_json()) + "\n")
        return 1
    except (KeyError, TypeError, ValueError, AttributeError, IndexError) as exc:
        err = MalformedInputError(f"{type(exc).__name__}: {exc}")
        sys.stdout.write(_dump(err.to_json()) + "\n")
        return 2
    _emit(result, args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
