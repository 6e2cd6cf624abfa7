"""Regenerate the CLI fixture set: python tests/fixtures/make_cli_fixtures.py"""

import json
import random
from pathlib import Path

from starforge.algebra import HbarSeries, Poly
from starforge.cech import GaugeCocycle, LaurentGauge, LaurentOp
from starforge.deformation.dgla import MCElement
from starforge.deformation.gauge import gauge_act_mc
from starforge.deformation.star import GaugeElement, mc_from_star
from starforge.graphs import AdmissibleGraph
from starforge.polydiff import PolyDiffOp, hkr_u1
from starforge.polyvector import FormalPoisson, PolyVector
from starforge.quantizer import moyal_star

OUT = Path(__file__).parent / "cli"


def pv(degree, nvars, comps):
    return PolyVector(degree, nvars, {f: Poly(nvars, c) for f, c in comps.items()})


def main():
    omega = pv(1, 2, {(0, 1): {(0, 0): 1}})
    linear = pv(1, 3, {(0, 1): {(0, 0, 1): 1}, (1, 2): {(1, 0, 0): 1}, (0, 2): {(0, 1, 0): -1}})
    not_poisson = pv(1, 3, {(0, 1): {(0, 0, 1): 1}, (1, 2): {(0, 0, 0): 1}, (0, 2): {(1, 0, 0): 1}})
    f = Poly(2, {(1, 0): 1, (0, 2): 3})
    g = Poly(2, {(0, 1): 2, (1, 1): -1})
    h = Poly(2, {(2, 0): 1})
    vf = pv(0, 2, {(0,): {(0, 1): 1}, (1,): {(1, 0): 2}})
    moyal = moyal_star(omega, 2)
    mc = mc_from_star(moyal)
    pv_mc = MCElement(HbarSeries([PolyVector.zero(1, 2), omega, PolyVector.zero(1, 2)]), "polyvector")
    D0 = PolyDiffOp(0, 2, {((1, 0),): Poly(2, {(0, 1): 1})})
    gamma = HbarSeries([PolyDiffOp.zero(0, 2), D0, PolyDiffOp.zero(0, 2)])
    gauge = GaugeElement.exp(gamma)
    rng = random.Random(7)
    gauges = [LaurentGauge([LaurentOp({(e, 1): rng.randint(-2, 2) for e in es})
                                                      for _ in range(3)]) for es in ((0, 1), (-1, -2))]
    cocycle = GaugeCocycle.coboundary(gauges)
    so3 = FormalPoisson.from_terms(2, [linear])
    const_fp = FormalPoisson.from_terms(3, [omega])

    cases = {
        "poisson-check": [("ok", omega.to_json(), [], 0), ("not-poisson", {"alpha": not_poisson.to_json()}, [], 0),
                          ("malformed", {"alpha": {"degree": 1}}, [], 2)],
        "schouten": [("ok", {"a": vf.to_json(), "b": omega.to_json()}, [], 0),
                     ("malformed", {"a": vf.to_json()}, [], 2)],
        "poisson-bracket": [("ok", {"alpha": omega.to_json(), "f": f.to_json(), "g": g.to_json()}, [], 0),
                            ("malformed", {"alpha": omega.to_json(), "f": "x"}, [], 2),
                            ("degree", {"alpha": vf.to_json(), "f": f.to_json(), "g": g.to_json()}, [], 1)],
        "gerstenhaber": [("ok", {"a": hkr_u1(omega).to_json(), "b": D0.to_json()}, [], 0),
                         ("malformed", {"a": [1, 2]}, [], 2)],
        "hochschild": [("ok", D0.to_json(), [], 0), ("malformed", {"op": {"degree": "x"}}, [], 2)],
        "hkr": [("ok", omega.to_json(), [], 0), ("malformed", 17, [], 2)],
        "taylor": [("ok", f.to_json(), [], 0), ("malformed", {"nvars": 2, "terms": [{"exp": [1]}]}, [], 2)],
        "mc-residual": [("ok", mc.to_json(), [], 0), ("polyvector", pv_mc.to_json(), [], 0),
                        ("malformed", {"flavor": "polydiff"}, [], 2),
                        ("not-plus", {"flavor": "polyvector", "series": HbarSeries([omega, omega]).to_json()}, [], 1)],
        "star-mul": [("ok", {"star": moyal.to_json(), "f": f.to_json(), "g": g.to_json()}, [], 0),
                     ("degree-cap", {"star": moyal.to_json(), "f": f.to_json(), "g": g.to_json()},
                      ["--degree-cap", "1"], 1),
                     ("malformed", {"star": {"order": 2}}, [], 2)],
        "star-assoc": [("ok", moyal.to_json(), [], 0),
                       ("triple", {"star": moyal.to_json(), "f": f.to_json(), "g": g.to_json(), "h": h.to_json()}, [], 0),
                       ("malformed", {"betas": "nope", "order": 1}, [], 2)],
        "gauge-star": [("ok", {"gauge": gauge.to_json(), "star": moyal.to_json()}, [], 0),
                       ("malformed", {"gauge": {"order": 2}, "star": moyal.to_json()}, [], 2)],
        "gauge-mc": [("ok", {"gamma": gamma.to_json(), "mc": mc.to_json()}, [], 0),
                     ("compare", {"mc": mc.to_json(), "target": gauge_act_mc(gamma, mc).to_json()}, [], 0),
                     ("malformed", {"mc": mc.to_json()}, [], 2)],
        "star-compare": [("ok", {"a": moyal.to_json(), "b": moyal.to_json()}, [], 0),
                         ("malformed", {"a": moyal.to_json()}, [], 2)],
        "linfty-check": [("identity", {"nvars": 2, "morphism": {"kind": "identity"}}, ["--seed", "3"], 0),
                         ("hkr-low", {"nvars": 2, "morphism": {"kind": "hkr_low"}}, ["--seed", "1"], 0),
                         ("jobs", {"nvars": 2, "morphism": {"kind": "exp_ad", "generator": vf.to_json()}},
                          ["--seed", "2", "--jobs", "3"], 0),
                         ("malformed", {"nvars": 2, "morphism": {"kind": "bogus"}}, [], 2)],
        "linfty-push": [("ok", {"nvars": 2, "morphism": {"kind": "moyal"}, "mc": pv_mc.to_json()}, [], 0),
                        ("malformed", {"nvars": 2, "morphism": {"kind": "moyal"}}, [], 2)],
        "linfty-twist": [("ok", {"nvars": 2, "morphism": {"kind": "identity"}, "twist": pv_mc.to_json(), "count": 2},
                          ["--seed", "4"], 0),
                         ("malformed", {"nvars": 2, "morphism": {"kind": "identity"}}, [], 2)],
        "graphs-enum": [("ok", {"aerial": 2}, [], 0), ("reduced", {"aerial": 2, "reduced": True}, [], 0),
                        ("too-big", {"aerial": 9}, [], 1), ("malformed", {"aerial": "two"}, [], 2)],
        "graphs-eval": [("ok", {"graph": AdmissibleGraph(2, (("L", "R"), (0, "R"))).to_json(),
                                "alpha": linear.to_json()}, [], 0),
                        ("bad-graph", {"graph": {"aerial": 1, "edges": [[0, "L"]]}, "alpha": omega.to_json()}, [], 1),
                        ("malformed", {"graph": {"aerial": 1}}, [], 2)],
        "weights-solve": [("k1", {"order": 1}, [], 0), ("k2", {"order": 2}, [], 0),
                          ("inconsistent", {"order": 1, "extra": [{"coeffs": {"0": "1"}, "rhs": "2"}, {"coeffs": {"0": "1"}, "rhs": "3"}]}, [], 1),
                          ("malformed", {"order": "x"}, [], 2)],
        "quantize": [("so3", so3.to_json(), ["--order", "2"], 0), ("constant", const_fp.to_json(), [], 0),
                     ("not-poisson", FormalPoisson.from_terms(2, [not_poisson]).to_json(), [], 1),
                     ("malformed", {"order": 1}, [], 2)],
        "moyal": [("ok", {"alpha": omega.to_json(), "scale": "1/2"}, ["--order", "3"], 0),
                  ("non-constant", {"alpha": linear.to_json()}, [], 1), ("malformed", {"alpha": 3}, [], 2)],
        "cech-check": [("ok", cocycle.to_json(), [], 0), ("malformed", {"charts": 2}, [], 2)],
        "cech-trivialize": [("ok", {"cocycle": cocycle.to_json()}, ["--window", "4"], 0),
                            ("window", {"cocycle": cocycle.to_json()}, ["--window", "1"], 1),
                            ("malformed", {"cocycle": {"charts": 2, "order": 1, "pairs": "x"}}, [], 2)],
    }
    OUT.mkdir(exist_ok=True)
    for old in OUT.glob("*.json"):
        old.unlink()
    manifest = []
    for verb, items in cases.items():
        for tag, payload, flags, code in items:
            name = f"{verb}--{tag}.json"
            (OUT / name).write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")
            manifest.append({"verb": verb, "input": name, "flags": flags, "exit": code})
    (OUT.parent / "cli_manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")


if __name__ == "__main__":
    main()
