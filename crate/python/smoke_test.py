#!/usr/bin/env python3
"""Smoke test for the pdg_py extension module.

Builds nothing itself: run `cargo build -p pdg-py` (or `--release`) first.
The script locates the compiled cdylib under target/, exposes it as an
importable module, and exercises the main types and operations.
"""

import json
import math
import os
import shutil
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def locate_cdylib():
    target = os.environ.get("CARGO_TARGET_DIR", os.path.join(ROOT, "target"))
    candidates = []
    for profile in ("release", "debug"):
        for stem in ("libpdg_py.so", "libpdg_py.dylib", "pdg_py.dll"):
            path = os.path.join(target, profile, stem)
            if os.path.exists(path):
                candidates.append(path)
    if not candidates:
        sys.exit(
            "pdg_py cdylib not found under {}; run `cargo build -p pdg-py` first".format(target)
        )
    return max(candidates, key=os.path.getmtime)


def import_module():
    src = locate_cdylib()
    stage = tempfile.mkdtemp(prefix="pdg-py-")
    suffix = ".pyd" if src.endswith(".dll") else ".so"
    shutil.copy(src, os.path.join(stage, "pdg_py" + suffix))
    sys.path.insert(0, stage)
    import pdg_py

    return pdg_py


def fixture(name):
    with open(os.path.join(ROOT, "fixtures", name), encoding="utf-8") as handle:
        return handle.read()


def approx(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b} (tol {tol})"


def main():
    pdg_py = import_module()

    # parsing and structure
    floomp = pdg_py.Pdg.from_json(fixture("floomp.pdg.json"))
    assert floomp.variables == ["1", "F", "G"]
    assert floomp.edge_labels == ["f", "g", "p"]
    assert floomp.validate() == []
    assert floomp.world_size == 4

    # scoring: the independent product of the priors against the full model
    product = [0.9 * 0.05, 0.9 * 0.95, 0.1 * 0.05, 0.1 * 0.95]
    report = floomp.score(product, 0.5)
    assert report["inc"] > 1.0
    approx(report["total"], report["inc"] + 0.5 * report["idef"], 1e-9)
    approx(floomp.score_decomposed(product, 0.5), report["total"], 1e-9)

    priors = floomp.without_edge("p")
    assert priors.inc(product) < 1e-9
    consistent, deviation = priors.in_sd(product)
    assert consistent, deviation

    # inconsistency is detected and quantified
    degree = floomp.degree_of_inconsistency()
    assert degree > 0.01, degree

    # the overdetermination anomaly: agreeing sources compound at gamma = 1
    # but the limit recovers the shared belief
    overdet = pdg_py.Pdg.from_json(fixture("overdet.pdg.json"))
    solved = overdet.solve(1.0)
    assert solved["converged"]
    approx(solved["probs"][0], 0.49 / 0.58, 1e-3)
    limit = overdet.limit()
    approx(limit["probs"][0], 0.7, 1e-3)
    assert abs(limit["incOptimalityGap"]) < 1e-6

    # conversions: the smoking BN gains a parent-product variable
    converted = pdg_py.convert(fixture("smoking.bn.json"), "pdg")
    smoking = pdg_py.Pdg.from_json(converted)
    assert smoking.variables == ["1", "PS", "S", "SH", "C", "S×SH"]
    assert len(smoking.edge_labels) == 6

    # the BN joint is consistent with its converted PDG
    joint = json.loads(pdg_py.convert(fixture("smoking.bn.json"), "joint"))
    consistent, deviation = smoking.in_sd(joint["body"]["probs"], 1e-9)
    assert consistent, deviation

    # queries reproduce cpd rows of a consistent model
    answer = smoking.query("S", "PS")
    assert answer["defined"] == [True, True]
    approx(answer["rows"][0][0], 0.8, 1e-3)
    approx(answer["rows"][1][0], 0.25, 1e-3)

    # observation is reversible and conditions the limit
    observed = priors.observe("G", value="g")
    assert "obs:G" in observed.edge_labels
    assert observed.without_edge("obs:G").to_json() == priors.to_json()
    conditioned = observed.limit()
    g_index = priors.values("G").index("g")
    marginal_g = sum(
        p
        for w, p in enumerate(conditioned["probs"])
        if w % 2 == g_index  # G is the last, fastest-varying variable
    )
    approx(marginal_g, 1.0, 1e-6)

    # construction: hyperedges desugar into a product variable
    grown = priors.add_hyperedge(
        "joint", ["F", "G"], "F", [[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]
    )
    assert "F×G" in grown.variables

    # extended reals cross the boundary as proper floats
    spiked = pdg_py.Pdg.from_json(
        json.dumps(
            {
                "formatVersion": "pdg-json/1",
                "kind": "pdg",
                "body": {
                    "variables": [
                        {"name": "1", "values": ["⋆"]},
                        {"name": "X", "values": ["a", "b"]},
                    ],
                    "edges": [
                        {"label": "d", "source": "1", "target": "X", "cpd": [[1.0, 0.0]]}
                    ],
                },
            }
        )
    )
    assert math.isinf(spiked.inc([0.5, 0.5]))

    print("pdg_py smoke test passed")


if __name__ == "__main__":
    main()
