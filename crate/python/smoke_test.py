"""Smoke test for the `wold` extension module.

Build and install it first, e.g. `maturin develop -m crates/python/Cargo.toml`.
"""

import json
import sys

import wold


def main():
    print("demos:", ", ".join(wold.demo_names()))

    rep = wold.Representation.demo("block-mixed")
    print(rep)
    doc = wold.pipeline(rep)
    ranks = doc["decomposition"]["ranks"]
    assert (ranks["K1"], ranks["K2"]) == (3, 2), ranks
    assert doc["meta"]["passed"], doc["meta"]["failed"]

    # the truncated shift sits on the first three coordinates
    shift = [[1.0 if r == c else 0.0 for r in range(rep.k_dim)] for c in range(3)]
    assert wold.classify(rep, shift)["class"] == "INDUCED"

    same = wold.Representation.from_json(rep.to_json())
    assert same.atilde() == rep.atilde()

    pair = wold.Representation.demo("twisted-fock-pair")
    multi = wold.multi(pair)
    print(json.dumps({s["label"]: s["rank"] for s in multi["decomposition"]["summands"]}))
    assert multi["meta"]["passed"]

    failing = wold.check(wold.Representation.demo("weighted-cyclic"))
    assert failing["meta"]["failed"] == ["near_isometric_a"]

    try:
        wold.Representation.from_json("{")
    except ValueError as e:
        print("rejected bad input:", e)
    else:
        raise AssertionError("bad JSON was accepted")

    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
