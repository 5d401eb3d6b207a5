"""Smoke test for the bistream Python extension.

Run after `cargo build -p bistream-py` (or `maturin develop` inside
crates/python). If the module is not installed, the freshly built shared
library under target/ is loaded directly.
"""

import importlib.machinery
import importlib.util
import itertools
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    try:
        import bistream

        return bistream
    except ImportError:
        pass
    for profile in ("release", "debug"):
        for name in ("libbistream.so", "libbistream.dylib", "bistream.dll"):
            path = ROOT / "target" / profile / name
            if path.exists():
                loader = importlib.machinery.ExtensionFileLoader("bistream", str(path))
                spec = importlib.util.spec_from_file_location("bistream", path, loader=loader)
                module = importlib.util.module_from_spec(spec)
                loader.exec_module(module)
                sys.modules["bistream"] = module
                return module
    sys.exit("bistream extension not found; build it with `cargo build -p bistream-py`")


def brute(edges):
    edges = set(edges)
    iv = sorted({i for i, _ in edges})
    jv = sorted({j for _, j in edges})
    return sum(
        all(e in edges for e in ((a, x), (a, y), (b, x), (b, y)))
        for a, b in itertools.combinations(iv, 2)
        for x, y in itertools.combinations(jv, 2)
    )


def main():
    bs = load()

    k34 = [(i, j) for i in range(3) for j in range(4)]
    assert bs.count_butterflies(k34) == 3 * 6
    assert bs.brute_force_count(k34) == 18

    g = bs.Snapshot(k34)
    assert len(g) == 12 and g.count_butterflies() == 18
    assert g.degree(0, "i") == 4 and g.degree(9, "i") is None
    assert g.incident_butterflies(0, 0) == 6
    assert g.remove_edge(0, 0) and g.count_butterflies() == 18 - 6

    support = bs.butterfly_support(k34)
    assert sum(support["i"].values()) + sum(support["j"].values()) == 4 * 18

    records = bs.generate_ba(200, 4, lo=0, hi=60, seed=1)
    assert len(records) == 4 * 3 // 2 + (200 - 4) * 4
    edges = [(i, j) for _, i, j in records]
    assert bs.count_butterflies(edges) == brute(edges)

    truth = bs.ground_truth(records, 6)
    assert truth[-1] == bs.count_butterflies(edges)
    est = bs.run_sgrapp(records, 1.0, 6)
    assert len(est) == len(truth)
    sup = bs.run_sgrapp(records, 1.0, 6, truth=truth, supervised=1.0)
    assert len(sup) == len(truth)
    assert abs(bs.mape([100], [90.0]) - 0.1) < 1e-12

    e = bs.Estimator(1.5)
    e.step(0, 7)
    e.add_edges(100)
    assert abs(e.step(1, 3) - 1010.0) < 1e-9

    f = bs.Fleet(3, 1000)
    for i, j in [(i, j) for i in range(4) for j in range(4)]:
        f.process(i, j)
    assert f.estimate == 36.0

    try:
        bs.Fleet(4, 10)
    except ValueError:
        pass
    else:
        raise AssertionError("bad variant accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
