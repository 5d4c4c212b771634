"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat N] [--json]

Each workload is run on both backends; outputs are compared before timing.
"""

import argparse
import json
import math
import sys
import timeit
from pathlib import Path

import numpy as np

from kmsgraph import kernels
from kmsgraph.graph import load_graph
from kmsgraph.kms import phase_diagram
from kmsgraph.pathtable import PathTable

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def _workloads():
    three = load_graph(FIXTURES / "three_vertex.graph")
    ex2 = load_graph(FIXTURES / "example2.graph")
    rng = np.random.default_rng(0)

    t6 = PathTable(three, 6)
    ids = t6.ids_up_to(3)
    args = [rng.choice(ids, size=5000).astype(np.int32) for _ in range(4)]
    yield "nf_multiply three_vertex x5000", lambda k: k.nf_multiply(t6, *args)

    t_ex2 = PathTable(ex2, 4)
    mus, nus = t_ex2.normal_forms(2)
    yield "homomorphism_scan example2 k=2", lambda k: k.homomorphism_scan(t_ex2, mus, nus, 2)

    states = [d for s in phase_diagram(three).segments for d in s.simplex.extreme_states]
    masses = np.array([d.m for d in states])
    betas = np.array([d.beta for d in states])
    t_scan = PathTable(three, 4)
    mus3, nus3 = t_scan.normal_forms(2)
    yield "kms_scan_support three_vertex len 2", lambda k: k.kms_scan_support(t_scan, mus3, nus3, masses, betas, 2)

    M = math.e * np.eye(6) - np.array([[1, 1, 0, 0, 0, 1], [0, 2, 1, 0, 0, 0], [0, 0, 1, 1, 0, 0],
                                       [0, 0, 0, 2, 1, 0], [1, 0, 0, 0, 1, 1], [0, 1, 0, 0, 0, 2]], float)
    yield "vertex_candidates 6x6", lambda k: k.vertex_candidates(M, 1e-9)


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return a.shape == b.shape and np.allclose(a, b, atol=1e-14)
    return a == b


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", action="store_true")
    ns = ap.parse_args(argv)
    names = kernels.available_backends()
    if "cython" not in names:
        print("compiled kernels are not built; only the python backend is available", file=sys.stderr)
    backends = {n: kernels.get_backend(n) for n in names}
    rows = []
    for label, fn in _workloads():
        outs = {n: fn(b) for n, b in backends.items()}
        agree = all(_same(outs["python"], o) for o in outs.values())
        row = {"workload": label, "agree": agree}
        for n, b in backends.items():
            row[n] = min(timeit.repeat(lambda b=b: fn(b), number=1, repeat=ns.repeat))
        if "cython" in row:
            row["speedup"] = row["python"] / row["cython"]
        rows.append(row)
    if ns.json:
        print(json.dumps(rows, indent=2))
    else:
        for r in rows:
            cols = "  ".join(f"{n} {r[n] * 1e3:9.2f} ms" for n in backends)
            extra = f"  x{r['speedup']:.1f}" if "speedup" in r else ""
            print(f"{r['workload']:<38} {cols}{extra}{'' if r['agree'] else '  MISMATCH'}")
    return 0 if all(r["agree"] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
