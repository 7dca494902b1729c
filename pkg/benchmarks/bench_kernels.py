"""Time the compiled kernels against the pure-Python fallback.

Usage: ``python3 benchmarks/bench_kernels.py [--repeat R]``.  Prints one
line per kernel with the best-of-R wall time for each backend and the
speedup.
"""
import argparse
import timeit

import numpy as np

from steinchain import _fallback
from steinchain.distributions import make_pmf
from steinchain.generators import canonical_bd, complete_graph_generator, jump_structure
from steinchain.hitting import closed_form_table, edge_terms

try:
    from steinchain import _core
except ImportError:  # extension not built
    _core = None


def cases():
    g = canonical_bd(make_pmf("binomial", n=400, p=0.3))
    lo, hi = edge_terms(g)
    E = closed_form_table(g).times
    cg = complete_graph_generator(10)
    structure = jump_structure(cg)
    target = np.zeros(cg.size, dtype=np.uint8)
    target[9] = 1
    return {
        "closed_form_table (401 states)": lambda m: m.closed_form_table(lo, hi),
        "gth_hitting_table (401 states)": lambda m: m.gth_hitting_table(g.birth, g.death),
        "deviation_scan (401 states)": lambda m: m.deviation_scan(E, g.pi),
        "simulate_hitting (20000 paths)": lambda m: m.simulate_hitting(np.random.PCG64(0), *structure, 0, target, 20_000),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _core is None:
        print("compiled core not built; nothing to compare")
        return 1
    print(f"{'kernel':<34} {'compiled s':>11} {'fallback s':>11} {'speedup':>8}")
    for name, fn in cases().items():
        tc = min(timeit.repeat(lambda: fn(_core), number=1, repeat=args.repeat))
        tf = min(timeit.repeat(lambda: fn(_fallback), number=1, repeat=args.repeat))
        print(f"{name:<34} {tc:11.4f} {tf:11.4f} {tf / tc:8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
