"""Time the compiled and NumPy kernels on the same convolution workloads.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Every workload is run on each importable backend; outputs are compared
bitwise before any timing is reported.
"""
import argparse
import json
import time

import numpy as np

from icc_walk import construction as C
from icc_walk.groups import FreeAbelian, Heisenberg
from icc_walk.kernels import backends
from icc_walk.measure import _kind, convolve_power, lazy_step


def workloads():
    st = C.build("lamplighter", n_max=4)
    mu = C.full_measure(st).renormalize()
    lamp2 = convolve_power(mu, 2)
    lamp3 = convolve_power(mu, 3)
    lamp5 = convolve_power(mu, 5)
    z3 = convolve_power(lazy_step(FreeAbelian(3)), 6)
    heis = convolve_power(lazy_step(Heisenberg()), 5)
    return {
        "lamplighter depth 4, mu^3 * mu": (lamp3, mu),
        "lamplighter depth 4, mu^5 * mu^2": (lamp5, lamp2),
        "Z^3 lazy, mu^6 * mu^6": (z3, z3),
        "Heisenberg lazy, mu^5 * mu^5": (heis, heis),
    }


def run(impl, kind, a, b):
    ka, ma = a.packed()
    kb, mb = b.packed()
    prod = impl.products(kind, ka, kb)
    w = (ma[:, None] * mb[None, :]).ravel()
    return impl.merge(prod, w)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json")
    args = ap.parse_args(argv)

    impls = backends()
    rows = []
    for name, (a, b) in workloads().items():
        kind = _kind(a.group)
        outs = {}
        times = {}
        for bname, impl in impls.items():
            best = float("inf")
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                outs[bname] = run(impl, kind, a, b)
                best = min(best, time.perf_counter() - t0)
            times[bname] = best
        ref = next(iter(outs.values()))
        same = all(np.array_equal(o[0], ref[0]) and np.array_equal(o[1], ref[1]) for o in outs.values())
        row = {"workload": name, "pairs": a.support_size * b.support_size,
               "atoms_out": int(ref[0].shape[0]), "identical": same,
               **{f"{k}_s": round(v, 4) for k, v in times.items()}}
        if "cython" in times:
            row["speedup"] = round(times["numpy"] / times["cython"], 2)
        rows.append(row)
        print("  ".join(f"{k}={v}" for k, v in row.items()))
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=1)
    return 0 if all(r["identical"] for r in rows) else 2


if __name__ == "__main__":
    raise SystemExit(main())
