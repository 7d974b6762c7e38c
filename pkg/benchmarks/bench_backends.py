"""Benchmark the compiled kernels against the pure numpy fallback.

Runs the three hot kernels plus a small end-to-end first-return pipeline and
prints a timing table (and optional JSON).  The two backends must agree
numerically; the interesting number is the speedup.

    python3 benchmarks/bench_backends.py [--json out.json]
"""

import argparse
import json
import math
import time

import numpy as np

from tower_thermo import _purekernels as pure

try:
    from tower_thermo import _core as compiled
except ImportError:
    compiled = None

LOGLAM = math.log((3 + math.sqrt(5)) / 2)
PSI_ARGS = (0.01, 0.1, 0.25, 1, LOGLAM)  # u0, r0, alpha, variant, loglam


def timeit(fn, repeat=3):
    best = math.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_flow(backend, m):
    rng = np.random.default_rng(0)
    z = rng.uniform(-0.25, 0.25, size=(m, 2))
    return timeit(lambda: backend.flow_map(z, *PSI_ARGS, 1e-10))


def bench_tangent(backend, m):
    rng = np.random.default_rng(1)
    z = rng.uniform(-0.2, 0.2, size=(m, 2))
    V = np.tile(np.eye(2), (m, 1, 1))
    return timeit(lambda: backend.flow_map_tangent(z, V, *PSI_ARGS, 1e-10))


def bench_enum(backend, N, n_max):
    rng = np.random.default_rng(2)
    table = rng.uniform(-0.5, 0.5, size=(N, N))
    return timeit(lambda: backend.periodic_logsums(table, N, 0, 0, list(range(2, n_max + 1))),
                  repeat=1)


def bench_pipeline(grid):
    from tower_thermo.katok import KatokMap, build_first_return_scheme, pressure_curve

    km = KatokMap()

    def run():
        sch = build_first_return_scheme(km, base=6, horizon=20, grid=(grid, grid))
        return pressure_curve(km, sch, [0.0, 1.0])

    return timeit(run, repeat=1)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--json", default=None)
    ap.add_argument("--flow-batch", type=int, default=4096)
    ap.add_argument("--enum-n", type=int, default=11)
    ap.add_argument("--grid", type=int, default=120)
    args = ap.parse_args()

    rows = []

    def record(name, t_pure, t_comp, check=None):
        speedup = t_pure / t_comp if t_comp else float("nan")
        rows.append({"kernel": name, "pure_s": t_pure, "compiled_s": t_comp,
                     "speedup": speedup, "max_dev": check})
        comp = f"{t_comp:10.4f}s" if t_comp is not None else "   missing"
        dev = f"  dev {check:.2e}" if check is not None else ""
        print(f"{name:28s} pure {t_pure:10.4f}s  compiled {comp}  "
              f"x{speedup:8.1f}{dev}")

    for m in (16, args.flow_batch):
        tp, outp = bench_flow(pure, m)
        tc, outc = bench_flow(compiled, m) if compiled else (None, None)
        record(f"flow_map[{m}]", tp, tc,
               float(np.abs(outp - outc).max()) if compiled else None)

    tp, outp = bench_tangent(pure, args.flow_batch // 4)
    tc, outc = bench_tangent(compiled, args.flow_batch // 4) if compiled else (None, None)
    record(f"flow_map_tangent[{args.flow_batch // 4}]", tp, tc,
           float(np.abs(outp[1] - outc[1]).max()) if compiled else None)

    tp, outp = bench_enum(pure, 4, args.enum_n)
    tc, outc = bench_enum(compiled, 4, args.enum_n) if compiled else (None, None)
    record(f"periodic_logsums[4^{args.enum_n - 1}]", tp, tc,
           float(np.abs(outp - outc).max()) if compiled else None)

    # end-to-end pipeline timing under whichever backend is active
    from tower_thermo import kernels

    t, _ = bench_pipeline(args.grid)
    print(f"first-return pipeline ({kernels.BACKEND} backend, "
          f"{args.grid}x{args.grid} grid): {t:.2f}s")
    rows.append({"kernel": f"pipeline[{args.grid}]", "backend": kernels.BACKEND,
                 "seconds": t})

    if args.json:
        with open(args.json, "w") as f:
            json.dump(rows, f, indent=1)
        print(f"wrote {args.json}")


if __name__ == "__main__":
    main()
