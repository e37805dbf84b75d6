"""Time the compiled path kernel against the numpy fallback.

    python3 benchmarks/bench_kernel.py --samples 20000 --repeat 3

Both backends integrate the same mode paths, so the script also reports the
largest disagreement between their outputs.
"""
import argparse
import json
import time

import numpy as np

from switchctrl import load_fixture
from switchctrl.riccati import RiccatiParams, solve
from switchctrl.simulate import (available_backends, duality_residuals, mc_cost_dual,
                                 random_linear_policies, riccati_feedback_policy)


def workloads(system, n):
    sol = solve(system, RiccatiParams.control_cost(system, 1e-3))
    primal, dual = random_linear_policies(system, np.random.default_rng(0))
    return {
        "duality": lambda b: duality_residuals(system, [1.0, 1.0], [1.0, 0.0], primal, dual,
                                               n, 0, backend=b),
        "riccati_cost": lambda b: np.array(
            mc_cost_dual(system, [1.0, 0.0], riccati_feedback_policy(sol), n, 1,
                         backend=b)[:2]),
    }


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--fixture", default="exp-3-4")
    ap.add_argument("--samples", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", action="store_true", help="print one JSON object")
    args = ap.parse_args(argv)

    system = load_fixture(args.fixture)
    backends = available_backends()
    rows = []
    for name, job in workloads(system, args.samples).items():
        results = {b: best_of(lambda: job(b), args.repeat) for b in backends}
        row = {"workload": name, "samples": args.samples,
               **{f"{b}_s": round(results[b][0], 4) for b in backends}}
        if len(backends) == 2:
            row["speedup"] = round(results["python"][0] / results["cython"][0], 2)
            row["max_abs_diff"] = float(np.abs(results["python"][1] - results["cython"][1]).max())
        rows.append(row)

    if args.json:
        print(json.dumps({"backends": backends, "rows": rows}, indent=2))
        return
    if len(backends) < 2:
        print("compiled kernel not built; timing the numpy fallback only")
    for r in rows:
        print("  ".join(f"{k}={v}" for k, v in r.items()))


if __name__ == "__main__":
    main()
