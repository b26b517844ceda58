"""Compare the numba kernels with the pure-numpy fallback.

Each backend runs in its own interpreter (the backend is fixed at import
time by SEIRWAVE_BACKEND). The first call is timed separately so numba's
compile cost (or cache load) is visible.

    python benchmarks/bench_kernels.py [--repeat 5] [--days 585]
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from seirwave import _accel
from seirwave.core import FixedRates, PopulationConfig
from seirwave.fitting import TABLE_I_FITTED, params_from_values
from seirwave.integrate import default_initial_state, run_sensitivity_kernel, simulate

days, repeat = int(sys.argv[1]), int(sys.argv[2])
p = params_from_values(TABLE_I_FITTED)
rates, pop = FixedRates(), PopulationConfig(1.38e9)
y0 = default_initial_state(pop).as_array()

def sim():
    return simulate(p, rates, pop, horizon_days=days)

def sens():
    return run_sensitivity_kernel(p.kernel_theta(), p.r0_params.waves_array(), rates.as_array(),
                                  pop.as_array(), y0, days, 4, np.zeros(days + 2))

out = {"backend": _accel.BACKEND}
for name, fn in (("simulate", sim), ("sensitivity", sens)):
    t0 = time.perf_counter(); fn(); first = time.perf_counter() - t0
    runs = []
    for _ in range(repeat):
        t0 = time.perf_counter(); fn(); runs.append(time.perf_counter() - t0)
    out[name] = {"first_call_s": first, "best_s": min(runs), "median_s": sorted(runs)[len(runs) // 2]}
json.dump(out, sys.stdout)
"""


def run_backend(backend, days, repeat):
    env = dict(os.environ, SEIRWAVE_BACKEND=backend)
    r = subprocess.run([sys.executable, "-c", WORKER, str(days), str(repeat)],
                       env=env, capture_output=True, text=True, check=True)
    return json.loads(r.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--days", type=int, default=585)
    ap.add_argument("--json", action="store_true", help="print raw timings as JSON")
    args = ap.parse_args()

    results = {b: run_backend(b, args.days, args.repeat) for b in ("numba", "numpy")}
    if args.json:
        print(json.dumps(results, indent=2, sort_keys=True))
        return
    print(f"{args.days}-day horizon, 4 substeps/day, best of {args.repeat}")
    print(f"{'kernel':<12} {'numba':>12} {'numpy':>12} {'speedup':>9} {'numba 1st call':>15}")
    for name in ("simulate", "sensitivity"):
        nb, npy = results["numba"][name], results["numpy"][name]
        print(f"{name:<12} {nb['best_s'] * 1e3:>10.2f}ms {npy['best_s'] * 1e3:>10.1f}ms "
              f"{npy['best_s'] / nb['best_s']:>8.0f}x {nb['first_call_s']:>14.2f}s")


if __name__ == "__main__":
    main()
