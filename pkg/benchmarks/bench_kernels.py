#!/usr/bin/env python3
"""Compare the numba kernels with the pure-numpy fallback.

Each backend runs in its own interpreter because the switch
(RI3BP_DISABLE_NUMBA) is read at import time. Usage:

    python3 benchmarks/bench_kernels.py [--repeat 3] [--json out.json]
"""

import argparse
import json
import os
import subprocess
import sys
import time

WORKER = r"""
import json, sys, time
import numpy as np
import ri3bp
from ri3bp.action import DiscretizedPath, TwoBodyTails, action_derivative, action_hessian, reduced_action
from ri3bp.dynamics import PolarState, integrate, IntegratorSettings
from ri3bp.kepler import solve_kepler

repeat = int(sys.argv[1])

def best(fn):
    fn()  # warm-up (compilation on the numba path)
    out = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return min(out)

path = DiscretizedPath.symmetric(8 * np.pi, 2 * np.pi / 256, lambda s: 0.1 * np.exp(-s * s / 8))
tails = TwoBodyTails(1.3, twobody=False)
t = np.linspace(-100, 100, 20000)
res = {
    "backend": ri3bp.backend(),
    "kepler_20k": best(lambda: solve_kepler(t)),
    "action_value_2k_nodes": best(lambda: reduced_action(path, 1.3, tails, False)),
    "gradient_2k_nodes": best(lambda: action_derivative(path, 1.3, False, tails)),
    "hessian_2k_nodes": best(lambda: action_hessian(path, 1.3, False, tails)),
    "integrate_100_periods": best(lambda: integrate(PolarState(3.0, 0.4, 0.0, 2.0), 200 * np.pi,
                                                   settings=IntegratorSettings(tol=1e-10))),
}
print(json.dumps(res))
"""


def run_backend(disable, repeat):
    env = dict(os.environ)
    if disable:
        env["RI3BP_DISABLE_NUMBA"] = "1"
    else:
        env.pop("RI3BP_DISABLE_NUMBA", None)
    out = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env, check=True,
                         capture_output=True, text=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", default=None)
    args = ap.parse_args()
    t0 = time.perf_counter()
    fast = run_backend(False, args.repeat)
    slow = run_backend(True, args.repeat)
    keys = [k for k in fast if k != "backend"]
    print(f"{'kernel':28s} {'numba [s]':>12s} {'numpy [s]':>12s} {'speedup':>9s}")
    for k in keys:
        print(f"{k:28s} {fast[k]:12.5f} {slow[k]:12.5f} {slow[k] / fast[k]:9.1f}")
    print(f"(total wall time {time.perf_counter() - t0:.1f} s)")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump({"numba": fast, "numpy": slow}, fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
