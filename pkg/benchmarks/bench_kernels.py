"""Time the hot kernels compiled with numba and as plain Python.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Each mode runs in its own interpreter because WEDGE_FPP_DISABLE_JIT is read
at import time. The compiled timings exclude the first (compiling) call.
"""
import argparse
import json
import os
import subprocess
import sys

CASES = r"""
import json, sys, time
import numpy as np
from wedge_fpp import WeightModel, build_graph, sample_weight_field, passage_time, dual_separating_count
from wedge_fpp.martingale import BlockClock
from wedge_fpp.perc import estimate_point_to_plane, estimate_rect_crossing
from wedge_fpp.sequences import build_sequence
from wedge_fpp.wedge import WedgeFunction

repeat = int(sys.argv[1])
g = build_graph(WedgeFunction.loglog(1.0), 400)
fld = sample_weight_field(WeightModel(0.5), g, 1, 0)
gen = sample_weight_field(WeightModel(0.5, law={"kind": "shifted_exp"}), g, 1, 0)
seq = build_sequence(WedgeFunction.loglog(1.0), 0.5, None, "critical", i_max=200)
clock = BlockClock(seq, WeightModel(0.5))

cases = {
    "sample field (n=400)": lambda: sample_weight_field(WeightModel(0.5), g, 1, 3),
    "0-1 BFS passage time": lambda: passage_time(g, fld, with_path=False),
    "Dijkstra passage time": lambda: passage_time(g, gen, mode="general", with_path=False),
    "dual max-flow Y_n": lambda: dual_separating_count(g, fld),
    "point-to-plane, 2000 samples": lambda: estimate_point_to_plane(0.4, 8, 2000, seed=1),
    "rectangle crossing, 200 samples": lambda: estimate_rect_crossing(0.5, 20, 20, 200, seed=1),
    "block clock m(i), 50 fields": lambda: [clock.m(10, s) for s in range(50)],
}
out = {}
for name, fn in cases.items():
    fn()
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    out[name] = best
print(json.dumps(out))
"""


def run_mode(disable, repeat):
    env = dict(os.environ)
    env.pop("WEDGE_FPP_DISABLE_JIT", None)
    if disable:
        env["WEDGE_FPP_DISABLE_JIT"] = "1"
    res = subprocess.run([sys.executable, "-c", CASES, str(repeat)], env=env, capture_output=True, text=True)
    if res.returncode:
        sys.exit(res.stderr)
    return json.loads(res.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    jit = run_mode(False, args.repeat)
    py = run_mode(True, args.repeat)
    width = max(map(len, jit))
    print(f"{'kernel':<{width}}  {'numba [ms]':>11}  {'python [ms]':>12}  {'speedup':>8}")
    for name in jit:
        a, b = jit[name] * 1e3, py[name] * 1e3
        print(f"{name:<{width}}  {a:11.2f}  {b:12.2f}  {b / a:8.1f}x")


if __name__ == "__main__":
    main()
