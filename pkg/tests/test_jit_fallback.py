"""The pure-Python fallback must give the same numbers as the compiled kernels."""
import json
import os
import subprocess
import sys

SCRIPT = r"""
import json
import numpy as np
from wedge_fpp import WeightModel, build_graph, sample_weight_field, passage_time, dual_separating_count
from wedge_fpp._jit import HAS_NUMBA
from wedge_fpp.martingale import BlockClock, leftmost_crossing
from wedge_fpp.perc import estimate_point_to_plane, estimate_rect_crossing
from wedge_fpp.rng import tau_array
from wedge_fpp.sequences import build_sequence
from wedge_fpp.wedge import WedgeFunction

f = WedgeFunction.loglog(1.0)
g = build_graph(f, 40)
out = {"numba": HAS_NUMBA, "T": [], "Y": [], "Tg": []}
for s in range(5):
    fld = sample_weight_field(WeightModel(0.5), g, 1, s)
    out["T"].append(int(passage_time(g, fld).value))
    out["Y"].append(int(dual_separating_count(g, fld).value))
    m = WeightModel(0.5, law={"kind": "shifted_exp"})
    out["Tg"].append(float(passage_time(g, sample_weight_field(m, g, 1, s), mode="general").value))
out["tau"] = tau_array(WeightModel(0.4, law={"kind": "pareto", "exponent": 4.5, "scale": 1.0}),
                       g.ekey[:50], 3, 1).tolist()
out["plane"] = estimate_point_to_plane(0.4, 4, 500, seed=2)["estimate"]
out["rect"] = estimate_rect_crossing(0.5, 6, 6, 300, seed=2)["estimate"]
out["left"] = leftmost_crossing(WedgeFunction.loglog(2.0), 10, 20, 77, 0.6)
seq = build_sequence(f, 0.5, None, "critical", i_max=120)
clock = BlockClock(seq, WeightModel(0.5))
out["m"] = [clock.m(i, s) for s in range(5) for i in range(6)]
print(json.dumps(out))
"""


def _run(disable):
    env = dict(os.environ)
    env.pop("WEDGE_FPP_DISABLE_JIT", None)
    if disable:
        env["WEDGE_FPP_DISABLE_JIT"] = "1"
    res = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, timeout=600)
    assert res.returncode == 0, res.stderr
    return json.loads(res.stdout)


def test_fallback_matches_jit():
    jit = _run(False)
    py = _run(True)
    assert jit.pop("numba") is True and py.pop("numba") is False
    tau_j, tau_p = jit.pop("tau"), py.pop("tau")
    # libm and Python's math.log1p can differ in the last bit
    assert all(abs(a - b) <= 1e-12 * max(1.0, abs(a)) for a, b in zip(tau_j, tau_p))
    tg_j, tg_p = jit.pop("Tg"), py.pop("Tg")
    assert all(abs(a - b) <= 1e-9 * max(1.0, abs(a)) for a, b in zip(tg_j, tg_p))
    assert jit == py
