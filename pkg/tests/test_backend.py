import json
import os
import subprocess
import sys

import pytest

SNIPPET = """
import json, numpy as np, ri3bp
from ri3bp.kepler import solve_kepler, rho
from ri3bp.action import DiscretizedPath, action_value, bump
from ri3bp.dynamics import PolarState, integrate
t = np.linspace(-7, 7, 11)
p = DiscretizedPath.symmetric(3 * np.pi, 2 * np.pi / 64, lambda s: bump(s, 0.3, 0.5, 2.0))
rep = action_value(p, 1.3)
tr = integrate(PolarState(5.0, 0.2, 0.1, 1.5), 30.0)
print(json.dumps({"jit": ri3bp.NUMBA_ENABLED, "u": solve_kepler(t).tolist(),
                  "rho": rho(t).tolist(), "A": rep.value, "r": float(tr.r[-1]),
                  "y": float(tr.y[-1])}))
"""


def _run(disable):
    env = dict(os.environ)
    env.pop("RI3BP_DISABLE_NUMBA", None)
    if disable:
        env["RI3BP_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", SNIPPET], env=env, capture_output=True, text=True,
                         check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def test_pure_numpy_fallback_agrees():
    fast, slow = _run(False), _run(True)
    assert fast["jit"] is True and slow["jit"] is False
    assert fast["u"] == pytest.approx(slow["u"], abs=1e-14)
    assert fast["rho"] == pytest.approx(slow["rho"], abs=1e-14)
    assert fast["A"] == pytest.approx(slow["A"], abs=1e-12)
    assert fast["r"] == pytest.approx(slow["r"], rel=1e-10)
    assert fast["y"] == pytest.approx(slow["y"], abs=1e-10)
