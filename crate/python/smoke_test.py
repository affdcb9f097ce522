#!/usr/bin/env python3
"""Smoke test for the eqport_py extension module.

Builds the cdylib with cargo if needed, stages it under an importable
name, and exercises each exposed function against known closed forms.

Usage: python3 python/smoke_test.py
"""

import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load_module():
    lib = ROOT / "target" / "debug" / "libeqport_py.so"
    if not lib.exists():
        subprocess.run(
            ["cargo", "build", "-p", "eqport-py"], cwd=ROOT, check=True
        )
    stage = Path(tempfile.mkdtemp(prefix="eqport_py_"))
    shutil.copy(lib, stage / "eqport_py.so")
    sys.path.insert(0, str(stage))
    import eqport_py

    return eqport_py


def approx(a, b, tol=1e-9):
    assert abs(a - b) <= tol * max(1.0, abs(b)), f"{a} != {b} (tol {tol})"


def main():
    ep = load_module()
    market = "const:lambda=0.4,sigma=0.2,T=20"

    # transform layer: gamma Laplace transform in closed form
    approx(ep.laplace("gamma:alpha=2,beta=0.5", 1.0), (1 + 0.5) ** -2, 1e-12)

    # kernel: Merton investor has constant h = 1/gamma
    approx(ep.kernel_h("point:2", 5.0), 0.5, 1e-12)

    # solver: Poisson closed form a(0) = lambda / sqrt(theta^2 - Lambda(0))
    res = ep.solve("poisson:theta=2", market)
    assert res["regime"] == "unique"
    approx(res["lambda0"], 3.2, 1e-12)
    a0 = res["curve"]["a"][0][0]
    approx(a0, 0.4 / math.sqrt(4.0 - 3.2), 1e-8)

    # trivial regime is reported without a curve
    res = ep.solve("stable:alpha=0.4", "const:lambda=1,sigma=1,T=1")
    assert res["regime"] == "trivial" and "curve" not in res

    # family: the optimal member sits at T0 = T with both flags
    opt = ep.optimal("stable:alpha=0.8", "const:lambda=1,sigma=1,T=1", grid=200)
    approx(opt["t0"], 1.0, 1e-12)
    assert opt["uniformly_optimal"] and opt["uniformly_strictly_optimal"]

    # statics: the two-point pair has its known single crossing
    cross = ep.crossing(1.0, 2.0, 1.0, 0.9, 0.9, market)
    approx(cross["t_star"], 8.18567615765466, 1e-6)
    assert cross["d_prime"] > 0

    # comparison: FSD ordered yet with a nonempty reversal region
    rep = ep.compare("discrete:1=0.9,3=0.1", "discrete:1=0.9,2=0.1", market, grid=500)
    assert rep["fsd"] == "Dominates" and len(rep["violations"]) > 0

    # verification: certificate passes and MC agrees with the closed form
    ver = ep.verify("poisson:theta=2", market, grid=200, paths=20000, seed=7)
    assert ver["certificate_pass"]
    sigmas = abs(ver["mc_value"] - ver["closed_form_j0"]) / ver["mc_stderr"]
    assert sigmas <= 4.0, f"MC deviates by {sigmas:.2f} stderr"

    print("smoke test: all checks passed")


if __name__ == "__main__":
    main()
