"""Smoke test for the pyrydgate extension.

Builds the extension with cargo (unless PYRYDGATE_LIB points at an existing
shared library), imports it from a temporary directory and checks a few
known values.

    python3 python/smoke_test.py
"""

import cmath
import importlib
import math
import os
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def build() -> Path:
    lib = os.environ.get("PYRYDGATE_LIB")
    if lib:
        return Path(lib)
    subprocess.run(
        ["cargo", "build", "--release", "-p", "pyrydgate", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    target = Path(os.environ.get("CARGO_TARGET_DIR", ROOT / "target")) / "release"
    for name in ("libpyrydgate.so", "libpyrydgate.dylib", "pyrydgate.dll"):
        if (target / name).exists():
            return target / name
    sys.exit(f"no pyrydgate library under {target}")


def load(lib: Path):
    tmp = tempfile.mkdtemp(prefix="pyrydgate-")
    suffix = ".pyd" if lib.suffix == ".dll" else ".so"
    shutil.copy(lib, Path(tmp) / f"pyrydgate{suffix}")
    sys.path.insert(0, tmp)
    return importlib.import_module("pyrydgate")


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b} (tol {tol})"


def main() -> None:
    rg = load(build())

    close(rg.f_value(4, 1.428), -0.9955, 1e-3)
    close(rg.g_value(2, 2.0, 2 * math.pi / 3), 1.993, 3e-3)
    r1, r2 = rg.tau_ratios(4, 1.428)
    close(r1, 6.98, 0.01)
    close(r2, 9.02, 0.01)
    close(rg.gate_time(4, rg.mhz(3.5)), 1.142857e-6, 1e-12)

    target = rg.Target.for_solution(4, 1.428)
    ideal = rg.ideal_gate(4, 1.428)
    close(ideal.min_fidelity(target), 0.9948, 2e-3)

    pulse = rg.Pulse.lab(5.0, 4, delta_mhz=3.5)
    gate = pulse.simulate()
    assert gate.max_off_diagonal() < 1e-9
    close(gate.min_fidelity(target), 0.9948, 2e-3)
    close(gate.average_fidelity(target), 0.9962, 2e-3)
    d = gate.diagonal()
    close(abs(d[3]), 0.9998, 2e-3)
    # same gate up to a phase, same fidelity
    rotated = rg.Gate.from_diagonal([z * cmath.exp(0.7j) for z in d])
    close(rotated.min_fidelity(target), gate.min_fidelity(target), 1e-12)

    cands = rg.scan(keep=5)
    assert len(cands) == 5 and cands[0]["m"] == 7, cands[0]
    assert all(a["predicted_fmin"] >= b["predicted_fmin"] for a, b in zip(cands, cands[1:]))

    mc = rg.monte_carlo(pulse, target, sigma_doppler=rg.khz_angular(100.0), trials=200, seed=3)
    again = rg.monte_carlo(pulse, target, sigma_doppler=rg.khz_angular(100.0), trials=200, seed=3)
    assert mc == again
    close(mc["mean_min_fidelity"], 0.9921, 0.01)
    assert len(mc["min_fidelities"]) == 200

    try:
        rg.Pulse.lab(5.0, 4, xi=1.428, delta_mhz=3.5)
    except ValueError:
        pass
    else:
        raise AssertionError("both xi and delta_mhz accepted")
    try:
        rg.Target.cz("sideways")
    except ValueError:
        pass
    else:
        raise AssertionError("bad convention accepted")

    print(f"pyrydgate {rg.__version__}: smoke test passed")


if __name__ == "__main__":
    main()
