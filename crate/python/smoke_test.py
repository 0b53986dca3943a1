"""Smoke test for the Python extension.

Build it first:

    cargo build --release -p mbions-py --features extension-module

then run `python3 python/smoke_test.py` from the repository root.
"""

import importlib.util
import json
import math
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_extension():
    candidates = [
        ROOT / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libmbions.so", "libmbions.dylib", "mbions.dll")
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit("extension not built; run: cargo build --release -p mbions-py --features extension-module")
    suffix = ".pyd" if built.suffix == ".dll" else ".so"
    target = pathlib.Path(tempfile.mkdtemp()) / ("mbions" + suffix)
    shutil.copy(built, target)
    spec = importlib.util.spec_from_file_location("mbions", target)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def main():
    mb = load_extension()

    # uniform ions, m0 = 2 on the unit interval, E1 = 1: beta = 1, phi = log 2
    dom = mb.Domain.periodic(1.0, 16, 4.0, 8)
    sol = mb.find_beta(dom, [2.0] * 16, 1.0)
    assert abs(sol["beta"] - 1.0) < 1e-10, sol["beta"]
    assert all(abs(p - math.log(2.0)) < 1e-10 for p in sol["phi"])

    dom = mb.Domain.periodic(2 * math.pi, 32, 6.0, 32)
    n = [1.0 + 0.1 * math.cos(x) for x in dom.x]
    phi = mb.solve_phi(dom, n, 1.0)
    assert len(phi) == 32

    rows = mb.run_reduced(dom, n, 3.0, 0.5, 0.05, temperature=0.5)
    c0 = rows[0]["beta_invariant"]
    drift = max(abs(r["beta_invariant"] - c0) for r in rows)
    assert len(rows) == 11 and drift < 1e-3 * abs(c0), drift
    assert max(abs(r["total_energy"] - rows[0]["total_energy"]) for r in rows) < 1e-8

    ne = [1.0 + 0.1 * math.sin(x) for x in dom.x]
    total = dom.integrate(n)
    ne = [v * total / dom.integrate(ne) for v in ne]
    sweep = mb.mb_sweep(dom, n, ne, [0.4, 0.2], 0.2, 0.05)
    assert [r["epsilon"] for r in sweep] == [0.4, 0.2]
    assert all(r["error"] is None and r["max_entropy_change"] <= 0.0 for r in sweep)

    config = ROOT / "crates" / "core" / "tests" / "fixtures" / "solve_pb_uniform.ini"
    with tempfile.TemporaryDirectory() as out:
        summary = json.loads(mb.run_config(str(config), "solve-pb", out))
    assert abs(summary["beta"] - 1.0) < 1e-10

    try:
        mb.find_beta(dom, [1.0] * 32, -1.0)
    except ValueError as e:
        assert "energy" in str(e), e
    else:
        raise AssertionError("negative energy accepted")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
