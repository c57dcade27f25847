"""Smoke test for the rio extension module.

Build and install next to this script:
    cargo build -p rio-python --release
    cp target/release/librio.so python/rio.so
    python3 python/smoke.py
"""

import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

import rio  # noqa: E402


def close(a, b, tol):
    return abs(a - b) <= tol * max(abs(b), 1e-300)


def main():
    grid = rio.Grid(1024, 30)
    steps = [(0.0, 0.25, 3.0), (0.25, 0.5, 1.0), (0.6, 0.9, 2.0)]
    f = rio.GridFunction.from_steps(grid, steps)
    assert close(f.mass(), 0.75 + 0.25 + 0.6, 1e-12)

    fs = f.rearrange()
    for level in (0.5, 1.5, 2.5):
        assert close(fs.distribution(level), f.distribution(level), 1e-12)

    x = rio.Space("Lorentz:3,2")
    xa = x.associate()
    for t in (1e-6, 0.01, 0.5):
        assert close(x.fundamental(t) * xa.fundamental(t), t, 1e-6)
    assert close(rio.Space("Lp:2").norm(f), math.sqrt(9 * 0.25 + 0.25 + 4 * 0.3), 1e-12)

    w = rio.Weight(0.25)
    report = rio.classify(rio.Space("Lp:2"), w, 1.0, grid)
    assert report["regime"] == "subcritical", report

    critical = rio.classify(rio.Space("Lp:2"), rio.Weight(0.5), 1.0, grid)
    assert critical["regime"] == "critical", critical

    corpus = [rio.GridFunction.indicator(grid, 0.0, 2.0 ** -k) for k in range(1, 8)]
    cert = rio.subcritical_equivalence_audit(rio.Space("Lp:2"), w, 1.0, corpus)
    assert 0 < cert["constant_forward"] < math.inf and cert["corpus_size"] == len(corpus)

    try:
        rio.supercritical_linfty_audit(rio.Space("Lp:2"), w, 1.0, corpus)
    except rio.RefusedError:
        pass
    else:
        raise AssertionError("supercritical audit should refuse a subcritical pair")

    lhs, rhs = rio.quasi_banach_identity(rio.Space("Lp:2"), w, 0.5, f)
    assert close(lhs, rhs, 1e-12)

    q = rio.qbar(w, 1.0, f)
    assert q.sup() > 0 and rio.osc_norm(rio.Space("Lp:2"), w, 1.0, q) > 0

    print("python smoke: ok", report["regime"], f"forward={cert['constant_forward']:.4f}")


if __name__ == "__main__":
    main()
