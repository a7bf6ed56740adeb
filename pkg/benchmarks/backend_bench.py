"""Compare the compiled and NumPy kernel backends on a realistic workload.

Run:  python3 benchmarks/backend_bench.py [trials]
"""

import sys
import time

import numpy as np

from quditdd._kernels import _fallback
from quditdd.evolution import event_table
from quditdd.sequences import build_mldd

try:
    from quditdd._kernels import _speedups
except ImportError:
    _speedups = None


def timed(fn, *args, repeats=5, **kwargs):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn(*args, **kwargs)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main() -> int:
    trials = int(sys.argv[1]) if len(sys.argv) > 1 else 20000
    rng = np.random.default_rng(7)
    deltas = 2.0 * np.pi * np.array([14.01e9, 3.21e9, -3.20e9])
    total = 10e-3
    reps = 4
    seq = build_mldd((0, 1, 2), total / (3 * reps), reps)
    kind, ei, ej, ea, eb = event_table(seq)
    psi0 = np.full(3, 1.0 / np.sqrt(3.0), dtype=complex)
    offsets = rng.normal(0.0, 12.6e-9, trials)
    amps = np.array([10e-9])
    omegas = 2.0 * np.pi * np.array([150.0])
    alphas = rng.uniform(0.0, 2.0 * np.pi, (trials, 1))
    weights = np.full(3, 1.0 / 3.0)

    backends = [("numpy", _fallback)]
    if _speedups is not None:
        backends.append(("cython", _speedups))
    else:
        print("compiled backend not built; showing numpy only", file=sys.stderr)

    rows = []
    for name, mod in backends:
        t_prop, psi = timed(
            mod.propagate_batch, kind, ei, ej, ea, eb, deltas, psi0,
            offsets, amps, omegas, alphas,
        )
        t_phase, phases = timed(
            mod.mldd_phase_batch, total, reps, deltas, offsets, amps, omegas, alphas
        )
        t_fid, fid = timed(mod.fidelity_from_phases, phases, weights)
        rows.append((name, t_prop, t_phase, t_fid, float(fid.mean())))

    print(f"trials={trials}, sequence: {seq.n_pulses} pulses over {total * 1e3:g} ms")
    print(f"{'backend':<8}{'propagate':>12}{'phases':>12}{'fidelity':>12}{'mean F':>10}")
    for name, t_prop, t_phase, t_fid, mf in rows:
        print(f"{name:<8}{t_prop * 1e3:>10.2f}ms{t_phase * 1e3:>10.2f}ms"
              f"{t_fid * 1e3:>10.2f}ms{mf:>10.4f}")
    if len(rows) == 2:
        print(
            f"speedup: propagate x{rows[0][1] / rows[1][1]:.1f}, "
            f"phases x{rows[0][2] / rows[1][2]:.1f}, "
            f"fidelity x{rows[0][3] / rows[1][3]:.1f}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
