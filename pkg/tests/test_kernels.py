import subprocess
import sys

import numpy as np
import pytest

from quditdd import _kernels
from quditdd._kernels import _fallback
from quditdd.core import LevelSystem, PureState
from quditdd.evolution import event_table, phases_mldd, propagate_unitary, trial_fidelity
from quditdd.noise import TrialNoise
from quditdd.sequences import build_mldd, build_ramsey

try:
    from quditdd._kernels import _speedups
except ImportError:
    _speedups = None

DELTAS = 2 * np.pi * np.array([14.008e9, 3.211e9, -3.199e9])


def batch_inputs(rng, n=64, nh=2):
    offsets = rng.normal(0.0, 15e-9, n)
    amps = rng.uniform(1e-9, 15e-9, nh)
    omegas = 2 * np.pi * rng.uniform(40.0, 400.0, nh)
    alphas = rng.uniform(0.0, 2 * np.pi, (n, nh))
    return offsets, amps, omegas, alphas


def trial_of(offsets, amps, omegas, alphas, t):
    return TrialNoise(
        offset_tesla=float(offsets[t]),
        amplitudes_tesla=amps,
        omegas=omegas,
        phases=alphas[t],
    )


class TestFallbackAgainstReference:
    """Batch kernels against the single-trial propagation in evolution."""

    def test_propagate_batch_matches_unitary(self, rng):
        system = LevelSystem(labels=("a", "b", "c"), sensitivities=tuple(DELTAS))
        seq = build_mldd((0, 1, 2), 0.7e-3, 2)
        table = event_table(seq)
        psi0 = PureState.equal_superposition(3)
        offsets, amps, omegas, alphas = batch_inputs(rng, n=16)
        out = _fallback.propagate_batch(*table, DELTAS, psi0.amplitudes,
                                        offsets, amps, omegas, alphas)
        for t in range(16):
            ref = propagate_unitary(seq, system, trial_of(offsets, amps, omegas, alphas, t),
                                    psi0)
            np.testing.assert_allclose(out[t], ref.amplitudes, atol=1e-11)

    def test_propagate_batch_with_angle_errors(self, rng):
        system = LevelSystem(labels=("a", "b", "c"), sensitivities=tuple(DELTAS))
        seq = build_ramsey(0, 2, 1.5e-3)
        table = event_table(seq)
        psi0 = PureState.basis(3, 0)
        offsets, amps, omegas, alphas = batch_inputs(rng, n=8)
        errors = rng.normal(0.0, 0.06, (8, seq.n_pulses))
        out = _fallback.propagate_batch(*table, DELTAS, psi0.amplitudes,
                                        offsets, amps, omegas, alphas, angle_errors=errors)
        for t in range(8):
            ref = propagate_unitary(seq, system, trial_of(offsets, amps, omegas, alphas, t),
                                    psi0, angle_errors=errors[t])
            np.testing.assert_allclose(out[t], ref.amplitudes, atol=1e-11)

    def test_mldd_phase_batch_matches_reference(self, rng):
        system = LevelSystem(labels=("a", "b", "c"), sensitivities=tuple(DELTAS))
        offsets, amps, omegas, alphas = batch_inputs(rng, n=12)
        total, reps = 9e-3, 3
        phases = _fallback.mldd_phase_batch(total, reps, DELTAS, offsets, amps, omegas, alphas)
        for t in range(12):
            ref = phases_mldd(total, reps, system, trial_of(offsets, amps, omegas, alphas, t))
            got = phases[t] - phases[t, 0]  # same gauge as the reference
            np.testing.assert_allclose(got, ref.phases, atol=1e-8)

    def test_bare_phase_batch_matches_integral(self, rng):
        from quditdd.noise import integrate_field

        offsets, amps, omegas, alphas = batch_inputs(rng, n=12)
        total = 4e-3
        phases = _fallback.bare_phase_batch(total, DELTAS, offsets, amps, omegas, alphas)
        for t in range(12):
            phi = integrate_field(trial_of(offsets, amps, omegas, alphas, t), 0.0, total)
            np.testing.assert_allclose(phases[t], -phi * DELTAS, rtol=1e-12, atol=1e-15)

    def test_fidelity_from_phases_matches_reference(self, rng):
        from quditdd.evolution import PhaseVector

        phases = rng.uniform(-30.0, 30.0, (20, 3))
        weights = np.full(3, 1.0 / 3.0)
        out = _fallback.fidelity_from_phases(phases, weights)
        prepared = PureState.equal_superposition(3)
        for t in range(20):
            ref = trial_fidelity(prepared, PhaseVector(phases[t].copy()))
            assert out[t] == pytest.approx(ref, abs=1e-12)


@pytest.mark.skipif(_speedups is None, reason="compiled backend not built")
class TestCompiledAgainstFallback:
    def test_propagate_batch(self, rng):
        seq = build_mldd((0, 1, 2), 0.9e-3, 2)
        table = event_table(seq)
        psi0 = PureState.equal_superposition(3).amplitudes
        offsets, amps, omegas, alphas = batch_inputs(rng, n=50)
        errors = rng.normal(0.0, 0.05, (50, seq.n_pulses))
        for err in (None, errors):
            a = _fallback.propagate_batch(*table, DELTAS, psi0, offsets, amps, omegas,
                                          alphas, angle_errors=err)
            b = _speedups.propagate_batch(*table, DELTAS, psi0, offsets, amps, omegas,
                                          alphas, angle_errors=err)
            np.testing.assert_allclose(a, b, atol=1e-12)

    def test_phase_kernels(self, rng):
        offsets, amps, omegas, alphas = batch_inputs(rng, n=50)
        a = _fallback.mldd_phase_batch(12e-3, 4, DELTAS, offsets, amps, omegas, alphas)
        b = _speedups.mldd_phase_batch(12e-3, 4, DELTAS, offsets, amps, omegas, alphas)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-10)
        a = _fallback.bare_phase_batch(4e-3, DELTAS, offsets, amps, omegas, alphas)
        b = _speedups.bare_phase_batch(4e-3, DELTAS, offsets, amps, omegas, alphas)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-10)

    def test_fidelity(self, rng):
        phases = rng.uniform(-40.0, 40.0, (100, 3))
        weights = np.array([0.5, 0.2, 0.3])
        a = _fallback.fidelity_from_phases(phases, weights)
        b = _speedups.fidelity_from_phases(phases, weights)
        np.testing.assert_allclose(a, b, atol=1e-13)


class TestBackendSelection:
    def test_backend_reported(self):
        assert _kernels.BACKEND in ("cython", "numpy")

    def test_env_override_numpy(self):
        code = (
            "import quditdd._kernels as k; "
            "assert k.BACKEND == 'numpy', k.BACKEND; "
            "print(k.BACKEND)"
        )
        proc = subprocess.run(
            [sys.executable, "-c", code],
            capture_output=True, text=True,
            env={"PATH": "/usr/bin:/bin", "QUDITDD_BACKEND": "numpy"},
        )
        assert proc.returncode == 0, proc.stderr
        assert proc.stdout.strip() == "numpy"

    def test_env_override_invalid(self):
        code = "import quditdd._kernels"
        proc = subprocess.run(
            [sys.executable, "-c", code],
            capture_output=True, text=True,
            env={"PATH": "/usr/bin:/bin", "QUDITDD_BACKEND": "nonsense"},
        )
        assert proc.returncode != 0
        assert "QUDITDD_BACKEND" in proc.stderr
