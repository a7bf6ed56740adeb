import numpy as np
import pytest

from quditdd.core import LevelSystem, PureState, retrieval_fidelity
from quditdd.evolution import (
    PhaseVector,
    calibrate_pulse_error,
    event_table,
    phases_mldd,
    propagate_unitary,
    trial_fidelity,
)
from quditdd.noise import TrialNoise
from quditdd.sequences import build_bare_wait, build_cyclic_mldd, build_mldd, build_ramsey

BE_DELTAS = 2 * np.pi * np.array([14.008e9, 3.211e9, -3.199e9])  # rad/s/T


def be_like_system() -> LevelSystem:
    return LevelSystem(labels=("a", "b", "c"), sensitivities=tuple(BE_DELTAS))


def constant_trial(offset: float) -> TrialNoise:
    return TrialNoise(
        offset_tesla=offset,
        amplitudes_tesla=np.zeros(0),
        omegas=np.zeros(0),
        phases=np.zeros(0),
    )


def harmonic_trial(rng) -> TrialNoise:
    return TrialNoise(
        offset_tesla=rng.normal(0.0, 15e-9),
        amplitudes_tesla=np.array([rng.uniform(1e-9, 20e-9)]),
        omegas=2 * np.pi * np.array([rng.uniform(30.0, 700.0)]),
        phases=np.array([rng.uniform(0.0, 2 * np.pi)]),
    )


class TestEngineEquivalence:
    """The closed-form phase engine against full unitary propagation."""

    @pytest.mark.parametrize("repetitions", [1, 3])
    def test_random_harmonic_trials(self, repetitions, rng):
        system = be_like_system()
        prepared = PureState.equal_superposition(3)
        for _ in range(40):
            total = rng.uniform(0.5e-3, 20e-3)
            trial = harmonic_trial(rng)
            seq = build_mldd((0, 1, 2), total / (3 * repetitions), repetitions)
            final = propagate_unitary(seq, system, trial, prepared)
            f_unitary = retrieval_fidelity(prepared, final)
            f_analytic = trial_fidelity(prepared, phases_mldd(total, repetitions, system, trial))
            assert f_analytic == pytest.approx(f_unitary, abs=1e-9)

    def test_bare_engine_equivalence(self, rng):
        system = be_like_system()
        prepared = PureState.equal_superposition(3)
        for _ in range(20):
            trial = harmonic_trial(rng)
            total = rng.uniform(0.5e-3, 5e-3)
            final = propagate_unitary(build_bare_wait(total), system, trial, prepared)
            phases = -np.array(
                [d * _integrated(trial, total) for d in system.sensitivity_array()]
            )
            f_direct = trial_fidelity(prepared, PhaseVector(phases))
            assert f_direct == pytest.approx(retrieval_fidelity(prepared, final), abs=1e-10)


def _integrated(trial, total):
    from quditdd.noise import integrate_field

    return integrate_field(trial, 0.0, total)


class TestDecouplingIdentity:
    def test_constant_field_full_retrieval(self, rng):
        system = be_like_system()
        for _ in range(30):
            amps = rng.normal(size=3) + 1j * rng.normal(size=3)
            prepared = PureState.from_amplitudes(amps)
            trial = constant_trial(rng.normal(0.0, 40e-9))
            n = int(rng.integers(1, 4))
            seq = build_mldd((0, 1, 2), rng.uniform(0.1e-3, 3e-3), n)
            final = propagate_unitary(seq, system, trial, prepared)
            assert retrieval_fidelity(prepared, final) == pytest.approx(1.0, abs=1e-10)

    def test_analytic_engine_constant_field(self, rng):
        system = be_like_system()
        prepared = PureState.equal_superposition(3)
        for _ in range(30):
            trial = constant_trial(rng.normal(0.0, 40e-9))
            pv = phases_mldd(rng.uniform(1e-3, 30e-3), int(rng.integers(1, 5)), system, trial)
            assert trial_fidelity(prepared, pv) == pytest.approx(1.0, abs=1e-12)
            # gauge-fixed branch phases all vanish: the net map is identity
            np.testing.assert_allclose(pv.phases, 0.0, atol=1e-6)

    @pytest.mark.parametrize("dim", [2, 3, 4, 5])
    def test_cyclic_constant_field_identity(self, dim, rng):
        system = LevelSystem(
            labels=tuple(f"L{k}" for k in range(dim)),
            sensitivities=tuple(rng.normal(0.0, 2e10, size=dim)),
        )
        amps = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        prepared = PureState.from_amplitudes(amps)
        trial = constant_trial(25e-9)
        seq = build_cyclic_mldd(dim, 0.8e-3, 2)
        final = propagate_unitary(seq, system, trial, prepared)
        # identity up to a global phase
        assert retrieval_fidelity(prepared, final) == pytest.approx(1.0, abs=1e-10)

    def test_uniform_sensitivity_shift_is_gauge(self, rng):
        base = be_like_system()
        shifted = LevelSystem(
            labels=base.labels,
            sensitivities=tuple(d + 5e9 for d in base.sensitivity_array()),
        )
        prepared = PureState.equal_superposition(3)
        trial = harmonic_trial(rng)
        seq = build_mldd((0, 1, 2), 1.5e-3, 2)
        f_base = retrieval_fidelity(prepared, propagate_unitary(seq, base, trial, prepared))
        f_shift = retrieval_fidelity(prepared, propagate_unitary(seq, shifted, trial, prepared))
        assert f_base == pytest.approx(f_shift, abs=1e-12)


class TestRamseyPropagation:
    def test_zero_noise_full_transfer(self):
        system = be_like_system()
        seq = build_ramsey(0, 2, 1e-3)
        final = propagate_unitary(seq, system, constant_trial(0.0), PureState.basis(3, 0))
        populations = final.populations()
        assert populations[2] == pytest.approx(1.0, abs=1e-12)


class TestEventTable:
    def test_shapes_and_kinds(self):
        seq = build_mldd((0, 1, 2), 1e-3, 2)
        kind, ei, ej, ea, eb = event_table(seq)
        assert kind.dtype == np.int8 and ei.dtype == np.int32
        assert kind.shape[0] == len(seq.events)
        assert int((kind == 1).sum()) == seq.n_pulses


class TestPulseErrors:
    def test_explicit_angle_errors_match_seeded_draw(self):
        system = be_like_system()
        prepared = PureState.equal_superposition(3)
        trial = constant_trial(10e-9)
        seq = build_mldd((0, 1, 2), 1e-3, 2)
        errors = np.random.default_rng(11).normal(0.0, 0.05, seq.n_pulses)
        via_rng = propagate_unitary(
            seq, system, trial, prepared, pulse_error=0.05, rng=np.random.default_rng(11)
        )
        via_explicit = propagate_unitary(seq, system, trial, prepared, angle_errors=errors)
        np.testing.assert_allclose(via_rng.amplitudes, via_explicit.amplitudes, atol=1e-15)

    def test_exclusive_error_arguments(self):
        system = be_like_system()
        seq = build_mldd((0, 1, 2), 1e-3, 1)
        state = PureState.equal_superposition(3)
        with pytest.raises(ValueError):
            propagate_unitary(seq, system, constant_trial(0.0), state,
                              pulse_error=0.05, angle_errors=np.zeros(6))
        with pytest.raises(ValueError):
            propagate_unitary(seq, system, constant_trial(0.0), state, pulse_error=0.05)

    def test_imperfect_pulses_leak(self):
        system = be_like_system()
        prepared = PureState.equal_superposition(3)
        seq = build_mldd((0, 1, 2), 1e-3, 4)
        final = propagate_unitary(
            seq, system, constant_trial(0.0), prepared,
            angle_errors=np.full(seq.n_pulses, 0.08),
        )
        assert retrieval_fidelity(prepared, final) < 1.0 - 1e-4


class TestCalibration:
    def test_contrast_target_bracket(self):
        std = calibrate_pulse_error(target_contrast=0.976, repetitions=4, trials=4000, seed=715)
        assert 0.05 < std < 0.09


class TestPhaseVector:
    def test_gauge_fixing(self):
        pv = PhaseVector(np.array([1.5, 2.0, 0.5]))
        np.testing.assert_allclose(pv.phases, [0.0, 0.5, -1.0], atol=1e-15)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            PhaseVector(np.array([0.0, np.nan, 1.0]))
