import numpy as np
import pytest
from scipy.integrate import quad

from quditdd.noise import (
    HarmonicComponent,
    NoiseSpec,
    QuasiStaticComponent,
    TrialNoise,
    field_at,
    integrate_field,
    sample_trial,
)


def make_trial(offset=3.2e-9, amps=(10e-9, 4e-9), freqs=(150.0, 60.0), phases=(0.3, 5.1)):
    return TrialNoise(
        offset_tesla=offset,
        amplitudes_tesla=np.array(amps),
        omegas=2 * np.pi * np.array(freqs),
        phases=np.array(phases),
    )


class TestIntegration:
    def test_against_quadrature_oracle(self):
        # independent route first: adaptive quadrature of the instantaneous field
        trial = make_trial()
        for t0, t1 in [(0.0, 1e-3), (2e-3, 7e-3), (1e-4, 1.0001e-4)]:
            oracle, err = quad(lambda t: field_at(trial, t), t0, t1, limit=200)
            assert err < 1e-15
            got = integrate_field(trial, t0, t1)
            assert got == pytest.approx(oracle, rel=1e-9, abs=1e-18)

    def test_additivity(self, rng):
        trial = make_trial()
        for _ in range(20):
            a, b, c = np.sort(rng.uniform(0.0, 20e-3, size=3))
            whole = integrate_field(trial, a, c)
            split = integrate_field(trial, a, b) + integrate_field(trial, b, c)
            assert split == pytest.approx(whole, rel=1e-12, abs=1e-22)

    def test_full_period_nulls_harmonic(self):
        trial = make_trial(offset=0.0, amps=(10e-9,), freqs=(150.0,), phases=(1.1,))
        period = 1.0 / 150.0
        for k in (1, 3, 7):
            got = integrate_field(trial, 0.25e-3, 0.25e-3 + k * period)
            assert abs(got) < 1e-24  # scale: A/omega ~ 1e-11

    def test_derivative_is_field(self):
        trial = make_trial()
        t = 3.7e-3
        h = 1e-9
        fd = (integrate_field(trial, 0.0, t + h) - integrate_field(trial, 0.0, t - h)) / (2 * h)
        assert fd == pytest.approx(field_at(trial, t), rel=1e-5)

    def test_constant_only(self):
        trial = make_trial(offset=5e-9, amps=(), freqs=(), phases=())
        assert integrate_field(trial, 1e-3, 4e-3) == pytest.approx(5e-9 * 3e-3, rel=1e-15)


class TestSampling:
    def test_offset_distribution(self):
        spec = NoiseSpec(quasi_static=QuasiStaticComponent(12.6e-9))
        rng = np.random.default_rng(5)
        draws = np.array([sample_trial(spec, rng).offset_tesla for _ in range(40000)])
        assert draws.std() == pytest.approx(12.6e-9, rel=0.03)
        assert abs(draws.mean()) < 4 * 12.6e-9 / np.sqrt(40000)

    def test_phase_uniformity(self):
        spec = NoiseSpec(harmonics=(HarmonicComponent(150.0, 1e-9),))
        rng = np.random.default_rng(6)
        phases = np.array([sample_trial(spec, rng).phases[0] for _ in range(20000)])
        assert phases.min() >= 0.0 and phases.max() < 2 * np.pi
        counts, _ = np.histogram(phases, bins=16, range=(0.0, 2 * np.pi))
        expected = 20000 / 16
        chi2 = np.sum((counts - expected) ** 2 / expected)
        assert chi2 < 45.0  # 15 dof, p ~ 1e-4 cutoff

    def test_fixed_phase_consumes_no_draws(self):
        fixed_then_free = NoiseSpec(
            harmonics=(
                HarmonicComponent(150.0, 1e-9, phase=1.25),
                HarmonicComponent(60.0, 2e-9),
            )
        )
        free_only = NoiseSpec(harmonics=(HarmonicComponent(60.0, 2e-9),))
        t1 = sample_trial(fixed_then_free, np.random.default_rng(9))
        t2 = sample_trial(free_only, np.random.default_rng(9))
        assert t1.phases[0] == 1.25
        assert t1.phases[1] == t2.phases[0]

    def test_draw_order_offset_before_phases(self):
        spec = NoiseSpec(
            quasi_static=QuasiStaticComponent(1e-9),
            harmonics=(HarmonicComponent(150.0, 1e-9),),
        )
        trial = sample_trial(spec, np.random.default_rng(3))
        ref = np.random.default_rng(3)
        assert trial.offset_tesla == ref.normal(0.0, 1e-9)
        assert trial.phases[0] == ref.uniform(0.0, 2 * np.pi)

    def test_zero_sigma_draws_nothing(self):
        for spec in (
            NoiseSpec(harmonics=(HarmonicComponent(150.0, 1e-9),)),
            NoiseSpec(
                quasi_static=QuasiStaticComponent(0.0),
                harmonics=(HarmonicComponent(150.0, 1e-9),),
            ),
        ):
            trial = sample_trial(spec, np.random.default_rng(4))
            ref = np.random.default_rng(4)
            assert trial.offset_tesla == 0.0
            assert trial.phases[0] == ref.uniform(0.0, 2 * np.pi)

    def test_determinism(self):
        spec = NoiseSpec(
            quasi_static=QuasiStaticComponent(2e-9),
            harmonics=(HarmonicComponent(150.0, 1e-9), HarmonicComponent(60.0, 5e-10)),
        )
        a = sample_trial(spec, np.random.default_rng(42))
        b = sample_trial(spec, np.random.default_rng(42))
        assert a.offset_tesla == b.offset_tesla
        np.testing.assert_array_equal(a.phases, b.phases)


class TestValidation:
    def test_harmonic_validation(self):
        with pytest.raises(ValueError):
            HarmonicComponent(0.0, 1e-9)
        with pytest.raises(ValueError):
            HarmonicComponent(150.0, -1e-9)
        with pytest.raises(ValueError):
            HarmonicComponent(150.0, 1e-9, phase=-0.1)
        with pytest.raises(ValueError):
            HarmonicComponent(150.0, 1e-9, phase=2 * np.pi)

    def test_quasi_static_validation(self):
        with pytest.raises(ValueError):
            QuasiStaticComponent(-1e-9)

    def test_duplicate_frequencies_rejected(self):
        with pytest.raises(ValueError):
            NoiseSpec(
                harmonics=(HarmonicComponent(150.0, 1e-9), HarmonicComponent(150.0, 2e-9))
            )
