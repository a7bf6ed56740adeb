"""Classical dephasing field model: quasi-static offset plus discrete harmonics.

A noise *spec* describes the ensemble; a *trial* is one concrete field
trajectory drawn from it.  The field seen by the qudit during a trial is

    B(t) = offset + sum_j amplitude_j * cos(omega_j * t + phase_j)

and its time integral has the closed form used throughout the package:

    Phi(t0, t1) = offset * (t1 - t0)
                + sum_j (amplitude_j / omega_j) * (sin(omega_j t1 + phase_j)
                                                   - sin(omega_j t0 + phase_j))
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "HarmonicComponent",
    "QuasiStaticComponent",
    "NoiseSpec",
    "TrialNoise",
    "sample_trial",
    "field_at",
    "integrate_field",
]


@dataclass(frozen=True)
class HarmonicComponent:
    """One coherent field tone.

    ``phase=None`` means the phase is drawn uniformly from [0, 2pi) for
    every trial; a float pins it for all trials.
    """

    frequency_hz: float
    amplitude_tesla: float
    phase: float | None = None

    def __post_init__(self) -> None:
        if self.frequency_hz <= 0.0:
            raise ValueError("harmonic frequency must be positive")
        if self.amplitude_tesla < 0.0:
            raise ValueError("harmonic amplitude must be non-negative")
        if self.phase is not None and not 0.0 <= self.phase < 2.0 * np.pi:
            raise ValueError("fixed phase must lie in [0, 2pi)")


@dataclass(frozen=True)
class QuasiStaticComponent:
    """Gaussian shot-to-shot field offset, standard deviation in tesla."""

    sigma_tesla: float

    def __post_init__(self) -> None:
        if self.sigma_tesla < 0.0:
            raise ValueError("sigma must be non-negative")


@dataclass(frozen=True)
class NoiseSpec:
    quasi_static: QuasiStaticComponent | None = None
    harmonics: tuple[HarmonicComponent, ...] = ()

    def __post_init__(self) -> None:
        freqs = [h.frequency_hz for h in self.harmonics]
        if len(set(freqs)) != len(freqs):
            raise ValueError("harmonic frequencies must be distinct")

    @property
    def n_harmonics(self) -> int:
        return len(self.harmonics)


@dataclass(frozen=True)
class TrialNoise:
    """A concrete field trajectory: one draw from a :class:`NoiseSpec`."""

    offset_tesla: float
    amplitudes_tesla: np.ndarray
    omegas: np.ndarray  # angular frequencies, rad/s
    phases: np.ndarray


def sample_trial(spec: NoiseSpec, rng: np.random.Generator) -> TrialNoise:
    """Draw one trial.

    Draw order is part of the reproducibility contract: the offset first
    (if a quasi-static component exists), then one phase per harmonic in
    spec order (only for harmonics with ``phase=None``).
    """
    offset = 0.0
    if spec.quasi_static is not None and spec.quasi_static.sigma_tesla > 0.0:
        offset = float(rng.normal(0.0, spec.quasi_static.sigma_tesla))
    phases = np.empty(spec.n_harmonics)
    for k, h in enumerate(spec.harmonics):
        phases[k] = rng.uniform(0.0, 2.0 * np.pi) if h.phase is None else h.phase
    return TrialNoise(
        offset_tesla=offset,
        amplitudes_tesla=np.array([h.amplitude_tesla for h in spec.harmonics]),
        omegas=np.array([2.0 * np.pi * h.frequency_hz for h in spec.harmonics]),
        phases=phases,
    )


def field_at(trial: TrialNoise, t: float) -> float:
    return float(
        trial.offset_tesla
        + np.sum(trial.amplitudes_tesla * np.cos(trial.omegas * t + trial.phases))
    )


def integrate_field(trial: TrialNoise, t0: float, t1: float) -> float:
    """Exact integral of the trial field over [t0, t1], in T*s."""
    total = trial.offset_tesla * (t1 - t0)
    if trial.omegas.size:
        total += np.sum(
            (trial.amplitudes_tesla / trial.omegas)
            * (np.sin(trial.omegas * t1 + trial.phases) - np.sin(trial.omegas * t0 + trial.phases))
        )
    return float(total)
