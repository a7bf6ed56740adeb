"""Two independent single-trial evolution engines.

``propagate_unitary`` is the exact route: it walks the event list and
multiplies the closed-form pulse and free-evolution unitaries into the
state.  ``phases_mldd`` is the analytic route for the three-level
decoupling protocol: it accumulates each superposition branch's phase
directly from closed-form field integrals, tracking which level each
branch occupies during each third of a repetition.  The two must agree
per trial to ~1e-10; that equivalence is the backbone of the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import LevelSystem, PureState, apply, free_phase, transition_rotation
from .noise import TrialNoise, integrate_field
from .sequences import SequenceSpec, Wait, build_mldd

__all__ = [
    "PhaseVector",
    "propagate_unitary",
    "phases_mldd",
    "trial_fidelity",
    "event_table",
    "calibrate_pulse_error",
]

# Branch occupancy during segment s (mod 3) of a repetition.  The pulse
# pattern swaps (0,1), then (1,2), then (0,2) around consecutive
# segments, so a branch starting in level b dwells in level
# OCCUPANCY[s][b] during segment s.  Using the occupancy map makes the
# analytic phases agree with the unitary engine trial by trial, not just
# after ensemble averaging.
_OCCUPANCY = ((1, 0, 2), (0, 2, 1), (2, 1, 0))


@dataclass(frozen=True)
class PhaseVector:
    """Per-branch accumulated phases for one trial, gauge fixed to phases[0] = 0."""

    phases: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.phases, dtype=float)
        if not np.all(np.isfinite(p)):
            raise ValueError("phases must be finite")
        object.__setattr__(self, "phases", p - p[0])

    @property
    def dim(self) -> int:
        return self.phases.shape[0]


def event_table(seq: SequenceSpec):
    """Flatten a sequence into the parallel arrays the batch kernels consume."""
    n = len(seq.events)
    kind = np.zeros(n, dtype=np.int8)
    ei = np.zeros(n, dtype=np.int32)
    ej = np.zeros(n, dtype=np.int32)
    ea = np.zeros(n, dtype=np.float64)
    eb = np.zeros(n, dtype=np.float64)
    for r, ev in enumerate(seq.events):
        if isinstance(ev, Wait):
            ea[r] = ev.start
            eb[r] = ev.stop
        else:
            kind[r] = 1
            ei[r] = ev.i
            ej[r] = ev.j
            ea[r] = ev.angle
            eb[r] = ev.axis_phase
    return kind, ei, ej, ea, eb


def propagate_unitary(
    seq: SequenceSpec,
    system: LevelSystem,
    trial: TrialNoise,
    initial: PureState,
    pulse_error: float | None = None,
    rng: np.random.Generator | None = None,
    angle_errors: np.ndarray | None = None,
) -> PureState:
    """Exact propagation of ``initial`` through the sequence for one trial.

    With ``pulse_error`` set, every pulse angle is scaled by (1 + eps)
    with eps drawn from N(0, pulse_error^2) on ``rng`` in event order.
    Pre-drawn fractional errors can be passed via ``angle_errors``
    instead (one entry per pulse); the two options are exclusive.
    """
    if seq.max_level() >= system.dim:
        raise ValueError("sequence addresses levels outside the system")
    if pulse_error is not None and angle_errors is not None:
        raise ValueError("pass either pulse_error or angle_errors, not both")
    if pulse_error is not None:
        if rng is None:
            raise ValueError("pulse_error needs an rng to draw from")
        angle_errors = rng.normal(0.0, pulse_error, seq.n_pulses)
    if angle_errors is not None and len(angle_errors) != seq.n_pulses:
        raise ValueError(f"expected {seq.n_pulses} angle errors, got {len(angle_errors)}")

    state = initial
    pulse_idx = 0
    for ev in seq.events:
        if isinstance(ev, Wait):
            op = free_phase(system, integrate_field(trial, ev.start, ev.stop))
        else:
            angle = ev.angle
            if angle_errors is not None:
                angle = angle * (1.0 + angle_errors[pulse_idx])
            pulse_idx += 1
            op = transition_rotation(system, ev.i, ev.j, angle, ev.axis_phase)
        state = apply(op, state)
    return state


def phases_mldd(
    total_duration: float, repetitions: int, system: LevelSystem, trial: TrialNoise
) -> PhaseVector:
    """Closed-form branch phases for the three-level protocol, one trial.

    Only defined for d = 3 (use propagate_unitary for anything else).
    """
    if system.dim != 3:
        raise ValueError("analytic phases are defined for three-level systems only")
    if total_duration <= 0.0 or repetitions < 1:
        raise ValueError("need positive duration and at least one repetition")
    deltas = system.sensitivity_array()
    nseg = 3 * repetitions
    tau = total_duration / nseg
    phases = np.zeros(3)
    for s in range(nseg):
        phi = integrate_field(trial, s * tau, (s + 1) * tau)
        occ = _OCCUPANCY[s % 3]
        for b in range(3):
            phases[b] -= deltas[occ[b]] * phi
    return PhaseVector(phases)


def trial_fidelity(prepared: PureState, phase_vec: PhaseVector) -> float:
    """Retrieval fidelity of a dephasing-only trial from its branch phases."""
    if prepared.dim != phase_vec.dim:
        raise ValueError("dimension mismatch")
    overlap = np.sum(prepared.populations() * np.exp(1j * phase_vec.phases))
    return float(np.clip(abs(overlap) ** 2, 0.0, 1.0))


def calibrate_pulse_error(
    target_contrast: float = 0.976,
    repetitions: int = 4,
    trials: int = 20000,
    seed: int = 715,
    tol: float = 1e-4,
) -> float:
    """Angle-error std that reproduces a per-repetition contrast.

    Simulates the three-level protocol with no field noise so only pulse
    errors act, extracts the per-repetition contrast

        g = (((F - 1/3) / (2/3))) ** (1/N)

    from the equal-superposition fidelity F, and bisects the error std
    until g hits ``target_contrast``.  Common random numbers (one base
    draw, scaled by the candidate std) make g monotone in the std, so
    plain bisection converges cleanly.
    """
    if not 0.0 < target_contrast < 1.0:
        raise ValueError("target contrast must lie in (0, 1)")
    seq = build_mldd((0, 1, 2), tau=1e-6, repetitions=repetitions)
    table = event_table(seq)
    deltas = np.zeros(3)
    psi0 = PureState.equal_superposition(3).amplitudes
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    base = rng.normal(0.0, 1.0, (trials, seq.n_pulses))
    no_harmonics = (np.zeros(0), np.zeros(0), np.zeros((trials, 0)))

    def contrast(std: float) -> float:
        psi = _kernels.propagate_batch(
            *table, deltas, psi0, np.zeros(trials), *no_harmonics, angle_errors=std * base
        )
        # overlap with the equal superposition: sum_i psi_i / sqrt(3)
        fid = np.abs(psi.sum(axis=1) / np.sqrt(3.0)) ** 2
        mean_f = float(fid.mean())
        return ((mean_f - 1.0 / 3.0) / (2.0 / 3.0)) ** (1.0 / repetitions)

    lo, hi = 0.0, 0.25
    if contrast(hi) > target_contrast:
        raise ValueError("target contrast too low for the search bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if contrast(mid) > target_contrast:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
