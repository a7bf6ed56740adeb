"""NumPy implementation of the batch kernels (vectorized over trials).

Array contracts shared with the compiled backend:

- event table: ``kind`` int8 (0 wait, 1 pulse), ``ei``/``ej`` int32
  (pulse levels, 0 for waits), ``ea``/``eb`` float64 (wait: start/stop;
  pulse: nominal angle / axis phase).
- noise batch: ``offsets`` (n,), ``amps``/``omegas`` (nh,), ``alphas``
  (n, nh), all float64; ``omegas`` are angular frequencies.
- ``angle_errors``: optional (n, n_pulses) float64 of fractional angle
  errors, consumed in event order.

All phase bookkeeping matches the single-trial reference functions in
``quditdd.evolution``; the kernel tests pin that equivalence.
"""

import numpy as np

# occupancy of branch b during segment s mod 3 of a decoupling repetition:
# row s lists, per branch, which level's sensitivity is accumulated.
OCCUPANCY = np.array([[1, 0, 2], [0, 2, 1], [2, 1, 0]], dtype=np.intp)


def _segment_integrals(bounds, offsets, amps, omegas, alphas):
    """Integrated field per trial per segment for segment edges ``bounds``."""
    seg = offsets[:, None] * np.diff(bounds)[None, :]
    for h in range(amps.shape[0]):
        w = omegas[h]
        s = np.sin(w * bounds[None, :] + alphas[:, h][:, None])
        seg += (amps[h] / w) * np.diff(s, axis=1)
    return seg


def propagate_batch(kind, ei, ej, ea, eb, deltas, psi0, offsets, amps, omegas, alphas,
                    angle_errors=None):
    """Propagate one initial state through an event table for a trial batch.

    Returns the (n, d) array of final state vectors.
    """
    n = offsets.shape[0]
    psi = np.tile(np.asarray(psi0, dtype=complex), (n, 1))
    pulse_idx = 0
    for r in range(kind.shape[0]):
        if kind[r] == 0:
            t0 = ea[r]
            t1 = eb[r]
            if t1 == t0:
                continue
            phi = offsets * (t1 - t0)
            for h in range(amps.shape[0]):
                w = omegas[h]
                phi = phi + (amps[h] / w) * (
                    np.sin(w * t1 + alphas[:, h]) - np.sin(w * t0 + alphas[:, h])
                )
            psi *= np.exp(-1j * phi[:, None] * deltas[None, :])
        else:
            i = int(ei[r])
            j = int(ej[r])
            if angle_errors is None:
                half = 0.5 * ea[r]
            else:
                half = 0.5 * ea[r] * (1.0 + angle_errors[:, pulse_idx])
            c = np.cos(half)
            s = np.sin(half)
            em = np.exp(-1j * eb[r])
            ci = psi[:, i].copy()
            cj = psi[:, j]
            psi[:, i] = c * ci - 1j * s * em * cj
            psi[:, j] = -1j * s * np.conj(em) * ci + c * cj
            pulse_idx += 1
    return psi


def mldd_phase_batch(total_duration, repetitions, deltas, offsets, amps, omegas, alphas):
    """Closed-form three-level decoupling phases, (n, 3), not gauge fixed."""
    nseg = 3 * repetitions
    tau = total_duration / nseg
    bounds = np.arange(nseg + 1) * tau
    seg = _segment_integrals(bounds, offsets, amps, omegas, alphas)
    phases = np.zeros((offsets.shape[0], 3))
    for s3 in range(3):
        occ = OCCUPANCY[s3]
        tot = seg[:, s3::3].sum(axis=1)
        for b in range(3):
            phases[:, b] -= deltas[occ[b]] * tot
    return phases


def bare_phase_batch(total_duration, deltas, offsets, amps, omegas, alphas):
    """Free-evolution phases, (n, d), not gauge fixed."""
    phi = offsets * total_duration
    for h in range(amps.shape[0]):
        w = omegas[h]
        phi = phi + (amps[h] / w) * (
            np.sin(w * total_duration + alphas[:, h]) - np.sin(alphas[:, h])
        )
    return -phi[:, None] * deltas[None, :]


def fidelity_from_phases(phases, weights):
    """|sum_b w_b exp(i phi_b)|^2 per trial, for population weights w."""
    overlap = np.exp(1j * phases) @ weights
    return np.abs(overlap) ** 2
