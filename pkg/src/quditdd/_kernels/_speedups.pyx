# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled batch kernels; contracts identical to ``_fallback``.

Trials run in a tight C loop with the GIL released, so the thread pool
in the ensemble module gets real parallelism from this backend.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()

OCCUPANCY = np.array([[1, 0, 2], [0, 2, 1], [2, 1, 0]], dtype=np.intp)

cdef long _OCC[3][3]
_OCC[0][0], _OCC[0][1], _OCC[0][2] = 1, 0, 2
_OCC[1][0], _OCC[1][1], _OCC[1][2] = 0, 2, 1
_OCC[2][0], _OCC[2][1], _OCC[2][2] = 2, 1, 0


def propagate_batch(kind, ei, ej, ea, eb, deltas, psi0, offsets, amps, omegas, alphas,
                    angle_errors=None):
    """Propagate one initial state through an event table for a trial batch.

    Returns the (n, d) array of final state vectors.
    """
    cdef const signed char[:] kind_v = np.ascontiguousarray(kind, dtype=np.int8)
    cdef const int[:] ei_v = np.ascontiguousarray(ei, dtype=np.int32)
    cdef const int[:] ej_v = np.ascontiguousarray(ej, dtype=np.int32)
    cdef const double[:] ea_v = np.ascontiguousarray(ea, dtype=np.float64)
    cdef const double[:] eb_v = np.ascontiguousarray(eb, dtype=np.float64)
    cdef const double[:] deltas_v = np.ascontiguousarray(deltas, dtype=np.float64)
    cdef const double[:] offsets_v = np.ascontiguousarray(offsets, dtype=np.float64)
    cdef const double[:] amps_v = np.ascontiguousarray(amps, dtype=np.float64)
    cdef const double[:] omegas_v = np.ascontiguousarray(omegas, dtype=np.float64)
    cdef const double[:, :] alphas_v = np.ascontiguousarray(alphas, dtype=np.float64)

    cdef Py_ssize_t n = offsets_v.shape[0]
    cdef Py_ssize_t d = deltas_v.shape[0]
    cdef Py_ssize_t n_events = kind_v.shape[0]
    cdef Py_ssize_t nh = amps_v.shape[0]

    psi_arr = np.tile(np.ascontiguousarray(psi0, dtype=np.complex128), (n, 1))
    cdef double complex[:, :] psi = psi_arr

    cdef bint have_err = angle_errors is not None
    cdef const double[:, :] err_v
    if have_err:
        err_v = np.ascontiguousarray(angle_errors, dtype=np.float64)
    else:
        err_v = np.zeros((1, 1))

    cdef Py_ssize_t t, r, h, b, pulse_idx
    cdef Py_ssize_t i, j
    cdef double t0, t1, phi, w, half, c, s, aerr
    cdef double complex ci, cj, em, factor

    with nogil:
        for t in range(n):
            pulse_idx = 0
            for r in range(n_events):
                if kind_v[r] == 0:
                    t0 = ea_v[r]
                    t1 = eb_v[r]
                    if t1 == t0:
                        continue
                    phi = offsets_v[t] * (t1 - t0)
                    for h in range(nh):
                        w = omegas_v[h]
                        phi = phi + (amps_v[h] / w) * (
                            sin(w * t1 + alphas_v[t, h]) - sin(w * t0 + alphas_v[t, h])
                        )
                    for b in range(d):
                        factor = cos(phi * deltas_v[b]) - 1j * sin(phi * deltas_v[b])
                        psi[t, b] = psi[t, b] * factor
                else:
                    i = ei_v[r]
                    j = ej_v[r]
                    if have_err:
                        half = 0.5 * ea_v[r] * (1.0 + err_v[t, pulse_idx])
                    else:
                        half = 0.5 * ea_v[r]
                    c = cos(half)
                    s = sin(half)
                    em = cos(eb_v[r]) - 1j * sin(eb_v[r])
                    ci = psi[t, i]
                    cj = psi[t, j]
                    psi[t, i] = c * ci - 1j * s * em * cj
                    psi[t, j] = -1j * s * (cos(eb_v[r]) + 1j * sin(eb_v[r])) * ci + c * cj
                    pulse_idx += 1
    return psi_arr


def mldd_phase_batch(total_duration, repetitions, deltas, offsets, amps, omegas, alphas):
    """Closed-form three-level decoupling phases, (n, 3), not gauge fixed."""
    cdef const double[:] deltas_v = np.ascontiguousarray(deltas, dtype=np.float64)
    cdef const double[:] offsets_v = np.ascontiguousarray(offsets, dtype=np.float64)
    cdef const double[:] amps_v = np.ascontiguousarray(amps, dtype=np.float64)
    cdef const double[:] omegas_v = np.ascontiguousarray(omegas, dtype=np.float64)
    cdef const double[:, :] alphas_v = np.ascontiguousarray(alphas, dtype=np.float64)

    cdef Py_ssize_t n = offsets_v.shape[0]
    cdef Py_ssize_t nh = amps_v.shape[0]
    cdef Py_ssize_t nseg = 3 * int(repetitions)
    cdef double total = float(total_duration)
    cdef double tau = total / nseg

    out = np.zeros((n, 3))
    cdef double[:, :] phases = out

    cdef Py_ssize_t t, seg, h, b, s3
    cdef double t0, t1, phi, w
    cdef double tot[3]

    with nogil:
        for t in range(n):
            tot[0] = 0.0
            tot[1] = 0.0
            tot[2] = 0.0
            for seg in range(nseg):
                t0 = seg * tau
                t1 = (seg + 1) * tau
                phi = offsets_v[t] * (t1 - t0)
                for h in range(nh):
                    w = omegas_v[h]
                    phi = phi + (amps_v[h] / w) * (
                        sin(w * t1 + alphas_v[t, h]) - sin(w * t0 + alphas_v[t, h])
                    )
                tot[seg % 3] += phi
            for s3 in range(3):
                for b in range(3):
                    phases[t, b] -= deltas_v[_OCC[s3][b]] * tot[s3]
    return out


def bare_phase_batch(total_duration, deltas, offsets, amps, omegas, alphas):
    """Free-evolution phases, (n, d), not gauge fixed."""
    cdef const double[:] deltas_v = np.ascontiguousarray(deltas, dtype=np.float64)
    cdef const double[:] offsets_v = np.ascontiguousarray(offsets, dtype=np.float64)
    cdef const double[:] amps_v = np.ascontiguousarray(amps, dtype=np.float64)
    cdef const double[:] omegas_v = np.ascontiguousarray(omegas, dtype=np.float64)
    cdef const double[:, :] alphas_v = np.ascontiguousarray(alphas, dtype=np.float64)

    cdef Py_ssize_t n = offsets_v.shape[0]
    cdef Py_ssize_t d = deltas_v.shape[0]
    cdef Py_ssize_t nh = amps_v.shape[0]
    cdef double total = float(total_duration)

    out = np.empty((n, d))
    cdef double[:, :] phases = out

    cdef Py_ssize_t t, h, b
    cdef double phi, w

    with nogil:
        for t in range(n):
            phi = offsets_v[t] * total
            for h in range(nh):
                w = omegas_v[h]
                phi = phi + (amps_v[h] / w) * (
                    sin(w * total + alphas_v[t, h]) - sin(alphas_v[t, h])
                )
            for b in range(d):
                phases[t, b] = -phi * deltas_v[b]
    return out


def fidelity_from_phases(phases, weights):
    """|sum_b w_b exp(i phi_b)|^2 per trial, for population weights w."""
    cdef const double[:, :] phases_v = np.ascontiguousarray(phases, dtype=np.float64)
    cdef const double[:] weights_v = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t n = phases_v.shape[0]
    cdef Py_ssize_t d = phases_v.shape[1]

    out = np.empty(n)
    cdef double[:] fid = out

    cdef Py_ssize_t t, b
    cdef double re, im

    with nogil:
        for t in range(n):
            re = 0.0
            im = 0.0
            for b in range(d):
                re += weights_v[b] * cos(phases_v[t, b])
                im += weights_v[b] * sin(phases_v[t, b])
            fid[t] = re * re + im * im
    return out
