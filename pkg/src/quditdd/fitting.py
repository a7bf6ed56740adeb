"""Decay-model evaluation and the estimation toolkit.

The decay model for a repetition count N at total duration T is

    F(T) = exp(-(T/T2)^2) * g^N * [d(T) - floor] + floor

where d(T) is the harmonic-dephasing coherence factor averaged over the
unsynchronized harmonic phases alpha by uniform midpoint quadrature
(spectrally accurate here because d is a trigonometric polynomial in
each alpha), g is the per-repetition pulse contrast, and floor is the
long-time fidelity of the prepared superposition (1/k for an equal
k-superposition).  The quasi-static field component is absorbed by the
Gaussian envelope, which is why T2 is a per-dataset parameter.

Fitting is weighted least squares (weights 1/stderr^2) over all
datasets jointly: T2 per dataset, a single shared contrast g, and one
shared amplitude per modeled harmonic frequency.  The optimizer is a
multi-start Nelder-Mead simplex over transformed parameters (log T2,
logit g, log amplitude) followed by BFGS refinement; uncertainties come
from a nonparametric bootstrap over points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy import optimize
from scipy.special import expit, logit
from scipy.stats import qmc

from . import _kernels
from .core import LevelSystem

__all__ = [
    "FitError",
    "DecayModelParams",
    "model_fidelity",
    "DecayDataset",
    "FitResult",
    "fit_joint",
    "fit_ramsey",
    "fit_rb",
]

DEFAULT_ALPHA_NODES = 64
CONVERGENCE_RTOL = 1e-9


class FitError(RuntimeError):
    """Raised when a fit cannot produce trustworthy parameters."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class DecayModelParams:
    """Parameters of the decay model.

    ``pair`` selects an equal 2-superposition of the named levels
    (floor 1/2); None means the equal superposition of all system
    levels (floor 1/3 for a qutrit).
    """

    t2_seconds: float
    contrast_g: float
    amplitudes_tesla: tuple[float, ...]
    frequencies_hz: tuple[float, ...]
    pair: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if not self.t2_seconds > 0.0:
            raise ValueError("T2 must be positive (np.inf allowed)")
        if not 0.0 < self.contrast_g <= 1.0:
            raise ValueError("contrast must lie in (0, 1]")
        if len(self.amplitudes_tesla) != len(self.frequencies_hz):
            raise ValueError("one amplitude per frequency required")
        if any(a < 0.0 for a in self.amplitudes_tesla):
            raise ValueError("amplitudes must be non-negative")
        if any(f <= 0.0 for f in self.frequencies_hz):
            raise ValueError("frequencies must be positive")
        if self.pair is not None and (
            len(self.pair) != 2 or self.pair[0] == self.pair[1]
        ):
            raise ValueError("pair must name two distinct levels")

    def floor(self, dim: int) -> float:
        return 0.5 if self.pair is not None else 1.0 / dim


def _alpha_grid(n_harmonics: int, nodes: int) -> np.ndarray:
    """Midpoint quadrature grid over [0, 2pi)^n_harmonics, shape (M, nh)."""
    if n_harmonics == 0:
        return np.zeros((1, 0))
    axis = 2.0 * np.pi * (np.arange(nodes) + 0.5) / nodes
    mesh = np.meshgrid(*([axis] * n_harmonics), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _weight_levels(pair, dim: int):
    levels = tuple(range(dim)) if pair is None else tuple(pair)
    weights = np.zeros(dim)
    weights[list(levels)] = 1.0 / len(levels)
    return levels, weights


def _coherence_d(t: float, repetitions: int, system: LevelSystem, amplitudes, omegas,
                 weights, alphas) -> float:
    deltas = system.sensitivity_array()
    zeros = np.zeros(alphas.shape[0])
    amps = np.asarray(amplitudes, dtype=float)
    if repetitions == 0:
        phases = _kernels.bare_phase_batch(t, deltas, zeros, amps, omegas, alphas)
    else:
        phases = _kernels.mldd_phase_batch(t, repetitions, deltas, zeros, amps, omegas, alphas)
    return float(_kernels.fidelity_from_phases(phases, weights).mean())


def model_fidelity(
    t,
    repetitions: int,
    params: DecayModelParams,
    system: LevelSystem,
    alpha_nodes: int = DEFAULT_ALPHA_NODES,
):
    """Evaluate the decay model at duration(s) ``t`` (seconds).

    Scalar in, scalar out; array in, array out.
    """
    if repetitions < 0:
        raise ValueError("repetitions must be non-negative")
    if params.pair is not None and max(params.pair) >= system.dim:
        raise ValueError("pair names a level outside the system")
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < 0.0):
        raise ValueError("durations must be non-negative")
    _, weights = _weight_levels(params.pair, system.dim)
    floor = params.floor(system.dim)
    alphas = _alpha_grid(len(params.frequencies_hz), alpha_nodes)
    omegas = 2.0 * np.pi * np.asarray(params.frequencies_hz, dtype=float)
    d_vals = np.array(
        [
            _coherence_d(
                ti, repetitions, system, params.amplitudes_tesla, omegas, weights, alphas
            )
            for ti in t_arr
        ]
    )
    env = np.exp(-((t_arr / params.t2_seconds) ** 2))
    out = env * params.contrast_g**repetitions * (d_vals - floor) + floor
    return out if np.ndim(t) else float(out[0])


@dataclass(frozen=True)
class DecayDataset:
    """One measured or simulated curve prepared for fitting."""

    t_seconds: np.ndarray
    fidelity: np.ndarray
    stderr: np.ndarray | None
    repetitions: int
    label: str = ""
    pair: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        t = np.asarray(self.t_seconds, dtype=float)
        y = np.asarray(self.fidelity, dtype=float)
        if t.shape != y.shape or t.ndim != 1:
            raise ValueError("t and fidelity must be matching vectors")
        if t.size < 4:
            raise ValueError("a dataset needs at least 4 points")
        object.__setattr__(self, "t_seconds", t)
        object.__setattr__(self, "fidelity", y)
        if self.stderr is not None:
            s = np.asarray(self.stderr, dtype=float)
            if s.shape != t.shape:
                raise ValueError("stderr length mismatch")
            object.__setattr__(self, "stderr", s)


@dataclass(frozen=True)
class FitResult:
    params: dict[str, float]
    stderr: dict[str, float]
    objective: float
    n_points: int
    bootstrap_samples: int
    converged: bool
    diagnostics: dict = field(default_factory=dict, repr=False)


def _weights_from_stderr(stderr, n: int) -> np.ndarray:
    if stderr is None:
        return np.ones(n)
    s = np.asarray(stderr, dtype=float)
    positive = s[s > 0.0]
    if positive.size == 0:
        return np.ones(n)
    s = np.where(s > 0.0, s, positive.min())
    return 1.0 / (s * s)


def _minimize(objective, theta0: np.ndarray):
    """Simplex then quadratic refinement; returns (theta, fval)."""
    res = optimize.minimize(
        objective,
        theta0,
        method="Nelder-Mead",
        options={"maxiter": 400 * max(1, theta0.size), "xatol": 1e-8, "fatol": 1e-12},
    )
    best_x, best_f = res.x, float(res.fun)
    try:
        res2 = optimize.minimize(objective, best_x, method="BFGS",
                                 options={"gtol": 1e-9, "maxiter": 200})
        if np.isfinite(res2.fun) and res2.fun <= best_f:
            best_x, best_f = res2.x, float(res2.fun)
    except (ValueError, FloatingPointError):
        pass
    return best_x, best_f


def _multistart(objective, starts: np.ndarray):
    best = (None, np.inf)
    per_start = []
    for theta0 in starts:
        x, f = _minimize(objective, np.asarray(theta0, dtype=float))
        per_start.append(f)
        if f < best[1]:
            best = (x, f)
    if best[0] is None or not np.isfinite(best[1]):
        raise FitError("all optimizer starts failed", {"per_start": per_start})
    # convergence: one more simplex restart from the winner must not
    # improve the objective by more than a relative CONVERGENCE_RTOL
    x2, f2 = _minimize(objective, best[0])
    if f2 < best[1]:
        improvement = (best[1] - f2) / max(abs(best[1]), 1e-300)
        best = (x2, f2)
    else:
        improvement = 0.0
    converged = improvement < CONVERGENCE_RTOL or best[1] < 1e-20
    return best[0], best[1], converged, per_start


class _TraceObjective:
    """Wraps an objective, recording the running best value per call."""

    def __init__(self, fn):
        self.fn = fn
        self.trace: list[float] = []

    def __call__(self, theta):
        val = self.fn(theta)
        if not np.isfinite(val):
            val = 1e30
        self.trace.append(min(val, self.trace[-1]) if self.trace else val)
        return val


class _JointModel:
    """Precomputed quadrature geometry for the joint decay fit.

    The branch phases are linear in each harmonic amplitude, so the
    pairwise phase differences factor as dphi = sum_h A_h * G_h with G
    precomputed once per (dataset, point, pair, quadrature node); every
    objective evaluation is then a cosine over the cached tensors.
    """

    def __init__(self, datasets, system, frequencies_hz, alpha_nodes):
        self.datasets = list(datasets)
        self.system = system
        self.freqs = tuple(float(f) for f in frequencies_hz)
        self.omegas = 2.0 * np.pi * np.asarray(self.freqs)
        deltas = system.sensitivity_array()
        alphas = _alpha_grid(len(self.freqs), alpha_nodes)
        zeros = np.zeros(alphas.shape[0])
        self.g_tensors = []  # per dataset: (nh, nt, npairs, M)
        self.weight_info = []  # per dataset: (w2sum, pair_products, floor)
        self.pair_lists = []
        for ds in self.datasets:
            levels, weights = _weight_levels(ds.pair, system.dim)
            pairs = list(combinations(levels, 2))
            w2sum = float(np.sum(weights**2))
            wprod = np.array([weights[a] * weights[b] for a, b in pairs])
            floor = 0.5 if ds.pair is not None else 1.0 / system.dim
            g_h = np.zeros((len(self.freqs), ds.t_seconds.size, len(pairs), alphas.shape[0]))
            for h in range(len(self.freqs)):
                unit = np.zeros(len(self.freqs))
                unit[h] = 1.0
                for p, t in enumerate(ds.t_seconds):
                    if ds.repetitions == 0:
                        ph = _kernels.bare_phase_batch(
                            float(t), deltas, zeros, unit, self.omegas, alphas
                        )
                    else:
                        ph = _kernels.mldd_phase_batch(
                            float(t), ds.repetitions, deltas, zeros, unit, self.omegas, alphas
                        )
                    for q, (a, b) in enumerate(pairs):
                        g_h[h, p, q, :] = ph[:, a] - ph[:, b]
            self.g_tensors.append(g_h)
            self.weight_info.append((w2sum, wprod, floor))
            self.pair_lists.append(pairs)

    def curve(self, k: int, t2: float, g: float, amplitudes: np.ndarray) -> np.ndarray:
        ds = self.datasets[k]
        w2sum, wprod, floor = self.weight_info[k]
        if self.g_tensors[k].shape[0]:
            dphi = np.tensordot(amplitudes, self.g_tensors[k], axes=1)
            coh = np.cos(dphi).mean(axis=-1)  # (nt, npairs)
        else:
            coh = np.ones((ds.t_seconds.size, len(self.pair_lists[k])))
        d_vals = w2sum + 2.0 * coh @ wprod
        env = np.exp(-((ds.t_seconds / t2) ** 2))
        return env * g**ds.repetitions * (d_vals - floor) + floor


def _t2_guess(ds: DecayDataset, floor: float) -> float:
    y = ds.fidelity
    t = ds.t_seconds
    top = max(y[0] - floor, 1e-3)
    target = floor + top / math.e
    below = np.nonzero(y < target)[0]
    if below.size == 0 or below[0] == 0:
        return float(2.0 * t[-1])
    i = below[0]
    frac = (y[i - 1] - target) / max(y[i - 1] - y[i], 1e-12)
    return float(t[i - 1] + frac * (t[i] - t[i - 1]))


def fit_joint(
    datasets,
    system: LevelSystem,
    frequencies_hz=(),
    *,
    fix_contrast: float | None = None,
    fix_amplitudes=None,
    alpha_nodes: int = DEFAULT_ALPHA_NODES,
    n_starts: int = 8,
    bootstrap: int = 200,
    seed: int = 0,
    amplitude_guess: float | None = None,
) -> FitResult:
    """Joint weighted fit of the decay model across datasets.

    Per-dataset T2, one shared contrast g, one shared amplitude per
    entry of ``frequencies_hz``.  ``fix_contrast`` pins g;
    ``fix_amplitudes`` is an optional per-frequency sequence where a
    float pins that amplitude and None leaves it free.  Raises FitError
    on non-convergence or unidentifiable setups.
    """
    datasets = list(datasets)
    if not datasets:
        raise FitError("no datasets")
    for ds in datasets:
        if np.ptp(ds.fidelity) == 0.0:
            raise FitError(f"degenerate dataset {ds.label!r}: all fidelities equal")
    if fix_contrast is None and all(ds.repetitions == 0 for ds in datasets):
        raise FitError("contrast g is unidentifiable with only N=0 data; pass fix_contrast")
    freqs = tuple(float(f) for f in frequencies_hz)
    if fix_amplitudes is None:
        fix_amplitudes = (None,) * len(freqs)
    if len(fix_amplitudes) != len(freqs):
        raise FitError("fix_amplitudes must match frequencies_hz")

    model = _JointModel(datasets, system, freqs, alpha_nodes)
    weights = [_weights_from_stderr(ds.stderr, ds.t_seconds.size) for ds in datasets]
    free_amp_idx = [h for h, v in enumerate(fix_amplitudes) if v is None]
    n_t2 = len(datasets)
    fit_g = fix_contrast is None
    ndim = n_t2 + (1 if fit_g else 0) + len(free_amp_idx)

    max_gap = float(
        np.max(np.abs(np.subtract.outer(system.sensitivity_array(), system.sensitivity_array())))
    )
    if freqs and free_amp_idx and max_gap == 0.0:
        raise FitError("harmonic amplitudes are unidentifiable: all level sensitivities equal")

    def unpack(theta):
        # clip keeps optimizer excursions finite: exp(700) ~ 1e304 acts
        # as T2 = inf, exp(-50) as T2 = 0, both without float warnings
        t2s = np.exp(np.clip(theta[:n_t2], -50.0, 700.0))
        pos = n_t2
        if fit_g:
            g = float(expit(theta[pos]))
            pos += 1
        else:
            g = float(fix_contrast)
        amps = np.array([0.0 if v is None else float(v) for v in fix_amplitudes])
        for h, j in zip(free_amp_idx, range(pos, pos + len(free_amp_idx))):
            amps[h] = math.exp(theta[j])
        return t2s, g, amps

    def objective(theta):
        t2s, g, amps = unpack(theta)
        total = 0.0
        for k, ds in enumerate(datasets):
            resid = ds.fidelity - model.curve(k, t2s[k], g, amps)
            total += float(np.dot(weights[k] * resid, resid))
        return total

    floors = [info[2] for info in model.weight_info]
    t2_guesses = np.array([_t2_guess(ds, floors[k]) for k, ds in enumerate(datasets)])
    if amplitude_guess is None:
        amp_guesses = np.array([w / (2.0 * max_gap) for w in 2.0 * np.pi * np.asarray(freqs)]) \
            if freqs else np.zeros(0)
    else:
        amp_guesses = np.full(len(freqs), float(amplitude_guess))

    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0,)))
    sampler = qmc.LatinHypercube(d=ndim, seed=rng)
    unit = sampler.random(n=n_starts)
    lo = np.concatenate(
        [
            np.log(t2_guesses) - math.log(3.0),
            [logit(0.90)] if fit_g else [],
            [math.log(max(amp_guesses[h], 1e-15)) - math.log(6.0) for h in free_amp_idx],
        ]
    )
    hi = np.concatenate(
        [
            np.log(t2_guesses) + math.log(3.0),
            [logit(0.999)] if fit_g else [],
            [math.log(max(amp_guesses[h], 1e-15)) + math.log(6.0) for h in free_amp_idx],
        ]
    )
    starts = qmc.scale(unit, lo, hi)

    traced = _TraceObjective(objective)
    theta, fval, converged, per_start = _multistart(traced, starts)
    diagnostics = {
        "objective_trace": traced.trace,
        "per_start_objective": per_start,
        "n_evaluations": len(traced.trace),
    }
    if not converged:
        raise FitError("joint fit did not converge", diagnostics)

    t2s, g, amps = unpack(theta)
    labels = _unique_labels(datasets)
    params: dict[str, float] = {f"t2[{labels[k]}]": float(t2s[k]) for k in range(n_t2)}
    if fit_g:
        params["g"] = g
    for h in free_amp_idx:
        params[f"amp[{freqs[h]:g}Hz]"] = float(amps[h])

    stderr, n_ok = _bootstrap_joint(
        datasets, model, weights, theta, unpack, free_amp_idx, fit_g, labels, freqs,
        bootstrap, seed,
    )
    return FitResult(
        params=params,
        stderr=stderr,
        objective=fval,
        n_points=int(sum(ds.t_seconds.size for ds in datasets)),
        bootstrap_samples=n_ok,
        converged=True,
        diagnostics=diagnostics,
    )


def _unique_labels(datasets) -> list[str]:
    labels = []
    for k, ds in enumerate(datasets):
        base = ds.label or f"N{ds.repetitions}"
        labels.append(base if base not in labels else f"{base}#{k}")
    return labels


def _bootstrap_joint(datasets, model, weights, theta_hat, unpack, free_amp_idx, fit_g,
                     labels, freqs, n_resamples, seed):
    names = [f"t2[{labels[k]}]" for k in range(len(datasets))]
    if fit_g:
        names.append("g")
    names += [f"amp[{freqs[h]:g}Hz]" for h in free_amp_idx]
    if n_resamples <= 0:
        return {name: float("nan") for name in names}, 0
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(1,)))
    samples = []
    for _ in range(n_resamples):
        idx = [rng.integers(0, ds.t_seconds.size, ds.t_seconds.size) for ds in datasets]

        def objective(theta):
            t2s, g, amps = unpack(theta)
            total = 0.0
            for k, ds in enumerate(datasets):
                resid = ds.fidelity[idx[k]] - model.curve(k, t2s[k], g, amps)[idx[k]]
                total += float(np.dot(weights[k][idx[k]] * resid, resid))
            return total

        try:
            x, _ = _minimize(objective, theta_hat)
        except (ValueError, FloatingPointError):
            continue
        t2s, g, amps = unpack(x)
        vals = list(t2s)
        if fit_g:
            vals.append(g)
        vals += [amps[h] for h in free_amp_idx]
        if all(np.isfinite(vals)):
            samples.append(vals)
    if len(samples) < max(2, n_resamples // 2):
        raise FitError(
            f"bootstrap failed: only {len(samples)}/{n_resamples} resamples converged"
        )
    arr = np.array(samples)
    return {name: float(arr[:, j].std(ddof=1)) for j, name in enumerate(names)}, len(samples)


def _simple_bootstrap(t, y, weights, theta_hat, objective_factory, to_params, n_resamples, seed):
    """Shared bootstrap for the 1-dataset fitters; returns stderr dict and count."""
    if n_resamples <= 0:
        return None, 0
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(1,)))
    rows = []
    for _ in range(n_resamples):
        idx = rng.integers(0, t.size, t.size)
        try:
            x, _ = _minimize(objective_factory(idx), theta_hat)
        except (ValueError, FloatingPointError):
            continue
        vals = to_params(x)
        if all(np.isfinite(list(vals.values()))):
            rows.append(vals)
    if len(rows) < max(2, n_resamples // 2):
        raise FitError(f"bootstrap failed: only {len(rows)}/{n_resamples} resamples converged")
    keys = rows[0].keys()
    return {k: float(np.std([r[k] for r in rows], ddof=1)) for k in keys}, len(rows)


def fit_ramsey(t, signal, stderr=None, *, bootstrap: int = 200, seed: int = 0) -> FitResult:
    """Fit a Gaussian coherence envelope a*exp(-(t/T2)^2) + b.

    Raises FitError when the data cannot identify T2 (flat signal).
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(signal, dtype=float)
    if t.size < 4:
        raise FitError("need at least 4 points")
    if np.ptp(y) == 0.0:
        raise FitError("degenerate data: flat signal, T2 unidentifiable")
    w = _weights_from_stderr(stderr, t.size)

    def model(theta, ts):
        a, b, log_t2 = theta
        t2 = math.exp(min(max(log_t2, -50.0), 700.0))
        return a * np.exp(-((ts / t2) ** 2)) + b

    def make_objective(idx=None):
        if idx is None:
            tt, yy, ww = t, y, w
        else:
            tt, yy, ww = t[idx], y[idx], w[idx]

        def obj(theta):
            resid = yy - model(theta, tt)
            return float(np.dot(ww * resid, resid))

        return obj

    b0 = float(y[-1])
    a0 = float(y[0] - b0) or float(np.ptp(y))
    span = float(t[-1] - t[0]) or 1.0
    starts = np.array(
        [[a0, b0, math.log(span * s)] for s in (0.15, 0.4, 1.0, 2.5)]
    )
    traced = _TraceObjective(make_objective())
    theta, fval, converged, per_start = _multistart(traced, starts)
    diagnostics = {"objective_trace": traced.trace, "per_start_objective": per_start}

    flat = float(np.dot(w * (y - np.average(y, weights=w)), y - np.average(y, weights=w)))
    if flat - fval <= 1e-6 * flat:
        raise FitError("degenerate data: no decay beyond a constant", diagnostics)
    if not converged:
        raise FitError("ramsey fit did not converge", diagnostics)
    t2 = math.exp(min(max(theta[2], -50.0), 700.0))
    if t2 > 100.0 * span:
        raise FitError("T2 ran away beyond the sampled window", diagnostics)

    def to_params(x):
        return {
            "amplitude": float(x[0]),
            "offset": float(x[1]),
            "t2_seconds": math.exp(min(max(x[2], -50.0), 700.0)),
        }

    stderr_map, n_ok = _simple_bootstrap(t, y, w, theta, make_objective, to_params,
                                         bootstrap, seed)
    return FitResult(
        params=to_params(theta),
        stderr=stderr_map or {k: float("nan") for k in ("amplitude", "offset", "t2_seconds")},
        objective=fval,
        n_points=int(t.size),
        bootstrap_samples=n_ok,
        converged=True,
        diagnostics=diagnostics,
    )


def fit_rb(lengths, survival, stderr=None, *, bootstrap: int = 200, seed: int = 0) -> FitResult:
    """Fit the benchmarking decay 1/2 + (1/2)(1-2*eps_im)(1-2*eps)^l.

    Both error parameters are constrained to [0, 1/2) through a logit
    transform.  Returns eps (per-gate) and eps_im (preparation and
    measurement imperfection) with bootstrap uncertainties.
    """
    l_arr = np.asarray(lengths, dtype=float)
    y = np.asarray(survival, dtype=float)
    if np.unique(l_arr).size < 3:
        raise FitError("need at least 3 distinct sequence lengths")
    if np.any((y < 0.0) | (y > 1.0)):
        raise FitError("survival probabilities must lie in [0, 1]")
    w = _weights_from_stderr(stderr, l_arr.size)

    def model(theta, ls):
        eps = 0.5 * expit(theta[0])
        eps_im = 0.5 * expit(theta[1])
        return 0.5 + 0.5 * (1.0 - 2.0 * eps_im) * (1.0 - 2.0 * eps) ** ls

    def make_objective(idx=None):
        if idx is None:
            ll, yy, ww = l_arr, y, w
        else:
            ll, yy, ww = l_arr[idx], y[idx], w[idx]

        def obj(theta):
            resid = yy - model(theta, ll)
            return float(np.dot(ww * resid, resid))

        return obj

    # log-linear regression start: ln(y - 1/2) = ln a + l ln r
    excess = y - 0.5
    good = excess > 1e-6
    if good.sum() >= 2:
        slope, intercept = np.polyfit(l_arr[good], np.log(excess[good]), 1)
        r0 = min(max(math.exp(slope), 1e-6), 1.0 - 1e-9)
        a0 = min(max(math.exp(intercept), 1e-6), 0.5 - 1e-9)
    else:
        r0, a0 = 0.99, 0.45
    eps0 = 0.5 * (1.0 - r0)
    eps_im0 = 0.5 - a0
    theta0 = np.array(
        [
            logit(np.clip(2.0 * eps0, 1e-12, 1.0 - 1e-12)),
            logit(np.clip(2.0 * eps_im0, 1e-12, 1.0 - 1e-12)),
        ]
    )
    starts = theta0[None, :] + np.array(
        [[0.0, 0.0], [-3.0, 0.0], [3.0, 0.0], [0.0, -3.0], [-6.0, -6.0]]
    )
    traced = _TraceObjective(make_objective())
    theta, fval, converged, per_start = _multistart(traced, starts)
    diagnostics = {"objective_trace": traced.trace, "per_start_objective": per_start}
    if not converged:
        raise FitError("rb fit did not converge", diagnostics)

    def to_params(x):
        return {
            "epsilon": float(0.5 * expit(x[0])),
            "epsilon_im": float(0.5 * expit(x[1])),
        }

    stderr_map, n_ok = _simple_bootstrap(l_arr, y, w, theta, make_objective, to_params,
                                         bootstrap, seed)
    return FitResult(
        params=to_params(theta),
        stderr=stderr_map or {"epsilon": float("nan"), "epsilon_im": float("nan")},
        objective=fval,
        n_points=int(l_arr.size),
        bootstrap_samples=n_ok,
        converged=True,
        diagnostics=diagnostics,
    )
