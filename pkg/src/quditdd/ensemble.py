"""Monte Carlo ensemble averaging and the photon-count detection model.

One decay curve = one sequence family evaluated on a grid of total
durations.  Every grid point gets its own counter-based random stream
derived from (seed, point index), and all of a point's randomness is
drawn as fixed-order batches from that stream:

    1. quasi-static offsets          (trials,)      if sigma > 0
    2. harmonic phases               (trials,)      per random-phase harmonic, spec order
    3. fractional pulse-angle errors (trials, n_pulses)   if pulse_error set
    4. detection bright/dark uniform (trials,)      if detection set
    5. detection count uniform       (trials,)      if detection set

Points are the unit of parallel work, so results are bit-identical for
any thread count.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import _kernels
from .core import LevelSystem, PureState
from .noise import NoiseSpec
from .sequences import (
    SequenceSpec,
    build_bare_wait,
    build_cyclic_mldd,
    build_mldd,
    build_ramsey,
)
from .evolution import event_table

__all__ = [
    "SequenceFamily",
    "mldd_family",
    "cyclic_family",
    "ramsey_family",
    "DetectionModel",
    "detection_error_rates",
    "simulate_detection",
    "DecayCurve",
    "monte_carlo_curve",
    "write_curve_csv",
    "read_curve_csv",
    "CSV_COLUMNS",
]


@dataclass(frozen=True)
class SequenceFamily:
    """A sequence protocol parameterized by total duration.

    kind "mldd" with repetitions 0 degenerates to bare free evolution,
    so a repetition sweep over {0, 1, 2, 4} is a single family kind.
    """

    kind: str  # mldd | cyclic | ramsey
    repetitions: int = 0
    levels: tuple[int, ...] = (0, 1, 2)

    def __post_init__(self) -> None:
        if self.kind not in ("mldd", "cyclic", "ramsey"):
            raise ValueError(f"unknown sequence family {self.kind!r}")
        if self.repetitions < 0:
            raise ValueError("repetitions must be non-negative")
        if self.kind == "mldd" and self.repetitions > 0 and len(self.levels) != 3:
            raise ValueError("three-level decoupling needs exactly three levels")
        if self.kind == "ramsey" and len(self.levels) != 2:
            raise ValueError("ramsey needs a transition pair")
        if self.kind == "cyclic":
            if self.repetitions < 1:
                raise ValueError("cyclic decoupling needs repetitions >= 1")
            if self.levels != tuple(range(len(self.levels))):
                raise ValueError("cyclic decoupling acts on levels 0..d-1")

    def build(self, total_duration: float) -> SequenceSpec:
        if self.kind == "ramsey":
            return build_ramsey(self.levels[0], self.levels[1], total_duration)
        if self.kind == "cyclic":
            return build_cyclic_mldd(
                len(self.levels), total_duration / (len(self.levels) * self.repetitions),
                self.repetitions,
            )
        if self.repetitions == 0:
            return build_bare_wait(total_duration)
        return build_mldd(self.levels, total_duration / (3 * self.repetitions), self.repetitions)

    def default_label(self) -> str:
        if self.kind == "ramsey":
            return f"ramsey{self.levels[0]}{self.levels[1]}"
        if self.kind == "cyclic":
            return f"cyclic{len(self.levels)}"
        return "mldd" if self.repetitions else "bare"


def mldd_family(repetitions: int, levels: tuple[int, int, int] = (0, 1, 2)) -> SequenceFamily:
    if repetitions == 0:
        return SequenceFamily("mldd", 0)
    return SequenceFamily("mldd", repetitions, levels)


def cyclic_family(dim: int, repetitions: int) -> SequenceFamily:
    return SequenceFamily("cyclic", repetitions, tuple(range(dim)))


def ramsey_family(i: int, j: int) -> SequenceFamily:
    return SequenceFamily("ramsey", 0, (i, j))


@dataclass(frozen=True)
class DetectionModel:
    """Threshold discrimination of Poisson photon counts."""

    bright_mean: float
    dark_mean: float
    threshold: int

    def __post_init__(self) -> None:
        if not self.bright_mean > self.dark_mean >= 0.0:
            raise ValueError("need bright_mean > dark_mean >= 0")
        if self.threshold < 0 or int(self.threshold) != self.threshold:
            raise ValueError("threshold must be a non-negative integer")


def detection_error_rates(model: DetectionModel) -> tuple[float, float]:
    """Exact misclassification probabilities (false_dark, false_bright).

    An outcome is read bright iff counts > threshold, so
    false_dark  = P(Poisson(bright_mean) <= threshold) and
    false_bright = P(Poisson(dark_mean)  >  threshold).
    """
    false_dark = float(stats.poisson.cdf(model.threshold, model.bright_mean))
    false_bright = float(stats.poisson.sf(model.threshold, model.dark_mean))
    return false_dark, false_bright


def _poisson_cdf_table(mean: float) -> np.ndarray:
    """Cumulative Poisson probabilities out to where the CDF reaches 1 - 1e-16."""
    if mean < 0.0:
        raise ValueError("Poisson mean must be non-negative")
    if mean == 0.0:
        return np.ones(1)
    hi = int(np.ceil(mean + 40.0 * np.sqrt(mean) + 40.0))
    cdf = stats.poisson.cdf(np.arange(hi + 1), mean)
    cut = int(np.searchsorted(cdf, 1.0 - 1e-16))
    return cdf[: cut + 1]


def _sample_counts(table: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Exact inversion sampling of counts from a cumulative table."""
    idx = np.searchsorted(table, u, side="right")
    return np.minimum(idx, len(table) - 1)


def simulate_detection(
    p_retrieve: float, model: DetectionModel, rng: np.random.Generator
) -> tuple[bool, int]:
    """One detection event: (read bright?, photon counts).

    With probability ``p_retrieve`` counts are Poisson(bright_mean),
    otherwise Poisson(dark_mean); the outcome is bright iff
    counts > threshold.
    """
    if not 0.0 <= p_retrieve <= 1.0:
        raise ValueError("retrieval probability must lie in [0, 1]")
    bright = rng.random() < p_retrieve
    mean = model.bright_mean if bright else model.dark_mean
    counts = int(_sample_counts(_poisson_cdf_table(mean), np.array([rng.random()]))[0])
    return counts > model.threshold, counts


@dataclass(frozen=True)
class DecayCurve:
    """One simulated decay curve with its reproducibility metadata."""

    t_seconds: np.ndarray
    fidelity: np.ndarray
    stderr: np.ndarray
    repetitions: int
    state_label: str
    trials: int
    seed: int

    def __post_init__(self) -> None:
        t = np.asarray(self.t_seconds, dtype=float)
        if t.size == 0:
            raise ValueError("curve needs at least one point")
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("time grid must be strictly increasing")


def _point_stream(seed: int, point: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(point,)))
    )


def _resolve_engine(engine, family, system, prepared, measured, pulse_error):
    analytic_ok = (
        family.kind == "mldd"
        and pulse_error is None
        and measured is None
        and (family.repetitions == 0 or (system.dim == 3 and family.levels == (0, 1, 2)))
    )
    if engine == "auto":
        return "analytic" if analytic_ok else "unitary"
    if engine == "analytic" and not analytic_ok:
        raise ValueError("analytic engine unavailable for this configuration")
    if engine not in ("analytic", "unitary"):
        raise ValueError(f"unknown engine {engine!r}")
    return engine


def monte_carlo_curve(
    family: SequenceFamily,
    system: LevelSystem,
    noise: NoiseSpec,
    prepared: PureState,
    t_grid,
    trials: int,
    seed: int,
    *,
    detection: DetectionModel | None = None,
    pulse_error: float | None = None,
    engine: str = "auto",
    threads: int = 1,
    measured: PureState | None = None,
    label: str | None = None,
) -> DecayCurve:
    """Ensemble-averaged retrieval fidelity over a duration grid.

    ``measured`` is the state whose population is read out; it defaults
    to ``prepared`` except for Ramsey families, where the natural
    observable is the population of the upper transition level.  The
    analytic engine (closed-form branch phases) is chosen automatically
    when it is exactly applicable; pass engine="unitary" to force exact
    propagation or "analytic" to require the closed form.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0:
        raise ValueError("empty duration grid")
    if np.any(np.diff(t_grid) <= 0.0):
        raise ValueError("duration grid must be strictly increasing")
    if trials < 2:
        raise ValueError("need at least two trials for an error estimate")
    if prepared.dim != system.dim:
        raise ValueError("prepared state does not match the system dimension")
    if threads < 1:
        raise ValueError("threads must be >= 1")

    picked = _resolve_engine(engine, family, system, prepared, measured, pulse_error)
    if measured is None and family.kind == "ramsey":
        measured = PureState.basis(system.dim, family.levels[1])
    meas_vec = (measured or prepared).amplitudes
    deltas = system.sensitivity_array()
    weights = prepared.populations()
    sigma = noise.quasi_static.sigma_tesla if noise.quasi_static is not None else 0.0
    amps = np.array([h.amplitude_tesla for h in noise.harmonics])
    omegas = np.array([2.0 * np.pi * h.frequency_hz for h in noise.harmonics])
    n_pulses = family.build(float(t_grid[-1])).n_pulses if pulse_error is not None else 0
    if detection is not None:
        bright_table = _poisson_cdf_table(detection.bright_mean)
        dark_table = _poisson_cdf_table(detection.dark_mean)

    def run_point(p: int) -> tuple[float, float]:
        total = float(t_grid[p])
        rng = _point_stream(seed, p)
        offsets = rng.normal(0.0, sigma, trials) if sigma > 0.0 else np.zeros(trials)
        alphas = np.empty((trials, len(noise.harmonics)))
        for k, h in enumerate(noise.harmonics):
            alphas[:, k] = rng.uniform(0.0, 2.0 * np.pi, trials) if h.phase is None else h.phase
        angle_errors = (
            rng.normal(0.0, pulse_error, (trials, n_pulses)) if pulse_error is not None else None
        )
        if picked == "analytic":
            if family.repetitions == 0:
                phases = _kernels.bare_phase_batch(total, deltas, offsets, amps, omegas, alphas)
            else:
                phases = _kernels.mldd_phase_batch(
                    total, family.repetitions, deltas, offsets, amps, omegas, alphas
                )
            fid = _kernels.fidelity_from_phases(phases, weights)
        else:
            table = event_table(family.build(total))
            psi = _kernels.propagate_batch(
                *table, deltas, prepared.amplitudes, offsets, amps, omegas, alphas,
                angle_errors=angle_errors,
            )
            fid = np.abs(psi @ np.conj(meas_vec)) ** 2
        if detection is None:
            return float(fid.mean()), float(fid.std(ddof=1) / np.sqrt(trials))
        u_bright = rng.random(trials)
        u_counts = rng.random(trials)
        counts = np.where(
            u_bright < fid,
            _sample_counts(bright_table, u_counts),
            _sample_counts(dark_table, u_counts),
        )
        observed = counts > detection.threshold
        p_hat = float(observed.mean())
        return p_hat, float(np.sqrt(p_hat * (1.0 - p_hat) / trials))

    if threads == 1:
        results = [run_point(p) for p in range(t_grid.size)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_point, range(t_grid.size)))
    fidelity = np.array([r[0] for r in results])
    stderr = np.array([r[1] for r in results])
    return DecayCurve(
        t_seconds=t_grid,
        fidelity=fidelity,
        stderr=stderr,
        repetitions=family.repetitions,
        state_label=label if label is not None else family.default_label(),
        trials=trials,
        seed=seed,
    )


CSV_COLUMNS = ("T_seconds", "fidelity", "stderr", "N", "state_label", "trials", "seed")


def write_curve_csv(path, curve: DecayCurve, metadata: dict | None = None) -> None:
    """Write one curve; metadata key/value pairs are echoed as # comments."""
    buf = io.StringIO()
    for key in sorted(metadata or {}):
        buf.write(f"# {key}: {metadata[key]}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for p in range(curve.t_seconds.size):
        writer.writerow(
            [
                repr(float(curve.t_seconds[p])),
                repr(float(curve.fidelity[p])),
                repr(float(curve.stderr[p])),
                curve.repetitions,
                curve.state_label,
                curve.trials,
                curve.seed,
            ]
        )
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def read_curve_csv(path) -> tuple[DecayCurve, dict]:
    """Read a curve written by write_curve_csv; returns (curve, metadata)."""
    metadata: dict[str, str] = {}
    rows = []
    with open(path, newline="") as fh:
        data_lines = []
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                metadata[key.strip()] = value.strip()
            else:
                data_lines.append(line)
    reader = csv.DictReader(data_lines)
    if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV columns {reader.fieldnames!r} in {path}")
    for row in reader:
        rows.append(row)
    if not rows:
        raise ValueError(f"no data rows in {path}")
    first = rows[0]
    for row in rows:
        if (row["N"], row["state_label"], row["trials"], row["seed"]) != (
            first["N"],
            first["state_label"],
            first["trials"],
            first["seed"],
        ):
            raise ValueError(f"{path} mixes rows from different curves")
    return (
        DecayCurve(
            t_seconds=np.array([float(r["T_seconds"]) for r in rows]),
            fidelity=np.array([float(r["fidelity"]) for r in rows]),
            stderr=np.array([float(r["stderr"]) for r in rows]),
            repetitions=int(first["N"]),
            state_label=first["state_label"],
            trials=int(first["trials"]),
            seed=int(first["seed"]),
        ),
        metadata,
    )
