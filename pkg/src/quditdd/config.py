"""Experiment configuration: strict YAML schema with explicit units.

Every physical quantity in a config document is either a bare number
(interpreted as SI base units) or a string with an explicit unit, e.g.
"13.23 mT", "150 Hz", "1.04 ms".  Unknown keys are rejected by name;
silent unit mistakes are the dominant failure mode this module exists
to prevent.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np
import yaml

from . import breit_rabi
from .core import LevelSystem, PureState
from .ensemble import DetectionModel, SequenceFamily, mldd_family, cyclic_family, ramsey_family
from .noise import HarmonicComponent, NoiseSpec, QuasiStaticComponent

__all__ = [
    "ConfigError",
    "parse_quantity",
    "auto_sigma",
    "ExperimentConfig",
    "load_config",
    "parse_config",
]


class ConfigError(ValueError):
    """Invalid configuration; message names the offending key."""


_UNITS = {
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9},
    "field": {"T": 1.0, "mT": 1e-3, "uT": 1e-6, "nT": 1e-9, "pT": 1e-12},
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9},
}

_QUANTITY_RE = re.compile(r"^\s*([-+0-9.eE]+)\s*([a-zA-Z]+)\s*$")


def parse_quantity(value, kind: str, key: str = "value") -> float:
    """Parse a number-with-unit string (or bare number) to SI units."""
    units = _UNITS[kind]
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected a quantity, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"{key}: expected a number or '<number> <unit>' string")
    m = _QUANTITY_RE.match(value)
    if not m:
        raise ConfigError(f"{key}: cannot parse quantity {value!r}")
    number, unit = m.groups()
    if unit not in units:
        allowed = ", ".join(sorted(units))
        raise ConfigError(f"{key}: unit {unit!r} is not a {kind} unit (allowed: {allowed})")
    try:
        return float(number) * units[unit]
    except ValueError:
        raise ConfigError(f"{key}: cannot parse number {number!r}") from None


def _require_keys(mapping: dict, allowed: set[str], required: set[str], where: str) -> None:
    if not isinstance(mapping, dict):
        raise ConfigError(f"{where}: expected a mapping")
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown key {sorted(unknown)[0]!r}")
    missing = required - set(mapping)
    if missing:
        raise ConfigError(f"{where}: missing required key {sorted(missing)[0]!r}")


def auto_sigma(system: LevelSystem, anchor_t2_seconds: float) -> float:
    """Quasi-static field std that makes the fastest-dephasing pair's
    Gaussian coherence time equal the anchor value."""
    deltas = system.sensitivity_array()
    max_gap = float(np.max(np.abs(np.subtract.outer(deltas, deltas))))
    if max_gap == 0.0:
        raise ConfigError("noise.anchor_t2: all level sensitivities are equal; cannot calibrate")
    if anchor_t2_seconds <= 0.0:
        raise ConfigError("noise.anchor_t2: must be positive")
    return float(np.sqrt(2.0) / (max_gap * anchor_t2_seconds))


def _parse_levels(raw, where: str) -> tuple[tuple[float, float], ...]:
    if not isinstance(raw, list) or len(raw) < 2:
        raise ConfigError(f"{where}: expected a list of at least two (F, mF) pairs")
    triples = []
    for i, item in enumerate(raw):
        key = f"{where}[{i}]"
        if isinstance(item, str):
            parts = item.split(",")
        elif isinstance(item, list):
            parts = item
        else:
            raise ConfigError(f"{key}: expected 'F,mF' or [F, mF]")
        if len(parts) != 2:
            raise ConfigError(f"{key}: expected exactly two numbers (F, mF)")
        try:
            triples.append((float(parts[0]), float(parts[1])))
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: (F, mF) must be numbers") from None
    return tuple(triples)


def _parse_prepared(raw, dim: int, where: str):
    """Returns (PureState, label)."""
    if raw is None or raw == "equal":
        return PureState.equal_superposition(dim), f"equal{dim}"
    if isinstance(raw, str):
        if raw.startswith("pair:"):
            parts = raw[5:].split(",")
            if len(parts) != 2:
                raise ConfigError(f"{where}: pair wants two level indices, e.g. 'pair:0,2'")
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise ConfigError(f"{where}: pair indices must be integers") from None
            if not (0 <= i < dim and 0 <= j < dim and i != j):
                raise ConfigError(f"{where}: pair levels must be distinct and within the system")
            return PureState.equal_superposition(dim, levels=(i, j)), f"pair{i}{j}"
        if raw.startswith("basis:"):
            try:
                i = int(raw[6:])
            except ValueError:
                raise ConfigError(f"{where}: basis index must be an integer") from None
            if not 0 <= i < dim:
                raise ConfigError(f"{where}: basis level outside the system")
            return PureState.basis(dim, i), f"basis{i}"
        raise ConfigError(
            f"{where}: unknown prepared-state form {raw!r} "
            "(use 'equal', 'pair:i,j', 'basis:i', or an amplitude list)"
        )
    if isinstance(raw, list):
        if len(raw) != dim:
            raise ConfigError(f"{where}: amplitude list must have {dim} entries")
        amps = []
        for i, entry in enumerate(raw):
            if isinstance(entry, (int, float)) and not isinstance(entry, bool):
                amps.append(complex(entry))
            elif isinstance(entry, list) and len(entry) == 2:
                try:
                    amps.append(complex(float(entry[0]), float(entry[1])))
                except (TypeError, ValueError):
                    raise ConfigError(f"{where}[{i}]: expected [re, im] numbers") from None
            else:
                raise ConfigError(f"{where}[{i}]: expected a number or [re, im]")
        if not any(abs(a) > 0 for a in amps):
            raise ConfigError(f"{where}: amplitude list is all zero")
        return PureState.from_amplitudes(amps), "custom"
    raise ConfigError(f"{where}: unrecognized prepared-state value")


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully validated experiment description.

    `families` pairs each sequence family with the repetition count it
    reports under (0 for the bare reference), and `prepared` pairs each
    initial state with its label; `cmd_simulate` runs the product.
    """

    atom_name: str
    field_tesla: float
    level_triples: tuple[tuple[float, float], ...]
    families: tuple[tuple[SequenceFamily, int], ...]
    t_grid: np.ndarray
    prepared: tuple[tuple[PureState, str], ...]
    noise: NoiseSpec
    trials: int
    seed: int
    detection: DetectionModel | None = None
    pulse_error: float | None = None
    sigma_source: str = "explicit"
    echo: dict[str, str] = field(default_factory=dict, repr=False)

    def system(self) -> LevelSystem:
        return breit_rabi.system_for(
            breit_rabi.load_atom(self.atom_name), self.level_triples, self.field_tesla
        )


_TOP_KEYS = {
    "atom", "field", "levels", "sequence", "time_grid", "noise",
    "prepared", "trials", "seed", "detection", "pulse_error",
}
_SEQ_KEYS = {"family", "repetitions", "pair"}
_GRID_KEYS = {"start", "stop", "points", "spacing"}
_NOISE_KEYS = {"quasi_static_sigma", "anchor_t2", "harmonics"}
_HARMONIC_KEYS = {"frequency", "amplitude", "phase"}
_DETECTION_KEYS = {"bright_mean", "dark_mean", "threshold"}


def _parse_grid(raw) -> np.ndarray:
    _require_keys(raw, _GRID_KEYS, {"start", "stop"}, "time_grid")
    start = parse_quantity(raw["start"], "time", "time_grid.start")
    stop = parse_quantity(raw["stop"], "time", "time_grid.stop")
    points = raw.get("points", 25)
    spacing = raw.get("spacing", "log")
    if not isinstance(points, int) or points < 2:
        raise ConfigError("time_grid.points: need an integer >= 2")
    if stop <= start:
        raise ConfigError("time_grid.stop: must exceed time_grid.start")
    if spacing == "log":
        if start <= 0.0:
            raise ConfigError("time_grid.start: must be positive for log spacing")
        return np.geomspace(start, stop, points)
    if spacing == "linear":
        if start < 0.0:
            raise ConfigError("time_grid.start: must be non-negative")
        return np.linspace(start, stop, points)
    raise ConfigError("time_grid.spacing: must be 'log' or 'linear'")


def _parse_families(raw, n_levels: int):
    _require_keys(raw, _SEQ_KEYS, {"family"}, "sequence")
    kind = raw.get("family")
    if kind == "ramsey":
        pair = raw.get("pair")
        if "repetitions" in raw:
            raise ConfigError("sequence.repetitions: not valid for the ramsey family")
        if not isinstance(pair, list) or len(pair) != 2:
            raise ConfigError("sequence.pair: ramsey needs [i, j]")
        try:
            i, j = int(pair[0]), int(pair[1])
        except (TypeError, ValueError):
            raise ConfigError("sequence.pair: indices must be integers") from None
        if not (0 <= i < n_levels and 0 <= j < n_levels and i != j):
            raise ConfigError("sequence.pair: levels must be distinct and within the system")
        return ((ramsey_family(i, j), 0),)
    if kind not in ("mldd", "cyclic"):
        raise ConfigError("sequence.family: must be 'mldd', 'cyclic' or 'ramsey'")
    if "pair" in raw:
        raise ConfigError("sequence.pair: only valid for the ramsey family")
    reps = raw.get("repetitions", [1])
    if isinstance(reps, int):
        reps = [reps]
    if not isinstance(reps, list) or not reps:
        raise ConfigError("sequence.repetitions: expected an integer or list of integers")
    out = []
    seen = set()
    for r in reps:
        if not isinstance(r, int) or r < 0:
            raise ConfigError("sequence.repetitions: entries must be integers >= 0")
        if r in seen:
            raise ConfigError(f"sequence.repetitions: duplicate value {r}")
        seen.add(r)
        if kind == "mldd":
            if r > 0 and n_levels != 3:
                raise ConfigError("sequence.family: mldd with repetitions needs exactly 3 levels")
            out.append((mldd_family(r), r))
        else:
            if r == 0:
                raise ConfigError("sequence.repetitions: cyclic needs repetitions >= 1 "
                                  "(use family mldd with 0 for a bare wait)")
            out.append((cyclic_family(n_levels, r), r))
    return tuple(out)


def _parse_noise(raw, system: LevelSystem):
    """Returns (NoiseSpec, sigma_source)."""
    if raw is None:
        return NoiseSpec(), "none"
    _require_keys(raw, _NOISE_KEYS, set(), "noise")
    sigma_raw = raw.get("quasi_static_sigma")
    source = "none"
    quasi = None
    if sigma_raw == "auto":
        if "anchor_t2" not in raw:
            raise ConfigError("noise.anchor_t2: required when quasi_static_sigma is 'auto'")
        anchor = parse_quantity(raw["anchor_t2"], "time", "noise.anchor_t2")
        sigma = auto_sigma(system, anchor)
        source = f"auto(anchor_t2={anchor:g}s)"
        quasi = QuasiStaticComponent(sigma)
    elif "anchor_t2" in raw:
        # an anchor next to an explicit sigma would be silently ignored
        raise ConfigError("noise.anchor_t2: only meaningful with quasi_static_sigma 'auto'")
    elif sigma_raw is not None:
        sigma = parse_quantity(sigma_raw, "field", "noise.quasi_static_sigma")
        source = "explicit"
        quasi = QuasiStaticComponent(sigma)
    harmonics = []
    for i, item in enumerate(raw.get("harmonics") or []):
        where = f"noise.harmonics[{i}]"
        _require_keys(item, _HARMONIC_KEYS, {"frequency", "amplitude"}, where)
        phase = item.get("phase")
        if phase is not None:
            if isinstance(phase, bool) or not isinstance(phase, (int, float)):
                raise ConfigError(f"{where}.phase: expected a number in radians")
            phase = float(phase)
        harmonics.append(
            HarmonicComponent(
                frequency_hz=parse_quantity(item["frequency"], "frequency", f"{where}.frequency"),
                amplitude_tesla=parse_quantity(item["amplitude"], "field", f"{where}.amplitude"),
                phase=phase,
            )
        )
    try:
        return NoiseSpec(quasi_static=quasi, harmonics=tuple(harmonics)), source
    except ValueError as exc:
        raise ConfigError(f"noise: {exc}") from None


def _parse_detection(raw):
    if raw is None:
        return None
    _require_keys(raw, _DETECTION_KEYS, _DETECTION_KEYS, "detection")
    for key in ("bright_mean", "dark_mean"):
        if isinstance(raw[key], bool) or not isinstance(raw[key], (int, float)):
            raise ConfigError(f"detection.{key}: expected a number")
    if isinstance(raw["threshold"], bool) or not isinstance(raw["threshold"], int):
        raise ConfigError("detection.threshold: expected an integer")
    try:
        return DetectionModel(
            bright_mean=float(raw["bright_mean"]),
            dark_mean=float(raw["dark_mean"]),
            threshold=raw["threshold"],
        )
    except ValueError as exc:
        raise ConfigError(f"detection: {exc}") from None


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a loaded YAML document and resolve it to run inputs."""
    _require_keys(doc, _TOP_KEYS, {"atom", "field", "levels", "sequence", "time_grid"}, "config")
    atom_name = doc["atom"]
    if not isinstance(atom_name, str):
        raise ConfigError("atom: expected an atom name string")
    try:
        atom = breit_rabi.load_atom(atom_name)
    except KeyError:
        raise ConfigError(f"atom: unknown atom {atom_name!r}") from None
    field_tesla = parse_quantity(doc["field"], "field", "field")
    if field_tesla <= 0.0:
        raise ConfigError("field: must be positive")
    triples = _parse_levels(doc["levels"], "levels")
    try:
        system = breit_rabi.system_for(atom, triples, field_tesla)
    except ValueError as exc:
        raise ConfigError(f"levels: {exc}") from None

    families = _parse_families(doc["sequence"], system.dim)
    t_grid = _parse_grid(doc["time_grid"])
    if any(fam.kind in ("mldd", "cyclic") and fam.repetitions > 0 for fam, _ in families):
        if t_grid[0] <= 0.0:
            raise ConfigError("time_grid.start: must be positive for pulsed sequences")

    noise, sigma_source = _parse_noise(doc.get("noise"), system)

    raw_prepared = doc.get("prepared", "equal")
    if isinstance(raw_prepared, list) and raw_prepared \
            and all(isinstance(x, str) for x in raw_prepared):
        # a list of state names; a single custom state is a list of numbers
        prepared = tuple(
            _parse_prepared(item, system.dim, f"prepared[{i}]")
            for i, item in enumerate(raw_prepared)
        )
    else:
        prepared = (_parse_prepared(raw_prepared, system.dim, "prepared"),)
    labels = [label for _, label in prepared]
    if len(set(labels)) != len(labels):
        raise ConfigError("prepared: duplicate state labels")

    trials = doc.get("trials", 300)
    if not isinstance(trials, int) or trials < 2:
        raise ConfigError("trials: expected an integer >= 2")
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed: expected a non-negative integer")
    detection = _parse_detection(doc.get("detection"))
    pulse_error = doc.get("pulse_error")
    if pulse_error is not None:
        if isinstance(pulse_error, bool) or not isinstance(pulse_error, (int, float)) \
                or pulse_error < 0:
            raise ConfigError("pulse_error: expected a non-negative number (radians std)")
        pulse_error = float(pulse_error)

    echo = {
        "config.atom": atom_name,
        "config.field_tesla": repr(field_tesla),
        "config.levels": ";".join(f"{f:g},{m:g}" for f, m in triples),
        "config.sequence": doc["sequence"].get("family"),
        "config.repetitions": ",".join(str(r) for _, r in families),
        "config.t_start_s": repr(float(t_grid[0])),
        "config.t_stop_s": repr(float(t_grid[-1])),
        "config.t_points": str(t_grid.size),
        "config.prepared": ",".join(labels),
        "config.trials": str(trials),
        "config.seed": str(seed),
        "config.sigma_tesla": repr(noise.quasi_static.sigma_tesla) if noise.quasi_static else "0",
        "config.sigma_source": sigma_source,
        "config.harmonics": ";".join(
            f"{h.frequency_hz:g}Hz@{h.amplitude_tesla!r}T" for h in noise.harmonics
        ),
        "config.detection": (
            f"bright={detection.bright_mean:g},dark={detection.dark_mean:g},"
            f"threshold={detection.threshold}" if detection else "off"
        ),
        "config.pulse_error": repr(pulse_error) if pulse_error is not None else "off",
    }
    return ExperimentConfig(
        atom_name=atom_name,
        field_tesla=field_tesla,
        level_triples=triples,
        families=families,
        t_grid=t_grid,
        prepared=prepared,
        noise=noise,
        trials=trials,
        seed=seed,
        detection=detection,
        pulse_error=pulse_error,
        sigma_source=sigma_source,
        echo=echo,
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be a mapping")
    return parse_config(doc)
