"""Command-line front end.

Subcommands: simulate, fit, breit-rabi, rb, print-sequence.  Exit
codes: 0 success, 2 configuration or input-schema error, 3 numerical
failure (non-convergent fit, degenerate data).
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import breit_rabi
from .config import ConfigError, load_config, parse_quantity
from .ensemble import monte_carlo_curve, read_curve_csv, write_curve_csv
from .fitting import (
    DecayDataset,
    DecayModelParams,
    FitError,
    fit_joint,
    fit_ramsey,
    fit_rb,
    model_fidelity,
)
from .rb import GateErrorModel, read_rb_csv, run_rb, write_rb_csv
from .sequences import Pulse, Wait

__all__ = ["main"]


def _dataset_seed(base: int, index: int) -> int:
    return base + 1000 * index


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    system = cfg.system()
    rows = []
    index = 0
    for family, n_reps in cfg.families:
        for state, state_label in cfg.prepared:
            curve = monte_carlo_curve(
                family,
                system,
                cfg.noise,
                state,
                cfg.t_grid,
                trials=cfg.trials,
                seed=_dataset_seed(seed, index),
                detection=cfg.detection,
                pulse_error=cfg.pulse_error,
                threads=args.threads,
                label=state_label,
            )
            metadata = dict(cfg.echo)
            metadata["config.seed"] = str(seed)
            metadata["dataset.family"] = family.default_label()
            metadata["dataset.index"] = str(index)
            path = out_dir / f"curve_{state_label}_N{n_reps}.csv"
            write_curve_csv(path, curve, metadata)
            rows.append(
                (
                    family.default_label(),
                    n_reps,
                    state_label,
                    curve.t_seconds.size,
                    curve.fidelity[0],
                    curve.fidelity[-1],
                    str(path),
                )
            )
            index += 1
    print(f"{'family':<10}{'N':>4}  {'state':<10}{'points':>7}{'F(first)':>10}{'F(last)':>9}  file")
    for fam, n, lab, npts, f0, f1, path in rows:
        print(f"{fam:<10}{n:>4}  {lab:<10}{npts:>7}{f0:>10.4f}{f1:>9.4f}  {path}")
    return 0


_PAIR_LABEL = re.compile(r"^pair(\d)(\d)$")


def _pair_from_label(label: str):
    if label.startswith("equal"):
        return None
    m = _PAIR_LABEL.match(label)
    if m:
        return (int(m.group(1)), int(m.group(2)))
    raise ConfigError(
        f"state label {label!r} does not name an equal or pair superposition; "
        "the decay model cannot fit it"
    )


def _system_from_metadata(metadata: dict, path) -> tuple:
    try:
        atom_name = metadata["config.atom"]
        field_tesla = float(metadata["config.field_tesla"])
        level_text = metadata["config.levels"]
    except KeyError as exc:
        raise ConfigError(f"{path}: metadata lacks {exc.args[0]}; was it written by simulate?")
    triples = tuple(
        tuple(float(x) for x in part.split(",")) for part in level_text.split(";")
    )
    key = (atom_name, field_tesla, triples)
    atom = breit_rabi.load_atom(atom_name)
    return key, breit_rabi.system_for(atom, triples, field_tesla)


def _fit_report(result, mode: str, inputs, residuals) -> dict:
    return {
        "mode": mode,
        "inputs": [str(p) for p in inputs],
        "params": result.params,
        "stderr": result.stderr,
        "objective": result.objective,
        "n_points": result.n_points,
        "bootstrap_samples": result.bootstrap_samples,
        "converged": result.converged,
        "residuals": residuals,
    }


def _print_fit(result) -> None:
    width = max(len(k) for k in result.params)
    print(f"{'parameter':<{width}}  {'value':>14}  {'stderr':>12}")
    for key, value in result.params.items():
        err = result.stderr.get(key, float("nan"))
        print(f"{key:<{width}}  {value:>14.6e}  {err:>12.3e}")
    print(
        f"objective {result.objective:.6e} over {result.n_points} points; "
        f"{result.bootstrap_samples} bootstrap resamples"
    )


def _write_report(report: dict, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "fit_report.json"
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def cmd_fit(args) -> int:
    if args.mode == "joint":
        return _fit_joint_cmd(args)
    if args.mode == "ramsey":
        return _fit_ramsey_cmd(args)
    return _fit_rb_cmd(args)


def _fit_joint_cmd(args) -> int:
    datasets = []
    labels = []
    system = None
    system_key = None
    for path in args.inputs:
        curve, metadata = read_curve_csv(path)
        key, sys_here = _system_from_metadata(metadata, path)
        if system is None:
            system, system_key = sys_here, key
        elif key != system_key:
            raise ConfigError(f"{path}: atom/field/levels disagree with the first input")
        label = f"{curve.state_label}_N{curve.repetitions}"
        if label in labels:
            raise ConfigError(f"{path}: duplicate (state, N) combination {label!r} among inputs")
        labels.append(label)
        datasets.append(
            DecayDataset(
                t_seconds=curve.t_seconds,
                fidelity=curve.fidelity,
                stderr=curve.stderr,
                repetitions=curve.repetitions,
                label=label,
                pair=_pair_from_label(curve.state_label),
            )
        )
    freqs = tuple(parse_quantity(f, "frequency", "--frequency") for f in args.frequency or [])
    fix_amplitudes = [None] * len(freqs)
    for spec in args.fix_amplitude or []:
        freq_text, _, amp_text = spec.partition("=")
        if not amp_text:
            raise ConfigError("--fix-amplitude wants '<frequency>=<field>'")
        f_val = parse_quantity(freq_text, "frequency", "--fix-amplitude")
        matches = [h for h, f in enumerate(freqs) if abs(f - f_val) <= 1e-9 * max(f, f_val)]
        if not matches:
            raise ConfigError(f"--fix-amplitude: {freq_text!r} is not among --frequency values")
        fix_amplitudes[matches[0]] = parse_quantity(amp_text, "field", "--fix-amplitude")

    result = fit_joint(
        datasets,
        system,
        freqs,
        fix_contrast=args.fix_contrast,
        fix_amplitudes=fix_amplitudes,
        bootstrap=args.bootstrap,
        seed=args.seed or 0,
    )
    amp_by_freq = {
        f: (
            fix_amplitudes[h]
            if fix_amplitudes[h] is not None
            else result.params[f"amp[{f:g}Hz]"]
        )
        for h, f in enumerate(freqs)
    }
    residuals = {}
    for ds, label in zip(datasets, labels):
        params = DecayModelParams(
            t2_seconds=result.params[f"t2[{label}]"],
            contrast_g=result.params.get("g", args.fix_contrast or 1.0),
            amplitudes_tesla=tuple(amp_by_freq[f] for f in freqs),
            frequencies_hz=freqs,
            pair=ds.pair,
        )
        model = model_fidelity(ds.t_seconds, ds.repetitions, params, system)
        residuals[label] = [float(r) for r in (ds.fidelity - model)]
    report = _fit_report(result, "joint", args.inputs, residuals)
    path = _write_report(report, Path(args.out))
    _print_fit(result)
    for label in labels:
        r = np.array(residuals[label])
        print(f"residuals[{label}]: rms {np.sqrt(np.mean(r**2)):.3e}  max {np.abs(r).max():.3e}")
    print(f"report: {path}")
    return 0


def _fit_ramsey_cmd(args) -> int:
    if len(args.inputs) != 1:
        raise ConfigError("--mode ramsey fits exactly one curve CSV")
    curve, _ = read_curve_csv(args.inputs[0])
    result = fit_ramsey(
        curve.t_seconds, curve.fidelity, curve.stderr,
        bootstrap=args.bootstrap, seed=args.seed or 0,
    )
    p = result.params
    model = p["amplitude"] * np.exp(-((curve.t_seconds / p["t2_seconds"]) ** 2)) + p["offset"]
    residuals = {"ramsey": [float(r) for r in curve.fidelity - model]}
    report = _fit_report(result, "ramsey", args.inputs, residuals)
    path = _write_report(report, Path(args.out))
    _print_fit(result)
    print(f"report: {path}")
    return 0


def _fit_rb_cmd(args) -> int:
    if len(args.inputs) != 1:
        raise ConfigError("--mode rb fits exactly one survival CSV")
    data, _ = read_rb_csv(args.inputs[0])
    result = fit_rb(
        data.lengths, data.mean, data.stderr, bootstrap=args.bootstrap, seed=args.seed or 0
    )
    eps = result.params["epsilon"]
    eps_im = result.params["epsilon_im"]
    model = 0.5 + 0.5 * (1 - 2 * eps_im) * (1 - 2 * eps) ** data.lengths.astype(float)
    residuals = {"rb": [float(r) for r in data.mean - model]}
    report = _fit_report(result, "rb", args.inputs, residuals)
    path = _write_report(report, Path(args.out))
    _print_fit(result)
    print(f"report: {path}")
    return 0


def cmd_breit_rabi(args) -> int:
    if args.config:
        cfg = load_config(args.config)
        atom_name, field_tesla, triples = cfg.atom_name, cfg.field_tesla, cfg.level_triples
    else:
        if args.field is None:
            raise ConfigError("breit-rabi needs --field (or --config)")
        atom_name = args.atom
        field_tesla = parse_quantity(args.field, "field", "--field")
        triples = None
        if args.levels:
            triples = tuple(
                tuple(float(x) for x in part.split(",")) for part in args.levels.split(";")
            )
    try:
        atom = breit_rabi.load_atom(atom_name)
    except KeyError as exc:
        raise ConfigError(str(exc)) from None
    if field_tesla <= 0.0:
        raise ConfigError("--field must be positive")

    step = 1e-7
    print(f"atom {atom.name}: I={atom.nuclear_spin:g}, A={atom.hyperfine_a_hz:.6g} Hz")
    print(f"levels at B = {field_tesla * 1e3:.6g} mT")
    print(f"{'F':>4} {'mF':>4} {'energy_MHz':>16} {'dE/dB_MHz_per_mT':>18} {'findiff_MHz_per_mT':>20}")
    for level in breit_rabi.all_levels(atom, field_tesla):
        fd = (
            breit_rabi.level_energy(atom, level.f, level.m_f, field_tesla + step)
            - breit_rabi.level_energy(atom, level.f, level.m_f, field_tesla - step)
        ) / (2.0 * step)
        print(
            f"{level.f:>4g} {level.m_f:>4g} {level.energy_hz / 1e6:>16.6f} "
            f"{level.sensitivity_hz_per_t / 1e9:>18.6f} {fd / 1e9:>20.6f}"
        )
    if triples:
        print()
        print(f"{'transition':<22}{'frequency_MHz':>15}{'gap_MHz_per_mT':>16}")
        for a in range(len(triples)):
            for b in range(a + 1, len(triples)):
                fa, ma = triples[a]
                fb, mb = triples[b]
                freq = breit_rabi.transition_frequency(atom, triples[a], triples[b], field_tesla)
                gap = breit_rabi.level_sensitivity(atom, fa, ma, field_tesla) - \
                    breit_rabi.level_sensitivity(atom, fb, mb, field_tesla)
                name = f"F{fa:g},mF{ma:g} <-> F{fb:g},mF{mb:g}"
                print(f"{name:<22}{freq / 1e6:>15.6f}{gap / 1e9:>16.6f}")
    return 0


def cmd_rb(args) -> int:
    lengths = [int(x) for x in args.lengths.split(",")]
    errors = GateErrorModel(
        depolarizing=args.depolarizing, angle_error_std=args.angle_error_std
    )
    seed = args.seed or 0
    data = run_rb(errors, lengths, n_sequences=args.sequences, shots=args.shots, seed=seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "rb_survival.csv"
    write_rb_csv(
        csv_path,
        data,
        metadata={
            "rb.depolarizing": repr(args.depolarizing),
            "rb.angle_error_std": repr(args.angle_error_std),
        },
    )
    print(f"survival data: {csv_path}")
    result = fit_rb(data.lengths, data.mean, data.stderr, bootstrap=args.bootstrap, seed=seed)
    _print_fit(result)
    report = _fit_report(result, "rb", [csv_path], {})
    path = _write_report(report, out_dir)
    print(f"report: {path}")
    return 0


def cmd_print_sequence(args) -> int:
    cfg = load_config(args.config)
    duration = (
        parse_quantity(args.duration, "time", "--duration")
        if args.duration
        else float(cfg.t_grid[-1])
    )
    for family, n_reps in cfg.families:
        seq = family.build(duration)
        print(f"family {family.default_label()} N={n_reps} "
              f"duration {duration:g} s: {seq.n_pulses} pulses")
        print(f"{'event':<8}{'t_start':>14}{'t_stop':>14}  detail")
        for ev in seq.events:
            if isinstance(ev, Pulse):
                print(f"{'pulse':<8}{ev.at:>14.6e}{ev.at:>14.6e}  "
                      f"levels {ev.i}<->{ev.j} angle {ev.angle:g} rad")
            elif isinstance(ev, Wait):
                print(f"{'wait':<8}{ev.start:>14.6e}{ev.stop:>14.6e}  free evolution")
        print()
    return 0


def _add_common(sub, out_default="."):
    sub.add_argument("--seed", type=int, default=None, help="override the run seed")
    sub.add_argument("--threads", type=int, default=1, help="worker threads for simulation")
    sub.add_argument("--out", default=out_default, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quditdd",
        description="Multi-level dynamical decoupling laboratory: simulate, fit, inspect.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sim = subs.add_parser("simulate", help="run configured decay curves to CSV")
    sim.add_argument("--config", required=True)
    _add_common(sim)
    sim.set_defaults(func=cmd_simulate)

    fit = subs.add_parser("fit", help="fit curve or survival CSVs")
    fit.add_argument("inputs", nargs="+", help="input CSV files")
    fit.add_argument("--mode", choices=("joint", "ramsey", "rb"), default="joint")
    fit.add_argument("--frequency", action="append",
                     help="harmonic frequency to model, e.g. '150 Hz' (repeatable)")
    fit.add_argument("--fix-contrast", type=float, default=None,
                     help="pin the shared per-repetition contrast g")
    fit.add_argument("--fix-amplitude", action="append",
                     help="pin one harmonic amplitude: '<frequency>=<field>'")
    fit.add_argument("--bootstrap", type=int, default=200)
    fit.add_argument("--config", default=None, help=argparse.SUPPRESS)
    _add_common(fit)
    fit.set_defaults(func=cmd_fit)

    br = subs.add_parser("breit-rabi", help="print level energies and sensitivities")
    br.add_argument("--atom", default="be9+")
    br.add_argument("--field", default=None, help="magnetic field, e.g. '13.23 mT'")
    br.add_argument("--levels", default=None, help="working levels 'F,mF;F,mF;F,mF'")
    br.add_argument("--config", default=None, help="take atom/field/levels from a config")
    _add_common(br)
    br.set_defaults(func=cmd_breit_rabi)

    rb = subs.add_parser("rb", help="simulate randomized benchmarking and fit it")
    rb.add_argument("--lengths", default="0,1,2,4,8,16,32,64,128")
    rb.add_argument("--sequences", type=int, default=30)
    rb.add_argument("--shots", type=int, default=1000)
    rb.add_argument("--depolarizing", type=float, default=0.0)
    rb.add_argument("--angle-error-std", type=float, default=0.0)
    rb.add_argument("--bootstrap", type=int, default=200)
    rb.add_argument("--config", default=None, help=argparse.SUPPRESS)
    _add_common(rb)
    rb.set_defaults(func=cmd_rb)

    ps = subs.add_parser("print-sequence", help="print the timed pulse table")
    ps.add_argument("--config", required=True)
    ps.add_argument("--duration", default=None, help="total duration, e.g. '6 ms'")
    _add_common(ps)
    ps.set_defaults(func=cmd_print_sequence)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FitError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        if exc.diagnostics:
            trace = exc.diagnostics.get("objective_trace")
            if trace:
                print(f"  objective trace: {len(trace)} evaluations, "
                      f"final {trace[-1]:.6e}", file=sys.stderr)
            for key, val in exc.diagnostics.items():
                if key != "objective_trace":
                    print(f"  {key}: {val}", file=sys.stderr)
        return 3
    except (FloatingPointError, ZeroDivisionError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
