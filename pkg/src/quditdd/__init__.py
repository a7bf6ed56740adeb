"""quditdd: multi-level dynamical decoupling under classical dephasing.

A numerical laboratory for qudit coherence experiments: pulse-sequence
construction, exact phase-accumulation and unitary Monte Carlo engines,
state-detection statistics, hyperfine level structure, decay-model and
randomized-benchmarking estimation, and a batch CLI.
"""

from ._kernels import BACKEND
from .breit_rabi import (
    HyperfineAtom,
    ZeemanLevel,
    all_levels,
    level_energy,
    level_sensitivity,
    load_atom,
    sensitivities_for,
    system_for,
    transition_frequency,
)
from .config import ConfigError, ExperimentConfig, auto_sigma, load_config, parse_quantity
from .core import (
    LevelSystem,
    PureState,
    UnitaryOp,
    apply,
    free_phase,
    pi_pulse,
    retrieval_fidelity,
    transition_rotation,
)
from .ensemble import (
    DecayCurve,
    DetectionModel,
    SequenceFamily,
    cyclic_family,
    detection_error_rates,
    mldd_family,
    monte_carlo_curve,
    ramsey_family,
    read_curve_csv,
    simulate_detection,
    write_curve_csv,
)
from .evolution import (
    PhaseVector,
    calibrate_pulse_error,
    phases_mldd,
    propagate_unitary,
    trial_fidelity,
)
from .fitting import (
    DecayDataset,
    DecayModelParams,
    FitError,
    FitResult,
    fit_joint,
    fit_ramsey,
    fit_rb,
    model_fidelity,
)
from .noise import HarmonicComponent, NoiseSpec, QuasiStaticComponent, TrialNoise, \
    field_at, integrate_field, sample_trial
from .rb import (
    GateErrorModel,
    RbData,
    RbSequence,
    generate_rb_sequence,
    read_rb_csv,
    run_rb,
    sequence_survival,
    write_rb_csv,
)
from .sequences import (
    Pulse,
    SequenceSpec,
    Wait,
    build_bare_wait,
    build_cyclic_mldd,
    build_mldd,
    build_ramsey,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "__version__",
    # core
    "LevelSystem", "PureState", "UnitaryOp", "apply", "free_phase",
    "pi_pulse", "retrieval_fidelity", "transition_rotation",
    # noise
    "HarmonicComponent", "NoiseSpec", "QuasiStaticComponent", "TrialNoise",
    "field_at", "integrate_field", "sample_trial",
    # sequences
    "Pulse", "SequenceSpec", "Wait", "build_bare_wait", "build_cyclic_mldd",
    "build_mldd", "build_ramsey",
    # evolution
    "PhaseVector", "calibrate_pulse_error", "phases_mldd", "propagate_unitary",
    "trial_fidelity",
    # ensemble
    "DecayCurve", "DetectionModel", "SequenceFamily", "cyclic_family",
    "detection_error_rates", "mldd_family", "monte_carlo_curve", "ramsey_family",
    "read_curve_csv", "simulate_detection", "write_curve_csv",
    # breit_rabi
    "HyperfineAtom", "ZeemanLevel", "all_levels", "level_energy",
    "level_sensitivity", "load_atom", "sensitivities_for", "system_for",
    "transition_frequency",
    # fitting
    "DecayDataset", "DecayModelParams", "FitError", "FitResult", "fit_joint",
    "fit_ramsey", "fit_rb", "model_fidelity",
    # rb
    "GateErrorModel", "RbData", "RbSequence", "generate_rb_sequence",
    "read_rb_csv", "run_rb", "sequence_survival", "write_rb_csv",
    # config
    "ConfigError", "ExperimentConfig", "auto_sigma", "load_config", "parse_quantity",
]
