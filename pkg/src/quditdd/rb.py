"""Single-transition randomized benchmarking on the Bloch sphere.

Gates are represented as SO(3) rotations acting on the Bloch vector of
the driven two-level subspace.  A drive of sign s and nominal area
theta rotates the Bloch vector by -s*theta about the drive axis (the
spin-1/2 convention exp(+i s theta sigma/2)).  Two gate alphabets:

* pi gates, 8 entries: axes (none, x, y, z) crossed with drive signs
  (+, -); index = 2*axis + (0 for +, 1 for -).  The axis ``none`` entry
  is an idle slot.  Both signs of a pi rotation coincide in SO(3).
* pi/2 gates, 6 entries: axes (none, x, y) crossed with signs, indexed
  the same way.

A sequence of benchmarking length l interleaves them as

    P_0 C_0 P_1 C_1 ... P_{l-1} C_{l-1} P_l C_l P_{l+1}

(2l+3 gates).  All P gates and the first l C gates are drawn uniformly
at random; C_l is the lowest-index pi/2 gate that returns the ideal
Bloch vector to the measurement axis (+z or -z), which always exists
because error-free gates permute the six cardinal directions.  The
recorded target is the sign of the ideal final z component.

Ideal tracking uses integer matrices and vectors throughout, so the
closing-gate condition and the target are exact.

Error model and sampling: each gate first applies its exact rotation;
active gates (axis other than ``none``) then damp the components
transverse to the drive axis by exp(-std^2/2), which is the exact mean
channel of a Gaussian over-rotation of the drive angle; finally every
gate slot, idle ones included, shrinks the whole vector by
(1 - depolarizing).  Survival probability is linear in the Bloch
vector, so when over-rotation errors are redrawn independently for
every shot the shot outcomes are i.i.d. Bernoulli with exactly this
mean-channel probability; sampling counts ~ Binomial(shots, q) is
therefore distribution-exact, not an approximation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import exp, pi

import numpy as np

__all__ = [
    "N_PI_GATES",
    "N_HALF_GATES",
    "RbSequence",
    "GateErrorModel",
    "generate_rb_sequence",
    "sequence_survival",
    "RbData",
    "run_rb",
    "write_rb_csv",
    "read_rb_csv",
]

_AXES = {0: None, 1: np.array([1, 0, 0]), 2: np.array([0, 1, 0]), 3: np.array([0, 0, 1])}


def _rotation(axis_id: int, angle: float) -> np.ndarray:
    if axis_id == 0:
        return np.eye(3, dtype=np.int64)
    c = int(round(np.cos(angle)))
    s = int(round(np.sin(angle)))
    # angle is a multiple of pi/2 so cos and sin are exactly -1, 0 or 1
    if axis_id == 1:
        m = [[1, 0, 0], [0, c, -s], [0, s, c]]
    elif axis_id == 2:
        m = [[c, 0, s], [0, 1, 0], [-s, 0, c]]
    else:
        m = [[c, -s, 0], [s, c, 0], [0, 0, 1]]
    return np.array(m, dtype=np.int64)


def _gate_table(n_axes: int, area: float) -> list[np.ndarray]:
    table = []
    for axis_id in range(n_axes):
        for sign in (1.0, -1.0):
            table.append(_rotation(axis_id, -sign * area))
    return table

PI_ROTATIONS = _gate_table(4, pi)
HALF_ROTATIONS = _gate_table(3, pi / 2)
N_PI_GATES = len(PI_ROTATIONS)
N_HALF_GATES = len(HALF_ROTATIONS)

_Z = np.array([0, 0, 1], dtype=np.int64)


@dataclass(frozen=True)
class RbSequence:
    """A closed benchmarking sequence with its ideal measurement target."""

    length: int
    pi_indices: tuple[int, ...]
    half_indices: tuple[int, ...]
    target: int  # +1 or -1: ideal final Bloch vector is target * z

    def __post_init__(self) -> None:
        if len(self.pi_indices) != self.length + 2:
            raise ValueError("need length+2 pi gates")
        if len(self.half_indices) != self.length + 1:
            raise ValueError("need length+1 pi/2 gates")
        if self.target not in (1, -1):
            raise ValueError("target must be +1 or -1")

    @property
    def n_gates(self) -> int:
        return 2 * self.length + 3

    def gates(self):
        """Temporal (kind, index) list; kind is 'pi' or 'half'."""
        out = []
        for k in range(self.length + 1):
            out.append(("pi", self.pi_indices[k]))
            out.append(("half", self.half_indices[k]))
        out.append(("pi", self.pi_indices[-1]))
        return out


def generate_rb_sequence(length: int, rng: np.random.Generator) -> RbSequence:
    """Draw a random sequence and solve for its closing pi/2 gate.

    Draw order (one uniform integer each): P_0, C_0, P_1, C_1, ...,
    C_{length-1}, P_length, P_{length+1}.
    """
    if length < 0:
        raise ValueError("length must be non-negative")
    v = _Z.copy()
    pi_idx: list[int] = []
    half_idx: list[int] = []
    for _ in range(length):
        p = int(rng.integers(0, N_PI_GATES))
        pi_idx.append(p)
        v = PI_ROTATIONS[p] @ v
        c = int(rng.integers(0, N_HALF_GATES))
        half_idx.append(c)
        v = HALF_ROTATIONS[c] @ v
    p = int(rng.integers(0, N_PI_GATES))
    pi_idx.append(p)
    v = PI_ROTATIONS[p] @ v
    closer = next(
        i for i, rot in enumerate(HALF_ROTATIONS) if (rot @ v)[2] != 0
    )
    half_idx.append(closer)
    v = HALF_ROTATIONS[closer] @ v
    p = int(rng.integers(0, N_PI_GATES))
    pi_idx.append(p)
    v = PI_ROTATIONS[p] @ v
    return RbSequence(
        length=length,
        pi_indices=tuple(pi_idx),
        half_indices=tuple(half_idx),
        target=int(v[2]),
    )


@dataclass(frozen=True)
class GateErrorModel:
    """Per-gate depolarizing strength and drive-angle jitter (radians)."""

    depolarizing: float = 0.0
    angle_error_std: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.depolarizing <= 1.0:
            raise ValueError("depolarizing must lie in [0, 1]")
        if self.angle_error_std < 0.0:
            raise ValueError("angle_error_std must be non-negative")


def _apply_gate(v: np.ndarray, kind: str, index: int, errors: GateErrorModel) -> np.ndarray:
    rot = PI_ROTATIONS[index] if kind == "pi" else HALF_ROTATIONS[index]
    v = rot @ v
    axis_id = index // 2
    if axis_id != 0 and errors.angle_error_std > 0.0:
        axis = _AXES[axis_id].astype(float)
        damp = exp(-0.5 * errors.angle_error_std**2)
        along = np.dot(axis, v) * axis
        v = along + damp * (v - along)
    if errors.depolarizing > 0.0:
        v = v * (1.0 - errors.depolarizing)
    return v


def sequence_survival(seq: RbSequence, errors: GateErrorModel) -> float:
    """Exact mean probability of measuring the ideal target state."""
    v = _Z.astype(float)
    for kind, index in seq.gates():
        v = _apply_gate(v, kind, index, errors)
    return 0.5 * (1.0 + seq.target * float(v[2]))


@dataclass(frozen=True)
class RbData:
    lengths: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    n_sequences: int
    shots: int
    seed: int


def _sequence_stream(seed: int, length_idx: int, seq_idx: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(length_idx, seq_idx))
    return np.random.Generator(np.random.Philox(ss))


def run_rb(
    errors: GateErrorModel,
    lengths,
    n_sequences: int = 30,
    shots: int = 1000,
    seed: int = 0,
) -> RbData:
    """Sample survival statistics over random sequences at each length.

    Each (length, sequence) slot gets its own counter-based stream, so
    results are reproducible regardless of evaluation order.  Per
    sequence the draws are: the sequence's own gate indices, then one
    binomial count of target outcomes.
    """
    lengths = [int(l) for l in lengths]
    if len(set(lengths)) != len(lengths):
        raise ValueError("lengths must be distinct")
    if n_sequences < 2:
        raise ValueError("need at least 2 sequences per length for a stderr")
    if shots < 1:
        raise ValueError("shots must be positive")
    means = np.empty(len(lengths))
    errs = np.empty(len(lengths))
    for li, length in enumerate(lengths):
        fractions = np.empty(n_sequences)
        for si in range(n_sequences):
            rng = _sequence_stream(seed, li, si)
            seq = generate_rb_sequence(length, rng)
            q = sequence_survival(seq, errors)
            counts = int(rng.binomial(shots, q))
            fractions[si] = counts / shots
        means[li] = fractions.mean()
        errs[li] = fractions.std(ddof=1) / np.sqrt(n_sequences)
    return RbData(
        lengths=np.array(lengths, dtype=int),
        mean=means,
        stderr=errs,
        n_sequences=n_sequences,
        shots=shots,
        seed=seed,
    )


RB_CSV_COLUMNS = ("l", "mean", "stderr", "sequences", "shots", "seed")


def write_rb_csv(path, data: RbData, metadata: dict | None = None) -> None:
    with open(path, "w", newline="") as fh:
        for key in sorted(metadata or {}):
            fh.write(f"# {key}: {metadata[key]}\n")
        writer = csv.writer(fh)
        writer.writerow(RB_CSV_COLUMNS)
        for i in range(data.lengths.size):
            writer.writerow(
                [
                    int(data.lengths[i]),
                    repr(float(data.mean[i])),
                    repr(float(data.stderr[i])),
                    data.n_sequences,
                    data.shots,
                    data.seed,
                ]
            )


def read_rb_csv(path) -> tuple[RbData, dict]:
    metadata: dict[str, str] = {}
    rows = []
    with open(path, newline="") as fh:
        header = None
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                metadata[key.strip()] = value.strip()
                continue
            if header is None:
                header = tuple(next(csv.reader([line])))
                if header != RB_CSV_COLUMNS:
                    raise ValueError(f"unexpected columns {header!r}")
                continue
            rows.append(next(csv.reader([line])))
    if not rows:
        raise ValueError("no data rows")
    meta_cols = {(r[3], r[4], r[5]) for r in rows}
    if len(meta_cols) != 1:
        raise ValueError("inconsistent sequences/shots/seed across rows")
    data = RbData(
        lengths=np.array([int(r[0]) for r in rows]),
        mean=np.array([float(r[1]) for r in rows]),
        stderr=np.array([float(r[2]) for r in rows]),
        n_sequences=int(rows[0][3]),
        shots=int(rows[0][4]),
        seed=int(rows[0][5]),
    )
    return data, metadata
