"""States, level systems, and closed-form unitaries for small qudits.

Everything here is exact linear algebra on d-dimensional vectors; no
matrix exponentials are taken at runtime.  A transition pulse acts on a
single 2-level subspace and is written down in closed form, and free
dephasing evolution is diagonal, so the propagators used everywhere else
in the package reduce to a handful of sin/cos/exp calls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "UNITARITY_TOL",
    "NORM_TOL",
    "LevelSystem",
    "PureState",
    "UnitaryOp",
    "transition_rotation",
    "pi_pulse",
    "free_phase",
    "apply",
    "retrieval_fidelity",
]

# |U U^dag - I| tolerance for operators, and |norm - 1| tolerance for states.
UNITARITY_TOL = 1e-10
NORM_TOL = 1e-12


@dataclass(frozen=True)
class LevelSystem:
    """A register of d levels with linear field sensitivities.

    Parameters
    ----------
    labels:
        Human-readable level names, one per level.
    sensitivities:
        Angular frequency shift per unit field for each level, in
        rad/s/T.  The dephasing phase of level ``i`` over a noise
        trajectory is ``-sensitivities[i]`` times the integrated field.
    """

    labels: tuple[str, ...]
    sensitivities: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.labels) < 2:
            raise ValueError("a level system needs at least two levels")
        if len(self.sensitivities) != len(self.labels):
            raise ValueError(
                f"{len(self.labels)} labels but {len(self.sensitivities)} sensitivities"
            )
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("level labels must be distinct")

    @property
    def dim(self) -> int:
        return len(self.labels)

    def sensitivity_array(self) -> np.ndarray:
        return np.asarray(self.sensitivities, dtype=float)

    def check_level(self, index: int) -> None:
        if not 0 <= index < self.dim:
            raise ValueError(f"level index {index} out of range for d={self.dim}")


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PureState:
    """A unit-norm complex amplitude vector."""

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = _readonly(self.amplitudes)
        if amps.ndim != 1 or amps.shape[0] < 2:
            raise ValueError("state must be a vector of dimension >= 2")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm!r} deviates from 1 by more than {NORM_TOL}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    @classmethod
    def from_amplitudes(cls, amplitudes) -> "PureState":
        """Build a state from raw amplitudes, normalizing them first."""
        amps = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(amps)
        if norm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return cls(amps / norm)

    @classmethod
    def basis(cls, dim: int, index: int) -> "PureState":
        amps = np.zeros(dim, dtype=complex)
        amps[index] = 1.0
        return cls(amps)

    @classmethod
    def equal_superposition(cls, dim: int, levels: tuple[int, ...] | None = None) -> "PureState":
        """Equal-weight, zero-phase superposition of ``levels`` (default: all)."""
        if levels is None:
            levels = tuple(range(dim))
        amps = np.zeros(dim, dtype=complex)
        amps[list(levels)] = 1.0 / np.sqrt(len(levels))
        return cls(amps)

    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class UnitaryOp:
    """A d x d unitary, checked against :data:`UNITARITY_TOL` on construction."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = _readonly(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("operator must be a square matrix")
        defect = np.abs(m @ m.conj().T - np.eye(m.shape[0])).max()
        if defect > UNITARITY_TOL:
            raise ValueError(f"unitarity defect {defect:.3e} exceeds {UNITARITY_TOL}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, other: "UnitaryOp") -> "UnitaryOp":
        return UnitaryOp(self.matrix @ other.matrix)


def transition_rotation(
    system: LevelSystem, i: int, j: int, angle: float, axis_phase: float = 0.0
) -> UnitaryOp:
    """Rotation by ``angle`` on the (i, j) subspace about an equatorial axis.

    Closed form of exp(-i * angle/2 * (cos(axis_phase) X_ij + sin(axis_phase) Y_ij)):
    identity outside the subspace, and on it

        [[cos(a/2),               -i sin(a/2) e^(-i phi)],
         [-i sin(a/2) e^(+i phi),  cos(a/2)            ]]

    with a = angle and phi = axis_phase.
    """
    system.check_level(i)
    system.check_level(j)
    if i == j:
        raise ValueError("transition needs two distinct levels")
    half = 0.5 * angle
    c = np.cos(half)
    s = np.sin(half)
    u = np.eye(system.dim, dtype=complex)
    u[i, i] = c
    u[j, j] = c
    u[i, j] = -1j * s * np.exp(-1j * axis_phase)
    u[j, i] = -1j * s * np.exp(1j * axis_phase)
    return UnitaryOp(u)


def pi_pulse(system: LevelSystem, i: int, j: int, axis_phase: float = 0.0) -> UnitaryOp:
    """Full population swap on the (i, j) transition."""
    return transition_rotation(system, i, j, np.pi, axis_phase)


def free_phase(system: LevelSystem, integrated_field: float) -> UnitaryOp:
    """Free dephasing propagator for a given integrated field (T*s).

    Diagonal with entries exp(-i * sensitivities[k] * integrated_field).
    """
    phases = -system.sensitivity_array() * integrated_field
    return UnitaryOp(np.diag(np.exp(1j * phases)))


def apply(op: UnitaryOp, state: PureState) -> PureState:
    if op.dim != state.dim:
        raise ValueError(f"operator dim {op.dim} does not match state dim {state.dim}")
    return PureState(op.matrix @ state.amplitudes)


def retrieval_fidelity(prepared: PureState, final: PureState) -> float:
    """|<prepared|final>|^2, clipped into [0, 1] against roundoff."""
    if prepared.dim != final.dim:
        raise ValueError("states have different dimensions")
    overlap = np.vdot(prepared.amplitudes, final.amplitudes)
    return float(np.clip(abs(overlap) ** 2, 0.0, 1.0))
