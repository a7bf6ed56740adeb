"""Hyperfine Zeeman structure for a J = 1/2 atom: the exact two-manifold
closed form for level energies, analytic field sensitivities, and the
construction of the LevelSystem the simulation modules consume.

Conventions (documented because they are the dominant error source):

- Energies are in Hz throughout.
- The hyperfine constant A may be negative (inverted manifolds); the
  signed splitting dW = A (I + 1/2) is used as is and the branch sign is
  chosen by F, so no magnitude juggling is needed.
- g_I is quoted in the electron Bohr-magneton energy convention: the
  nuclear Zeeman term is g_I * mu_B * m_F * B; see the data file for the
  calibrated values and their provenance.
- Stretched states |m_F| = I + 1/2 use the exact linear branch rather
  than the square root, which is only |1 +- x| there.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np
import yaml
from scipy.constants import h as PLANCK_H
from scipy.constants import physical_constants

from .core import LevelSystem

__all__ = [
    "HyperfineAtom",
    "ZeemanLevel",
    "load_atom",
    "level_energy",
    "level_sensitivity",
    "level_snapshot",
    "all_levels",
    "transition_frequency",
    "sensitivities_for",
    "system_for",
]

MU_B = physical_constants["Bohr magneton"][0]  # J/T


@dataclass(frozen=True)
class HyperfineAtom:
    """Ground-manifold constants of one S = 1/2 species."""

    name: str
    nuclear_spin: float
    hyperfine_a_hz: float
    g_j: float
    g_i: float

    def __post_init__(self) -> None:
        twice = round(2 * self.nuclear_spin)
        if twice < 1 or abs(2 * self.nuclear_spin - twice) > 1e-12:
            raise ValueError("nuclear spin must be a positive half-integer")
        if self.hyperfine_a_hz == 0.0:
            raise ValueError("hyperfine constant must be nonzero")

    @property
    def f_values(self) -> tuple[float, float]:
        return (self.nuclear_spin - 0.5, self.nuclear_spin + 0.5)


@dataclass(frozen=True)
class ZeemanLevel:
    """One |F, mF> level evaluated at a specific field."""

    f: float
    m_f: float
    energy_hz: float
    sensitivity_hz_per_t: float


def load_atom(name: str) -> HyperfineAtom:
    """Load a species from the packaged constants file."""
    text = resources.files("quditdd").joinpath("data/atoms.yaml").read_text()
    table = yaml.safe_load(text)
    if name not in table:
        raise KeyError(f"unknown atom {name!r}; available: {sorted(table)}")
    row = table[name]
    return HyperfineAtom(
        name=name,
        nuclear_spin=float(row["nuclear_spin"]),
        hyperfine_a_hz=float(row["hyperfine_a_hz"]),
        g_j=float(row["g_j"]),
        g_i=float(row["g_i"]),
    )


def _check_level(atom: HyperfineAtom, f: float, m_f: float) -> None:
    if f not in atom.f_values:
        raise ValueError(f"F={f} is not {atom.f_values[0]} or {atom.f_values[1]}")
    if abs(m_f) > f + 1e-12 or abs(round(2 * m_f) - 2 * m_f) > 1e-12:
        raise ValueError(f"invalid projection mF={m_f} for F={f}")
    if abs(round(f - m_f) - (f - m_f)) > 1e-12:
        raise ValueError(f"mF={m_f} has the wrong half-integer parity for F={f}")


def _x_parameter(atom: HyperfineAtom, b_tesla: float) -> float:
    d_w = atom.hyperfine_a_hz * (atom.nuclear_spin + 0.5)
    return (atom.g_j - atom.g_i) * MU_B * b_tesla / (PLANCK_H * d_w)


def level_energy(atom: HyperfineAtom, f: float, m_f: float, b_tesla: float) -> float:
    """Exact |F, mF> energy in Hz at field b_tesla."""
    _check_level(atom, f, m_f)
    if b_tesla < 0.0:
        raise ValueError("field must be non-negative")
    spin_i = atom.nuclear_spin
    d_w = atom.hyperfine_a_hz * (spin_i + 0.5)
    x = _x_parameter(atom, b_tesla)
    common = -d_w / (2.0 * (2.0 * spin_i + 1.0)) + atom.g_i * MU_B * m_f * b_tesla / PLANCK_H
    if abs(m_f) == spin_i + 0.5:
        # stretched states exist only in the upper-F manifold
        return common + (d_w / 2.0) * (1.0 + np.sign(m_f) * x)
    sign = 1.0 if f == spin_i + 0.5 else -1.0
    root = np.sqrt(1.0 + 4.0 * m_f * x / (2.0 * spin_i + 1.0) + x * x)
    return common + sign * (d_w / 2.0) * root


def level_sensitivity(atom: HyperfineAtom, f: float, m_f: float, b_tesla: float) -> float:
    """Analytic dE/dB in Hz/T (not a finite difference)."""
    _check_level(atom, f, m_f)
    if b_tesla <= 0.0:
        raise ValueError("sensitivity is evaluated at positive field")
    spin_i = atom.nuclear_spin
    d_w = atom.hyperfine_a_hz * (spin_i + 0.5)
    x = _x_parameter(atom, b_tesla)
    dx_db = (atom.g_j - atom.g_i) * MU_B / (PLANCK_H * d_w)
    common = atom.g_i * MU_B * m_f / PLANCK_H
    if abs(m_f) == spin_i + 0.5:
        return common + (d_w / 2.0) * np.sign(m_f) * dx_db
    sign = 1.0 if f == spin_i + 0.5 else -1.0
    root = np.sqrt(1.0 + 4.0 * m_f * x / (2.0 * spin_i + 1.0) + x * x)
    return common + sign * (d_w / 4.0) * (4.0 * m_f / (2.0 * spin_i + 1.0) + 2.0 * x) * dx_db / root


def level_snapshot(atom: HyperfineAtom, f: float, m_f: float, b_tesla: float) -> ZeemanLevel:
    return ZeemanLevel(
        f=f,
        m_f=m_f,
        energy_hz=level_energy(atom, f, m_f, b_tesla),
        sensitivity_hz_per_t=level_sensitivity(atom, f, m_f, b_tesla),
    )


def all_levels(atom: HyperfineAtom, b_tesla: float) -> list[ZeemanLevel]:
    """All 2(2I+1) ground-manifold levels, upper F first, descending mF."""
    out = []
    for f in (atom.f_values[1], atom.f_values[0]):
        m = f
        while m >= -f - 1e-12:
            out.append(level_snapshot(atom, f, m, b_tesla))
            m -= 1.0
    return out


def transition_frequency(
    atom: HyperfineAtom, a: tuple[float, float], b: tuple[float, float], b_tesla: float
) -> float:
    """|E_a - E_b| in Hz."""
    return abs(
        level_energy(atom, a[0], a[1], b_tesla) - level_energy(atom, b[0], b[1], b_tesla)
    )


def sensitivities_for(
    atom: HyperfineAtom, levels, b_tesla: float
) -> np.ndarray:
    """Per-level dephasing sensitivities in rad/s/T for (F, mF) tuples."""
    return np.array(
        [2.0 * np.pi * level_sensitivity(atom, f, m_f, b_tesla) for f, m_f in levels]
    )


def system_for(atom: HyperfineAtom, levels, b_tesla: float) -> LevelSystem:
    """LevelSystem for a tuple of (F, mF) working levels at one field."""
    labels = tuple(f"F{f:g}mF{m_f:g}" for f, m_f in levels)
    if len(set(levels)) != len(levels):
        raise ValueError("working levels must be distinct")
    return LevelSystem(
        labels=labels, sensitivities=tuple(sensitivities_for(atom, levels, b_tesla))
    )
