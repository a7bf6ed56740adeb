"""Pulse sequence descriptions and the builders for the standard protocols.

A sequence is a time-ordered tuple of events: instantaneous pulses and
free-evolution waits.  The waits must tile the interval [0, total_duration]
exactly, and every pulse must sit on a wait boundary; the constructor
enforces this so downstream propagation can walk the event list without
re-deriving any timing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Pulse",
    "Wait",
    "SequenceSpec",
    "build_bare_wait",
    "build_ramsey",
    "build_mldd",
    "build_cyclic_mldd",
]

_TIME_RTOL = 1e-12
_TIME_ATOL = 1e-18


def _same_time(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=_TIME_RTOL, abs_tol=_TIME_ATOL)


@dataclass(frozen=True)
class Pulse:
    """Instantaneous rotation on the (i, j) transition at time ``at``."""

    i: int
    j: int
    at: float
    angle: float = math.pi
    axis_phase: float = 0.0

    def __post_init__(self) -> None:
        if self.i == self.j:
            raise ValueError("pulse needs two distinct levels")
        if min(self.i, self.j) < 0:
            raise ValueError("level indices must be non-negative")
        if self.at < 0.0:
            raise ValueError("pulse time must be non-negative")


@dataclass(frozen=True)
class Wait:
    """Free evolution over [start, stop]."""

    start: float
    stop: float

    def __post_init__(self) -> None:
        if self.start < 0.0 or self.stop < self.start:
            raise ValueError(f"bad wait interval [{self.start}, {self.stop}]")


@dataclass(frozen=True)
class SequenceSpec:
    """Validated, time-ordered event list.

    ``repetitions`` is the decoupling repetition count N of the protocol
    that produced the sequence (0 for bare evolution and Ramsey); it is
    carried along for bookkeeping, not used during propagation.
    """

    events: tuple[Pulse | Wait, ...]
    total_duration: float
    repetitions: int

    def __post_init__(self) -> None:
        if self.total_duration < 0.0:
            raise ValueError("total duration must be non-negative")
        if self.repetitions < 0:
            raise ValueError("repetition count must be non-negative")
        cursor = 0.0
        for ev in self.events:
            if isinstance(ev, Wait):
                if not _same_time(ev.start, cursor):
                    raise ValueError(
                        f"wait starts at {ev.start!r} but previous events end at {cursor!r}"
                    )
                cursor = ev.stop
            elif isinstance(ev, Pulse):
                if not _same_time(ev.at, cursor):
                    raise ValueError(
                        f"pulse at {ev.at!r} is not on the current wait boundary {cursor!r}"
                    )
            else:
                raise TypeError(f"unknown event type {type(ev).__name__}")
        if not _same_time(cursor, self.total_duration):
            raise ValueError(
                f"waits cover [0, {cursor!r}] but total duration is {self.total_duration!r}"
            )

    @property
    def n_pulses(self) -> int:
        return sum(1 for ev in self.events if isinstance(ev, Pulse))

    def max_level(self) -> int:
        return max((max(ev.i, ev.j) for ev in self.events if isinstance(ev, Pulse)), default=0)


def build_bare_wait(total_duration: float) -> SequenceSpec:
    """Free evolution only: the N=0 member of every decoupling family."""
    return SequenceSpec(
        events=(Wait(0.0, total_duration),),
        total_duration=total_duration,
        repetitions=0,
    )


def build_ramsey(i: int, j: int, wait: float) -> SequenceSpec:
    """Two pi/2 pulses on one transition separated by a free wait."""
    events = (
        Pulse(i, j, 0.0, angle=math.pi / 2),
        Wait(0.0, wait),
        Pulse(i, j, wait, angle=math.pi / 2),
    )
    return SequenceSpec(events=events, total_duration=wait, repetitions=0)


def build_mldd(levels: tuple[int, int, int], tau: float, repetitions: int) -> SequenceSpec:
    """Three-level decoupling block, repeated.

    One repetition with levels (l, m, n) and segment length tau is, in
    time order:

        pi(l,m) | tau | pi(l,m) pi(m,n) | tau | pi(m,n) pi(l,n) | tau | pi(l,n)

    i.e. each of the three transition pairs brackets one free segment,
    and consecutive segments share a boundary where two pulses fire
    back to back.  N repetitions concatenate, for 6N pulses over a
    total duration of 3N tau.
    """
    l, m, n = levels
    if len({l, m, n}) != 3:
        raise ValueError("decoupling needs three distinct levels")
    if tau <= 0.0:
        raise ValueError("segment length must be positive")
    if repetitions < 1:
        raise ValueError("repetition count must be at least 1")
    pairs = ((l, m), (m, n), (l, n))
    events: list[Pulse | Wait] = []
    for rep in range(repetitions):
        for seg in range(3):
            t0 = (3 * rep + seg) * tau
            t1 = (3 * rep + seg + 1) * tau
            a, b = pairs[seg]
            events.append(Pulse(a, b, t0))
            events.append(Wait(t0, t1))
            events.append(Pulse(a, b, t1))
    return SequenceSpec(
        events=tuple(events),
        total_duration=(3 * repetitions) * tau,
        repetitions=repetitions,
    )


def build_cyclic_mldd(dim: int, tau: float, repetitions: int) -> SequenceSpec:
    """d-level generalization built from nearest-neighbour swaps.

    Each repetition has d free segments of length tau.  After every
    segment the full descending chain of swaps (d-2,d-1), ..., (1,2),
    (0,1) fires, which advances every level's occupancy by one step
    around the cycle i -> i+1 (mod d).  Over d segments each branch of a
    superposition spends exactly tau in every level, so a constant field
    rephases completely.  No pulse fires at t=0; one repetition carries
    d(d-1) pulses.
    """
    if dim < 2:
        raise ValueError("cyclic decoupling needs at least two levels")
    if tau <= 0.0:
        raise ValueError("segment length must be positive")
    if repetitions < 1:
        raise ValueError("repetition count must be at least 1")
    chain = [(j, j + 1) for j in range(dim - 2, -1, -1)]
    events: list[Pulse | Wait] = []
    for rep in range(repetitions):
        for seg in range(dim):
            t0 = (dim * rep + seg) * tau
            t1 = (dim * rep + seg + 1) * tau
            events.append(Wait(t0, t1))
            for a, b in chain:
                events.append(Pulse(a, b, t1))
    return SequenceSpec(
        events=tuple(events),
        total_duration=(dim * repetitions) * tau,
        repetitions=repetitions,
    )
