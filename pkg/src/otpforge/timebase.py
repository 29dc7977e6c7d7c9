"""Simulation time and the 64-second step counter shared by token and server.

Time is whole seconds since a scenario epoch. The step count between two
instants is the difference of a floor counter whose 64 s grid is shifted by
an integer ``phase``; this makes the count take one of two adjacent values
for a given elapsed time, depending on where the boundaries fall.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

STEP = 64

Instant = int


@dataclass(frozen=True)
class SyncModel:
    phase: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.phase < STEP:
            raise ValueError(f"phase must be in [0, {STEP}), got {self.phase}")

    def counter_at(self, t: Instant) -> int:
        return (t + self.phase) // STEP

    def step_delta(self, t_l: Instant, t_k: Instant) -> int:
        """Number of grid boundaries crossed going from ``t_k`` to ``t_l``."""
        if t_l < t_k:
            raise ValueError(f"reversed arguments: t_l={t_l} < t_k={t_k}")
        return self.counter_at(t_l) - self.counter_at(t_k)


def counter_at(model: SyncModel, t: Instant) -> int:
    return model.counter_at(t)


def step_delta(model: SyncModel, t_l: Instant, t_k: Instant) -> int:
    return model.step_delta(t_l, t_k)


def delta_probability(d: int) -> float:
    """P(step count over ``d`` seconds equals ceil(d/64)) for a uniform phase."""
    if d < 0:
        raise ValueError("d must be non-negative")
    return (d % STEP) / STEP


def fit_phases(times: list[Instant], deltas: list[int]) -> list[int]:
    """Phases under which consecutive ``times`` produce exactly ``deltas``."""
    if len(deltas) != len(times) - 1:
        raise ValueError("need one delta per consecutive pair of times")
    out = []
    for phase in range(STEP):
        m = SyncModel(phase)
        if all(m.step_delta(b, a) == d for a, b, d in zip(times, times[1:], deltas)):
            out.append(phase)
    return out


_CLOCK = re.compile(r"^\s*(?:(\d+):)?(\d+)(?:\.(\d+))?(\+?)\s*$")


def parse_duration(text: str | int | float, plus_offset: float = 0.5) -> float:
    """Parse ``"m:ss"``, ``"m:ss+"`` or raw seconds.

    A trailing ``+`` denotes the half-open second ``[s, s+1)`` and adds
    ``plus_offset`` (the midpoint by default).
    """
    if isinstance(text, (int, float)):
        return float(text)
    m = _CLOCK.match(text)
    if not m:
        raise ValueError(f"bad time value: {text!r}")
    minutes, secs, frac, plus = m.groups()
    value = int(minutes or 0) * 60 + int(secs)
    if frac:
        value += float("0." + frac)
    if plus:
        value += plus_offset
    return float(value)


def parse_instant(text: str | int, plus_offset: float = 0.5) -> Instant:
    """Like :func:`parse_duration` but truncated to the whole second."""
    return math.floor(parse_duration(text, plus_offset))


def press_schedule(interval: float, count: int, start: Instant = 0) -> list[Instant]:
    """Press instants for ``count`` presses spaced ``interval`` seconds apart.

    The interval may be fractional (e.g. 50.5 for "0:50+"); each press is
    quantised to the second it falls in.
    """
    return [start + math.floor(k * interval) for k in range(count)]
