"""Emulated hardware token: press handling, display window and OTP emission."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .digitizer import body as make_body
from .timebase import Instant, SyncModel

# presses closer than this to the last generation re-show the current OTP
REGENERATE_AFTER = 50


@dataclass(frozen=True)
class Otp:
    lead: int
    body: str

    def __post_init__(self) -> None:
        if not 0 <= self.lead <= 9:
            raise ValueError(f"lead digit out of range: {self.lead}")
        if len(self.body) != 5 or not self.body.isdigit():
            raise ValueError(f"body must be 5 decimal digits: {self.body!r}")

    def __str__(self) -> str:
        return f"{self.lead}{self.body}"

    @classmethod
    def parse(cls, text: str) -> "Otp":
        if len(text) != 6 or not text.isdigit() or not text.isascii():
            raise ValueError(f"OTP must be 6 decimal digits: {text!r}")
        return cls(int(text[0]), text[1:])


class PressKind(str, enum.Enum):
    FRESH = "fresh"
    REDISPLAY = "redisplay"


@dataclass
class TokenState:
    key: bytes
    sync: SyncModel
    t0: Instant
    a0: int
    a_counter: int
    last_gen: Instant
    display: Otp | None = None
    shown_at: Instant | None = None

    def press(self, t: Instant) -> tuple[Otp, PressKind]:
        """Press the button at ``t`` (mutating); see :func:`press`."""
        if t < self.last_gen:
            raise ValueError(f"time went backwards: {t} < {self.last_gen}")
        if t - self.last_gen < REGENERATE_AFTER and self.display is not None:
            self.shown_at = t
            return self.display, PressKind.REDISPLAY
        self.a_counter += self.sync.step_delta(t, self.last_gen)
        self.last_gen = t
        self.display = Otp(self.a_counter % 10, make_body(self.key, self.a_counter))
        self.shown_at = t
        return self.display, PressKind.FRESH


def new_token(key: bytes, sync: SyncModel, t0: Instant, a0: int) -> TokenState:
    return TokenState(key=bytes(key), sync=sync, t0=t0, a0=a0, a_counter=a0, last_gen=t0)


def press(state: TokenState, t: Instant) -> tuple[TokenState, Otp, PressKind]:
    """Functional press: returns a new state, leaving ``state`` untouched.

    A press less than 50 s after the last generation re-shows the current
    OTP. Otherwise the counter advances by the step count since the last
    generation; a zero step reproduces the previous OTP exactly.
    """
    nxt = replace(state)
    otp, kind = nxt.press(t)
    return nxt, otp, kind


def lead_pattern(otps: Sequence[Otp | str]) -> list[int]:
    """Consecutive lead-digit differences mod 10."""
    if len(otps) < 2:
        raise ValueError("need at least two OTPs for a pattern")
    leads = [o.lead if isinstance(o, Otp) else int(str(o)[0]) for o in otps]
    return [(b - a) % 10 for a, b in zip(leads, leads[1:])]


def run_presses(state: TokenState, schedule: Iterable[Instant]) -> list[tuple[Instant, Otp, PressKind]]:
    """Press ``state`` at each instant in ``schedule`` (in place)."""
    out = []
    for t in schedule:
        otp, kind = state.press(t)
        out.append((t, otp, kind))
    return out
