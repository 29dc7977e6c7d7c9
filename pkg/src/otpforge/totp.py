"""Standard HOTP/TOTP (RFC 4226 / RFC 6238, SHA-1 only) as a cost baseline.

A TOTP server that tolerates transmission delay must try every time step in
its look-back window; :func:`totp_verify` reports how many it tried.
"""

from __future__ import annotations

import hmac
from dataclasses import dataclass

from .timebase import Instant


@dataclass(frozen=True)
class TotpParams:
    t0: Instant = 0
    step: int = 30
    digits: int = 6

    def __post_init__(self) -> None:
        if self.step <= 0:
            raise ValueError("step must be positive")


def totp_counter(now: Instant, params: TotpParams = TotpParams()) -> int:
    if now < params.t0:
        raise ValueError(f"now={now} precedes t0={params.t0}")
    return (now - params.t0) // params.step


def hotp(key: bytes, counter: int, digits: int = 6) -> str:
    if not 6 <= digits <= 8:
        raise ValueError("digits must be in [6, 8]")
    mac = hmac.digest(key, counter.to_bytes(8, "big"), "sha1")
    offset = mac[-1] & 0x0F
    code = int.from_bytes(mac[offset:offset + 4], "big") & 0x7FFFFFFF
    return str(code % 10**digits).zfill(digits)


def totp(key: bytes, now: Instant, params: TotpParams = TotpParams()) -> str:
    return hotp(key, totp_counter(now, params), params.digits)


def totp_verify(key: bytes, params: TotpParams, submitted: str, now: Instant,
                window: int) -> tuple[bool, int]:
    """Try counters T, T-1, ..., T-window; return (accepted, comparisons)."""
    if window < 0:
        raise ValueError("window must be non-negative")
    T = totp_counter(now, params)
    comparisons = 0
    for c in range(T, max(T - window, 0) - 1, -1):
        comparisons += 1
        if hmac.compare_digest(hotp(key, c, params.digits), submitted):
            return True, comparisons
    return False, comparisons


def window_for_delay(max_delay: int, step: int) -> int:
    """Look-back steps needed to accept anything generated within ``max_delay``."""
    return -(-max_delay // step)
