"""Keyed map from step counter to the 5-digit OTP body.

Twenty pseudo-random bits are cut into five nibbles and each nibble is
reduced mod 10, so digits 0-5 occur with probability 1/8 and 6-9 with 1/16.
The bits come from HMAC-SHA-1 over the 8-byte big-endian counter; the real
token's cipher is unknown and only the digitisation matters here.
"""

from __future__ import annotations

import functools
import hashlib
import hmac
from importlib import resources
from pathlib import Path
from typing import Iterator, NamedTuple

MIN_KEY_BYTES = 16
BODY_DIGITS = 5


class TokenKey(bytes):
    """Secret key bytes, at least 16 long."""

    def __new__(cls, value: bytes | bytearray | str) -> "TokenKey":
        if isinstance(value, str):
            value = bytes.fromhex(value)
        if len(value) < MIN_KEY_BYTES:
            raise ValueError(f"key must be at least {MIN_KEY_BYTES} bytes, got {len(value)}")
        return super().__new__(cls, value)

    @property
    def hex_str(self) -> str:
        return self.hex()


@functools.lru_cache(maxsize=4096)
def _keyed(key: bytes) -> "hmac.HMAC":
    # keyed template; copying it skips re-deriving the pads per counter
    return hmac.new(key, digestmod=hashlib.sha1)


def prf20(key: bytes, counter: int) -> int:
    """First 20 bits (MSB first) of HMAC-SHA-1(key, counter)."""
    if counter < 0:
        raise ValueError("counter must be non-negative")
    mac = _keyed(bytes(key)).copy()
    mac.update(counter.to_bytes(8, "big"))
    return int.from_bytes(mac.digest()[:3], "big") >> 4


def nibbles(bits: int) -> tuple[int, ...]:
    return tuple((bits >> (4 * (BODY_DIGITS - 1 - i))) & 0xF for i in range(BODY_DIGITS))


def _digit_table(width: int) -> tuple[str, ...]:
    return tuple(
        "".join(str((v >> (4 * (width - 1 - i)) & 0xF) % 10) for i in range(width))
        for v in range(1 << (4 * width))
    )


# lookup for the top three and bottom two nibbles
_HIGH3 = _digit_table(3)
_LOW2 = _digit_table(2)


def body_from_bits(bits: int) -> str:
    """Five digits, one per nibble (most significant first), each nibble mod 10."""
    if not 0 <= bits < 1 << 20:
        raise ValueError("expected a 20-bit value")
    return _HIGH3[bits >> 8] + _LOW2[bits & 0xFF]


def body(key: bytes, counter: int) -> str:
    """The 5-digit body for ``counter``; identical on token and verifier."""
    return body_from_bits(prf20(key, counter))


class Vector(NamedTuple):
    key: bytes
    counter: int
    expected: str


def read_vectors(path: str | Path | None = None, name: str = "digitizer_vectors.txt") -> Iterator[Vector]:
    """Read a test-vector file: ``hexkey counter digits`` per line, ``#`` comments."""
    if path is None:
        text = resources.files("otpforge.data").joinpath(name).read_text()
    else:
        text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3 or not parts[2].isdigit():
            raise ValueError(f"line {lineno}: expected 'hexkey counter digits'")
        yield Vector(bytes.fromhex(parts[0]), int(parts[1]), parts[2])
