"""Server-side OTP verification.

The lead digit tells the server the token counter mod 10. Together with the
submission time this pins the counter down to one value, so a single body
comparison authenticates the token.
"""

from __future__ import annotations

import enum
import hashlib
import hmac
import json
import threading
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterator

from .digitizer import body as make_body
from .timebase import STEP, Instant
from .token import Otp

DEFAULT_MAX_DELAY = 480
DEFAULT_MAX_ATTEMPTS = 3
# the counter window {B-9, ..., B} has one candidate per residue mod 10
WINDOW = 10


class Reason(str, enum.Enum):
    OK = "ok"
    BAD_STATIC = "bad-static"
    BAD_OTP = "bad-otp"
    REPLAY = "replay"
    STALE = "stale"
    LOCKED = "locked"
    UNKNOWN_CUSTOMER = "unknown-customer"


class RegistryError(Exception):
    pass


class DuplicateCustomer(RegistryError):
    pass


class UnknownCustomer(RegistryError, KeyError):
    pass


@dataclass(frozen=True)
class VerifierConfig:
    """Verification policy.

    ``max_delay=None`` disables the staleness check, ``replay_check=False``
    disables the high-water check and ``lockout=False`` stops failure
    counting. All three off is the bare recover-and-compare protocol.
    """

    max_delay: int | None = DEFAULT_MAX_DELAY
    replay_check: bool = True
    lockout: bool = True


BARE = VerifierConfig(max_delay=None, replay_check=False, lockout=False)


@dataclass(frozen=True)
class VerifyOutcome:
    status: str
    reason: Reason
    recovered_a: int | None = None
    estimated_gen_time: Instant | None = None
    comparisons: int = 0

    @property
    def accepted(self) -> bool:
        return self.status == "accept"

    def summary(self) -> dict:
        return {
            "status": self.status,
            "reason": self.reason.value,
            "recovered_A": self.recovered_a,
        }


def hash_static(credential: str) -> str:
    return hashlib.sha256(credential.encode()).hexdigest()


@dataclass
class CustomerRecord:
    id: str
    static_digest: str
    key: bytes
    t0: Instant
    a0: int
    high_water: int
    max_attempts: int = DEFAULT_MAX_ATTEMPTS
    failures: int = 0
    locked: bool = False

    def check_static(self, credential: str) -> bool:
        return hmac.compare_digest(self.static_digest, hash_static(credential))

    def record_failure(self) -> None:
        self.failures = min(self.failures + 1, self.max_attempts)
        if self.failures >= self.max_attempts:
            self.locked = True

    def reset(self) -> None:
        self.failures = 0
        self.locked = False

    def to_json(self) -> dict:
        d = asdict(self)
        d["key"] = self.key.hex()
        return d

    @classmethod
    def from_json(cls, d: dict) -> "CustomerRecord":
        d = dict(d)
        d["key"] = bytes.fromhex(d["key"])
        return cls(**d)


def provision(
    id: str,
    key: bytes,
    t0: Instant,
    a0: int,
    static_credential: str,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
) -> CustomerRecord:
    if max_attempts < 1:
        raise ValueError("max_attempts must be positive")
    return CustomerRecord(
        id=id,
        static_digest=hash_static(static_credential),
        key=bytes(key),
        t0=t0,
        a0=a0,
        high_water=a0,
        max_attempts=max_attempts,
    )


def compute_B(t_prime: Instant, t0: Instant) -> int:
    """Smallest B with (t' - t0)/64 < B."""
    if t_prime < t0:
        raise ValueError(f"submission time {t_prime} precedes t0={t0}")
    return (t_prime - t0) // STEP + 1


def recover_f(lead: int, a0: int, B: int) -> int:
    """The step count in {B-9, ..., B} congruent to ``lead - a0`` mod 10."""
    return B - ((B - (lead - a0)) % WINDOW)


def _reject(record: CustomerRecord, config: VerifierConfig, reason: Reason, **kw) -> VerifyOutcome:
    if config.lockout:
        record.record_failure()
    return VerifyOutcome("reject", reason, **kw)


def verify(
    record: CustomerRecord,
    otp: Otp,
    t_prime: Instant,
    config: VerifierConfig = VerifierConfig(),
) -> VerifyOutcome:
    """Verify ``otp`` submitted at ``t_prime``, updating ``record`` in place.

    Steps: locked check, counter window from the submission time, counter
    from the lead digit, staleness against the estimated generation time,
    high-water replay check, then exactly one body comparison.
    """
    if record.locked:
        return VerifyOutcome("reject", Reason.LOCKED)
    if t_prime < record.t0:
        return _reject(record, config, Reason.BAD_OTP)
    f = recover_f(otp.lead, record.a0, compute_B(t_prime, record.t0))
    a = record.a0 + f
    t_hat = record.t0 + STEP * f
    info = {"recovered_a": a, "estimated_gen_time": t_hat}
    if config.max_delay is not None and t_prime - t_hat >= config.max_delay:
        return _reject(record, config, Reason.STALE, **info)
    if config.replay_check and a <= record.high_water:
        return _reject(record, config, Reason.REPLAY, **info)
    if a < 0 or not hmac.compare_digest(make_body(record.key, a), otp.body):
        return _reject(record, config, Reason.BAD_OTP, comparisons=int(a >= 0), **info)
    record.high_water = max(record.high_water, a)
    record.failures = 0
    return VerifyOutcome("accept", Reason.OK, comparisons=1, **info)


@dataclass
class Registry:
    """Customer records with per-customer serialisation."""

    config: VerifierConfig = field(default_factory=VerifierConfig)
    records: dict[str, CustomerRecord] = field(default_factory=dict)
    _locks: dict[str, threading.Lock] = field(default_factory=dict, repr=False)
    _guard: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def add(self, record: CustomerRecord) -> CustomerRecord:
        with self._guard:
            if record.id in self.records:
                raise DuplicateCustomer(record.id)
            self.records[record.id] = record
            self._locks[record.id] = threading.Lock()
        return record

    def provision(self, id: str, key: bytes, t0: Instant, a0: int, static_credential: str,
                  max_attempts: int = DEFAULT_MAX_ATTEMPTS) -> CustomerRecord:
        return self.add(provision(id, key, t0, a0, static_credential, max_attempts))

    def get(self, id: str) -> CustomerRecord:
        try:
            return self.records[id]
        except KeyError:
            raise UnknownCustomer(id) from None

    @contextmanager
    def locked(self, id: str) -> Iterator[CustomerRecord]:
        record = self.get(id)
        with self._locks[id]:
            yield record

    def authenticate(self, customer_id: str, static_credential: str, otp: str, at: Instant,
                     on_outcome: Callable[[VerifyOutcome], None] | None = None) -> VerifyOutcome:
        """Full login check; ``on_outcome`` runs while the customer is still locked."""
        if customer_id not in self.records:
            outcome = VerifyOutcome("reject", Reason.UNKNOWN_CUSTOMER)
            if on_outcome:
                on_outcome(outcome)
            return outcome
        with self.locked(customer_id) as rec:
            outcome = self._authenticate(rec, static_credential, otp, at)
            if on_outcome:
                on_outcome(outcome)
            return outcome

    def _authenticate(self, rec: CustomerRecord, static_credential: str, otp: str,
                      at: Instant) -> VerifyOutcome:
        if rec.locked:
            return VerifyOutcome("reject", Reason.LOCKED)
        if not rec.check_static(static_credential):
            return _reject(rec, self.config, Reason.BAD_STATIC)
        try:
            parsed = Otp.parse(otp)
        except (ValueError, TypeError):
            return _reject(rec, self.config, Reason.BAD_OTP)
        return verify(rec, parsed, at, self.config)

    def reset(self, customer_id: str) -> None:
        with self.locked(customer_id) as rec:
            rec.reset()

    def state(self) -> dict[str, dict]:
        return {k: r.to_json() for k, r in sorted(self.records.items())}

    # snapshot file: one JSON record per line
    def save_snapshot(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in self.state().values():
                fh.write(json.dumps(rec, sort_keys=True) + "\n")

    @classmethod
    def load_snapshot(cls, path: str | Path, config: VerifierConfig | None = None) -> "Registry":
        reg = cls(config=config or VerifierConfig())
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    reg.add(CustomerRecord.from_json(json.loads(line)))
                except (ValueError, TypeError, KeyError) as exc:
                    raise RegistryError(f"{path}:{lineno}: bad snapshot record ({exc})") from exc
        return reg
