"""Forgery attack: analytic success probability and Monte Carlo campaigns.

The forger draws body digits from {0..5} only. Since those digits carry
probability 1/8 each in a genuine body, one forged attempt matches with
probability 8**-5 instead of 10**-5.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .timebase import STEP, SyncModel
from .token import Otp, new_token
from .digitizer import body as true_body
from .verifier import BARE, CustomerRecord, VerifierConfig, compute_B, provision, recover_f, verify

MATCH_SPACE = 8**5
YEAR = 365 * 24 * 3600
STRATEGIES = ("burst", "stealth")
LEAD_MODES = ("track", "uniform")

_DIGITS = np.array([ord(c) for c in "0123456789"], dtype=np.uint8)


def p_success(x: int) -> float:
    """Probability that at least one of ``x`` independent forgeries succeeds."""
    if x < 0:
        raise ValueError("x must be non-negative")
    return -math.expm1(x * math.log1p(-1 / MATCH_SPACE))


def truncate(p: float, places: int = 4) -> float:
    """Cut ``p`` to ``places`` decimals the way the published table does."""
    scale = 10**places
    return math.floor(p * scale + 1e-9) / scale


def forge(rng: np.random.Generator, lead: int | None = None, digits: int = 6) -> Otp:
    """Random lead (unless given) and five body digits from ``range(digits)``."""
    if lead is None:
        lead = int(rng.integers(10))
    body = "".join(str(d) for d in rng.integers(digits, size=5))
    return Otp(lead, body)


def forge_bodies(rng: np.random.Generator, n: int, digits: int = 6) -> list[str]:
    """``n`` forged bodies at once; same law as :func:`forge`."""
    raw = _DIGITS[rng.integers(digits, size=(n, 5))]
    return [bytes(row).decode() for row in raw]


# single-attempt rate ---------------------------------------------------------

@dataclass
class RateResult:
    trials: int
    accepted: int
    by_lead_trials: list[int]
    by_lead_accepted: list[int]
    comparisons: int

    @property
    def rate(self) -> float:
        return self.accepted / self.trials

    def sigma(self, p: float) -> float:
        return math.sqrt(p * (1 - p) / self.trials)


def per_attempt_rate(trials: int, rng: np.random.Generator, body_digits: int = 6,
                     oracle: bool = False, chunk: int = 200_000,
                     record: CustomerRecord | None = None) -> RateResult:
    """Fraction of forgeries accepted by the bare recover-and-compare verifier.

    Each trial is submitted in its own 64 s window so the expected body is
    fresh every time. ``oracle=True`` forges with the true key instead.
    """
    if record is None:
        key = rng.bytes(20)
        record = provision("target", key, 0, int(rng.integers(10_000)), "x", max_attempts=1)
    base = record.t0 + 10 * STEP
    accepted = comparisons = 0
    by_trials, by_acc = [0] * 10, [0] * 10
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        leads = rng.integers(10, size=n).tolist()
        offsets = rng.integers(STEP, size=n).tolist()
        bodies = forge_bodies(rng, n, body_digits)
        for j in range(n):
            lead = leads[j]
            t_prime = base + STEP * (done + j) + offsets[j]
            if oracle:
                a = record.a0 + recover_f(lead, record.a0, compute_B(t_prime, record.t0))
                otp = Otp(lead, true_body(record.key, a))
            else:
                otp = Otp(lead, bodies[j])
            out = verify(record, otp, t_prime, BARE)
            comparisons += out.comparisons
            by_trials[lead] += 1
            if out.accepted:
                accepted += 1
                by_acc[lead] += 1
        done += n
    return RateResult(trials, accepted, by_trials, by_acc, comparisons)


# campaigns -------------------------------------------------------------------

@dataclass(frozen=True)
class CampaignConfig:
    customers: int
    r: int = 3
    auths_per_year: int = 120
    years: float = 1.0
    seed: int = 0
    strategy: str = "burst"
    attempts_per_auth: int | None = None
    lead_mode: str = "track"
    body_digits: int = 6
    workers: int = 1

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if self.lead_mode not in LEAD_MODES:
            raise ValueError(f"lead_mode must be one of {LEAD_MODES}")
        if self.customers < 0 or self.r < 1 or self.auths_per_year < 1 or self.years <= 0:
            raise ValueError("customers, r, auths_per_year and years must be positive")
        if self.attempts_per_auth is not None and self.attempts_per_auth < 0:
            raise ValueError("attempts_per_auth must be non-negative")

    @property
    def attempts(self) -> int:
        """Forged attempts after each genuine authentication."""
        if self.attempts_per_auth is not None:
            return self.attempts_per_auth
        return self.r if self.strategy == "burst" else self.r - 1

    @property
    def auths(self) -> int:
        return round(self.auths_per_year * self.years)


@dataclass
class CustomerOutcome:
    index: int
    attempts: int
    compromised: bool
    compromised_at_auth: int | None
    lockouts: int
    genuine_rejects: int


@dataclass
class CampaignReport:
    config: CampaignConfig
    attempts: int
    compromised: int
    expected: float
    per_customer: list[CustomerOutcome] = field(default_factory=list, repr=False)

    @property
    def sigma(self) -> float:
        n = self.config.customers
        p = self.expected / n if n else 0.0
        return math.sqrt(n * p * (1 - p))

    @property
    def lockouts(self) -> int:
        return sum(c.lockouts for c in self.per_customer)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["customer", "attempts", "compromised", "compromised_at_auth", "lockouts",
                    "genuine_rejects"])
        for c in self.per_customer:
            w.writerow([c.index, c.attempts, int(c.compromised),
                        "" if c.compromised_at_auth is None else c.compromised_at_auth,
                        c.lockouts, c.genuine_rejects])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            **{k: v for k, v in asdict(self.config).items()},
            "attempts_per_customer": self.config.attempts * self.config.auths,
            "total_attempts": self.attempts,
            "compromised": self.compromised,
            "expected": round(self.expected, 4),
            "sigma": round(self.sigma, 4),
            "lockouts": self.lockouts,
        }


def customer_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def simulate_customer(cfg: CampaignConfig, index: int,
                      verifier_config: VerifierConfig = VerifierConfig()) -> CustomerOutcome:
    """One customer's year(s): genuine logins each followed by a forgery series.

    Forgeries arrive more than 64 s after the genuine login. In ``track``
    mode the forger sets the lead to the last genuine lead advanced by the
    whole steps elapsed since then, so the server's recovered counter is
    newer than the one just accepted; ``uniform`` draws the lead at random.
    """
    rng = customer_rng(cfg.seed, index)
    key = rng.bytes(20)
    phase = int(rng.integers(STEP))
    a0 = int(rng.integers(10_000))
    token = new_token(key, SyncModel(phase), 0, a0)
    rec = provision(f"c{index}", key, 0, a0, "static", max_attempts=cfg.r)
    n_auth, k = cfg.auths, cfg.attempts
    spacing = max(YEAR // cfg.auths_per_year, 4 * STEP)
    jitter = rng.integers(0, spacing // 2, size=n_auth).tolist()
    delays = rng.integers(1, 60, size=n_auth).tolist()
    bodies = forge_bodies(rng, n_auth * k, cfg.body_digits)
    leads = rng.integers(10, size=n_auth * k).tolist()
    attempts = lockouts = genuine_rejects = 0
    for i in range(n_auth):
        t_press = STEP + i * spacing + jitter[i]
        otp, _ = token.press(t_press)
        t_sub = t_press + delays[i]
        if rec.locked:
            rec.reset()
        if not verify(rec, otp, t_sub, verifier_config).accepted:
            genuine_rejects += 1
        for j in range(k):
            t_forge = t_sub + STEP + 1 + j
            if cfg.lead_mode == "track":
                lead = (otp.lead + (t_forge - t_press) // STEP) % 10
            else:
                lead = leads[i * k + j]
            forged = Otp(lead, bodies[i * k + j])
            attempts += 1
            if verify(rec, forged, t_forge, verifier_config).accepted:
                return CustomerOutcome(index, attempts, True, i, lockouts, genuine_rejects)
        if rec.locked:
            lockouts += 1
    return CustomerOutcome(index, attempts, False, None, lockouts, genuine_rejects)


def _simulate_block(args: tuple[CampaignConfig, int, int]) -> list[CustomerOutcome]:
    cfg, lo, hi = args
    return [simulate_customer(cfg, i) for i in range(lo, hi)]


def run_campaign(cfg: CampaignConfig,
                 simulate: Callable[[CampaignConfig, int], CustomerOutcome] | None = None) -> CampaignReport:
    """Attack ``cfg.customers`` customers; the result depends only on the seed.

    Each customer draws from its own RNG stream keyed by (seed, index), so
    the worker count changes wall time but not the report.
    """
    n = cfg.customers
    if simulate is not None or cfg.workers <= 1 or n < 2:
        sim = simulate or simulate_customer
        outcomes = [sim(cfg, i) for i in range(n)]
    else:
        bounds = np.linspace(0, n, cfg.workers * 4 + 1).astype(int)
        blocks = [(cfg, int(a), int(b)) for a, b in zip(bounds, bounds[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = [o for block in pool.map(_simulate_block, blocks) for o in block]
    outcomes.sort(key=lambda o: o.index)
    return CampaignReport(
        config=cfg,
        attempts=sum(o.attempts for o in outcomes),
        compromised=sum(o.compromised for o in outcomes),
        expected=n * p_success(cfg.attempts * cfg.auths),
        per_customer=outcomes,
    )


def yearly_table(rs: Sequence[int] = range(1, 7), auths_per_year: int = 120) -> list[tuple[int, float]]:
    return [(r, p_success(auths_per_year * r)) for r in rs]


def yearly_table_text(rows: Sequence[tuple[int, float]]) -> str:
    """Yearly success probability laid out as one row per quantity."""
    head = "r         " + "".join(f"{r:>8}" for r, _ in rows)
    body = "p(120 r)  " + "".join(f"{truncate(p):>8.4f}" for _, p in rows)
    return head + "\n" + body + "\n"


def yearly_table_csv(rows: Sequence[tuple[int, float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "attempts", "p_success", "p_success_4dp"])
    for r, p in rows:
        w.writerow([r, 120 * r, f"{p:.10f}", f"{truncate(p):.4f}"])
    return buf.getvalue()
