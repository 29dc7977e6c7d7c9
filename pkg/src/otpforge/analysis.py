"""Pattern and digit statistics for press traces.

Pressing every ``delta`` seconds makes the lead digit advance by
``floor(delta/64)`` or one more. The rarer of the two symbols splits the
pattern into runs whose lengths take two adjacent values, and the
last five digits follow the nibble-mod-10 law checked by chi-square.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .timebase import STEP, parse_duration
from .token import Otp, lead_pattern

SKEW_MODEL = (Fraction(1, 8),) * 6 + (Fraction(1, 16),) * 4
UNIFORM_MODEL = (Fraction(1, 10),) * 10
POSITIONS = "bcdef"

# upper-tail chi-square quantiles, keyed by (alpha, df)
CRITICAL = {
    (0.05, 1): 3.841, (0.05, 2): 5.991, (0.05, 3): 7.815, (0.05, 4): 9.488,
    (0.05, 5): 11.070, (0.05, 6): 12.592, (0.05, 7): 14.067, (0.05, 8): 15.507,
    (0.05, 9): 16.919, (0.05, 10): 18.307,
    (0.01, 1): 6.635, (0.01, 2): 9.210, (0.01, 3): 11.345, (0.01, 4): 13.277,
    (0.01, 5): 15.086, (0.01, 6): 16.812, (0.01, 7): 18.475, (0.01, 8): 20.090,
    (0.01, 9): 21.666, (0.01, 10): 23.209,
}

EXCLUDED_TABLES = frozenset({"1:00+"})  # rows contradict their own pattern column


class FixtureError(ValueError):
    pass


@dataclass
class PressTrace:
    label: str
    otps: list[str]
    # published pattern column, None where absent
    pattern: list[int | None] = field(default_factory=list)
    interval: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        for o in self.otps:
            if len(o) != 6 or not o.isdigit():
                raise FixtureError(f"{self.label}: not a 6-digit combination: {o!r}")
        if self.interval is None and self.label.endswith("+"):
            lo = parse_duration(self.label[:-1])
            self.interval = (lo, lo + 1)

    def observed_pattern(self) -> list[int]:
        """Published pattern if present, else lead differences."""
        published = self.pattern[1:]
        if published and all(p is not None for p in published):
            return list(published)
        return lead_pattern(self.otps)


@dataclass(frozen=True)
class RunSummary:
    runs: tuple[int, ...]
    minority_symbol: int
    majority_symbol: int | None

    @property
    def lengths(self) -> set[int]:
        return set(self.runs)


def split_runs(pattern: Sequence[int], terminator: int, drop_leading: bool = False) -> RunSummary:
    """Lengths of pattern segments that end with ``terminator``.

    A trailing segment with no terminator is not a run. With
    ``drop_leading`` the first segment is discarded too, since the trace may
    have started part-way through it.
    """
    if not pattern:
        raise ValueError("empty pattern")
    runs, n = [], 0
    for sym in pattern:
        n += 1
        if sym == terminator:
            runs.append(n)
            n = 0
    if drop_leading and runs:
        runs = runs[1:]
    others = Counter(s for s in pattern if s != terminator)
    majority = others.most_common(1)[0][0] if others else None
    return RunSummary(tuple(runs), terminator, majority)


def _larger_step_density(delta: float) -> Fraction:
    return Fraction(delta).limit_denominator(10**6) % STEP / STEP


def predict_symbols(delta: float) -> tuple[int, int]:
    """(terminator, other) pattern symbols for presses every ``delta`` s.

    The terminator is the rarer symbol: the smaller step when the larger
    step has density above one half, otherwise the larger step.
    """
    rho = _larger_step_density(delta)
    if rho == 0:
        raise ValueError(f"{delta} is a multiple of {STEP}: the pattern is constant")
    small = math.floor(delta / STEP)
    if rho >= Fraction(1, 2):
        return small % 10, (small + 1) % 10
    return (small + 1) % 10, small % 10


def predict_runs(delta: float) -> set[int]:
    """Possible run lengths ending at the rarer symbol."""
    rho = _larger_step_density(delta)
    if rho == 0:
        raise ValueError(f"{delta} is a multiple of {STEP}: no terminator occurs")
    q = min(rho, 1 - rho)
    return {math.floor(1 / q), math.ceil(1 / q)}


def predict_runs_range(lo: float, hi: float) -> tuple[int, float]:
    """Bounds (min, max) on run lengths for any delta in ``[lo, hi)``.

    ``max`` is ``inf`` when the range reaches a multiple of 64.
    """
    rl, rh = _larger_step_density(lo), _larger_step_density(hi)
    if math.floor(lo / STEP) != math.floor((hi - 1e-9) / STEP):
        raise ValueError("range straddles a multiple of 64")
    if rh == 0:
        rh = Fraction(1)
    if rl < Fraction(1, 2) < rh:
        raise ValueError("range straddles the density midpoint")
    qs = [min(rl, 1 - rl), min(rh, 1 - rh)]
    lo_run = math.floor(1 / max(qs))
    hi_run = math.inf if min(qs) == 0 else math.ceil(1 / min(qs))
    return lo_run, hi_run


def digit_histogram(traces: Iterable[PressTrace | Sequence[str]], dedupe: str = "global") -> list[list[int]]:
    """Per-position digit counts over the last five digits.

    ``dedupe`` is ``"global"`` (each combination counted once overall),
    ``"consecutive"`` (drop immediate repeats only) or ``"none"``.
    """
    if dedupe not in ("global", "consecutive", "none"):
        raise ValueError(f"unknown dedupe mode {dedupe!r}")
    seen: set[str] = set()
    counts = [[0] * 10 for _ in POSITIONS]
    for trace in traces:
        otps = trace.otps if isinstance(trace, PressTrace) else [str(o) for o in trace]
        prev = None
        for o in otps:
            if dedupe == "global":
                if o in seen:
                    continue
                seen.add(o)
            elif dedupe == "consecutive" and o == prev:
                continue
            prev = o
            for pos, ch in enumerate(o[1:]):
                counts[pos][int(ch)] += 1
    return counts


@dataclass(frozen=True)
class ChiSquare:
    statistic: float
    critical: float
    df: int

    @property
    def reject(self) -> bool:
        return self.statistic > self.critical


def chi_square(counts: Sequence[int], model: Sequence[float | Fraction], alpha: float = 0.05,
               df: int | None = None, critical: float | None = None) -> ChiSquare:
    """Pearson goodness-of-fit against ``model`` with a tabulated critical value."""
    if len(counts) != len(model):
        raise ValueError("counts and model differ in length")
    n = sum(counts)
    if n <= 0:
        raise ValueError("no observations")
    if abs(sum(float(p) for p in model) - 1) > 1e-9:
        raise ValueError("model probabilities must sum to 1")
    if any(p <= 0 for p in model):
        raise ValueError("zero expected cell")
    stat = sum((o - n * float(p)) ** 2 / (n * float(p)) for o, p in zip(counts, model))
    df = len(counts) - 1 if df is None else df
    if critical is None:
        try:
            critical = CRITICAL[(alpha, df)]
        except KeyError:
            raise ValueError(f"no tabulated critical value for alpha={alpha}, df={df}") from None
    return ChiSquare(stat, critical, df)


def table_report(trace: PressTrace | Sequence[str], title: str | None = None) -> str:
    """Three-column text table: index, combination, pattern digit."""
    if not isinstance(trace, PressTrace):
        trace = PressTrace(title or "trace", [str(o) for o in trace])
    lines = [f"{'i':>4}  {'comb.':<6}  pattern"]
    pattern = trace.pattern[1:] if trace.pattern[1:] and None not in trace.pattern[1:] else (
        lead_pattern(trace.otps) if len(trace.otps) > 1 else [])
    for i, o in enumerate(trace.otps):
        p = "" if i == 0 else str(pattern[i - 1])
        lines.append(f"{i:>4}  {o:<6}  {p}".rstrip())
    return "\n".join(lines) + "\n"


def histogram_report(counts: Sequence[Sequence[int]]) -> str:
    lines = ["    " + "".join(f"{d:>5}" for d in range(10))]
    for pos, row in zip(POSITIONS, counts):
        lines.append(f"{pos:>3} " + "".join(f"{c:>5}" for c in row))
    return "\n".join(lines) + "\n"


# fixture I/O -----------------------------------------------------------------

def _open_data(name: str) -> str:
    return resources.files("otpforge.data").joinpath(name).read_text()


def read_traces(source: str | Path | io.TextIOBase | None = None) -> dict[str, PressTrace]:
    """Parse ``table,index,combination,pattern`` CSV into traces keyed by table."""
    if source is None:
        text = _open_data("published_tables.csv")
    elif isinstance(source, io.TextIOBase):
        text = source.read()
    else:
        text = Path(source).read_text()
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        raise FixtureError("empty fixture")
    if [h.strip() for h in header[:4]] != ["table", "index", "combination", "pattern"]:
        raise FixtureError(f"line 1: unexpected header {header}")
    traces: dict[str, PressTrace] = {}
    for lineno, row in enumerate(reader, 2):
        if not row:
            continue
        if len(row) < 3:
            raise FixtureError(f"line {lineno}: expected table,index,combination[,pattern]")
        label, idx, comb = row[0], row[1], row[2]
        pat = row[3].strip() if len(row) > 3 else ""
        if len(comb) != 6 or not comb.isdigit():
            raise FixtureError(f"line {lineno}: bad combination {comb!r}")
        if not idx.isdigit() or (pat and not pat.isdigit()):
            raise FixtureError(f"line {lineno}: bad index or pattern")
        tr = traces.setdefault(label, PressTrace(label, []))
        if int(idx) != len(tr.otps):
            raise FixtureError(f"line {lineno}: index {idx} out of sequence")
        tr.otps.append(comb)
        tr.pattern.append(int(pat) if pat else None)
    if not traces:
        raise FixtureError("fixture has no rows")
    return traces


def write_traces(traces: Iterable[PressTrace]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["table", "index", "combination", "pattern"])
    for tr in traces:
        pattern = [None] + (lead_pattern(tr.otps) if len(tr.otps) > 1 else [])
        for i, o in enumerate(tr.otps):
            p = tr.pattern[i] if i < len(tr.pattern) and tr.pattern[i] is not None else pattern[i]
            w.writerow([tr.label, i, o, "" if p is None else p])
    return buf.getvalue()


def published_digit_counts() -> list[list[int]]:
    rows = list(csv.reader(io.StringIO(_open_data("published_digit_counts.csv"))))
    return [[int(c) for c in r[1:]] for r in rows[1:]]


def random_intervals() -> list[dict]:
    return list(csv.DictReader(io.StringIO(_open_data("random_intervals.csv"))))


def otps_of(trace: PressTrace) -> list[Otp]:
    return [Otp.parse(o) for o in trace.otps]
