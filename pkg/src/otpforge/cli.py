"""Command-line entry point: ``otpforge <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import analysis, attack
from .authd import AuthService, EventLog, load_settings, request, serve
from .authd.eventlog import replay_log
from .scenario import ScenarioError, load_scenario, run_scenario
from .timebase import SyncModel, parse_duration, parse_instant, press_schedule
from .token import PressKind, lead_pattern, new_token
from .verifier import Registry, RegistryError, VerifierConfig

RFC_KEY_HEX = "3132333435363738393031323334353637383930"


class CliError(Exception):
    pass


def _key(text: str | None, seed: int | None = None) -> bytes:
    if text is None:
        return np.random.default_rng(seed).bytes(20)
    try:
        key = bytes.fromhex(text)
    except ValueError:
        raise CliError(f"--key must be hex: {text!r}") from None
    if len(key) < 16:
        raise CliError("--key must be at least 16 bytes")
    return key


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# commands --------------------------------------------------------------------

def cmd_provision(args: argparse.Namespace) -> int:
    settings = load_settings(args.config)
    snapshot = args.snapshot or settings.snapshot
    reg = Registry.load_snapshot(snapshot) if Path(snapshot).exists() else Registry()
    key = _key(args.key, args.seed)
    reg.provision(args.id, key, args.t0, args.a0, args.static,
                  args.max_attempts or settings.max_attempts)
    reg.save_snapshot(snapshot)
    print(json.dumps({"id": args.id, "key": key.hex(), "t0": args.t0, "a0": args.a0}))
    return 0


def cmd_press(args: argparse.Namespace) -> int:
    if args.schedule is not None:
        schedule = [parse_instant(s) for s in args.schedule.split(",") if s.strip()]
    elif args.interval is not None:
        schedule = press_schedule(parse_duration(args.interval), args.count, args.start)
    else:
        schedule = []
    if any(b < a for a, b in zip(schedule, schedule[1:])):
        raise CliError("press schedule must be sorted")
    token = new_token(_key(args.key or RFC_KEY_HEX), SyncModel(args.phase), args.t0, args.a0)
    fresh: list[str] = []
    rows: list[tuple[int, str, str]] = []
    for t in schedule:
        otp, kind = token.press(t)
        if kind is PressKind.FRESH:
            fresh.append(str(otp))
            rows.append((t, str(otp), ""))
        else:
            rows.append((t, str(otp), "redisplay"))
    label = args.label or (args.interval or "schedule")
    if args.format == "csv":
        _write(args.out, analysis.write_traces([analysis.PressTrace(label, fresh)]))
        return 0
    pattern = [None] + (lead_pattern(fresh) if len(fresh) > 1 else [])
    lines = [f"{'i':>4}  {'t':>7}  {'comb.':<6}  pattern"]
    i = 0
    for t, otp, note in rows:
        if note:
            lines.append(f"{'-':>4}  {t:>7}  {otp:<6}  ({note})")
            continue
        p = "" if pattern[i] is None else str(pattern[i])
        lines.append(f"{i:>4}  {t:>7}  {otp:<6}  {p}".rstrip())
        i += 1
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    try:
        sc = load_scenario(args.scenario)
    except ScenarioError as exc:
        raise CliError(f"{args.scenario}: {exc}") from None
    if args.seed is not None:
        sc.seed = args.seed
    result = run_scenario(sc, max_delay=args.max_delay, max_attempts=args.max_attempts)
    if args.log:
        Path(args.log).write_text(result.log_text)
    sys.stdout.write(result.table())
    print(json.dumps(result.summary(), sort_keys=True))
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    s = load_settings(args.config).merged(max_delay=args.max_delay, max_attempts=args.max_attempts,
                                           listen=args.listen, log=args.log,
                                           snapshot=args.snapshot, clock=args.clock)
    config = VerifierConfig(max_delay=s.max_delay)
    try:
        registry = replay_log(s.snapshot, s.log, config)
    except (OSError, RegistryError, ValueError) as exc:
        raise CliError(str(exc)) from None
    if args.max_attempts is not None:
        for rec in registry.records.values():
            rec.max_attempts = args.max_attempts
    serve(AuthService(registry, EventLog(s.log), s.clock), s.listen)
    return 0


def cmd_auth(args: argparse.Namespace) -> int:
    s = load_settings(args.config).merged(listen=args.connect)
    frame = {"type": "auth", "customer": args.customer, "static": args.static, "otp": args.otp}
    if args.at is not None:
        frame["at"] = parse_instant(args.at)
    reply = request(s.listen, frame)
    print(json.dumps(reply, separators=(",", ":")))
    return 0 if reply.get("status") == "accept" else 3


def cmd_attack(args: argparse.Namespace) -> int:
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    rows = attack.yearly_table(range(1, args.max_r + 1))
    if args.analytic:
        sys.stdout.write(attack.yearly_table_text(rows))
        if out:
            (out / "yearly.csv").write_text(attack.yearly_table_csv(rows))
        return 0
    cfg = attack.CampaignConfig(customers=args.customers, r=args.r, years=args.years,
                                seed=args.seed, strategy=args.strategy,
                                attempts_per_auth=args.attempts, lead_mode=args.lead_mode,
                                workers=args.workers, auths_per_year=args.auths_per_year)
    report = attack.run_campaign(cfg)
    summary = report.summary()
    print(json.dumps(summary, sort_keys=True))
    sys.stdout.write(attack.yearly_table_text(rows))
    if out:
        (out / "campaign.csv").write_text(report.to_csv())
        (out / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
        (out / "yearly.txt").write_text(attack.yearly_table_text(rows))
        (out / "yearly.csv").write_text(attack.yearly_table_csv(rows))
    return 0


def cmd_rate(args: argparse.Namespace) -> int:
    res = attack.per_attempt_rate(args.trials, np.random.default_rng(args.seed),
                                  body_digits=args.body_digits)
    p = 1 / attack.MATCH_SPACE if args.body_digits == 6 else None
    print(json.dumps({"trials": res.trials, "accepted": res.accepted, "rate": res.rate,
                      "analytic": p, "sigma": res.sigma(p) if p else None,
                      "by_lead_accepted": res.by_lead_accepted}, sort_keys=True))
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    traces: dict[str, analysis.PressTrace] = {}
    sources = args.inputs or ([None] if args.published else [])
    if not sources:
        raise CliError("nothing to analyze: pass fixture/trace files or --published")
    for src in sources:
        try:
            got = analysis.read_traces(src)
        except (OSError, analysis.FixtureError) as exc:
            raise CliError(f"{src or 'published tables'}: {exc}") from None
        traces.update(got)
    counts = analysis.digit_histogram(traces.values(), dedupe=args.dedupe)
    out: list[str] = []
    if args.format == "csv":
        out.append("kind,table,position," + ",".join(map(str, range(10))) + ",extra\n")
        for pos, row in zip(analysis.POSITIONS, counts):
            out.append(f"histogram,,{pos}," + ",".join(map(str, row)) + ",\n")
    else:
        n = sum(counts[0])
        out.append(f"digit counts over {n} distinct combinations\n")
        out.append(analysis.histogram_report(counts))
        out.append("\nchi-square per position (df=9, alpha=0.05, critical 16.919)\n")
    for pos, row in zip(analysis.POSITIONS, counts):
        skew = analysis.chi_square(row, analysis.SKEW_MODEL)
        uni = analysis.chi_square(row, analysis.UNIFORM_MODEL)
        if args.format == "csv":
            out.append(f"chi2,,{pos},{skew.statistic:.4f},{int(skew.reject)},{uni.statistic:.4f},"
                       f"{int(uni.reject)},,,,,\n")
        else:
            out.append(f"  {pos}: skew {skew.statistic:8.3f} {'reject' if skew.reject else 'fit':<6}"
                       f"  uniform {uni.statistic:8.3f} {'reject' if uni.reject else 'fit'}\n")
    if args.format != "csv":
        out.append("\nrun structure\n")
    for label, tr in traces.items():
        if tr.interval is None or len(tr.otps) < 2:
            continue
        lo, hi = tr.interval
        try:
            term, _ = analysis.predict_symbols((lo + hi) / 2)
            lo_run, hi_run = analysis.predict_runs_range(lo, hi)
        except ValueError:
            continue
        runs = analysis.split_runs(tr.observed_pattern(), term).runs
        # the first run may be cut short by where the trace started
        ok = all(lo_run <= n <= hi_run for n in runs[1:]) and (not runs or runs[0] <= hi_run)
        if args.format == "csv":
            out.append(f"runs,{label},{term}," + ",".join(map(str, runs)) + "\n")
        else:
            out.append(f"  {label:<8} terminator {term}  predicted [{lo_run}, {hi_run}]  "
                       f"runs {list(runs)}  {'consistent' if ok else 'INCONSISTENT'}\n")
    _write(args.out, "".join(out))
    return 0


# parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="otpforge", description=__doc__)
    p.add_argument("--config", help="key=value config file (default: $OTPFORGE_CONFIG)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("provision", help="add a customer record to a snapshot file")
    s.add_argument("--snapshot")
    s.add_argument("--id", required=True)
    s.add_argument("--key", help="hex key (random from --seed if omitted)")
    s.add_argument("--seed", type=int)
    s.add_argument("--t0", type=int, default=0)
    s.add_argument("--a0", type=int, default=0)
    s.add_argument("--static", required=True)
    s.add_argument("--max-attempts", type=int)
    s.set_defaults(func=cmd_provision)

    s = sub.add_parser("press", help="simulate token presses and print the OTP table")
    s.add_argument("--key")
    s.add_argument("--phase", type=int, default=0)
    s.add_argument("--t0", type=int, default=0)
    s.add_argument("--a0", type=int, default=0)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--schedule", help="comma-separated press times (seconds or m:ss)")
    g.add_argument("--interval", help="fixed spacing, e.g. 0:50+ or 57.5")
    s.add_argument("--count", type=int, default=29)
    s.add_argument("--start", type=int, default=0)
    s.add_argument("--label")
    s.add_argument("--format", choices=("text", "csv"), default="text")
    s.add_argument("--out")
    s.set_defaults(func=cmd_press)

    s = sub.add_parser("replay", help="run a JSON-lines scenario in simulated time")
    s.add_argument("scenario")
    s.add_argument("--seed", type=int)
    s.add_argument("--max-delay", type=int)
    s.add_argument("--max-attempts", type=int)
    s.add_argument("--log", help="write the auth event log here")
    s.set_defaults(func=cmd_replay)

    s = sub.add_parser("serve", help="run the authentication service")
    s.add_argument("--snapshot")
    s.add_argument("--log")
    s.add_argument("--listen", help="host:port, unix:/path or stdio")
    s.add_argument("--clock", choices=("simulated", "live"))
    s.add_argument("--max-delay", type=int)
    s.add_argument("--max-attempts", type=int)
    s.set_defaults(func=cmd_serve)

    s = sub.add_parser("auth", help="send one authentication request to a running service")
    s.add_argument("--connect")
    s.add_argument("--customer", required=True)
    s.add_argument("--static", default="")
    s.add_argument("--otp", required=True)
    s.add_argument("--at")
    s.set_defaults(func=cmd_auth)

    s = sub.add_parser("attack", help="forgery campaign or the analytic yearly table")
    s.add_argument("--customers", type=int, default=10_000)
    s.add_argument("--r", type=int, default=3)
    s.add_argument("--years", type=float, default=1.0)
    s.add_argument("--auths-per-year", type=int, default=120)
    s.add_argument("--strategy", choices=attack.STRATEGIES, default="burst")
    s.add_argument("--attempts", type=int, help="forgeries per genuine login (overrides strategy)")
    s.add_argument("--lead-mode", choices=attack.LEAD_MODES, default="track")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--analytic", action="store_true", help="only print p(120 r) for r = 1..max-r")
    s.add_argument("--max-r", type=int, default=6)
    s.add_argument("--out", help="directory for CSV and text reports")
    s.set_defaults(func=cmd_attack)

    s = sub.add_parser("rate", help="Monte Carlo per-attempt forgery acceptance rate")
    s.add_argument("--trials", type=int, default=1_000_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--body-digits", type=int, default=6, choices=(6, 10))
    s.set_defaults(func=cmd_rate)

    s = sub.add_parser("analyze", help="digit histogram, chi-square and run structure")
    s.add_argument("inputs", nargs="*", help="table,index,combination,pattern CSV files")
    s.add_argument("--published", action="store_true", help="use the bundled published tables")
    s.add_argument("--dedupe", choices=("global", "consecutive", "none"), default="global")
    s.add_argument("--format", choices=("text", "csv"), default="text")
    s.add_argument("--out")
    s.set_defaults(func=cmd_analyze)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CliError, ValueError) as exc:
        print(f"otpforge {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
