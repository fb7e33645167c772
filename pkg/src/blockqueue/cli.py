"""Command-line front end.

Subcommands: analyze (one configuration), sweep (rate grids to CSV),
validate (analysis vs reference values and vs simulation), stats
(chain-data CSV statistics), mining (minimum-of-uniforms race).

Every command is deterministic given its flags (plus seed where
sampling occurs): CSV output uses LF line endings, a header row, and
repr() float formatting, so repeated runs are byte-identical.

Exit codes: 0 ok, 1 validation failure, 2 usage or input error,
3 instability, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys

import numpy as np

from . import chainstats
from .analysis import QueueConfig, mean_confirmation_time, solve, stability_check
from .des import SimConfig, estimate, verify_against_analysis
from .errors import InstabilityError, NumericalError, SimulationError
from .mining import (
    MiningRaceConfig,
    cdf_table,
    exact_cdf_distance,
    exact_cdf_sup_distance,
    exponential_approx_distance,
    simulate_race,
)
from .priority import (
    WORK_CONSERVING_LABEL,
    PriorityTraffic,
    class_confirmation_times,
    split_by_ratio,
)
from .service import ServiceDistribution

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_INSTABILITY = 3
EXIT_NUMERICAL = 4

# Measured main-chain workload: service rate fitted from two years of
# block intervals, capacity matching the observed mean transactions
# per block, aggregate arrival rate and high/low split as measured.
MAINNET_PRESET = {
    "mu": 1.8379e-3,
    "b": 1750,
    "lam": 0.97275,
    "lambda_h": 0.90466,
    "lambda_l": 0.068082,
    "zeta": 13.288,
}

REFERENCE_POINTS = {
    "classless": 568.10,
    "high": 562.16,
    "low": 647.05,
}


def _fmt(value: float) -> str:
    return repr(float(value))


def _build_service(args) -> ServiceDistribution:
    kind = getattr(args, "service", "exponential")
    if kind == "exponential":
        if args.mu is None:
            raise _Usage("provide --mu (or --preset mainnet)")
        return ServiceDistribution.exponential(args.mu)
    if kind == "deterministic":
        if getattr(args, "delay", None) is None:
            raise _Usage("deterministic service needs --delay")
        return ServiceDistribution.deterministic(args.delay)
    if kind == "erlang":
        if args.mu is None or getattr(args, "shape", None) is None:
            raise _Usage("erlang service needs --mu and --shape")
        return ServiceDistribution.erlang(args.shape, args.mu)
    raise _Usage(f"unknown service kind {kind!r}")


class _Usage(Exception):
    pass


def _apply_preset(args) -> None:
    if getattr(args, "preset", None) != "mainnet":
        return
    for key in ("mu", "zeta"):
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, MAINNET_PRESET[key])
    if hasattr(args, "b") and getattr(args, "b") is None:
        args.b = MAINNET_PRESET["b"]
    if hasattr(args, "lam") and args.lam is None and getattr(args, "rates", None) is None:
        args.lam = MAINNET_PRESET["lam"]
    if hasattr(args, "lambda_h") and getattr(args, "lambda_h") is None:
        args.lambda_h = MAINNET_PRESET["lambda_h"]


# ---------------------------------------------------------------- analyze


def cmd_analyze(args) -> int:
    _apply_preset(args)
    if args.b is None:
        raise _Usage("provide --b (or --preset mainnet)")
    service = _build_service(args)

    if args.rates is not None:
        rates = tuple(float(part) for part in args.rates.split(","))
        traffic = PriorityTraffic(rates=rates, service=service, b=args.b)
        total = traffic.total_rate
    else:
        if args.lam is None:
            raise _Usage("provide --lambda or --rates")
        rates = None
        total = args.lam

    cfg = QueueConfig(args.b, total, service)
    report = stability_check(cfg)
    print(f"offered load: {report.offered_load:.6f} ({'stable' if report.stable else 'UNSTABLE'}, b={args.b})")
    sol = solve(cfg, extended=args.extended)
    print(f"idle probability p0: {sol.p0:.6g}")
    print(f"mean confirmation time E[T]: {sol.mean_sojourn:.6f} s")
    print(f"mean number in system E[N]: {sol.mean_queue:.6f}")
    print(f"max solver residual: {sol.residual:.3e}")

    out_rows = [
        ("offered_load", report.offered_load),
        ("p0", sol.p0),
        ("mean_tct_s", sol.mean_sojourn),
        ("mean_in_system", sol.mean_queue),
        ("residual", sol.residual),
    ]
    if rates is not None:
        times = class_confirmation_times(traffic, extended=args.extended)
        print(f"per-class means ({WORK_CONSERVING_LABEL}):")
        for i, t in enumerate(times, start=1):
            label = ("H", "L")[i - 1] if len(times) == 2 else str(i)
            print(f"  class {label}: E[T] = {t:.6f} s")
            out_rows.append((f"mean_tct_class_{label}_s", t))

    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["metric", "value"])
            for name, value in out_rows:
                writer.writerow([name, _fmt(value)])
    return EXIT_OK


# ------------------------------------------------------------------ sweep


def _sweep_rows(args, service):
    b_list = [int(part) for part in args.b.split(",")]
    grid = np.linspace(args.lambda_start, args.lambda_stop, args.points)
    mean_s = service.mean
    rows = []
    for b in b_list:
        for lam in grid:
            lam = float(lam)
            if args.mode == "classless":
                cells = [("all", lam)]
            elif args.mode == "two-class-zeta":
                lam_h, lam_l = split_by_ratio(lam, args.zeta)
                cells = [("H", lam_h), ("L", lam_h + lam_l)]
            else:  # two-class-fixed-high: grid value is the low rate
                cells = [("H", args.lambda_h), ("L", args.lambda_h + lam)]
            consumed = 0.0
            consumed_rate = 0.0
            for label, cum_rate in cells:
                if cum_rate * mean_s >= b:
                    rows.append((lam, b, label, "unstable"))
                    continue
                f_cum = mean_confirmation_time(
                    QueueConfig(b, cum_rate, service), extended=args.extended
                )
                if label in ("all", "H"):
                    value = f_cum
                else:
                    class_rate = cum_rate - consumed_rate
                    value = (cum_rate * f_cum - consumed) / class_rate
                rows.append((lam, b, label, _fmt(value)))
                consumed = cum_rate * f_cum
                consumed_rate = cum_rate
    return rows


def cmd_sweep(args) -> int:
    _apply_preset(args)
    service = _build_service(args)
    if args.mode == "two-class-fixed-high" and args.lambda_h is None:
        raise _Usage("two-class-fixed-high needs --lambda-h (or --preset mainnet)")
    if args.mode == "two-class-zeta" and args.zeta is None:
        raise _Usage("two-class-zeta needs --zeta (or --preset mainnet)")
    if args.points < 1:
        raise _Usage("--points must be positive")
    if args.lambda_start <= 0 or args.lambda_stop < args.lambda_start:
        raise _Usage("need 0 < lambda-start <= lambda-stop")

    rows = _sweep_rows(args, service)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["lambda", "b", "class", "mean_tct_s"])
        for lam, b, label, value in rows:
            writer.writerow([_fmt(lam), b, label, value if isinstance(value, str) else _fmt(value)])
    stable = sum(1 for row in rows if row[3] != "unstable")
    print(f"wrote {len(rows)} rows ({stable} stable) to {args.out}")
    return EXIT_OK


# --------------------------------------------------------------- validate


def _check(name: str, ok: bool, detail: str, failures: list) -> None:
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    if not ok:
        failures.append(name)


def _validate_analysis(failures: list) -> None:
    service = ServiceDistribution.exponential(MAINNET_PRESET["mu"])
    b = MAINNET_PRESET["b"]
    lam = MAINNET_PRESET["lam"]
    lam_h = MAINNET_PRESET["lambda_h"]
    lam_l = MAINNET_PRESET["lambda_l"]

    f_all = mean_confirmation_time(QueueConfig(b, lam, service))
    traffic = PriorityTraffic(rates=(lam_h, lam_l), service=service, b=b)
    t_high, t_low = class_confirmation_times(traffic)

    for name, got, want in (
        ("classless mean", f_all, REFERENCE_POINTS["classless"]),
        ("high-priority mean", t_high, REFERENCE_POINTS["high"]),
        ("low-priority mean", t_low, REFERENCE_POINTS["low"]),
    ):
        rel = abs(got - want) / want
        _check(
            name,
            rel <= 0.005,
            f"computed {got:.4f} s vs reference {want:.2f} s (rel {rel:.2e})",
            failures,
        )

    # conservation: weighted class means equal the pooled mean
    f_total = mean_confirmation_time(QueueConfig(b, lam_h + lam_l, service))
    lhs = lam_h * t_high + lam_l * t_low
    rhs = (lam_h + lam_l) * f_total
    rel = abs(lhs - rhs) / rhs
    _check(
        "conservation (computed)",
        rel <= 1e-10,
        f"lam_H*E[T_H]+lam_L*E[T_L]={lhs:.10f} vs total {rhs:.10f} (rel {rel:.2e})",
        failures,
    )
    ref_lhs = lam_h * REFERENCE_POINTS["high"] + lam_l * REFERENCE_POINTS["low"]
    ref_rhs = (lam_h + lam_l) * REFERENCE_POINTS["classless"]
    rel = abs(ref_lhs - ref_rhs) / ref_rhs
    _check(
        "conservation (reference rounding)",
        rel <= 0.002,
        f"reference values give rel {rel:.2e}",
        failures,
    )


def _desk_grid(args, failures: list) -> None:
    service = ServiceDistribution.exponential(MAINNET_PRESET["mu"])
    zeta = MAINNET_PRESET["zeta"]
    b_values = (10, 50) if not args.quick else (10,)
    fractions = (0.30, 0.60, 0.85) if not args.quick else (0.60,)
    inside = 0
    total = 0
    little_all = True
    for b in b_values:
        for frac in fractions:
            lam = frac * b / service.mean
            lam_h, lam_l = split_by_ratio(lam, zeta)
            traffic = PriorityTraffic(rates=(lam_h, lam_l), service=service, b=b)
            sim_cfg = SimConfig(
                traffic=traffic,
                seed=args.seed,
                replications=args.reps,
                warmup=args.warmup,
                horizon=args.horizon,
            )
            report = verify_against_analysis(sim_cfg, kernel=args.kernel)
            little_all = little_all and report.little_ok
            for row in report.rows:
                total += 1
                inside += int(row.inside)
                print(
                    f"  b={b} load={frac:.0%} class={row.label}: analytic "
                    f"{row.analytic:.3f} s, simulated {row.simulated:.3f} "
                    f"+/- {row.half_width:.3f} s "
                    f"({'inside' if row.inside else 'OUTSIDE'})"
                )
    needed = total - 1 if total >= 18 else total
    _check(
        "analysis vs simulation",
        inside >= needed,
        f"{inside} of {total} cells inside the 95% CI (needed {needed}); "
        f"analytic values are the {WORK_CONSERVING_LABEL}",
        failures,
    )
    _check(
        "Little's law (simulated)",
        little_all,
        "pooled |E[N] - lam*E[T]|/E[N] <= 2% in every cell",
        failures,
    )


def cmd_validate(args) -> int:
    failures: list = []
    _validate_analysis(failures)
    if not args.analysis_only:
        _desk_grid(args, failures)
    if failures:
        print(f"FAILED: {len(failures)} check(s): {', '.join(failures)}")
        return EXIT_VALIDATION
    print("all checks passed")
    return EXIT_OK


# ------------------------------------------------------------------ stats


def cmd_stats(args) -> int:
    result = chainstats.load(args.blocks, args.txs)
    for err in result.errors:
        print(f"warning: {err.path}:{err.line}: {err.message}", file=sys.stderr)

    summary = chainstats.summarize(result.blocks)
    print(
        f"block intervals: n={summary.count} mean={summary.mean:.2f}s "
        f"median={summary.median}s min={summary.minimum}s max={summary.maximum}s "
        f"variance={summary.variance:.2f}"
    )

    if args.span_seconds is not None:
        span = args.span_seconds
    else:
        span = max(tx.confirmed_at for tx in result.txs) - min(
            tx.first_seen for tx in result.txs
        )
    if not span > 0:
        raise _Usage("data span is zero; pass --span-seconds")

    rule = chainstats.ClassRule(threshold_btc=args.threshold)
    stats = chainstats.classify_and_rates(result.txs, rule, span)
    for cls in (stats.high, stats.low):
        if cls.defined:
            print(
                f"class {cls.label}: n={cls.count} mean_tct={cls.mean_tct:.2f}s "
                f"median_tct={cls.median_tct}s rate={cls.arrival_rate:.6g}/s"
            )
        else:
            print(f"class {cls.label}: empty")
    print("cumulative fee counts:")
    for threshold, count in stats.fee_cumulative:
        print(f"  <= {format(threshold, 'f')} BTC: {count}")

    if args.out_summary:
        chainstats.write_summary_csv(summary, args.out_summary)
    if args.out_classes:
        chainstats.write_classes_csv(stats, args.out_classes)
    if args.out_cumulative:
        chainstats.write_cumulative_csv(stats, args.out_cumulative)
    if args.out_timeseries:
        rows = chainstats.time_series(result.txs, rule, args.bucket_seconds)
        chainstats.write_timeseries_csv(rows, args.out_timeseries)
    return EXIT_OK


# ----------------------------------------------------------------- mining


def cmd_mining(args) -> int:
    cfg = MiningRaceConfig(n=args.n, m=args.m, samples=args.samples, seed=args.seed)
    sample = simulate_race(cfg)
    ks_expo = exponential_approx_distance(cfg, sample)
    ks_exact = exact_cdf_distance(cfg, sample)
    sup = exact_cdf_sup_distance(cfg.n)
    print(f"sample mean: {sample.mean():.4f} (exact mean {cfg.m / (cfg.n + 1):.4f})")
    print(f"KS distance to Exponential(n/m): {ks_expo:.6f}")
    print(f"KS distance to exact law: {ks_exact:.6f}")
    print(f"exact sup-distance exact vs exponential: {sup:.3e}")
    if args.out:
        rows = cdf_table(cfg, points=args.points, sample=sample)
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["x", "empirical_cdf", "exact_cdf", "exponential_cdf"])
            for x, emp, exact, expo in rows:
                writer.writerow([_fmt(x), _fmt(emp), _fmt(exact), _fmt(expo)])
    return EXIT_OK


# ------------------------------------------------------------- the parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blockqueue",
        description="Batch-service queue analysis, simulation, and chain statistics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="key=value file; explicit flags win")
        p.add_argument("--preset", choices=["mainnet"], help="measured main-chain parameters")

    p = sub.add_parser("analyze", help="solve one configuration")
    add_common(p)
    p.add_argument("--b", type=int, default=None, help="batch capacity")
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="arrival rate /s")
    p.add_argument("--rates", default=None, help="per-class rates, highest priority first, comma separated")
    p.add_argument("--mu", type=float, default=None, help="exponential (or erlang stage) service rate /s")
    p.add_argument("--service", choices=["exponential", "deterministic", "erlang"], default="exponential")
    p.add_argument("--delay", type=float, default=None, help="deterministic service time s")
    p.add_argument("--shape", type=int, default=None, help="erlang stage count")
    p.add_argument("--extended", action="store_true", help="128-bit linear solve")
    p.add_argument("--out", default=None, help="write metric,value CSV")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="rate grid to CSV")
    add_common(p)
    p.add_argument("--mode", choices=["classless", "two-class-zeta", "two-class-fixed-high"], default="classless")
    p.add_argument("--lambda-start", type=float, required=True)
    p.add_argument("--lambda-stop", type=float, required=True)
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--b", default="1750", help="comma-separated capacities")
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--service", choices=["exponential", "deterministic", "erlang"], default="exponential")
    p.add_argument("--delay", type=float, default=None)
    p.add_argument("--shape", type=int, default=None)
    p.add_argument("--zeta", type=float, default=None, help="high/low rate ratio")
    p.add_argument("--lambda-h", dest="lambda_h", type=float, default=None, help="fixed high-priority rate")
    p.add_argument("--extended", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="check against reference values and simulation")
    add_common(p)
    p.add_argument("--quick", action="store_true", help="single desk-scale cell")
    p.add_argument("--analysis-only", action="store_true", help="skip the simulator")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--warmup", type=int, default=10_000)
    p.add_argument("--horizon", type=int, default=100_000)
    p.add_argument("--kernel", choices=["auto", "compiled", "pure"], default="auto")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", help="chain-data CSV statistics")
    add_common(p)
    p.add_argument("--blocks", required=True)
    p.add_argument("--txs", required=True)
    p.add_argument("--threshold", default="0.0001", help="high-priority fee bound, BTC")
    p.add_argument("--span-seconds", type=float, default=None)
    p.add_argument("--bucket-seconds", type=int, default=86_400)
    p.add_argument("--out-summary", default=None)
    p.add_argument("--out-classes", default=None)
    p.add_argument("--out-cumulative", default=None)
    p.add_argument("--out-timeseries", default=None)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("mining", help="minimum-of-uniforms race")
    add_common(p)
    p.add_argument("--n", type=int, required=True, help="searcher count")
    p.add_argument("--m", type=float, required=True, help="search-space size")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_mining)

    return parser


def _read_config_flags(path: str) -> list:
    flags: list = []
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise _Usage(f"config line without '=': {line!r}")
            key, _, value = line.partition("=")
            option = "--" + key.strip().replace("_", "-")
            value = value.strip()
            if value.lower() in ("true", "yes", "on"):
                flags.append(option)
            elif value.lower() in ("false", "no", "off"):
                continue
            else:
                flags.extend([option, value])
    return flags


def _apply_config(argv: list) -> list:
    """Insert config-derived flags after the subcommand.

    Explicit command-line flags come later in the list, and argparse
    lets the last occurrence win, so they override the config.
    """
    path = None
    for i, arg in enumerate(argv):
        if arg == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
            break
        if arg.startswith("--config="):
            path = arg.split("=", 1)[1]
            break
    if path is None:
        return argv
    sub_index = next(
        (i for i, arg in enumerate(argv) if not arg.startswith("-")), None
    )
    if sub_index is None:
        return argv
    flags = _read_config_flags(path)
    return argv[: sub_index + 1] + flags + argv[sub_index + 1 :]


def main(argv=None) -> int:
    raw = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        raw = _apply_config(raw)
    except (_Usage, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    parser = build_parser()
    try:
        args = parser.parse_args(raw)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except _Usage as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InstabilityError as exc:
        print(f"unstable: {exc}", file=sys.stderr)
        return EXIT_INSTABILITY
    except SimulationError as exc:
        print(f"simulation gave no estimate: {exc}", file=sys.stderr)
        return EXIT_INSTABILITY
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
