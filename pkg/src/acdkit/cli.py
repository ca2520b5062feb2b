"""Command-line front end: simulate, fit, tail-diagnose, run experiments.

Exit codes: 0 success, 1 runtime or statistical failure, 2 usage or input
error. Messages go to standard error; results go to files or standard out.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .errors import (AcdKitError, EmptyFileError, NonMonotoneTimesError,
                     NonPositiveDataError)
from .harness import (COUNTING_NORMALIZATIONS, QMLE_NORMALIZATIONS,
                      ExperimentConfig, run_counting_experiment,
                      run_qmle_experiment)
from .mle import FitOptions, fit, t_ratio
from .model import alpha_for_kappa, stationarity_bound
from .rng import make_stream, unit_exponential
from .sim import (DurationSeries, calibrate_omega_unit_median,
                  simulate_fixed_count, simulate_fixed_span)
from .tail import hill_estimator, hill_path

_CLI_CALIBRATION_STREAM = (1 << 50) + 7


class UsageError(Exception):
    """Input or flag problem: exit code 2."""


def ingest_event_times(path, zero_policy: str = "error",
                       skip_first: bool = False,
                       span: float | None = None) -> DurationSeries:
    """Durations from a file of event times (one per line, or a CSV with a
    ``t`` column; headers are auto-detected).

    Durations are first differences with the convention that the clock
    starts at 0, so the first timestamp is itself a duration
    (``skip_first`` discards it when the recording start is not an event
    origin). Simultaneous events are handled per ``zero_policy``: 'error',
    'merge' (collapse duplicates), or 'jitter:EPS' (spread by EPS).
    """
    with open(path) as fh:
        lines = [ln.strip() for ln in fh.read().splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise EmptyFileError(f"{path} contains no rows")

    col = 0
    start = 0
    head = lines[0].split(",")
    try:
        float(head[col])
    except ValueError:
        start = 1
        names = [h.strip().lower() for h in head]
        col = names.index("t") if "t" in names else 0
    times = []
    for ln_no, line in enumerate(lines[start:], start=start + 1):
        parts = line.split(",")
        try:
            times.append(float(parts[col]))
        except (ValueError, IndexError):
            raise UsageError(f"malformed row at line {ln_no}: {line!r}")
    if len(times) < 2:
        raise EmptyFileError("need at least 2 event times")

    t = np.asarray(times, dtype=float)
    if np.any(np.diff(t) < 0) or t[0] < 0:
        raise NonMonotoneTimesError("event times must be non-decreasing "
                                    "and non-negative")
    if zero_policy == "merge":
        t = np.unique(t)
    elif zero_policy.startswith("jitter:"):
        eps = float(zero_policy.split(":", 1)[1])
        for i in range(1, len(t)):
            if t[i] <= t[i - 1]:
                t[i] = t[i - 1] + eps
    elif zero_policy == "error":
        if np.any(np.diff(t) == 0) or t[0] == 0.0:
            raise NonMonotoneTimesError(
                "duplicate timestamps; rerun with --zero-policy merge or "
                "jitter:EPS")
    else:
        raise UsageError(f"unknown zero policy {zero_policy!r}")

    durations = np.diff(np.concatenate(([0.0], t)))
    if skip_first:
        durations = durations[1:]
    if durations.size == 0:
        raise EmptyFileError("no durations left after ingestion")
    return DurationSeries(durations=durations,
                          span=span if span is not None else float(t[-1]),
                          meta={"source": str(path)})


def _load_series(path, input_format: str, span, zero_policy, skip_first
                 ) -> DurationSeries:
    if input_format == "auto":
        with open(path) as fh:
            first = fh.readline().strip().lower()
        input_format = "durations" if first.replace(" ", "") == "t,x" else "events"
    if input_format == "durations":
        try:
            return DurationSeries.from_csv(path, span=span)
        except ValueError as exc:
            raise UsageError(str(exc))
    return ingest_event_times(path, zero_policy=zero_policy,
                              skip_first=skip_first, span=span)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_simulate(args) -> int:
    spec = unit_exponential()
    a_u = stationarity_bound(spec)
    if args.kappa is not None:
        alpha = alpha_for_kappa(args.kappa)
        if args.omega is not None:
            omega = args.omega
        elif args.median_one or args.kappa < 1.0:
            omega = calibrate_omega_unit_median(
                alpha, spec, make_stream(args.seed, _CLI_CALIBRATION_STREAM))
        else:
            omega = 1.0 - alpha
    else:
        if args.omega is None or args.alpha is None:
            raise UsageError("give --kappa or both --omega and --alpha")
        omega, alpha = args.omega, args.alpha
    if alpha >= a_u:
        raise UsageError(f"alpha = {alpha} is not stationary; the "
                         f"exponential bound is {a_u:.4f}")

    from .model import AcdParams
    params = AcdParams(omega=omega, alpha=alpha)
    stream = make_stream(args.seed, args.stream_id)
    if args.span is not None:
        series = simulate_fixed_span(params, spec, args.span, stream,
                                     burn_in=args.burn_in)
    elif args.count is not None:
        series = simulate_fixed_count(params, spec, args.count, stream,
                                      burn_in=args.burn_in)
    else:
        raise UsageError("give --span or --count")

    series.to_csv(args.output)
    meta = {"schema_version": 1, "count": series.count, "span": series.span,
            "initial_state": series.initial_state, **series.meta}
    sidecar = os.path.splitext(args.output)[0] + ".json"
    with open(sidecar, "w") as fh:
        json.dump(meta, fh, indent=2)
    print(f"wrote {series.count} durations to {args.output}", file=sys.stderr)
    return 0


def cmd_fit(args) -> int:
    series = _load_series(args.input, args.input_format, args.span,
                          args.zero_policy, args.skip_first)
    options = FitOptions(include_remainder=args.remainder,
                         x0_policy=args.x0_policy)
    try:
        result = fit(series, options)
    except AcdKitError as exc:
        raise UsageError(str(exc))
    if args.null_alpha is not None and not result.boundary_flag:
        result.t_ratios[f"alpha={args.null_alpha}"] = t_ratio(
            result, args.null_alpha)
    text = result.to_json()
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        print(text)
    if not result.converged and not args.allow_nonconverged:
        print("fit did not converge", file=sys.stderr)
        return 1
    return 0


def cmd_tail(args) -> int:
    series = _load_series(args.input, args.input_format, None,
                          args.zero_policy, args.skip_first)
    data = series.durations
    try:
        if args.k_grid:
            grid = [int(float(k)) for k in args.k_grid.split(",")]
            estimate = hill_path(data, grid)
        else:
            estimate = hill_estimator(data, args.k)
    except NonPositiveDataError as exc:
        raise UsageError(str(exc))
    if args.hill_path_out and estimate.hill_path is None:
        n = len(data)
        grid = sorted({max(1, int(n ** p)) for p in np.linspace(0.3, 0.8, 30)})
        estimate = hill_path(data, [k for k in grid if k < n])
    if args.hill_path_out:
        estimate.path_to_csv(args.hill_path_out)

    k_hat = estimate.kappa_hat
    if abs(k_hat - 1.0) <= 0.1:
        verdict = ("boundary regime: the tail index is within 0.1 of 1, "
                   "which the distribution theory does not cover")
    elif k_hat > 1.0:
        verdict = "finite-mean regime (root-T Gaussian inference applies)"
    else:
        verdict = ("infinite-mean regime (T^(kappa/2) mixed-Gaussian "
                   "inference applies)")
    text = estimate.to_json()
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        print(text)
    print(f"kappa_hat = {k_hat:.4f} (k = {estimate.k}, n = {estimate.n}): "
          f"{verdict}", file=sys.stderr)
    return 0


def cmd_mc(args) -> int:
    file_conf = {}
    if args.config:
        with open(args.config) as fh:
            file_conf = json.load(fh)

    def pick(name, flag_value, default=None):
        if flag_value is not None:
            return flag_value
        return file_conf.get(name, default)

    spans_raw = pick("spans", args.spans)
    if spans_raw is None:
        raise UsageError("spans are required (flag --spans or config file)")
    if isinstance(spans_raw, str):
        spans = tuple(float(s) for s in spans_raw.split(","))
    else:
        spans = tuple(float(s) for s in spans_raw)
    normalization = pick("normalization", args.normalization)
    experiment = pick("experiment", args.experiment)
    if experiment is None or normalization is None:
        raise UsageError("experiment and normalization are required")
    workers = pick("workers", args.workers,
                   int(os.environ.get("ACDKIT_WORKERS", "1")))

    try:
        config = ExperimentConfig(
            normalization=normalization, spans=spans,
            replications=int(pick("replications", args.reps, 2000)),
            seed=args.seed,
            kappa=pick("kappa", args.kappa),
            omega=pick("omega", args.omega),
            alpha=pick("alpha", args.alpha),
            remainder_mode=pick("remainder_mode", args.remainder_mode,
                                "exclude"),
            null_alpha=pick("null_alpha", args.null_alpha),
            workers=int(workers))
    except ValueError as exc:
        raise UsageError(str(exc))

    runner = (run_counting_experiment if experiment == "counting"
              else run_qmle_experiment)
    report = runner(config)
    text = report.to_json()
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        print(text)
    if args.csv_prefix:
        for path in report.write_csv(args.csv_prefix):
            print(f"wrote {path}", file=sys.stderr)
    print(f"experiment finished in {report.runtime_seconds:.1f}s",
          file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------


def _add_input_flags(p):
    p.add_argument("input", help="duration CSV (t,x) or event-time file")
    p.add_argument("--input-format", choices=["auto", "durations", "events"],
                   default="auto")
    p.add_argument("--span", type=float, default=None,
                   help="observation window override")
    p.add_argument("--zero-policy", default="error",
                   help="error | merge | jitter:EPS")
    p.add_argument("--skip-first", action="store_true",
                   help="drop the duration from the clock origin to the "
                        "first event")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acdkit",
        description="Simulation and likelihood inference for conditional "
                    "duration models over a fixed time span.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a duration series")
    p.add_argument("--omega", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--kappa", type=float,
                   help="design tail index (alpha solved from it)")
    p.add_argument("--median-one", action="store_true",
                   help="calibrate omega so the median duration is 1")
    p.add_argument("--span", type=float, help="fixed observation window")
    p.add_argument("--count", type=int, help="fixed number of events")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--stream-id", type=int, default=0)
    p.add_argument("--burn-in", type=int, default=10**4)
    p.add_argument("-o", "--output", required=True, help="output CSV path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="maximum likelihood fit")
    _add_input_flags(p)
    p.add_argument("--remainder", action="store_true",
                   help="include the end-interval likelihood term")
    p.add_argument("--null-alpha", type=float, default=None,
                   help="add a t-ratio against this null")
    p.add_argument("--x0-policy", default="sample-mean")
    p.add_argument("--allow-nonconverged", action="store_true")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("tail", help="tail-index diagnostics")
    _add_input_flags(p)
    p.add_argument("--k", type=int, default=None,
                   help="upper order statistics (default n^0.6)")
    p.add_argument("--k-grid", default=None,
                   help="comma-separated k values for a diagnostic path")
    p.add_argument("--hill-path-out", default=None,
                   help="write the estimate path as CSV")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_tail)

    p = sub.add_parser("mc", help="Monte Carlo limit-law experiments")
    p.add_argument("--experiment", choices=["counting", "qmle"], default=None)
    p.add_argument("--normalization",
                   choices=list(COUNTING_NORMALIZATIONS) +
                           list(QMLE_NORMALIZATIONS), default=None)
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--omega", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--spans", default=None, help="comma-separated spans")
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--remainder-mode", dest="remainder_mode", default=None,
                   choices=["exclude", "include", "both"])
    p.add_argument("--null-alpha", type=float, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--config", default=None, help="JSON config file "
                   "(flags override it)")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--csv-prefix", default=None)
    p.set_defaults(func=cmd_mc)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, EmptyFileError, NonMonotoneTimesError,
            FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AcdKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
