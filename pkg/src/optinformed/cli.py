"""Command-line surface: simulate a market, detect on a data file, fit windows.

Exit codes: 0 the command ran (a "not_detected" verdict is still success),
2 input or configuration problem, 3 not enough data for the request.
Output files and reports depend only on the inputs, never on the clock,
so identical invocations produce byte-identical results.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import market_data, market_model
from .arma import rolling_fit
from .detector import DetectionReport, run_detection
from .errors import ConfigError, InsufficientDataError, OptinformedError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INSUFFICIENT = 3


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="optinformed",
        description="Informed-trading detection from option deltas and returns.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="simulate a structural market to CSV")
    p_sim.add_argument("--params", required=True, help="key=value structural parameter file")
    p_sim.add_argument("--steps", required=True, type=int, help="number of steps (>= 2)")
    p_sim.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p_sim.add_argument("--out", required=True, help="output CSV path")

    p_det = sub.add_parser("detect", help="run detection on a market data CSV")
    p_det.add_argument("--data", required=True, help="market data CSV")
    p_det.add_argument("--config", default=None, help="key=value run configuration")
    p_det.add_argument("--report", required=True,
                       help="report path; a .jsonl sibling is written next to it")

    p_fit = sub.add_parser("fit", help="rolling ARMA fits of one CSV column")
    p_fit.add_argument("--data", required=True, help="CSV with a header row")
    p_fit.add_argument("--column", default="return", help="column to fit (default: return)")
    p_fit.add_argument("--window", type=int, default=50, help="window length (default 50)")
    return parser


def cmd_simulate(args) -> int:
    if args.steps < 2:
        raise ConfigError(f"--steps must be at least 2, got {args.steps}")
    setup = market_data.load_structural_params(args.params, default_horizon=args.steps)
    market = market_model.simulate(setup.params, args.steps, args.seed,
                                   variant=setup.lambda_variant,
                                   lambda_override=setup.lambda_override)
    market_data.write_simulation_csv(market, args.out)
    print(f"wrote {market.returns.shape[0]} steps to {args.out}")
    return EXIT_OK


def _config_lines(config: market_data.RunConfig) -> list[str]:
    return [
        f"window = {config.window}",
        f"day_count = {config.day_count}",
        f"drift_mode = {config.drift_mode}",
        f"lambda_variant = {config.lambda_variant}",
        f"gamma_tolerance = {config.gamma_tolerance!r}",
        f"seed = {config.seed}",
    ]


def _report_text(config, spec, loaded, report: DetectionReport) -> str:
    lines = ["detection report", "================", "", "[config]"]
    lines += _config_lines(config)
    lines += ["", "[contract]",
              f"kind = {spec.kind}",
              f"strike = {_fmt(spec.strike)}",
              f"expiry_years = {_fmt(spec.expiry)}",
              f"rate = {_fmt(spec.rate)}",
              f"implied_vol = {_fmt(spec.implied_vol)}",
              f"rows_accepted = {len(loaded.rows)}",
              f"rows_rejected = {len(loaded.rejected)}"]
    lines += ["", "[rejected rows]"]
    if loaded.rejected:
        lines += [f"line {r.line}: {r.reason}" for r in loaded.rejected]
    else:
        lines.append("none")
    lines += ["", "[windows]"]
    if report.per_window:
        lines.append("window_start gamma rho delta admissible pointwise converged weak")
        for w in report.per_window:
            lines.append(" ".join([
                str(w.window_start), _fmt(w.gamma), _fmt(w.rho), _fmt(w.delta),
                "yes" if w.admissible else "no",
                "yes" if w.pointwise else "no",
                "yes" if w.converged else "no",
                "yes" if w.weak_identification else "no",
            ]))
    else:
        lines.append("none")
    d = report.diagnostics
    lines += ["", "[result]",
              f"sum_rho = {_fmt(report.sum_rho)}",
              f"sum_delta = {_fmt(report.sum_delta)}",
              f"branch = {report.branch}",
              f"verdict = {report.verdict}",
              "", "[diagnostics]",
              f"windows = {d.n_windows}",
              f"admissible = {d.n_admissible}",
              f"nonconverged = {d.n_nonconverged}",
              f"weak_identification = {d.n_weak_identification}",
              f"stationarity_failed = {d.n_stationarity_failed}",
              f"gamma_gated = {d.n_gamma_gated}",
              f"skipped_delta_observations = {d.skipped_rows}"]
    if d.notes:
        lines.append("notes:")
        lines += [f"  - {note}" for note in d.notes]
    return "\n".join(lines) + "\n"


def _report_records(config, spec, loaded, report: DetectionReport) -> list[dict]:
    records: list[dict] = [{
        "record": "config",
        "window": config.window,
        "day_count": config.day_count,
        "drift_mode": config.drift_mode,
        "lambda_variant": config.lambda_variant,
        "gamma_tolerance": config.gamma_tolerance,
        "seed": config.seed,
    }, {
        "record": "contract",
        "kind": spec.kind,
        "strike": spec.strike,
        "expiry_years": spec.expiry,
        "rate": spec.rate,
        "implied_vol": spec.implied_vol,
        "rows_accepted": len(loaded.rows),
        "rows_rejected": len(loaded.rejected),
    }]
    records += [{"record": "rejected_row", "line": r.line, "reason": r.reason}
                for r in loaded.rejected]
    records += report.to_records()
    return records


def cmd_detect(args) -> int:
    if args.config is not None:
        config = market_data.load_config(args.config)
    else:
        config = market_data.RunConfig()
    loaded = market_data.load_csv(args.data, day_count=config.day_count)
    times, prices, deltas, spec = market_data.rows_to_detection_inputs(
        loaded, config.day_count)
    report = run_detection(times, prices, deltas, spec, window=config.window,
                           drift_mode=config.drift_mode,
                           gamma_tolerance=config.gamma_tolerance)
    report_path = Path(args.report)
    report_path.write_text(_report_text(config, spec, loaded, report))
    jsonl_path = report_path.with_name(report_path.name + ".jsonl")
    records = _report_records(config, spec, loaded, report)
    jsonl_path.write_text(
        "\n".join(json.dumps(r, sort_keys=True) for r in records) + "\n")
    print(f"verdict: {report.verdict} (branch {report.branch})")
    print(f"report: {report_path}")
    return EXIT_OK


def cmd_fit(args) -> int:
    columns = market_data.read_columns(args.data)
    if args.column not in columns:
        raise ConfigError(
            f"unknown column {args.column!r}; file has: {', '.join(columns)}")
    fits = rolling_fit(columns[args.column], args.window)
    out = ["window_start,gamma,rho,delta,sigma_eps2,status"]
    for fit in fits:
        p = fit.params
        if p.sigma_eps2 == 0.0:
            status = "degenerate"
        else:
            status = "ok" if fit.converged else "nonconverged"
        out.append(",".join([
            str(fit.window_start),
            repr(float(p.gamma)), repr(float(p.rho)), repr(float(p.delta)),
            repr(float(p.sigma_eps2)), status,
        ]))
    print("\n".join(out))
    return EXIT_OK


_HANDLERS = {"simulate": cmd_simulate, "detect": cmd_detect, "fit": cmd_fit}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except InsufficientDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    except BrokenPipeError:
        # downstream reader (head, less) closed stdout; not our error
        sys.stderr.close()
        return EXIT_OK
    except (OptinformedError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def run() -> None:
    sys.exit(main())
