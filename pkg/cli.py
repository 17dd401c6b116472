# cli.py
# defectlab command line: check, amplitudes, bae, density. Exit codes 0 pass, 1 failure, 2 usage/config.
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from algebra_check import SUITES, run_suite
from bethe import SolveOptions, SolveResult, save_state, solve_bae, state_from_json
from check_report import REPORT_SCHEMA, CheckReport, reports_to_csv, write_json
from error_recovery_handler import CheckRecoveryHandler
from errors import (
    ConfigError,
    ConvergenceError,
    DefectLabError,
    DimensionCapError,
    QuadratureError,
    StateFormatError,
)
from run_config import RunConfig, build_config
from thermo import KernelTable, amplitude_rows_to_csv, amplitude_scan, density, profile_to_csv, profile_to_dict
from validate_state import validate_state_document

logger = logging.getLogger("defectlab")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML or JSON RunConfig file")
    p.add_argument("--rank", type=int)
    p.add_argument("--fock-cutoff", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--theta", type=float, nargs=2, metavar=("RE", "IM"))
    p.add_argument("--grid-min", type=float)
    p.add_argument("--grid-max", type=float)
    p.add_argument("--grid-count", type=int)
    p.add_argument("--output", help="output path (defaults per command)")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="defectlab", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="run an identity suite and write a report")
    check.add_argument("suite", choices=SUITES + ("all",))
    _common(check)
    check.add_argument("--ordering", choices=("normal", "antinormal"))
    check.add_argument("--shift", type=float)
    check.add_argument("--nbar-reference", choices=("normal", "antinormal"))
    check.add_argument("--variant", choices=("L", "Lhat"))
    check.add_argument("--sites", dest="chain_sites", type=int)
    check.add_argument("--chain-cutoff", type=int)
    check.add_argument("--defect-site", type=int)
    check.add_argument("--samples", type=int)
    check.add_argument("--jobs", type=int)

    amp = sub.add_parser("amplitudes", help="scan T+/T- closed form against the integral")
    _common(amp)
    amp.add_argument("--sign", choices=("+", "-", "both"), default="both")
    amp.add_argument("--grid-imag", type=float)

    bae = sub.add_parser("bae", help="solve the Bethe equations from a state file")
    bae.add_argument("input")
    _common(bae)
    bae.add_argument("--method", choices=("newton", "lm"), default="newton")
    bae.add_argument("--max-iter", type=int, default=SolveOptions.max_iter)
    bae.add_argument("--tol", type=float, default=SolveOptions.tol)

    dens = sub.add_parser("density", help="write a root density profile with one hole and the defect")
    _common(dens)
    dens.add_argument("--level", type=int, default=1)
    dens.add_argument("--sign", choices=("+", "-"), default="-")
    dens.add_argument("--hole", type=float, default=0.0)
    dens.add_argument("--sites", dest="density_sites", type=int, default=100)
    return ap


_CONFIG_ARGS = (
    "rank", "fock_cutoff", "seed", "output", "format", "ordering", "shift", "nbar_reference", "variant",
    "chain_sites", "chain_cutoff", "defect_site", "samples", "jobs", "grid_imag",
)


def config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides: Dict[str, Any] = {k: getattr(args, k, None) for k in _CONFIG_ARGS}
    if getattr(args, "theta", None) is not None:
        overrides["theta"] = list(args.theta)
    grid = {k: getattr(args, f"grid_{k}") for k in ("min", "max", "count") if getattr(args, f"grid_{k}") is not None}
    if grid:
        overrides["lambda_grid"] = grid
    return build_config(args.config, overrides)


def _grid(cfg: RunConfig) -> List[complex]:
    return [complex(x, cfg.grid_imag) for x in cfg.lambda_grid.values()]


def cmd_check(args: argparse.Namespace, cfg: RunConfig) -> int:
    handler = CheckRecoveryHandler(cfg.retry_limit, cfg.seed, CheckReport.from_error)
    reports = run_suite(args.suite, cfg, handler)
    failed = [r for r in reports if not r.passed]
    for r in failed:
        logger.warning("FAIL %s residual=%s tolerance=%g %s", r.name, r.residual, r.tolerance, r.error)
    out = Path(cfg.output or f"check_{args.suite}.{cfg.format}")
    if cfg.format == "csv":
        reports_to_csv(reports, out)
    else:
        write_json(
            {
                "schema": REPORT_SCHEMA,
                "suite": args.suite,
                "config": cfg.to_dict(),
                "reports": [r.to_dict() for r in reports],
                "recovery": handler.get_recovery_stats(),
            },
            out,
        )
    print(f"Wrote {out}")
    logger.info("%d/%d checks passed", len(reports) - len(failed), len(reports))
    return EXIT_FAIL if failed else EXIT_OK


def cmd_amplitudes(args: argparse.Namespace, cfg: RunConfig) -> int:
    signs = ("+", "-") if args.sign == "both" else (args.sign,)
    tol = cfg.tolerance("amplitudes", 1e-6)
    rows = [row for sign in signs for row in amplitude_scan(cfg.rank, sign, _grid(cfg), tol, cfg.pole_epsilon)]
    fmt = args.format or "csv"
    out = Path(cfg.output or f"amplitudes_rank{cfg.rank}.{fmt}")
    if fmt == "csv":
        amplitude_rows_to_csv(rows, out)
    else:
        write_json({"schema": REPORT_SCHEMA, "config": cfg.to_dict(), "rows": rows}, out)
    print(f"Wrote {out}")
    flags = [r["flag"] for r in rows]
    for flag in ("pole", "no-integral"):
        if flag in flags:
            logger.info("%d point(s) flagged %s", flags.count(flag), flag)
    worst = max((r["amplitude_residual"] for r in rows if "amplitude_residual" in r), default=0.0)
    logger.info("max amplitude residual %.3e (tolerance %g)", worst, tol)
    return EXIT_FAIL if "fail" in flags else EXIT_OK


def cmd_bae(args: argparse.Namespace, cfg: RunConfig) -> int:
    try:
        doc = json.loads(Path(args.input).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise StateFormatError(f"{args.input}: {e}") from e
    problems = validate_state_document(doc)
    if problems:
        for p in problems:
            print(f"{args.input}: {p}", file=sys.stderr)
        return EXIT_USAGE
    state = state_from_json(doc)
    options = SolveOptions(max_iter=args.max_iter, tol=args.tol)
    handler = CheckRecoveryHandler(cfg.retry_limit, cfg.seed, lambda name, e: e)
    fallback = None if args.method == "lm" else (lambda rng: [solve_bae(state, options, "lm")])
    outcome = handler.run("bae", lambda rng: [solve_bae(state, options, args.method)], fallback)[0]
    if isinstance(outcome, BaseException):
        print(str(outcome), file=sys.stderr)
        if isinstance(outcome, ConvergenceError) and outcome.trace:
            print("trace: " + " ".join(f"{r:.3e}" for r in outcome.trace), file=sys.stderr)
        return EXIT_FAIL
    result: SolveResult = outcome
    out = Path(cfg.output or Path(args.input).with_name(Path(args.input).stem + "_solved.json"))
    save_state(
        result.state,
        out,
        metadata={
            "residual": result.residual.max_abs,
            "iterations": result.iterations,
            "method": result.method,
            "trace": result.trace,
            "recovery": handler.get_recovery_stats(),
        },
    )
    print(f"Wrote {out}")
    logger.info("converged with %s after %d iterations, residual %.3e",
                result.method, result.iterations, result.residual.max_abs)
    return EXIT_OK


def cmd_density(args: argparse.Namespace, cfg: RunConfig) -> int:
    if not 1 <= args.level <= cfg.rank - 1:
        raise ConfigError(f"level must be in 1..{cfg.rank - 1}, got {args.level}")
    if cfg.theta.imag != 0:
        raise ConfigError(f"density takes a real theta, got {cfg.theta}")
    table = KernelTable(cfg.rank)
    try:
        profile = density(
            table, args.level, args.sign, cfg.lambda_grid.values(), args.hole, cfg.theta.real, args.density_sites
        )
    except QuadratureError as e:
        print(str(e), file=sys.stderr)
        return EXIT_FAIL
    except ValueError as e:
        raise ConfigError(str(e)) from e
    fmt = args.format or "csv"
    suffix = "p" if args.sign == "+" else "m"
    out = Path(cfg.output or f"density_level{args.level}{suffix}.{fmt}")
    if fmt == "csv":
        profile_to_csv(profile, out)
    else:
        write_json({"schema": REPORT_SCHEMA, "config": cfg.to_dict(), "profile": profile_to_dict(profile)}, out)
    print(f"Wrote {out}")
    return EXIT_OK


COMMANDS = {"check": cmd_check, "amplitudes": cmd_amplitudes, "bae": cmd_bae, "density": cmd_density}


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = config_from_args(args)
        return COMMANDS[args.command](args, cfg)
    except (ConfigError, StateFormatError, DimensionCapError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DefectLabError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
