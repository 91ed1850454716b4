#!/usr/bin/env python3
"""
Module: Command-line front end for RelStar
Version: 1.0.0
Development Iteration: v1

Project: RelStar
Created: 2026-10-17

Enhancement: Initial implementation

Features:
- Commands: kappa-n, tf-tau, blowup, hfb-scale, classify, check
- Global flags --config, --output-dir, --threads, --log-level
- Flat key-value run-config files whose keys are the flag names (CLI wins)
- JSON/CSV reports and checkpoints stamped with the config hash
- Exit codes: 0 success, 1 usage, 2 non-convergence, 3 invariant violation or export failure

UV ENVIRONMENT: Run with `uv run python main.py kappa-n --N 2`

INSTALLATION:
uv sync
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Optional

import numpy as np

import config
from config import (
    DEFAULT_BOX,
    DEFAULT_GRID,
    DEFAULT_SEEDS,
    EXIT_INVARIANT,
    EXIT_NONCONVERGED,
    EXIT_OK,
    EXIT_USAGE,
    GRADIENT_TOLERANCE,
    LOG_FORMAT,
    MAX_ITERATIONS,
    RADIAL_NODES,
    TAU_C_REFERENCE,
    RunConfig,
    load_run_file,
    set_threads,
)
from critical_analysis import (
    InvariantViolationError,
    TableRangeError,
    blowup_scan,
    classify_kappa,
    decay_diagnostic,
    extract_d_star,
    grid_refinement_study,
    hfb_scaling_trajectory,
    zero_energy_coupling,
)
from functionals import DegenerateDenominatorError
from invariant_suite import run_invariant_suite
from minimizer import MinimizeConfig, NonConvergenceError, initial_pairing, solve_kappa_n
from report_export import export_csv, export_json, export_radial_profile, iterate_log_rows, scan_table_rows
from spectral_grid import SpectralGrid
from state_storage import save_checkpoint
from thomas_fermi import chandrasekhar_scaling_check, lane_emden_reference, tau_c

logger = logging.getLogger(__name__)

KAPPA_TABLE_FILE = "kappa_table.json"
# Flags that never enter the config hash
PLUMBING = {"command", "config", "output_dir", "threads", "log_level", "handler"}
BOOLEAN_FLAGS = {"refine"}
REQUIRED_FLAGS = {"kappa-n": ("N",), "blowup": ("N",), "classify": ("kappa",)}


class ExportError(RuntimeError):
    """A report could not be written."""


class UsageParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _particle_number(text: str) -> int:
    value = int(text)
    if value < 2:
        raise argparse.ArgumentTypeError(f"N must be >= 2 (kappa_1 is infinite), got {value}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {value}")
    return value


def _float_list(text: str) -> list[float]:
    try:
        return [float(item) for item in text.replace(" ", "").split(",") if item]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--grid", type=_positive_int, default=DEFAULT_GRID, help="points per axis (even, >= 8)")
    parser.add_argument("--box", type=_positive_float, default=DEFAULT_BOX, help="initial box edge L")
    parser.add_argument("--seeds", type=_positive_int, default=DEFAULT_SEEDS, help="multistart count")
    parser.add_argument("--max-iterations", type=_positive_int, default=MAX_ITERATIONS)
    parser.add_argument("--tolerance", type=_positive_float, default=GRADIENT_TOLERANCE, help="gradient tolerance")


def build_parser() -> UsageParser:
    parser = UsageParser(prog="relstar", description="Pseudo-relativistic HF/HFB variational toolkit")
    parser.add_argument("--config", help="flat key=value run-config file")
    parser.add_argument("--output-dir", help=f"output directory (default: {config.OUTPUT_DIR})")
    parser.add_argument("--threads", type=_positive_int, help="worker cap (default: RELSTAR_THREADS or 1)")
    parser.add_argument("--log-level", default=config.LOG_LEVEL, choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    commands = parser.add_subparsers(dest="command", required=True)

    kappa = commands.add_parser("kappa-n", help="critical coupling kappa_N^HF")
    kappa.add_argument("--N", type=_particle_number, help="particle number (>= 2)")
    _add_solver_flags(kappa)
    kappa.add_argument("--refine", action="store_true", help="also run the 32/48/64 grid refinement study")
    kappa.set_defaults(handler=run_kappa_n)

    tf = commands.add_parser("tf-tau", help="Thomas-Fermi constant tau_c")
    tf.add_argument("--nodes", type=_positive_int, default=RADIAL_NODES, help="radial nodes M")
    tf.add_argument("--refine", action="store_true", help="repeat at 2M and report the relative change")
    tf.add_argument("--max-iterations", type=_positive_int, default=None)
    tf.set_defaults(handler=run_tf_tau)

    blowup = commands.add_parser("blowup", help="blow-up rates as kappa -> kappa_N")
    blowup.add_argument("--N", type=_particle_number, help="particle number (>= 2)")
    blowup.add_argument("--m", type=_positive_float, default=1.0, help="rest mass")
    blowup.add_argument("--fractions", type=_float_list, default=[0.9, 0.95, 0.98, 0.99, 0.995])
    _add_solver_flags(blowup)
    blowup.set_defaults(handler=run_blowup)

    scale = commands.add_parser("hfb-scale", help="HFB energy along a dilation trajectory")
    scale.add_argument("--beta-max", type=_positive_float, default=64.0)
    scale.add_argument("--points", type=_positive_int, default=25)
    scale.add_argument("--N", type=_positive_float, default=2.0, help="particle number Tr gamma")
    scale.add_argument("--kappa", type=_positive_float, help="coupling (default: the trial state's zero-energy coupling)")
    scale.add_argument("--kappa-margin", type=float, default=0.0, help="relative excess over the zero-energy coupling")
    scale.add_argument("--m", type=_positive_float, default=1.0)
    scale.add_argument("--grid", type=_positive_int, default=32)
    scale.add_argument("--box", type=_positive_float, default=DEFAULT_BOX)
    scale.add_argument("--seed", type=int, default=0)
    scale.set_defaults(handler=run_hfb_scale)

    classify = commands.add_parser("classify", help="existence of an HF minimizer at coupling kappa")
    classify.add_argument("--kappa", type=_positive_float, help="coupling to classify")
    classify.add_argument("--table", help=f"kappa table JSON (default: <output-dir>/{KAPPA_TABLE_FILE})")
    classify.set_defaults(handler=run_classify)

    check = commands.add_parser("check", help="run the invariant suite")
    check.add_argument("--seed", type=int, default=0)
    check.add_argument("--samples", type=_positive_int, default=200, help="Hardy-Kato samples")
    check.set_defaults(handler=run_check)
    return parser


def _subparser(parser: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


def parse_args(argv: Optional[list[str]] = None) -> argparse.Namespace:
    """Parse the command line; run-config file values become defaults the flags override."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        values = load_run_file(args.config)
        if not values and not Path(args.config).exists():
            parser.error(f"run config not found: {args.config}")
        sub = _subparser(parser, args.command)
        local = {action.dest for action in sub._actions}
        shared = {action.dest for action in parser._actions}
        defaults: dict[str, Any] = {}
        for key, value in values.items():
            if key not in local | shared:
                logger.warning(f"Ignoring unknown run-config key: {key}")
                continue
            if key in BOOLEAN_FLAGS:
                defaults[key] = value.strip().lower() in ("1", "true", "yes", "on")
            else:
                defaults[key] = value
        sub.set_defaults(**{k: v for k, v in defaults.items() if k in local})
        parser.set_defaults(**{k: v for k, v in defaults.items() if k not in local})
        args = parser.parse_args(argv)
    for name in REQUIRED_FLAGS.get(args.command, ()):
        if getattr(args, name) is None:
            _subparser(parser, args.command).error(f"the following arguments are required: --{name}")
    return args


def _run_config(args: argparse.Namespace) -> RunConfig:
    parameters = {k: v for k, v in sorted(vars(args).items()) if k not in PLUMBING}
    return RunConfig(command=args.command, parameters=parameters)


def _output_dir(args: argparse.Namespace) -> Path:
    return Path(args.output_dir) if args.output_dir else Path(config.OUTPUT_DIR)


def _require(path: Optional[str], what: str) -> str:
    if path is None:
        raise ExportError(f"could not write {what}")
    return path


def _minimize_config(args: argparse.Namespace) -> MinimizeConfig:
    return MinimizeConfig(max_iterations=args.max_iterations, gradient_tolerance=args.tolerance)


def load_kappa_table(path: Path) -> tuple[dict[int, float], dict[int, float]]:
    """Read {"kappas": {N: kappa}, "errors": {N: err}}; a bare {N: kappa} map is accepted too."""
    data = json.loads(path.read_text(encoding="utf-8"))
    if "result" in data:
        data = data["result"]
    kappas = data.get("kappas", data)
    errors = data.get("errors", {})
    return (
        {int(n): float(k) for n, k in kappas.items()},
        {int(n): float(e) for n, e in errors.items() if e is not None},
    )


def _record_kappa(directory: Path, N: int, kappa: float, error: Optional[float], config_hash: str) -> None:
    """Merge kappa_N into the table; each entry keeps the config hash of the run that produced it."""
    path = directory / KAPPA_TABLE_FILE
    kappas, errors = load_kappa_table(path) if path.exists() else ({}, {})
    hashes: dict[int, str] = {}
    if path.exists():
        data = json.loads(path.read_text(encoding="utf-8"))
        hashes = {int(n): h for n, h in data.get("config_hashes", {}).items()}
    kappas[N] = kappa
    hashes[N] = config_hash
    if error is not None:
        errors[N] = error
    else:
        errors.pop(N, None)
    payload = {
        "kappas": dict(sorted(kappas.items())),
        "errors": dict(sorted(errors.items())),
        "config_hashes": dict(sorted(hashes.items())),
    }
    _require(export_json(payload, str(path)), "kappa table")


# ── commands ─────────────────────────────────────────────


def run_kappa_n(args: argparse.Namespace, run: RunConfig, directory: Path) -> int:
    grid = SpectralGrid(args.grid, args.box)
    cfg = _minimize_config(args)
    result = solve_kappa_n(args.N, grid, args.seeds, cfg)
    d_star = extract_d_star(result)
    payload: dict[str, Any] = {
        "critical": result,
        "d_star": d_star,
        "decay": decay_diagnostic(result.state),
    }
    stem = directory / f"kappa_n_N{args.N}"
    if args.refine:
        study = grid_refinement_study(args.N, box_length=args.box, seeds=args.seeds, config=cfg)
        payload["refinement"] = study
        _require(export_csv(scan_table_rows(study, run.config_hash), f"{stem}_refinement.csv"), "refinement table")
    _require(export_json(payload, f"{stem}.json", run.provenance()), "kappa_N report")
    _require(save_checkpoint(result.state, 0.0, result.kappa, f"{stem}.rstr", config_hash=run.config_hash), "checkpoint")
    _require(export_csv(iterate_log_rows(result.iterate_log, run.config_hash), f"{stem}_iterates.csv"), "iterate log")
    _record_kappa(directory, args.N, result.kappa, result.confinement_error, run.config_hash)
    print(f"kappa_{args.N} = {result.kappa:.12g}  d_{args.N}* = {d_star.value:.9g}")
    return EXIT_OK


def run_tf_tau(args: argparse.Namespace, run: RunConfig, directory: Path) -> int:
    report = tau_c(args.nodes, refine=args.refine, max_iterations=args.max_iterations)
    reference = lane_emden_reference()
    _require(export_json({"tau_c": report, "lane_emden": reference}, str(directory / "tau_c.json"), run.provenance()), "tau_c report")
    profile_path = export_radial_profile(
        np.array(report.radii), np.array(report.profile), str(directory / "tau_c_profile.csv"), run.config_hash
    )
    _require(profile_path, "radial profile")
    if not report.converged:
        logger.warning(f"Thomas-Fermi descent stopped before the tolerance after {report.iterations} iterations")
    print(f"tau_c = {report.value:.9g}  (Lane-Emden {reference.tau_c:.9g})")
    return EXIT_OK


def run_blowup(args: argparse.Namespace, run: RunConfig, directory: Path) -> int:
    cfg = _minimize_config(args)
    critical = solve_kappa_n(args.N, SpectralGrid(args.grid, args.box), args.seeds, cfg, confinement=False)
    table = blowup_scan(critical, args.m, args.fractions, cfg)
    stem = directory / f"blowup_N{args.N}"
    _require(export_json(table, f"{stem}.json", run.provenance()), "blow-up report")
    _require(export_csv(scan_table_rows(table, run.config_hash), f"{stem}.csv"), "blow-up table")
    for name, fit in table.fits.items():
        if fit is not None:
            print(f"{name}: exponent {fit.exponent:.4f}, r^2 {fit.r_squared:.5f}")
    return EXIT_OK


def run_hfb_scale(args: argparse.Namespace, run: RunConfig, directory: Path) -> int:
    if args.beta_max <= 1.0:
        raise ValueError(f"--beta-max must exceed 1, got {args.beta_max}")
    pairs = int(args.N // 2) + 1
    if args.kappa_margin < 0:
        raise ValueError(f"--kappa-margin must be nonnegative, got {args.kappa_margin}")
    state = initial_pairing(SpectralGrid(args.grid, args.box), pairs, args.seed, trace=args.N)
    threshold = zero_energy_coupling(state)
    coupling = threshold * (1.0 + args.kappa_margin) if args.kappa is None else args.kappa
    if coupling < threshold:
        logger.warning(f"kappa {coupling:.6g} is below the zero-energy coupling {threshold:.6g} of the trial state")
    betas = [float(b) for b in np.geomspace(1.0, args.beta_max, max(args.points, 2))]
    window = (args.beta_max / 16.0, args.beta_max)
    table = hfb_scaling_trajectory(state, args.m, coupling, betas, window)
    table.metadata["zero_energy_coupling"] = threshold
    _require(export_json(table, str(directory / "hfb_scale.json"), run.provenance()), "trajectory report")
    _require(export_csv(scan_table_rows(table, run.config_hash), str(directory / "hfb_scale.csv")), "trajectory table")
    fit = table.fits.get("mass_gap")
    slope = "n/a" if fit is None else f"{fit.exponent:.4f}"
    print(f"max identity residual {table.metadata['max_identity_residual']:.3e}, mass-gap slope {slope}")
    return EXIT_OK


def run_classify(args: argparse.Namespace, run: RunConfig, directory: Path) -> int:
    path = Path(args.table) if args.table else directory / KAPPA_TABLE_FILE
    if not path.exists():
        raise FileNotFoundError(f"kappa table not found: {path}")
    kappas, errors = load_kappa_table(path)
    result = classify_kappa(args.kappa, kappas, errors)
    scaling = chandrasekhar_scaling_check(kappas, TAU_C_REFERENCE)
    _require(export_json({"classification": result, "scaling": scaling}, str(directory / "classify.json"), run.provenance()), "classification")
    print(f"kappa = {args.kappa:g}: N = {result.N}, minimizer exists: {result.exists}")
    return EXIT_OK


def run_check(args: argparse.Namespace, run: RunConfig, directory: Path) -> int:
    table_path = directory / KAPPA_TABLE_FILE
    kappas = load_kappa_table(table_path)[0] if table_path.exists() else None
    report = run_invariant_suite(seed=args.seed, hardy_kato_samples=args.samples, kappa_table=kappas)
    _require(export_json(report, str(directory / "check.json"), run.provenance()), "check report")
    print(f"{len(report.checks_run)} checks, {len(report.failures)} failures")
    for failure in report.failures:
        print(f"FAIL {failure.check}: {failure.detail}")
    return EXIT_OK if report.passed else EXIT_INVARIANT


def main(argv: Optional[list[str]] = None) -> int:
    """Entry point; returns the process exit code."""
    args = parse_args(argv)
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT)
    try:
        set_threads(args.threads)
    except ValueError as e:
        logger.error(str(e))
        return EXIT_USAGE

    run = _run_config(args)
    directory = _output_dir(args)
    logger.info(f"relstar {args.command} (config {run.config_hash[:12]}) -> {directory}")
    try:
        return args.handler(args, run, directory)
    except NonConvergenceError as e:
        logger.error(f"Non-convergence: {e}")
        return EXIT_NONCONVERGED
    except DegenerateDenominatorError as e:
        logger.error(f"Degenerate quotient: {e}")
        return EXIT_NONCONVERGED
    except (InvariantViolationError, ExportError) as e:
        logger.error(f"Invariant violation: {e}")
        return EXIT_INVARIANT
    except (ValueError, TableRangeError, FileNotFoundError) as e:
        logger.error(f"Usage error: {e}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
