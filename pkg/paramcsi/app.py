# -*- coding: utf-8 -*-
"""
Command-line orchestration.

- simulate: load a config, run the sweep, write the CSV report
- verify: run the test suite (property and acceptance checks) through pytest
- measure-sigma2: print the empirical ESPRIT delay error variance for a config

Exit codes: 0 success, 1 failed verification, 2 config / usage error.
"""

from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import List, Optional, Sequence

from . import __version__
from .config import SWEEP_AXES, ExperimentConfig
from .delay_est import sigma2_to_db
from .errors import ConfigError
from .harness import emit_csv, load_config, measure_config_sigma2, sweep

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2


def _parse_values(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"bad value list {text!r}: {e}") from e


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


class ParamCsiApp:
    def __init__(self, base_dir: Path):
        self.base_dir = Path(base_dir)
        self.tests_dir = self.base_dir / "tests"

    # ---------------------------
    # Argument parsing
    # ---------------------------
    def build_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(
            prog="paramcsi",
            description="Parametric downlink channel estimation simulator for FDD massive MIMO.",
        )
        parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
        parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
        sub = parser.add_subparsers(dest="command", required=True)

        sim = sub.add_parser("simulate", help="run a sweep and write a CSV report")
        sim.add_argument("--config", required=True, type=Path)
        sim.add_argument("--out", required=True, type=Path)
        sim.add_argument("--seed", type=int)
        sim.add_argument("--threads", type=_positive_int, default=1)
        sim.add_argument("--sweep", choices=SWEEP_AXES)
        sim.add_argument("--values", type=_parse_values, help="comma-separated sweep values")

        ver = sub.add_parser("verify", help="run the property and acceptance suite")
        ver.add_argument("--quick", action="store_true", help="skip tests marked slow")

        meas = sub.add_parser("measure-sigma2", help="empirical ESPRIT delay error variance")
        meas.add_argument("--config", required=True, type=Path)
        return parser

    # ---------------------------
    # Commands
    # ---------------------------
    def _load(self, path: Path) -> ExperimentConfig:
        if not path.is_absolute() and not path.exists():
            path = self.base_dir / path
        return load_config(path)

    def cmd_simulate(self, args: argparse.Namespace) -> int:
        config = self._load(args.config)
        changes = {}
        if args.seed is not None:
            changes["seed"] = args.seed
        if args.sweep is not None:
            changes["sweep_axis"] = args.sweep
        if args.values is not None:
            changes["sweep_values"] = tuple(args.values)
        if changes:
            config = config.replace(**changes)
            config.validate()

        report = sweep(config, threads=args.threads)
        emit_csv(report, args.out)
        failed = sum(1 for row in report.rows if row.failed)
        if failed:
            logger.warning("%d of %d sweep points failed; see log", failed, len(report.rows))
        logger.info(
            "wrote %d rows to %s in %.1fs (config %s)",
            len(report.rows),
            args.out,
            report.wall_time,
            report.config_hash[:12],
        )
        return EXIT_OK

    def cmd_verify(self, args: argparse.Namespace) -> int:
        import pytest

        pytest_args = [str(self.tests_dir), "-q"]
        if args.quick:
            pytest_args += ["-m", "not slow"]
        code = pytest.main(pytest_args)
        return EXIT_OK if code == 0 else EXIT_VERIFY_FAILED

    def cmd_measure_sigma2(self, args: argparse.Namespace) -> int:
        config = self._load(args.config)
        m = measure_config_sigma2(config)
        print(
            f"sigma2 = {m.sigma2:.6g} s^2 ({sigma2_to_db(m.sigma2, config.params.tau_max):.2f} dB) "
            f"over {m.n_trials} trials, {m.n_unreliable} unreliable"
        )
        return EXIT_OK

    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        parser = self.build_parser()
        try:
            args = parser.parse_args(argv)
        except SystemExit as e:
            return EXIT_OK if e.code in (0, None) else EXIT_USAGE
        _configure_logging(args.verbose)

        handlers = {
            "simulate": self.cmd_simulate,
            "verify": self.cmd_verify,
            "measure-sigma2": self.cmd_measure_sigma2,
        }
        try:
            return handlers[args.command](args)
        except ConfigError as e:
            logger.error("%s", e)
            return EXIT_USAGE
        except OSError as e:
            logger.error("%s", e)
            return EXIT_USAGE
