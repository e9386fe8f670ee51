import logging
from pathlib import Path

from django.core.exceptions import ImproperlyConfigured
from django.core.management.base import BaseCommand
from django.core.management.base import CommandError

from optimal_balance.config import load_config
from optimal_balance.exceptions import OptimalBalanceError
from optimal_balance.experiments import bvp_experiment
from optimal_balance.experiments import oracle_experiment
from optimal_balance.experiments import run_experiment
from optimal_balance.experiments import sweep_experiment

VERBOSITY_LEVELS = {0: logging.ERROR, 1: logging.WARNING, 2: logging.INFO, 3: logging.DEBUG}


class Command(BaseCommand):
    help = "Run optimal balance experiments from a key = value config file."

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest="subcommand", required=True)

        for name, description in (
            ("run", "One nudging run: trace CSV and a summary line."),
            ("sweep", "Nudging over an epsilon grid: sweep.csv, fit.csv and an SVG plot."),
            ("oracle-check", "Oscillator quadrature against the closed-form slow manifold: oracle.csv."),
            ("bvp-compare", "Nudging limit against the shooting solution: bvp.csv."),
        ):
            subparser = subparsers.add_parser(name, help=description)
            subparser.add_argument("config", help="Path to the experiment config file.")
            subparser.add_argument("--out-dir", default=None, help="Directory for output files; overrides out_dir.")

    def handle(self, *args, **options):
        self.verbosity = options["verbosity"]
        logging.getLogger("optimal_balance").setLevel(VERBOSITY_LEVELS.get(options["verbosity"], logging.DEBUG))

        handler = {
            "run": self.handle_run,
            "sweep": self.handle_sweep,
            "oracle-check": self.handle_oracle_check,
            "bvp-compare": self.handle_bvp_compare,
        }[options["subcommand"]]

        try:
            experiment = load_config(options["config"])
            out_dir = Path(options["out_dir"]) if options["out_dir"] else None

            handler(experiment, out_dir)
        except (OptimalBalanceError, ImproperlyConfigured, ValueError, OSError) as e:
            raise CommandError(str(e)) from e

    def handle_run(self, experiment, out_dir):
        summary = run_experiment(experiment, out_dir)

        self.write_files(summary.files)
        self.stdout.write(summary.describe())

    def handle_sweep(self, experiment, out_dir):
        summary = sweep_experiment(experiment, out_dir)

        if summary.failed == summary.cells:
            raise CommandError(f"All {summary.cells} sweep cells failed.")

        if summary.failed:
            self.stderr.write(f"{summary.failed} of {summary.cells} sweep cells failed; see sweep.csv.")

        self.write_files(summary.files)
        for ramp, fit in summary.fits.items():
            self.stdout.write(f"{ramp}: {fit}")

    def handle_oracle_check(self, experiment, out_dir):
        self.write_files(oracle_experiment(experiment, out_dir))

    def handle_bvp_compare(self, experiment, out_dir):
        self.write_files(bvp_experiment(experiment, out_dir))

    def write_files(self, files):
        if self.verbosity < 1:
            return

        for path in files:
            self.stdout.write(f"Wrote {path}")
