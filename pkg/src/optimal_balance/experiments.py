"""
The four experiments behind the command line: one nudging run, an epsilon sweep, the oscillator oracle check and the
nudging/shooting comparison. Each reads an `ExperimentOptions`, writes its files under `out_dir`, and returns a summary
for the caller to print.
"""

import logging
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path

import numpy as np

from optimal_balance.bvp import round_trip_defect
from optimal_balance.bvp import shooting_solve
from optimal_balance.config import ExperimentOptions
from optimal_balance.config import SystemKind
from optimal_balance.diagnostics import RateModel
from optimal_balance.diagnostics import sweep
from optimal_balance.export import BVP_COLUMNS
from optimal_balance.export import ORACLE_COLUMNS
from optimal_balance.export import write_fits
from optimal_balance.export import write_nudging_trace
from optimal_balance.export import write_sweep
from optimal_balance.export import write_table
from optimal_balance.export import write_trajectory
from optimal_balance.nudging import balance_residual
from optimal_balance.nudging import run_nudging
from optimal_balance.oracle import oscillator_balanced_pT
from optimal_balance.oracle import oscillator_exact_slow
from optimal_balance.oracle import oscillator_nudge
from optimal_balance.plotting import plot_sweep
from optimal_balance.ramp import RampKind
from optimal_balance.ramp import RampSpec
from optimal_balance.series import slow_manifold_point

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True, kw_only=True)
class RunSummary:
    final_residual: float
    plateau_index: int
    converged: bool
    cycles: int
    files: list[Path] = field(default_factory=list)

    def describe(self) -> str:
        return (
            f"final residual {self.final_residual:.6e}, plateau index {self.plateau_index}, "
            f"converged {str(self.converged).lower()}, {self.cycles} iteration{'' if self.cycles == 1 else 's'}"
        )


@dataclass(frozen=True, slots=True, kw_only=True)
class SweepSummary:
    cells: int
    failed: int
    fits: dict[str, str]
    files: list[Path] = field(default_factory=list)


def _rate_model(ramp: RampSpec) -> RateModel:
    return RateModel.EXPONENTIAL if ramp.kind == RampKind.EXPONENTIAL else RateModel.ALGEBRAIC


def run_experiment(options: ExperimentOptions, out_dir: Path | None = None) -> RunSummary:
    out_dir = options.get_out_dir() if out_dir is None else out_dir

    if options.get_system() == SystemKind.OSCILLATOR:
        return _run_oscillator(options, out_dir)

    sys = options.get_system_spec()
    eps = options.get_epsilon()
    ramp = options.get_ramp()
    n = options.get_order_n(ramp, eps)
    cfg = options.nudging_config(sys, eps, ramp)

    result = run_nudging(sys, cfg)
    target = slow_manifold_point(sys, n, eps, cfg.q_star)

    files = [write_nudging_trace(out_dir / "nudging.csv", result, target)]
    if result.last_forward is not None and options.get_store_trajectory():
        files.append(write_trajectory(out_dir / "trajectory.csv", result.last_forward))

    summary = RunSummary(
        final_residual=balance_residual(sys, cfg, result, n),
        plateau_index=result.plateau_index,
        converged=result.converged,
        cycles=result.cycles,
        files=files,
    )
    logger.info("Nudging run: %s.", summary.describe())

    return summary


def _run_oscillator(options: ExperimentOptions, out_dir: Path) -> RunSummary:
    osc = options.get_modes()
    eps = options.get_epsilon()
    T = options.get_T()
    theta_star = options.get_theta_star()

    result = oscillator_nudge(
        osc,
        options.get_ramp(),
        eps,
        T,
        theta_star,
        max_iter=options.get_max_iter(),
        rtol=options.get_rtol(),
        kappa=options.get_kappa(),
    )
    target = np.array([oscillator_exact_slow(osc, eps, theta_star)])

    return RunSummary(
        final_residual=float(np.abs(result.final - target)[0]),
        plateau_index=result.plateau_index,
        converged=result.converged,
        cycles=result.cycles,
        files=[write_nudging_trace(out_dir / "nudging.csv", result, target)],
    )


def sweep_experiment(options: ExperimentOptions, out_dir: Path | None = None) -> SweepSummary:
    out_dir = options.get_out_dir() if out_dir is None else out_dir

    sys = options.get_system_spec()
    eps_list = options.get_epsilon_list()
    ramps = options.get_ramps()
    base_cfg = options.nudging_config(sys, max(eps_list), ramps[0])
    cells = len(eps_list) * len(ramps)

    result = sweep(
        sys,
        base_cfg,
        eps_list,
        ramps,
        n_for_residual=options.get_order_n_override(),
        kappa=options.get_kappa(),
        workers=options.get_default_workers(cells),
    )

    models = {ramp.label: _rate_model(ramp).value for ramp in ramps}
    files = [
        write_sweep(out_dir / "sweep.csv", result),
        write_fits(out_dir / "fit.csv", result, models),
        plot_sweep(result, base_cfg.T, out_dir / "sweep.svg"),
    ]

    fits = {}
    for label, fit in result.fits.items():
        fits[label] = "skipped" if fit is None else f"{fit.model} slope {fit.slope:.4g} (r2 {fit.r_squared:.4f})"

    return SweepSummary(
        cells=cells,
        failed=sum(cell.failed for cell in result.cells),
        fits=fits,
        files=files,
    )


def predicted_order(ramp: RampSpec) -> float:
    return float("inf") if ramp.kind == RampKind.EXPONENTIAL else float(ramp.order + 1)


def oracle_experiment(options: ExperimentOptions, out_dir: Path | None = None) -> list[Path]:
    out_dir = options.get_out_dir() if out_dir is None else out_dir

    osc = options.get_modes()
    T = options.get_T()
    theta_star = options.get_theta_star()

    rows = []
    for ramp in options.get_ramps():
        for eps in options.get_epsilon_list():
            error = abs(oscillator_balanced_pT(osc, ramp, eps, T, theta_star) - oscillator_exact_slow(osc, eps, theta_star))
            rows.append((eps, ramp.label, error, predicted_order(ramp)))
            logger.debug("Oracle check ramp=%s, eps=%g: |pT - G| = %.3e.", ramp.label, eps, error)

    return [write_table(out_dir / "oracle.csv", ORACLE_COLUMNS, rows)]


def bvp_experiment(options: ExperimentOptions, out_dir: Path | None = None) -> list[Path]:
    out_dir = options.get_out_dir() if out_dir is None else out_dir

    sys = options.get_system_spec()

    rows = []
    for ramp in options.get_ramps():
        for eps in options.get_epsilon_list():
            cfg = options.nudging_config(sys, eps, ramp)
            shooting_cfg = options.shooting_config(cfg)

            nudged = run_nudging(sys, cfg)
            shot = shooting_solve(sys, shooting_cfg)

            distance = float(np.linalg.norm(shot.pT - nudged.final))
            defect = round_trip_defect(sys, shooting_cfg, shot.q0)
            rows.append((eps, cfg.T, ramp.label, distance, nudged.plateau_norm, defect))
            logger.debug("BVP comparison ramp=%s, eps=%g: distance %.3e.", ramp.label, eps, distance)

    return [write_table(out_dir / "bvp.csv", BVP_COLUMNS, rows)]
