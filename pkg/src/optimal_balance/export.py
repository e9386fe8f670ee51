"""
CSV files written by the experiments: comma separated, one header row, '.' decimals, LF line endings.

Column order is fixed by the *_COLUMNS tuples below; every table can be read back with `read_table`.
"""

import csv
import os
from collections.abc import Iterable
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from optimal_balance.diagnostics import SweepCell
from optimal_balance.diagnostics import SweepResult
from optimal_balance.integrate import Trajectory
from optimal_balance.nudging import NudgingResult

NUDGING_COLUMNS = ("m", "update_norm", "balance_residual")
SWEEP_COLUMNS = ("eps", "T", "ramp", "n", "plateau_residual", "plateau_index", "balance_residual", "error")
FIT_COLUMNS = ("model", "slope", "intercept", "r2", "ramp", "status")
ORACLE_COLUMNS = ("eps", "ramp", "abs_error", "predicted_order")
BVP_COLUMNS = ("eps", "T", "ramp", "shoot_nudge_distance", "plateau_update_norm", "round_trip_defect")


def format_value(value) -> str:
    if value is None:
        return ""

    if isinstance(value, bool):
        return "true" if value else "false"

    if isinstance(value, float | np.floating):
        return repr(float(value))

    return str(value)


def write_table(path: str | os.PathLike, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"Row has {len(row)} values for {len(columns)} columns.")
            writer.writerow([format_value(value) for value in row])

    return path


def read_table(path: str | os.PathLike, columns: Sequence[str]) -> list[dict[str, str]]:
    with Path(path).open(newline="") as handle:
        reader = csv.DictReader(handle)
        if tuple(reader.fieldnames or ()) != tuple(columns):
            raise ValueError(f"{path} has columns {reader.fieldnames}, expected {list(columns)}.")

        return list(reader)


def write_nudging_trace(path, result: NudgingResult, target: np.ndarray | None = None) -> Path:
    """One row per cycle; the balance residual column is ||p_{m+1} - target|| when a target is given."""
    rows = []
    for m, norm in enumerate(result.update_norms):
        residual = None if target is None else float(np.linalg.norm(result.iterates[m + 1] - target))
        rows.append((m, norm, residual))

    return write_table(path, NUDGING_COLUMNS, rows)


def trajectory_columns(dim: int) -> tuple[str, ...]:
    return ("t", *(f"q_{i}" for i in range(1, dim + 1)), *(f"p_{i}" for i in range(1, dim + 1)))


def write_trajectory(path, trajectory: Trajectory) -> Path:
    dim = trajectory.states.shape[1] // 2
    rows = [(float(t), *(float(v) for v in y)) for t, y in zip(trajectory.times, trajectory.states)]

    return write_table(path, trajectory_columns(dim), rows)


def write_sweep(path, result: SweepResult) -> Path:
    rows = [
        (
            cell.eps,
            cell.T,
            cell.ramp,
            cell.n,
            cell.plateau_residual,
            cell.plateau_index,
            cell.balance_residual,
            cell.error,
        )
        for cell in result.cells
    ]

    return write_table(path, SWEEP_COLUMNS, rows)


def read_sweep(path) -> list[SweepCell]:
    return [
        SweepCell(
            eps=float(row["eps"]),
            T=float(row["T"]),
            ramp=row["ramp"],
            n=int(row["n"]),
            plateau_residual=float(row["plateau_residual"]),
            plateau_index=int(row["plateau_index"]),
            balance_residual=float(row["balance_residual"]),
            error=row["error"] or None,
        )
        for row in read_table(path, SWEEP_COLUMNS)
    ]


def write_fits(path, result: SweepResult, models: dict[str, str]) -> Path:
    """`models` maps each ramp label to the rate model its family is fitted with, for the rows of skipped fits."""
    rows = []
    for ramp, fit in result.fits.items():
        if fit is None:
            rows.append((models[ramp], float("nan"), float("nan"), float("nan"), ramp, "skipped"))
        else:
            rows.append((fit.model.value, fit.slope, fit.intercept, fit.r_squared, ramp, "fitted"))

    return write_table(path, FIT_COLUMNS, rows)
