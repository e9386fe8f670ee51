import os
from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

from optimal_balance.diagnostics import RateModel
from optimal_balance.diagnostics import SweepResult


def new_axes(xlabel: str, ylabel: str):
    fig = Figure(figsize=(6.0, 4.5))
    ax = fig.add_subplot()

    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)

    return fig, ax


def savefig(fig: Figure, path: str | os.PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    fig.savefig(path, format="svg", bbox_inches="tight")

    return path


def plot_sweep(result: SweepResult, T: float, path: str | os.PathLike) -> Path:
    """
    Balance residual against eps for every ramp of the sweep, with the fitted line overlaid.

    Algebraic fits are drawn on log-log axes; exponential fits against (T/eps)^(1/3) with a log ordinate.
    """
    exponential = any(fit is not None and fit.model == RateModel.EXPONENTIAL for fit in result.fits.values())
    xlabel = r"$(T/\varepsilon)^{1/3}$" if exponential else r"$\varepsilon$"
    fig, ax = new_axes(xlabel, "balance residual")

    ax.set_yscale("log")
    if not exponential:
        ax.set_xscale("log")

    for ramp, fit in result.fits.items():
        cells = [cell for cell in result.cells if cell.ramp == ramp and cell.fittable]
        if not cells:
            continue

        eps = np.array([cell.eps for cell in cells])
        residuals = np.array([cell.balance_residual for cell in cells])
        x = np.cbrt(T / eps) if exponential else eps

        (points,) = ax.plot(x, residuals, "o", label=ramp)

        if fit is not None:
            grid = np.linspace(x.min(), x.max(), 50)
            abscissa = grid if exponential else np.log(grid)
            label = f"rate {fit.rate:.2f}" if exponential else f"slope {fit.slope:.2f}"
            ax.plot(grid, np.exp(fit.intercept + fit.slope * abscissa), "--", color=points.get_color(), label=label)

    if ax.get_legend_handles_labels()[0]:
        ax.legend()

    return savefig(fig, path)
