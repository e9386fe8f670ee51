"""
Rate fits, residual traces along trajectories, and the sweep driver behind the convergence experiments.
"""

import logging
from dataclasses import dataclass
from dataclasses import field
from enum import StrEnum

import numpy as np
from django.tasks import TaskResultStatus
from django.tasks import task_backends
from django.tasks.base import DEFAULT_TASK_BACKEND_ALIAS
from scipy import stats

from optimal_balance.backend import ThreadPoolBackend
from optimal_balance.conf import get_setting
from optimal_balance.integrate import Trajectory
from optimal_balance.model import SystemSpec
from optimal_balance.nudging import NudgingConfig
from optimal_balance.ramp import RampKind
from optimal_balance.ramp import RampSpec
from optimal_balance.series import fast_residual
from optimal_balance.series import optimal_truncation_order
from optimal_balance.series import remainder
from optimal_balance.tasks import CellPayload
from optimal_balance.tasks import run_sweep_cell

logger = logging.getLogger(__name__)

MIN_FIT_POINTS = 3


class RateModel(StrEnum):
    ALGEBRAIC = "algebraic"
    EXPONENTIAL = "exponential"


@dataclass(frozen=True, slots=True, kw_only=True)
class RateFit:
    model: RateModel
    slope: float
    intercept: float
    r_squared: float

    @property
    def rate(self) -> float:
        return -self.slope


@dataclass(frozen=True, slots=True, kw_only=True)
class SweepCell:
    eps: float
    T: float
    ramp: str
    n: int
    plateau_residual: float = float("nan")
    plateau_index: int = -1
    balance_residual: float = float("nan")
    converged: bool = False
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    @property
    def fittable(self) -> bool:
        return not self.failed and self.balance_residual > get_setting("RESIDUAL_FLOOR")


@dataclass(frozen=True, slots=True, kw_only=True)
class SweepResult:
    cells: list[SweepCell]
    # One fit per ramp label, in the order the ramps were given; None where too few usable cells remained.
    fits: dict[str, RateFit | None] = field(default_factory=dict)

    @property
    def fit(self) -> RateFit | None:
        return next(iter(self.fits.values()), None)

    @property
    def fit_skipped(self) -> bool:
        return any(fit is None for fit in self.fits.values())


def _prepare(points: list[tuple[float, float]]) -> tuple[np.ndarray, np.ndarray]:
    if len(points) < MIN_FIT_POINTS:
        raise ValueError(f"A rate fit needs at least {MIN_FIT_POINTS} points, got {len(points)}.")

    ordered = sorted((float(eps), float(residual)) for eps, residual in points)
    eps = np.array([eps for eps, _ in ordered])
    residuals = np.array([residual for _, residual in ordered])

    if np.any(eps <= 0):
        raise ValueError("Epsilon values must be positive.")

    if np.any(residuals < 0) or not np.all(np.isfinite(residuals)):
        raise ValueError("Residuals must be finite and nonnegative.")

    if np.ptp(eps) == 0:
        raise ValueError("A rate fit needs at least two distinct epsilon values.")

    return eps, np.log(np.maximum(residuals, get_setting("RESIDUAL_FLOOR")))


def _fit(model: RateModel, x: np.ndarray, y: np.ndarray) -> RateFit:
    regression = stats.linregress(x, y)
    r_squared = float(np.clip(regression.rvalue**2, 0.0, 1.0)) if np.isfinite(regression.rvalue) else 0.0

    return RateFit(model=model, slope=float(regression.slope), intercept=float(regression.intercept), r_squared=r_squared)


def fit_algebraic_rate(points: list[tuple[float, float]]) -> RateFit:
    """Least squares through (log eps, log residual); the slope is the empirical order."""
    eps, log_residuals = _prepare(points)

    return _fit(RateModel.ALGEBRAIC, np.log(eps), log_residuals)


def fit_exponential_rate(points: list[tuple[float, float]], T: float) -> RateFit:
    """Least squares through ((T/eps)^(1/3), log residual); `rate` is positive for exponentially small residuals."""
    if T <= 0:
        raise ValueError(f"T must be positive, got {T}.")

    eps, log_residuals = _prepare(points)

    return _fit(RateModel.EXPONENTIAL, np.cbrt(T / eps), log_residuals)


def local_orders(points: list[tuple[float, float]]) -> np.ndarray:
    """Log-log slopes between neighbouring epsilon values, ordered from the largest epsilon down."""
    eps, log_residuals = _prepare(points)
    slopes = np.diff(log_residuals) / np.diff(np.log(eps))

    return slopes[::-1]


def remainder_sup(
    sys: SystemSpec, ramp: RampSpec, T: float, n: int, eps: float, trajectory: Trajectory, stride: int = 1
) -> float:
    """The largest ||R_n(q, t)|| over the stored samples of a trajectory, every `stride`-th sample."""
    samples = trajectory.samples[::stride]
    norms = [np.linalg.norm(remainder(sys, ramp, T, n, eps, state.q, state.t)) for state in samples]

    return float(max(norms))


def fast_energy_trace(sys: SystemSpec, ramp: RampSpec, T: float, n: int, eps: float, trajectory: Trajectory) -> np.ndarray:
    """|w|^2 with w = p - F_n(q, t) at every stored sample: the fast energy left in the trajectory."""
    return np.array([np.sum(fast_residual(sys, ramp, T, n, eps, state) ** 2) for state in trajectory.samples])


def default_series_order(ramp: RampSpec, eps: float, T: float) -> int:
    if ramp.kind == RampKind.EXPONENTIAL:
        return optimal_truncation_order(eps, T)

    return ramp.order


def _payload(
    sys: SystemSpec, base_cfg: NudgingConfig, eps: float, ramp: RampSpec, n: int, kappa: int | None
) -> CellPayload:
    return CellPayload(
        potential=sys.potential.label,
        dim=sys.dim,
        ramp=ramp.label,
        eps=float(eps),
        T=float(base_cfg.T),
        q_star=[float(v) for v in base_cfg.q_star],
        p0=None if base_cfg.p0 is None else [float(v) for v in base_cfg.p0],
        max_iter=base_cfg.max_iter,
        rtol=base_cfg.rtol,
        alpha=base_cfg.alpha,
        kappa=kappa,
        n=n,
    )


def _fit_family(ramp: RampSpec, points: list[tuple[float, float]], T: float) -> RateFit | None:
    if len(points) < MIN_FIT_POINTS or len({eps for eps, _ in points}) < 2:
        logger.warning("Rate fit for ramp %s skipped: %d usable cells.", ramp.label, len(points))
        return None

    if ramp.kind == RampKind.EXPONENTIAL:
        return fit_exponential_rate(points, T)

    return fit_algebraic_rate(points)


def sweep(
    sys: SystemSpec,
    base_cfg: NudgingConfig,
    eps_list: list[float],
    ramp_list: list[RampSpec],
    n_for_residual: int | None = None,
    kappa: int | None = None,
    workers: int | None = None,
    backend: str = DEFAULT_TASK_BACKEND_ALIAS,
) -> SweepResult:
    """
    Run nudging on every (ramp, eps) cell and fit the rate model of each ramp family to the balance residuals.

    Cells are enqueued as tasks on `backend`. A failed cell is recorded with its error and left out of the fit; cells
    whose residual sits at the floor are left out as well. Results are gathered in cell order, so the outcome does not
    depend on scheduling.
    """
    if not eps_list or not ramp_list:
        raise ValueError("A sweep needs at least one epsilon and one ramp.")

    if len({ramp.kind for ramp in ramp_list}) > 1:
        raise ValueError("All ramps of a sweep must belong to the same family.")

    for eps in eps_list:
        if not 0 < eps <= base_cfg.T:
            raise ValueError(f"Every sweep cell needs 0 < eps <= T, got eps={eps}, T={base_cfg.T}.")

    task_backend = task_backends[backend]
    if workers is not None and isinstance(task_backend, ThreadPoolBackend):
        task_backend.configure_pool(workers)

    cell_task = run_sweep_cell.using(backend=backend)
    pending = []
    for ramp in ramp_list:
        for eps in eps_list:
            n = default_series_order(ramp, eps, base_cfg.T) if n_for_residual is None else n_for_residual
            payload = _payload(sys, base_cfg, eps, ramp, n, kappa)
            pending.append((payload, cell_task.enqueue(payload)))

    cells = []
    for payload, task_result in pending:
        task_result = task_backend.get_result(task_result.id)

        if task_result.status == TaskResultStatus.SUCCESSFUL:
            outcome = task_result.return_value
            cell = SweepCell(
                eps=payload["eps"],
                T=payload["T"],
                ramp=payload["ramp"],
                n=payload["n"],
                plateau_residual=outcome["plateau_residual"],
                plateau_index=outcome["plateau_index"],
                balance_residual=outcome["balance_residual"],
                converged=outcome["converged"],
            )
        else:
            error = task_result.errors[-1].exception_class_path if task_result.errors else "unknown error"
            logger.warning("Sweep cell ramp=%s, eps=%g failed: %s.", payload["ramp"], payload["eps"], error)
            cell = SweepCell(eps=payload["eps"], T=payload["T"], ramp=payload["ramp"], n=payload["n"], error=error)

        logger.debug("Sweep cell finished: ramp=%s, eps=%g.", cell.ramp, cell.eps)
        cells.append(cell)

    fits = {}
    for ramp in ramp_list:
        points = [(cell.eps, cell.balance_residual) for cell in cells if cell.ramp == ramp.label and cell.fittable]
        fits[ramp.label] = _fit_family(ramp, points, base_cfg.T)

    return SweepResult(cells=cells, fits=fits)
