import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from enum import StrEnum

import numpy as np

from optimal_balance.conf import get_setting
from optimal_balance.exceptions import DivergenceError
from optimal_balance.model import PhaseState
from optimal_balance.model import SystemSpec
from optimal_balance.model import ramped_field
from optimal_balance.ramp import RampSpec

logger = logging.getLogger(__name__)

Field = Callable[[float, np.ndarray], np.ndarray]


class Direction(StrEnum):
    FORWARD = "forward"
    BACKWARD = "backward"


@dataclass(frozen=True, slots=True, kw_only=True)
class IntegrationConfig:
    step: float
    direction: Direction = Direction.FORWARD
    store_trajectory: bool = False

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"Integration step must be positive, got {self.step}.")

    def towards(self, direction: Direction, store_trajectory: bool | None = None) -> "IntegrationConfig":
        store = self.store_trajectory if store_trajectory is None else store_trajectory
        return IntegrationConfig(step=self.step, direction=direction, store_trajectory=store)


@dataclass(frozen=True, slots=True, kw_only=True, eq=False)
class Trajectory:
    # With store_trajectory off only the two endpoints are kept.
    times: np.ndarray
    states: np.ndarray
    eps: float
    T: float

    @property
    def samples(self) -> list[PhaseState]:
        return [PhaseState.from_vector(y, t) for t, y in zip(self.times, self.states)]

    @property
    def initial(self) -> PhaseState:
        return PhaseState.from_vector(self.states[0], self.times[0])

    @property
    def final(self) -> PhaseState:
        return PhaseState.from_vector(self.states[-1], self.times[-1])


def default_step(eps: float, kappa: int | None = None) -> float:
    """Step eps/kappa, kappa steps per unit of fast time."""
    if kappa is None:
        kappa = get_setting("STEPS_PER_FAST_TIME")

    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}.")

    if kappa < 1:
        raise ValueError(f"kappa must be at least 1, got {kappa}.")

    return eps / kappa


def time_grid(T: float, step: float, direction: Direction = Direction.FORWARD) -> np.ndarray:
    """
    Uniform grid on [0, T] whose last step is shortened to land on T exactly.

    The backward grid is the forward grid reversed, so backward and forward legs visit the same nodes.
    """
    if T <= 0:
        raise ValueError(f"T must be positive, got {T}.")

    count = max(1, math.ceil(T / step - 1e-9))
    grid = np.append(np.arange(count) * step, T)

    return grid if direction == Direction.FORWARD else grid[::-1].copy()


def rk4_step(field: Field, t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = field(t, y)
    k2 = field(t + h / 2, y + 0.5 * h * k1)
    k3 = field(t + h / 2, y + 0.5 * h * k2)
    k4 = field(t + h, y + h * k3)

    return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def solve_fixed_step(field: Field, y0: np.ndarray, grid: np.ndarray, store: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """
    Classical fourth order Runge-Kutta along `grid`, which may run backward in time.

    Returns the visited times and states; only the endpoints unless `store` is set.
    """
    initial = np.array(y0, copy=True)
    y = initial
    if not np.all(np.isfinite(y)):
        raise DivergenceError(0, float(grid[0]))

    states = [y] if store else None

    for index in range(len(grid) - 1):
        t, t_next = grid[index], grid[index + 1]
        y = rk4_step(field, t, y, t_next - t)

        if not np.all(np.isfinite(y)):
            raise DivergenceError(index + 1, float(t_next))

        if store:
            states.append(y)

    if store:
        return grid.copy(), np.array(states)

    return np.array([grid[0], grid[-1]]), np.array([initial, y])


def integrate_ramped(
    sys: SystemSpec, ramp: RampSpec, eps: float, T: float, init: PhaseState, cfg: IntegrationConfig
) -> Trajectory:
    start = 0.0 if cfg.direction == Direction.FORWARD else T
    if abs(init.t - start) > 1e-12 * max(1.0, T):
        raise ValueError(f"A {cfg.direction} integration must start at t={start}, got t={init.t}.")

    grid = time_grid(T, cfg.step, cfg.direction)
    times, states = solve_fixed_step(ramped_field(sys, ramp, eps, T), init.as_vector(), grid, cfg.store_trajectory)

    logger.debug("Integrated %s over %d steps (eps=%g, T=%g).", cfg.direction, len(grid) - 1, eps, T)

    return Trajectory(times=times, states=states, eps=eps, T=T)
