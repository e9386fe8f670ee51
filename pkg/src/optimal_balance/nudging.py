"""
Backward-forward nudging for the optimal balance boundary value problem.

Each cycle integrates the ramped system backward from (q*, p_m) at t=T to t=0, keeps only the slow coordinate reached
there, restarts forward from (q(0), 0), and takes p(T) as the next iterate. Damping mixes the new value with the old
one: p_{m+1} = p_m + alpha (p(T) - p_m).
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass
from enum import StrEnum
from typing import Any

import numpy as np

from optimal_balance.exceptions import DivergenceError
from optimal_balance.integrate import Direction
from optimal_balance.integrate import IntegrationConfig
from optimal_balance.integrate import Trajectory
from optimal_balance.integrate import default_step
from optimal_balance.integrate import integrate_ramped
from optimal_balance.model import PhaseState
from optimal_balance.model import SystemSpec
from optimal_balance.ramp import RampSpec
from optimal_balance.series import g_coefficients
from optimal_balance.series import slow_manifold_point
from optimal_balance.utils import as_vector

logger = logging.getLogger(__name__)

# A cycle maps p_m to (p(T), turn-around slow coordinate, forward leg).
Cycle = Callable[[np.ndarray], tuple[np.ndarray, Any, Trajectory | None]]


class InitialGuess(StrEnum):
    ZERO = "zero"
    G0 = "g0"
    RANDOM = "random"


@dataclass(frozen=True, slots=True, kw_only=True, eq=False)
class NudgingConfig:
    eps: float
    T: float
    ramp: RampSpec
    q_star: np.ndarray
    p0: np.ndarray | None = None
    max_iter: int = 30
    rtol: float = 1e-12
    alpha: float = 1.0
    integration: IntegrationConfig | None = None

    def __post_init__(self):
        if not 0 < self.eps <= self.T:
            raise ValueError(f"Nudging needs 0 < eps <= T, got eps={self.eps}, T={self.T}.")

        if not 0 < self.alpha <= 1:
            raise ValueError(f"Damping alpha must lie in (0, 1], got {self.alpha}.")

        if self.max_iter < 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}.")

        if self.rtol < 0:
            raise ValueError(f"rtol must be nonnegative, got {self.rtol}.")

        object.__setattr__(self, "q_star", as_vector(self.q_star, name="q_star"))
        if self.p0 is not None:
            object.__setattr__(self, "p0", as_vector(self.p0, self.q_star.size, name="p0"))

    def get_integration(self) -> IntegrationConfig:
        if self.integration is None:
            return IntegrationConfig(step=default_step(self.eps))

        return self.integration

    def get_initial_p(self) -> np.ndarray:
        if self.p0 is None:
            return np.zeros_like(self.q_star)

        return self.p0.copy()


@dataclass(frozen=True, slots=True, kw_only=True, eq=False)
class NudgingResult:
    iterates: list[np.ndarray]
    update_norms: list[float]
    converged: bool
    plateau_index: int
    final: np.ndarray
    # Slow coordinate at t=0 of the last cycle, and that cycle's forward leg when trajectories are stored.
    turnaround: Any = None
    last_forward: Trajectory | None = None

    @property
    def cycles(self) -> int:
        return len(self.update_norms)

    @property
    def plateau_norm(self) -> float:
        return self.update_norms[self.plateau_index]

    def running_minimum(self) -> np.ndarray:
        return np.minimum.accumulate(np.asarray(self.update_norms, dtype=float))


def iterate_nudging(cycle: Cycle, p0: np.ndarray, max_iter: int, rtol: float, alpha: float = 1.0) -> NudgingResult:
    """
    Drive `cycle` until the relative update criterion holds or `max_iter` cycles have run.

    Running out of iterations is the expected outcome of quasi-convergence and is reported through `converged`.
    """
    p = np.array(p0, copy=True)
    iterates = [p]
    update_norms = []
    converged = False
    turnaround = None
    forward = None

    for m in range(max_iter):
        try:
            p_plus, turnaround, forward = cycle(p)
        except DivergenceError as e:
            raise e.in_cycle(m) from e

        p_next = p_plus if alpha == 1.0 else p + alpha * (p_plus - p)
        norm = float(np.linalg.norm(p_next - p))

        iterates.append(p_next)
        update_norms.append(norm)
        logger.debug("Nudging cycle %d: update norm %.3e.", m, norm)

        p = p_next
        if norm <= rtol * max(1.0, float(np.linalg.norm(p_next))):
            converged = True
            break

    plateau_index = int(np.argmin(update_norms))

    if not converged:
        logger.info(
            "Nudging stopped after %d cycles; best update norm %.3e at cycle %d.",
            max_iter,
            update_norms[plateau_index],
            plateau_index,
        )

    return NudgingResult(
        iterates=iterates,
        update_norms=update_norms,
        converged=converged,
        plateau_index=plateau_index,
        final=p,
        turnaround=turnaround,
        last_forward=forward,
    )


def _cycle(sys: SystemSpec, cfg: NudgingConfig, p_m: np.ndarray) -> tuple[np.ndarray, np.ndarray, Trajectory]:
    integration = cfg.get_integration()

    backward = integrate_ramped(
        sys,
        cfg.ramp,
        cfg.eps,
        cfg.T,
        PhaseState(q=cfg.q_star.copy(), p=np.array(p_m, dtype=float), t=cfg.T),
        integration.towards(Direction.BACKWARD, store_trajectory=False),
    )
    turnaround = backward.final.q

    forward = integrate_ramped(
        sys,
        cfg.ramp,
        cfg.eps,
        cfg.T,
        PhaseState(q=turnaround, p=np.zeros_like(turnaround), t=0.0),
        integration.towards(Direction.FORWARD),
    )

    return forward.final.p, turnaround, forward


def nudging_cycle(sys: SystemSpec, cfg: NudgingConfig, p_m: np.ndarray) -> np.ndarray:
    return _cycle(sys, cfg, as_vector(p_m, sys.dim, name="p_m"))[0]


def run_nudging(sys: SystemSpec, cfg: NudgingConfig) -> NudgingResult:
    if cfg.q_star.size != sys.dim:
        raise ValueError(f"q_star must have {sys.dim} entries, got {cfg.q_star.size}.")

    logger.debug("Nudging eps=%g, T=%g, ramp=%s, alpha=%g.", cfg.eps, cfg.T, cfg.ramp.label, cfg.alpha)

    return iterate_nudging(
        lambda p: _cycle(sys, cfg, p),
        cfg.get_initial_p(),
        cfg.max_iter,
        cfg.rtol,
        cfg.alpha,
    )


def balance_residual(sys: SystemSpec, cfg: NudgingConfig, result: NudgingResult, n: int) -> float:
    """Distance of the nudging limit from the order-n slow manifold point, ||p_final - G_n(q*)||."""
    target = slow_manifold_point(sys, n, cfg.eps, cfg.q_star)

    return float(np.linalg.norm(result.final - target))


def initial_guess(
    sys: SystemSpec, q_star: np.ndarray, kind: InitialGuess | str, seed: int = 42, scale: float = 0.1
) -> np.ndarray:
    kind = InitialGuess(kind)
    q_star = as_vector(q_star, sys.dim, name="q_star")

    if kind == InitialGuess.ZERO:
        return np.zeros_like(q_star)

    if kind == InitialGuess.G0:
        return g_coefficients(sys, 0, q_star)[0]

    return scale * np.random.default_rng(seed).standard_normal(sys.dim)
