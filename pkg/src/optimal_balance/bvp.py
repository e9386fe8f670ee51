"""
Single shooting for the optimal balance boundary value problem p(0) = 0, q(T) = q*.

The unknown is the slow coordinate q0 at t=0; the balanced state is read off as p(T) of the forward solution.
"""

import logging
from dataclasses import dataclass

import numpy as np

from optimal_balance.exceptions import ShootingConvergenceError
from optimal_balance.integrate import Direction
from optimal_balance.integrate import IntegrationConfig
from optimal_balance.integrate import Trajectory
from optimal_balance.integrate import default_step
from optimal_balance.integrate import integrate_ramped
from optimal_balance.model import PhaseState
from optimal_balance.model import SystemSpec
from optimal_balance.nudging import NudgingConfig
from optimal_balance.ramp import RampSpec
from optimal_balance.utils import as_vector

logger = logging.getLogger(__name__)

MAX_STEP_HALVINGS = 10


@dataclass(frozen=True, slots=True, kw_only=True, eq=False)
class ShootingConfig:
    eps: float
    T: float
    ramp: RampSpec
    q_star: np.ndarray
    newton_tol: float = 1e-10
    newton_max: int = 20
    jacobian_fd_step: float = 1e-6
    integration: IntegrationConfig | None = None

    def __post_init__(self):
        if not self.newton_tol > 0:
            raise ValueError(f"newton_tol must be positive, got {self.newton_tol}.")

        if self.newton_max < 1:
            raise ValueError(f"newton_max must be at least 1, got {self.newton_max}.")

        if not self.jacobian_fd_step > 0:
            raise ValueError(f"jacobian_fd_step must be positive, got {self.jacobian_fd_step}.")

        if not 0 < self.eps <= self.T:
            raise ValueError(f"Shooting needs 0 < eps <= T, got eps={self.eps}, T={self.T}.")

        object.__setattr__(self, "q_star", as_vector(self.q_star, name="q_star"))

    @classmethod
    def from_nudging(cls, cfg: NudgingConfig, **overrides) -> "ShootingConfig":
        options = {
            "eps": cfg.eps,
            "T": cfg.T,
            "ramp": cfg.ramp,
            "q_star": cfg.q_star,
            "integration": cfg.integration,
        }
        options.update(overrides)

        return cls(**options)

    def get_integration(self) -> IntegrationConfig:
        if self.integration is None:
            return IntegrationConfig(step=default_step(self.eps))

        return self.integration


@dataclass(frozen=True, slots=True, kw_only=True, eq=False)
class ShootingResult:
    q0: np.ndarray
    pT: np.ndarray
    iterations: int
    residual_norm: float

    def __iter__(self):
        # Unpacks as (q0, pT).
        return iter((self.q0, self.pT))


def _forward(sys: SystemSpec, cfg: ShootingConfig, q0: np.ndarray) -> Trajectory:
    return integrate_ramped(
        sys,
        cfg.ramp,
        cfg.eps,
        cfg.T,
        PhaseState(q=np.array(q0, dtype=float), p=np.zeros(sys.dim), t=0.0),
        cfg.get_integration().towards(Direction.FORWARD, store_trajectory=False),
    )


def shooting_residual(sys: SystemSpec, cfg: ShootingConfig, q0: np.ndarray) -> np.ndarray:
    q0 = as_vector(q0, sys.dim, name="q0")

    return _forward(sys, cfg, q0).final.q - cfg.q_star


def _jacobian(sys: SystemSpec, cfg: ShootingConfig, q0: np.ndarray, residual: np.ndarray) -> np.ndarray:
    step = cfg.jacobian_fd_step * max(1.0, float(np.linalg.norm(q0)))
    columns = []

    for index in range(q0.size):
        shifted = q0.copy()
        shifted[index] += step
        columns.append((shooting_residual(sys, cfg, shifted) - residual) / step)

    return np.column_stack(columns)


def shooting_solve(sys: SystemSpec, cfg: ShootingConfig) -> ShootingResult:
    """Damped Newton on the shooting residual, starting from q0 = q*."""
    if cfg.q_star.size != sys.dim:
        raise ValueError(f"q_star must have {sys.dim} entries, got {cfg.q_star.size}.")

    tolerance = cfg.newton_tol * max(1.0, float(np.linalg.norm(cfg.q_star)))
    q0 = cfg.q_star.copy()
    residual = shooting_residual(sys, cfg, q0)
    norm = float(np.linalg.norm(residual))

    for iteration in range(cfg.newton_max + 1):
        logger.debug("Newton iteration %d: residual norm %.3e.", iteration, norm)

        if norm <= tolerance:
            return ShootingResult(q0=q0, pT=_forward(sys, cfg, q0).final.p, iterations=iteration, residual_norm=norm)

        if iteration == cfg.newton_max:
            break

        try:
            delta = np.linalg.solve(_jacobian(sys, cfg, q0, residual), -residual)
        except np.linalg.LinAlgError as e:
            raise ShootingConvergenceError("The shooting Jacobian is singular.", norm) from e

        scale = 1.0
        for _ in range(MAX_STEP_HALVINGS + 1):
            trial = q0 + scale * delta
            trial_residual = shooting_residual(sys, cfg, trial)
            trial_norm = float(np.linalg.norm(trial_residual))

            if trial_norm < norm:
                q0, residual, norm = trial, trial_residual, trial_norm
                break

            scale /= 2
        else:
            logger.warning("Newton step stalled at residual norm %.3e.", norm)
            raise ShootingConvergenceError("No damped Newton step reduced the residual.", norm)

    logger.warning("Shooting did not converge in %d Newton iterations.", cfg.newton_max)
    raise ShootingConvergenceError(f"Shooting did not converge in {cfg.newton_max} Newton iterations.", norm)


def round_trip_defect(sys: SystemSpec, cfg: ShootingConfig, q0: np.ndarray) -> float:
    """
    Integrate forward from (q0, 0) and back again; the distance from the starting point.

    The discrete flow is not exactly reversible, and this defect is the scale at which a shooting root and a nudging
    fixed point may legitimately differ.
    """
    forward = _forward(sys, cfg, as_vector(q0, sys.dim, name="q0"))
    backward = integrate_ramped(
        sys,
        cfg.ramp,
        cfg.eps,
        cfg.T,
        forward.final,
        cfg.get_integration().towards(Direction.BACKWARD, store_trajectory=False),
    )
    start = np.concatenate([q0, np.zeros(sys.dim)])

    return float(np.linalg.norm(backward.final.as_vector() - start))
