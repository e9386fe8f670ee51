import logging
from typing import TypedDict

from django.tasks import task

from optimal_balance.integrate import IntegrationConfig
from optimal_balance.integrate import default_step
from optimal_balance.model import SystemSpec
from optimal_balance.model import parse_potential
from optimal_balance.nudging import NudgingConfig
from optimal_balance.nudging import balance_residual
from optimal_balance.nudging import run_nudging
from optimal_balance.ramp import parse_ramp

logger = logging.getLogger(__name__)


class CellPayload(TypedDict):
    potential: str
    dim: int
    ramp: str
    eps: float
    T: float
    q_star: list[float]
    p0: list[float] | None
    max_iter: int
    rtol: float
    alpha: float
    kappa: int | None
    n: int


class CellOutcome(TypedDict):
    plateau_residual: float
    plateau_index: int
    balance_residual: float
    converged: bool
    cycles: int


def validate_payload(data: dict) -> CellPayload:
    missing = [key for key in CellPayload.__annotations__ if key not in data]
    if missing:
        raise ValueError(f"Missing {', '.join(missing)} in sweep cell payload.")

    if not isinstance(data["q_star"], list):
        raise ValueError("q_star must be a list.")

    return CellPayload(**data)


@task
def run_sweep_cell(payload: dict) -> CellOutcome:
    """One nudging run of a sweep, from a JSON payload to the numbers the sweep aggregates."""
    data = validate_payload(payload)

    sys = SystemSpec(dim=data["dim"], potential=parse_potential(data["potential"]))
    cfg = NudgingConfig(
        eps=data["eps"],
        T=data["T"],
        ramp=parse_ramp(data["ramp"]),
        q_star=data["q_star"],
        p0=data["p0"],
        max_iter=data["max_iter"],
        rtol=data["rtol"],
        alpha=data["alpha"],
        integration=IntegrationConfig(step=default_step(data["eps"], data["kappa"])),
    )

    logger.debug("Sweep cell started: ramp=%s, eps=%g.", data["ramp"], data["eps"])

    result = run_nudging(sys, cfg)

    return CellOutcome(
        plateau_residual=result.plateau_norm,
        plateau_index=result.plateau_index,
        balance_residual=balance_residual(sys, cfg, result, data["n"]),
        converged=result.converged,
        cycles=result.cycles,
    )
