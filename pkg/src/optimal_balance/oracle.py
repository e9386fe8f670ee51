"""
Exact targets for the action-angle oscillator theta' = 1, eps p' = i p + rho(t/T) f(theta).

The closed-form slow manifold and the balanced value p(T) are expressed for the scaled fast variable P = eps p, in
which the Fourier sum reads G(theta) = sum_k f_k eps / (i (k eps - 1)) e^{i k theta}. The oscillator nudging below
reports its iterates in the same scaling so that they compare directly with these targets.
"""

import logging
import math
from collections.abc import Callable

import numpy as np
from numpy.polynomial import legendre

from optimal_balance.conf import get_setting
from optimal_balance.integrate import Direction
from optimal_balance.integrate import default_step
from optimal_balance.integrate import solve_fixed_step
from optimal_balance.integrate import time_grid
from optimal_balance.model import OscillatorSpec
from optimal_balance.model import oscillator_field
from optimal_balance.nudging import NudgingResult
from optimal_balance.nudging import iterate_nudging
from optimal_balance.ramp import RampSpec

logger = logging.getLogger(__name__)

QUADRATURE_NODES = 8


def _check_scales(eps: float, T: float) -> None:
    if eps <= 0 or T <= 0:
        raise ValueError(f"eps and T must be positive, got eps={eps}, T={T}.")


def _quadrature(integrand: Callable[[np.ndarray], np.ndarray], T: float, eps: float, multiplier: int = 1) -> complex:
    """Composite Gauss-Legendre on [0, T] with a fixed number of panels per fast period 2 pi eps."""
    per_period = get_setting("QUADRATURE_PANELS_PER_PERIOD")
    panels = max(1, math.ceil(per_period * T / (2 * math.pi * eps))) * multiplier

    nodes, weights = legendre.leggauss(QUADRATURE_NODES)
    edges = np.linspace(0.0, T, panels + 1)
    half = 0.5 * np.diff(edges)[:, None]
    t = edges[:-1, None] + half * (nodes[None, :] + 1.0)

    return complex(np.sum(half * weights[None, :] * integrand(t)))


def oscillator_exact_slow(osc: OscillatorSpec, eps: float, theta: float) -> complex:
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}.")

    osc.check_resonance(eps)

    total = 0j
    for k, f_k in osc.modes:
        total += f_k * eps / (1j * (k * eps - 1.0)) * np.exp(1j * k * theta)

    return complex(total)


def oscillator_balanced_pT(
    osc: OscillatorSpec, ramp: RampSpec, eps: float, T: float, theta_star: float, multiplier: int = 1
) -> complex:
    """p(T) = int_0^T e^{i (T - t)/eps} rho(t/T) f(theta* + t - T) dt, the exact ramped boundary value solution."""
    _check_scales(eps, T)

    def integrand(t):
        return np.exp(1j * (T - t) / eps) * ramp(t / T) * osc.coupling(theta_star + t - T)

    return _quadrature(integrand, T, eps, multiplier)


def oscillator_ibp_remainder(
    osc: OscillatorSpec, ramp: RampSpec, eps: float, T: float, theta_star: float, multiplier: int = 1
) -> complex:
    """
    What is left of p(T) after one integration by parts removes the slow-manifold term.

    Satisfies oscillator_balanced_pT - oscillator_exact_slow = oscillator_ibp_remainder, both sides by quadrature.
    """
    _check_scales(eps, T)
    osc.check_resonance(eps)

    total = 0j
    for k, f_k in osc.modes:
        rate = -1j / eps + 1j * k
        prefactor = f_k * np.exp(1j * T / eps + 1j * k * (theta_star - T)) / rate

        def integrand(t, rate=rate):
            return np.exp(rate * t) * ramp.derivative(t / T, 1) / T

        total -= prefactor * _quadrature(integrand, T, eps, multiplier)

    return complex(total)


def _leg(osc: OscillatorSpec, ramp: RampSpec, eps: float, T: float, y0: np.ndarray, step: float, direction: Direction):
    grid = time_grid(T, step, direction)
    _, states = solve_fixed_step(oscillator_field(osc, ramp, eps, T), y0, grid)

    return states[-1]


def oscillator_integrated_pT(
    osc: OscillatorSpec, ramp: RampSpec, eps: float, T: float, theta_star: float, kappa: int | None = None
) -> complex:
    """The balanced value by Runge-Kutta instead of quadrature: one forward leg from (theta* - T, 0), scaled by eps."""
    step = default_step(eps, kappa)
    final = _leg(osc, ramp, eps, T, np.array([theta_star - T, 0.0], dtype=complex), step, Direction.FORWARD)

    return complex(eps * final[1])


def oscillator_nudge(
    osc: OscillatorSpec,
    ramp: RampSpec,
    eps: float,
    T: float,
    theta_star: float,
    p0: complex = 0j,
    max_iter: int = 30,
    rtol: float = 1e-12,
    kappa: int | None = None,
) -> NudgingResult:
    """
    Backward-forward nudging on the oscillator with theta in the role of q.

    Only p is zeroed at the turn-around; theta stays continuous. Iterates are one-element arrays holding eps p(T).
    """
    _check_scales(eps, T)
    step = default_step(eps, kappa)

    def cycle(P):
        backward = _leg(osc, ramp, eps, T, np.array([theta_star, P[0] / eps], dtype=complex), step, Direction.BACKWARD)
        theta_0 = backward[0].real
        forward = _leg(osc, ramp, eps, T, np.array([theta_0, 0.0], dtype=complex), step, Direction.FORWARD)

        return np.array([eps * forward[1]]), theta_0, None

    logger.debug("Oscillator nudging eps=%g, T=%g, modes=%s.", eps, T, osc.label)

    return iterate_nudging(cycle, np.array([complex(p0)]), max_iter, rtol)
