"""
Slow-manifold series for the toy model.

The autonomous series G_n(q) = sum_i g_i(q) eps^i and its ramped, time-dependent counterpart
F_n(q, t) = sum_i f_i(q, t) eps^i are built from

    f_0 = -rho(t/T) J grad V(q)
    f_k = -J d/dt f_{k-1} - J sum_{i+j=k-1} Df_i(q, t) f_j(q, t)

with g_k the same recursion with rho frozen at 1 and no time derivative.

Nesting derivatives of the recursion inside itself costs exponentially in the order, so the coefficients are taken
from the slow solution instead. Along the slow solution through (q, t) the equations read
q' = -rho J grad V(q) - eps J q'', and the Taylor coefficients c[m, k] of q(t + s) at s^m eps^k follow one level
m + k at a time from those of rho grad V along the same solution; f_k = c[1, k]. The forcing coefficients of a level
come from one `jax.experimental.jet` pass in a variable lambda with s = lambda and eps = lambda exp(i phi), and a
discrete Fourier transform over phi separates the powers of eps. Directional derivatives Df_i v come out of the
solution linearised about the slow one and started at v, built the same way with `jax.jvp` of the gradient inside
the jet pass.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from typing import Any

import jax
import jax.numpy as jnp
import numpy as np
from jax.experimental.jet import jet

from optimal_balance.conf import get_setting
from optimal_balance.exceptions import SeriesOrderError
from optimal_balance.model import PhaseState
from optimal_balance.model import SystemSpec
from optimal_balance.model import grad_potential
from optimal_balance.model import symplectic_matrix
from optimal_balance.ramp import RampSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True, kw_only=True, eq=False)
class SeriesEval:
    order: int
    eps: float
    coefficients: list[np.ndarray]
    value: np.ndarray
    remainder_norm: float | None = None

    def recompute(self) -> np.ndarray:
        return sum(c * self.eps**i for i, c in enumerate(self.coefficients))


def _phases(levels: int) -> np.ndarray:
    count = levels + 1
    return np.exp(2j * np.pi * np.arange(count) / count)


def _lambda_terms(coefficients: np.ndarray, order: int, phases: np.ndarray) -> list[np.ndarray]:
    """
    Derivatives in lambda, orders 0..order, of sum c[m, k] s^m eps^k on s = lambda, eps = lambda exp(i phi).

    One row per phase; the remaining axes are those of a single coefficient.
    """
    terms = []
    for j in range(order + 1):
        total = sum(np.multiply.outer(phases**k, coefficients[j - k, k]) for k in range(j + 1))
        terms.append(math.factorial(j) * total)

    return terms


def _jet_term(func: Callable[..., Any], inputs: list[list[Any]], order: int) -> np.ndarray:
    """The order-th lambda derivative of func along the given input series, each given as derivatives 0..order."""
    count = max(order, 1)
    primals = []
    series = []
    for terms in inputs:
        terms = [jnp.asarray(term) for term in terms[: count + 1]]
        terms += [jnp.zeros_like(terms[0])] * (count + 1 - len(terms))
        primals.append(terms[0])
        series.append(terms[1:])

    primal_out, series_out = jet(func, tuple(primals), tuple(series))

    return np.asarray(primal_out if order == 0 else series_out[order - 1])


def _separate(term: np.ndarray, order: int, phases: np.ndarray) -> np.ndarray:
    """Split a lambda derivative of the given order into its eps^k coefficients, k = 0..order."""
    parts = np.fft.fft(term, axis=0) / (phases.size * math.factorial(order))

    return parts[: order + 1].real


@dataclass(frozen=True, slots=True, eq=False)
class _Recursion:
    J: np.ndarray
    sys: SystemSpec
    ramp: RampSpec | None = None
    T: float = 1.0

    def gradient(self, x: Any) -> Any:
        return grad_potential(self.sys.potential, x)

    def ramp_series(self, t: float, order: int) -> np.ndarray:
        """Derivatives in s of rho((t + s) / T) at s = 0, orders 0..order."""
        if self.ramp is None:
            series = np.zeros(order + 1)
            series[0] = 1.0
            return series

        return self.ramp.taylor(t / self.T, order) / self.T ** np.arange(order + 1)

    def _advance(self, coefficients: np.ndarray, forcing: np.ndarray, level: int) -> None:
        # Within a level, c[m, k] needs c[m + 1, k - 1] of the same level, so m runs downwards.
        for m in range(level, 0, -1):
            k = level - m
            rate = forcing[k]
            if k >= 1:
                rate = rate + (m + 1) * m * coefficients[m + 1, k - 1]
            coefficients[m, k] = -(rate @ self.J.T) / m

    def solution(self, q: np.ndarray, t: float, levels: int) -> np.ndarray:
        """Taylor coefficients c[m, k] of the slow solution through (q, t), filled for m + k <= levels."""
        phases = _phases(levels)
        rho = list(self.ramp_series(t, levels))

        def forcing(r, x):
            return r * self.gradient(x)

        coefficients = np.zeros((levels + 2, levels + 1, q.size))
        coefficients[0, 0] = q
        for level in range(1, levels + 1):
            below = level - 1
            term = _jet_term(forcing, [rho, _lambda_terms(coefficients, below, phases)], below)
            self._advance(coefficients, _separate(term, below, phases), level)

        return coefficients

    def linearisation(
        self, curve: np.ndarray, t: float, directions: np.ndarray, time_rates: np.ndarray, levels: int
    ) -> np.ndarray:
        """
        Taylor coefficients of the solutions linearised about `curve` (as returned by `solution` with the same
        `levels`), one per row of `directions`, with the base time moving at the matching entry of `time_rates`.
        Entry [1, k, j] is the derivative of f_k along (directions[j], time_rates[j]).
        """
        phases = _phases(levels)
        series = self.ramp_series(t, levels + 1)
        rho, rho_rate = list(series[:-1]), list(series[1:])
        rates = np.asarray(time_rates, dtype=float)[:, None]

        def forcing(r, r_rate, x, y):
            _, change = jax.jvp(self.gradient, (x,), (y,))
            return rates * r_rate * self.gradient(x) + r * change

        coefficients = np.zeros((levels + 2, levels + 1) + directions.shape)
        coefficients[0, 0] = directions
        base = np.broadcast_to(curve[:, :, None, :], coefficients.shape)
        for level in range(1, levels + 1):
            below = level - 1
            inputs = [rho, rho_rate, _lambda_terms(base, below, phases), _lambda_terms(coefficients, below, phases)]
            self._advance(coefficients, _separate(_jet_term(forcing, inputs, below), below, phases), level)

        return coefficients

    def coefficients(self, q: np.ndarray, t: float, n: int) -> list[np.ndarray]:
        curve = self.solution(q, t, n + 1)
        logger.debug("Series coefficients to order %d at t=%g in %d Taylor passes.", n, t, n + 1)

        return [curve[1, k].copy() for k in range(n + 1)]

    def remainder(self, q: np.ndarray, t: float, n: int, eps: float) -> np.ndarray:
        levels = n + 1
        curve = self.solution(q, t, levels)
        # Moving along f_0 together with the clock adds the time derivatives; the other directions hold t fixed.
        time_rates = np.zeros(n + 1)
        time_rates[0] = 1.0
        variations = self.linearisation(curve, t, curve[1, : n + 1], time_rates, levels)

        total = np.zeros_like(q, dtype=float)
        for i in range(n + 1):
            for j in range(n - i, n + 1):
                total = total - eps ** (i + j) * variations[1, i, j]

        return total


def _check_order(n: int) -> None:
    limit = get_setting("MAX_SERIES_ORDER")

    if n < 0:
        raise SeriesOrderError(f"Series order must be nonnegative, got {n}.")

    if n > limit:
        raise SeriesOrderError(f"Series order {n} exceeds the configured maximum of {limit}.")


def _autonomous(sys: SystemSpec) -> _Recursion:
    return _Recursion(symplectic_matrix(sys.dim), sys)


def _ramped(sys: SystemSpec, ramp: RampSpec, T: float) -> _Recursion:
    if T <= 0:
        raise ValueError(f"T must be positive, got {T}.")

    return _Recursion(symplectic_matrix(sys.dim), sys, ramp, T)


def _as_float(values: list[Any]) -> list[np.ndarray]:
    return [np.asarray(v, dtype=float) for v in values]


def g_coefficients(sys: SystemSpec, n: int, q: np.ndarray) -> list[np.ndarray]:
    _check_order(n)

    return _as_float(_autonomous(sys).coefficients(np.asarray(q, dtype=float), 0.0, n))


def slow_manifold_point(sys: SystemSpec, n: int, eps: float, q: np.ndarray) -> np.ndarray:
    return _weighted_sum(g_coefficients(sys, n, q), eps)


def f_coefficients(sys: SystemSpec, ramp: RampSpec, T: float, n: int, q: np.ndarray, t: float) -> list[np.ndarray]:
    _check_order(n)

    return _as_float(_ramped(sys, ramp, T).coefficients(np.asarray(q, dtype=float), float(t), n))


def remainder(sys: SystemSpec, ramp: RampSpec, T: float, n: int, eps: float, q: np.ndarray, t: float) -> np.ndarray:
    """R_n(q, t), the forcing of the fast residual w = p - F_n(q, t) left over by truncating at order n."""
    _check_order(n)

    return np.asarray(_ramped(sys, ramp, T).remainder(np.asarray(q, dtype=float), float(t), n, eps), dtype=float)


def fast_residual(sys: SystemSpec, ramp: RampSpec, T: float, n: int, eps: float, state: PhaseState) -> np.ndarray:
    """w = p - F_n(q, t); a diagnostic of fast content, never an input to the nudging iteration."""
    return state.p - _weighted_sum(f_coefficients(sys, ramp, T, n, state.q, state.t), eps)


def evaluate_g_series(sys: SystemSpec, n: int, eps: float, q: np.ndarray) -> SeriesEval:
    coefficients = g_coefficients(sys, n, q)

    return SeriesEval(order=n, eps=eps, coefficients=coefficients, value=_weighted_sum(coefficients, eps))


def evaluate_f_series(
    sys: SystemSpec, ramp: RampSpec, T: float, n: int, eps: float, q: np.ndarray, t: float, with_remainder: bool = True
) -> SeriesEval:
    coefficients = f_coefficients(sys, ramp, T, n, q, t)
    remainder_norm = None
    if with_remainder:
        remainder_norm = float(np.linalg.norm(remainder(sys, ramp, T, n, eps, q, t)))

    return SeriesEval(
        order=n,
        eps=eps,
        coefficients=coefficients,
        value=_weighted_sum(coefficients, eps),
        remainder_norm=remainder_norm,
    )


def optimal_truncation_order(eps: float, T: float, scale: float = 1.0) -> int:
    """Cube-root truncation floor(scale (T/eps)^(1/3)), clipped to [1, MAX_SERIES_ORDER]."""
    if eps <= 0 or T <= 0:
        raise ValueError("eps and T must be positive.")

    n = math.floor(scale * (T / eps) ** (1.0 / 3.0))

    return min(max(n, 1), get_setting("MAX_SERIES_ORDER"))


def _weighted_sum(coefficients: list[np.ndarray], eps: float) -> np.ndarray:
    total = np.zeros_like(coefficients[0])
    for i, c in enumerate(coefficients):
        total = total + c * eps**i

    return total
