"""
Ramp functions rho: [0, 1] -> [0, 1] that switch the nonlinearity on across the balancing window.

Two families are provided. `poly:<n>` is the normalized incomplete Beta polynomial of degree 2n+1 whose derivatives of
orders 1..n vanish at both ends. `exp` is the logistic form of exp(-1/x) / (exp(-1/x) + exp(-1/(1-x))), flat to all
orders at both ends. Its derivatives are exact: they come from Taylor-mode propagation through the logistic form
with `jax.experimental.jet`, one pass for all orders.
"""

from dataclasses import dataclass
from enum import StrEnum
from typing import Any

import jax.numpy as jnp
import numpy as np
from jax.experimental.jet import jet
from numpy.polynomial import Polynomial
from numpy.polynomial import polynomial as poly

from optimal_balance.exceptions import UnsupportedDerivativeOrder

EXP_MAX_DERIVATIVE = 10

# Below this distance from either end exp(-1/x) underflows and every derivative of the exponential ramp is zero.
EXP_FLAT_MARGIN = 1.0 / 700.0


class RampKind(StrEnum):
    POLYNOMIAL = "polynomial"
    EXPONENTIAL = "exponential"


@dataclass(frozen=True, slots=True, kw_only=True)
class RampSpec:
    kind: RampKind
    order: int = 0
    # Ascending monomial basis; polynomial kind only.
    coefficients: tuple[float, ...] = ()

    @property
    def label(self) -> str:
        if self.kind == RampKind.EXPONENTIAL:
            return "exp"

        return f"poly:{self.order}"

    def satisfies_order(self, n: int) -> bool:
        return self.kind == RampKind.EXPONENTIAL or n <= self.order

    def __call__(self, theta: Any) -> Any:
        x = np.clip(theta, 0.0, 1.0)

        if self.kind == RampKind.POLYNOMIAL:
            return poly.polyval(x, self.coefficients)

        with np.errstate(over="ignore", divide="ignore"):
            exponent = 1.0 / x - 1.0 / (1.0 - x)
            return 1.0 / (1.0 + np.exp(exponent))

    def derivative(self, theta: Any, i: int) -> Any:
        if i < 0:
            raise ValueError("Derivative order must be nonnegative.")

        if i == 0:
            return self(theta)

        return self.taylor(theta, i)[i]

    def taylor(self, theta: Any, order: int) -> np.ndarray:
        """Derivatives 0..order at theta, stacked along a new leading axis."""
        if order < 0:
            raise ValueError("Derivative order must be nonnegative.")

        shape = np.shape(theta)
        x = np.asarray(theta, dtype=float).reshape(-1)
        derivatives = np.zeros((order + 1, x.size))
        derivatives[0] = self(x)
        if order == 0:
            return derivatives.reshape((order + 1,) + shape)

        if self.kind == RampKind.POLYNOMIAL:
            outside = (x < 0.0) | (x > 1.0)
            for i in range(1, order + 1):
                values = poly.polyval(np.clip(x, 0.0, 1.0), poly.polyder(self.coefficients, i))
                derivatives[i] = np.where(outside, 0.0, values)
            return derivatives.reshape((order + 1,) + shape)

        if order > EXP_MAX_DERIVATIVE:
            raise UnsupportedDerivativeOrder(
                f"The exponential ramp supports derivatives up to order {EXP_MAX_DERIVATIVE}, got {order}."
            )

        lower = (x >= EXP_FLAT_MARGIN) & (x <= 0.5)
        upper = (x > 0.5) & (x <= 1.0 - EXP_FLAT_MARGIN)
        for mask, form in ((lower, _rising_half), (upper, _settling_half)):
            if not mask.any():
                continue

            points = jnp.asarray(x[mask])
            unit = [jnp.ones_like(points)] + [jnp.zeros_like(points)] * (order - 1)
            _, series = jet(form, (points,), (unit,))
            for i, term in enumerate(series, start=1):
                derivatives[i, mask] = np.asarray(term)

        return derivatives.reshape((order + 1,) + shape)


# Two algebraically equal forms of the logistic, each free of overflow on its half of the window.
def _rising_half(x):
    decay = jnp.exp(1.0 / (1.0 - x) - 1.0 / x)
    return decay / (1.0 + decay)


def _settling_half(x):
    return 1.0 / (1.0 + jnp.exp(1.0 / x - 1.0 / (1.0 - x)))


def make_poly_ramp(n: int) -> RampSpec:
    if n < 0:
        raise ValueError("Polynomial ramp order must be nonnegative.")

    integrand = Polynomial([0.0, 1.0]) ** n * Polynomial([1.0, -1.0]) ** n
    antiderivative = integrand.integ()
    normalized = antiderivative / antiderivative(1.0)

    return RampSpec(kind=RampKind.POLYNOMIAL, order=n, coefficients=tuple(float(c) for c in normalized.coef))


def make_exp_ramp() -> RampSpec:
    return RampSpec(kind=RampKind.EXPONENTIAL)


def eval_ramp(ramp: RampSpec, theta: float) -> float:
    return float(ramp(theta))


def eval_ramp_derivative(ramp: RampSpec, theta: float, i: int) -> float:
    if i < 1:
        raise ValueError("Derivative order must be positive.")

    return float(ramp.derivative(theta, i))


def parse_ramp(label: str) -> RampSpec:
    text = label.strip().lower()

    if text == "exp":
        return make_exp_ramp()

    kind, _, order = text.partition(":")
    if kind != "poly" or not order.strip().isdigit():
        raise ValueError(f"Unknown ramp '{label}'. Expected 'poly:<n>' or 'exp'.")

    return make_poly_ramp(int(order))
