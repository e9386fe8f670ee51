"""
The fast-slow toy model q' = p, eps p' = J p - rho(t/T) grad V(q), and the action-angle oscillator example.

One even phase dimension D is used for q, p and the symplectic matrix J.
"""

from collections.abc import Callable
from dataclasses import dataclass
from enum import StrEnum
from typing import Any

import numpy as np

from optimal_balance.conf import get_setting
from optimal_balance.exceptions import ResonanceError
from optimal_balance.ramp import RampSpec


class PotentialKind(StrEnum):
    QUADRATIC = "quadratic"
    QUARTIC = "quartic"
    CUSTOM = "custom-polynomial"


@dataclass(frozen=True, slots=True, kw_only=True)
class PotentialSpec:
    kind: PotentialKind
    # quartic: (lambda,); custom-polynomial: (c0, c1, ..., cm) of V(q) = sum_i sum_k c_k q_i^k.
    parameters: tuple[float, ...] = ()

    @property
    def label(self) -> str:
        if self.kind == PotentialKind.QUADRATIC:
            return "quad"

        if self.kind == PotentialKind.QUARTIC:
            return f"quad+quart:{self.parameters[0]!r}"

        return "poly:" + ",".join(repr(c) for c in self.parameters)


@dataclass(frozen=True, slots=True, kw_only=True)
class SystemSpec:
    dim: int
    potential: PotentialSpec

    def __post_init__(self):
        if self.dim <= 0 or self.dim % 2:
            raise ValueError(f"Phase dimension must be a positive even integer, got {self.dim}.")


@dataclass(frozen=True, slots=True, eq=False)
class PhaseState:
    q: np.ndarray
    p: np.ndarray
    t: float

    @classmethod
    def from_vector(cls, y: np.ndarray, t: float) -> "PhaseState":
        dim = y.shape[0] // 2
        return cls(q=y[:dim].copy(), p=y[dim:].copy(), t=float(t))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.q, self.p])


@dataclass(frozen=True, slots=True, kw_only=True)
class OscillatorSpec:
    modes: tuple[tuple[int, complex], ...]

    @classmethod
    def inverse_square(cls, kmax: int = 3) -> "OscillatorSpec":
        return cls(modes=tuple((k, complex(1.0 / k**2)) for k in range(1, kmax + 1)))

    @property
    def label(self) -> str:
        return ", ".join(f"{k}:{f_k!r}" for k, f_k in self.modes)

    def coupling(self, theta: Any) -> Any:
        theta = np.asarray(theta, dtype=float)
        total = np.zeros_like(theta, dtype=complex)

        for k, f_k in self.modes:
            total = total + f_k * np.exp(1j * k * theta)

        return total

    def check_resonance(self, eps: float) -> None:
        margin = get_setting("RESONANCE_MARGIN")

        for k, _ in self.modes:
            if abs(k * eps - 1.0) < margin:
                raise ResonanceError(f"Mode k={k} is too close to resonance at eps={eps}: |k eps - 1| < {margin}.")


def symplectic_matrix(dim: int) -> np.ndarray:
    if dim <= 0 or dim % 2:
        raise ValueError(f"The symplectic matrix needs a positive even dimension, got {dim}.")

    half = dim // 2
    identity = np.eye(half)
    zero = np.zeros((half, half))

    return np.block([[zero, identity], [-identity, zero]])


def grad_potential(pot: PotentialSpec, q: Any) -> Any:
    """
    Analytic gradient of V along the last axis.

    Only arithmetic operators and array methods are used, so the same code runs on numpy arrays and inside jax
    transformations. Components may be complex: the inner product is bilinear, not Hermitian.
    """
    if pot.kind == PotentialKind.QUADRATIC:
        return q * 1.0

    if pot.kind == PotentialKind.QUARTIC:
        (strength,) = pot.parameters
        return q * (1.0 + strength * (q * q).sum(axis=-1, keepdims=True))

    slopes = [k * c for k, c in enumerate(pot.parameters)][1:]
    gradient = q * 0.0
    for slope in reversed(slopes):
        gradient = gradient * q + slope

    return gradient


def potential_value(pot: PotentialSpec, q: np.ndarray) -> float:
    squared = float(np.dot(q, q))

    if pot.kind == PotentialKind.QUADRATIC:
        return 0.5 * squared

    if pot.kind == PotentialKind.QUARTIC:
        (strength,) = pot.parameters
        return 0.5 * squared + 0.25 * strength * squared**2

    return float(np.sum(np.polynomial.polynomial.polyval(q, pot.parameters)))


def _check_scales(eps: float, T: float) -> None:
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}.")

    if T <= 0:
        raise ValueError(f"T must be positive, got {T}.")


def ramped_vector_field(
    sys: SystemSpec, ramp: RampSpec, eps: float, T: float, s: PhaseState
) -> tuple[np.ndarray, np.ndarray]:
    _check_scales(eps, T)

    J = symplectic_matrix(sys.dim)
    p_dot = (J @ s.p - ramp(s.t / T) * grad_potential(sys.potential, s.q)) / eps

    return s.p.copy(), p_dot


def ramped_field(sys: SystemSpec, ramp: RampSpec, eps: float, T: float) -> Callable[[float, np.ndarray], np.ndarray]:
    """The ramped field on the packed state y = (q, p), as consumed by the integrator."""
    _check_scales(eps, T)

    dim = sys.dim
    J = symplectic_matrix(dim)
    potential = sys.potential

    def field(t: float, y: np.ndarray) -> np.ndarray:
        q, p = y[:dim], y[dim:]
        p_dot = (J @ p - ramp(t / T) * grad_potential(potential, q)) / eps
        return np.concatenate([p, p_dot])

    return field


def oscillator_vector_field(
    osc: OscillatorSpec, ramp: RampSpec, eps: float, T: float, state: tuple[float, complex, float]
) -> tuple[float, complex]:
    _check_scales(eps, T)

    theta, p, t = state
    p_dot = (1j * p + ramp(t / T) * osc.coupling(theta)) / eps

    return 1.0, complex(p_dot)


def oscillator_field(
    osc: OscillatorSpec, ramp: RampSpec, eps: float, T: float
) -> Callable[[float, np.ndarray], np.ndarray]:
    """The ramped oscillator on the packed complex state y = (theta, p); theta is carried in the real part."""
    _check_scales(eps, T)
    osc.check_resonance(eps)

    def field(t: float, y: np.ndarray) -> np.ndarray:
        theta_dot, p_dot = oscillator_vector_field(osc, ramp, eps, T, (y[0].real, y[1], t))
        return np.array([theta_dot, p_dot], dtype=complex)

    return field


def parse_potential(label: str) -> PotentialSpec:
    text = label.strip().lower()

    if text == "quad":
        return PotentialSpec(kind=PotentialKind.QUADRATIC)

    kind, _, rest = text.partition(":")
    try:
        if kind == "quad+quart":
            return PotentialSpec(kind=PotentialKind.QUARTIC, parameters=(float(rest),))

        if kind == "poly" and rest:
            return PotentialSpec(kind=PotentialKind.CUSTOM, parameters=tuple(float(c) for c in rest.split(",")))
    except ValueError:
        pass

    raise ValueError(f"Unknown potential '{label}'. Expected 'quad', 'quad+quart:<lambda>' or 'poly:<c0,c1,...>'.")


def parse_modes(text: str) -> OscillatorSpec:
    """Parse 'k:f_k, k:f_k, ...' with Python complex literals for f_k, e.g. '1:1, 2:0.25, 3:0.5j'."""
    modes = []

    for item in text.split(","):
        if not item.strip():
            continue

        k, sep, amplitude = item.partition(":")
        try:
            if not sep:
                raise ValueError
            modes.append((int(k), complex(amplitude.strip().replace(" ", ""))))
        except ValueError:
            raise ValueError(f"Malformed oscillator mode '{item.strip()}'. Expected '<k>:<f_k>'.") from None

    if not modes:
        raise ValueError("The oscillator needs at least one mode.")

    return OscillatorSpec(modes=tuple(modes))
