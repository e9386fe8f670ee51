"""
Experiment configuration files: flat `key = value` lines, `#` comments, comma-separated lists.

Values are kept as text with their line numbers and converted by the `get_*` methods, so every error can name the key
and the line it came from.
"""

import logging
import os
from dataclasses import dataclass
from enum import StrEnum
from pathlib import Path

import numpy as np

from optimal_balance.bvp import ShootingConfig
from optimal_balance.conf import get_setting
from optimal_balance.diagnostics import default_series_order
from optimal_balance.exceptions import ConfigError
from optimal_balance.integrate import IntegrationConfig
from optimal_balance.integrate import default_step
from optimal_balance.model import OscillatorSpec
from optimal_balance.model import SystemSpec
from optimal_balance.model import parse_modes
from optimal_balance.model import parse_potential
from optimal_balance.nudging import InitialGuess
from optimal_balance.nudging import NudgingConfig
from optimal_balance.nudging import initial_guess
from optimal_balance.ramp import RampSpec
from optimal_balance.ramp import parse_ramp

logger = logging.getLogger(__name__)


class SystemKind(StrEnum):
    TOY = "toy"
    OSCILLATOR = "oscillator"


KNOWN_KEYS = frozenset(
    {
        "system",
        "potential",
        "dim",
        "epsilon",
        "epsilon_list",
        "T",
        "ramp",
        "order_n",
        "max_iter",
        "rtol",
        "alpha",
        "kappa",
        "seed",
        "out_dir",
        "q_star",
        "p0",
        "workers",
        "modes",
        "theta_star",
        "store_trajectory",
        "newton_tol",
        "newton_max",
    }
)

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


@dataclass(frozen=True, slots=True)
class Entry:
    text: str
    line: int


class ExperimentOptions:
    def __init__(self, entries: dict[str, Entry], source: str = "<string>"):
        self.entries = entries
        self.source = source

    def has(self, key: str) -> bool:
        return key in self.entries

    def _entry(self, key: str) -> Entry:
        if key not in self.entries:
            raise ConfigError(f"Missing required key '{key}' in {self.source}.")

        return self.entries[key]

    def _real(self, key: str, default: float | None = None) -> float:
        if default is not None and key not in self.entries:
            return default

        entry = self._entry(key)
        try:
            value = float(entry.text)
        except ValueError:
            raise ConfigError(f"'{key}' must be a real number, got '{entry.text}'.", entry.line) from None

        if not np.isfinite(value):
            raise ConfigError(f"'{key}' must be finite.", entry.line)

        return value

    def _integer(self, key: str, default: int | None = None) -> int:
        if default is not None and key not in self.entries:
            return default

        entry = self._entry(key)
        try:
            return int(entry.text)
        except ValueError:
            raise ConfigError(f"'{key}' must be an integer, got '{entry.text}'.", entry.line) from None

    def _real_list(self, key: str) -> list[float]:
        entry = self._entry(key)
        try:
            values = [float(item) for item in entry.text.split(",") if item.strip()]
        except ValueError:
            raise ConfigError(f"'{key}' must be a comma-separated list of reals, got '{entry.text}'.", entry.line) from None

        if not values:
            raise ConfigError(f"'{key}' must not be empty.", entry.line)

        return values

    def _parsed(self, key: str, parser, default: str):
        entry = self.entries.get(key, Entry(default, 0))
        try:
            return parser(entry.text)
        except ValueError as e:
            raise ConfigError(f"'{key}': {e}", entry.line or None) from None

    def get_system(self) -> SystemKind:
        return self._parsed("system", SystemKind, SystemKind.TOY.value)

    def get_dim(self) -> int:
        dim = self._integer("dim", 2)
        if dim <= 0 or dim % 2:
            raise ConfigError(f"'dim' must be a positive even integer, got {dim}.", self._line("dim"))

        return dim

    def get_system_spec(self) -> SystemSpec:
        return SystemSpec(dim=self.get_dim(), potential=self._parsed("potential", parse_potential, "quad+quart:1.0"))

    def get_modes(self) -> OscillatorSpec:
        if not self.has("modes"):
            return OscillatorSpec.inverse_square()

        return self._parsed("modes", parse_modes, "")

    def get_epsilon(self) -> float:
        eps = self._real("epsilon")
        if eps <= 0:
            raise ConfigError(f"'epsilon' must be positive, got {eps}.", self._line("epsilon"))

        return eps

    def get_epsilon_list(self) -> list[float]:
        if not self.has("epsilon_list") and self.has("epsilon"):
            return [self.get_epsilon()]

        values = self._real_list("epsilon_list")
        if any(eps <= 0 for eps in values):
            raise ConfigError("'epsilon_list' entries must be positive.", self._line("epsilon_list"))

        return values

    def get_T(self) -> float:
        T = self._real("T", 1.0)
        if T <= 0:
            raise ConfigError(f"'T' must be positive, got {T}.", self._line("T"))

        return T

    def get_ramps(self) -> list[RampSpec]:
        return self._parsed("ramp", lambda text: [parse_ramp(label) for label in text.split(",") if label.strip()], "poly:2")

    def get_ramp(self) -> RampSpec:
        ramps = self.get_ramps()
        if len(ramps) != 1:
            raise ConfigError("'ramp' must name a single ramp for this command.", self._line("ramp"))

        return ramps[0]

    def get_order_n_override(self) -> int | None:
        if not self.has("order_n"):
            return None

        n = self._integer("order_n")
        if n < 0:
            raise ConfigError(f"'order_n' must be nonnegative, got {n}.", self._line("order_n"))

        return n

    def get_order_n(self, ramp: RampSpec, eps: float) -> int:
        n = self.get_order_n_override()

        return default_series_order(ramp, eps, self.get_T()) if n is None else n

    def get_max_iter(self) -> int:
        return self._integer("max_iter", 30)

    def get_rtol(self) -> float:
        return self._real("rtol", 1e-12)

    def get_alpha(self) -> float:
        return self._real("alpha", 1.0)

    def get_kappa(self) -> int:
        kappa = self._integer("kappa", get_setting("STEPS_PER_FAST_TIME"))
        if kappa < 1:
            raise ConfigError(f"'kappa' must be at least 1, got {kappa}.", self._line("kappa"))

        return kappa

    def get_seed(self) -> int:
        return self._integer("seed", 42)

    def get_out_dir(self) -> Path:
        return Path(self.entries["out_dir"].text) if self.has("out_dir") else Path(".")

    def get_workers(self) -> int | None:
        if not self.has("workers"):
            return None

        workers = self._integer("workers")
        if workers < 1:
            raise ConfigError(f"'workers' must be at least 1, got {workers}.", self._line("workers"))

        return workers

    def get_default_workers(self, cells: int) -> int:
        return self.get_workers() or max(1, min(cells, os.cpu_count() or 1))

    def get_q_star(self, dim: int) -> np.ndarray:
        if not self.has("q_star"):
            q_star = np.zeros(dim)
            q_star[0] = 1.0
            return q_star

        values = self._real_list("q_star")
        if len(values) != dim:
            raise ConfigError(f"'q_star' must have {dim} entries, got {len(values)}.", self._line("q_star"))

        return np.array(values)

    def get_p0(self, sys: SystemSpec, q_star: np.ndarray) -> np.ndarray:
        entry = self.entries.get("p0", Entry(InitialGuess.ZERO.value, 0))

        if entry.text.lower() in set(InitialGuess):
            return initial_guess(sys, q_star, entry.text.lower(), seed=self.get_seed())

        values = self._real_list("p0")
        if len(values) != sys.dim:
            raise ConfigError(f"'p0' must have {sys.dim} entries, got {len(values)}.", entry.line)

        return np.array(values)

    def get_theta_star(self) -> float:
        return self._real("theta_star", 0.0)

    def get_store_trajectory(self) -> bool:
        if not self.has("store_trajectory"):
            return False

        entry = self.entries["store_trajectory"]
        text = entry.text.lower()
        if text not in _TRUE | _FALSE:
            raise ConfigError(f"'store_trajectory' must be true or false, got '{entry.text}'.", entry.line)

        return text in _TRUE

    def get_newton_tol(self) -> float:
        return self._real("newton_tol", 1e-10)

    def get_newton_max(self) -> int:
        return self._integer("newton_max", 20)

    def _line(self, key: str) -> int | None:
        entry = self.entries.get(key)
        return entry.line if entry else None

    def nudging_config(self, sys: SystemSpec, eps: float, ramp: RampSpec) -> NudgingConfig:
        q_star = self.get_q_star(sys.dim)

        try:
            return NudgingConfig(
                eps=eps,
                T=self.get_T(),
                ramp=ramp,
                q_star=q_star,
                p0=self.get_p0(sys, q_star),
                max_iter=self.get_max_iter(),
                rtol=self.get_rtol(),
                alpha=self.get_alpha(),
                integration=IntegrationConfig(
                    step=default_step(eps, self.get_kappa()), store_trajectory=self.get_store_trajectory()
                ),
            )
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def shooting_config(self, cfg: NudgingConfig) -> ShootingConfig:
        try:
            return ShootingConfig.from_nudging(cfg, newton_tol=self.get_newton_tol(), newton_max=self.get_newton_max())
        except ValueError as e:
            raise ConfigError(str(e)) from e


def parse_config(text: str, source: str = "<string>") -> ExperimentOptions:
    entries = {}

    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue

        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()

        if not sep or not key:
            raise ConfigError(f"Expected 'key = value', got '{raw.strip()}'.", number)

        if not value:
            raise ConfigError(f"Key '{key}' has no value.", number)

        if key in entries:
            raise ConfigError(f"Key '{key}' is set twice (first on line {entries[key].line}).", number)

        if key not in KNOWN_KEYS:
            logger.warning("%s line %d: ignoring unknown key '%s'.", source, number, key)

        entries[key] = Entry(value, number)

    return ExperimentOptions(entries, source)


def load_config(path: str | os.PathLike) -> ExperimentOptions:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e.strerror}.") from e

    return parse_config(text, source=str(path))
