from contextlib import contextmanager
from pathlib import Path

import numpy as np

from optimal_balance.model import SystemSpec
from optimal_balance.model import parse_potential

# Toy system of the convergence experiments: quartic potential with lambda = 1, D = 2, basepoint (1, 0).
Q_STAR = np.array([1.0, 0.0])
EPS_GRID = (0.1, 0.05, 0.025, 0.0125)


@contextmanager
def capture_signals(*signals):
    calls = []

    def _receiver(*args, **kwargs):
        calls.append((args, kwargs))

    for signal in signals:
        signal.connect(_receiver)
    try:
        yield calls
    finally:
        for signal in signals:
            signal.disconnect(_receiver)


def toy_system(potential: str = "quad+quart:1.0", dim: int = 2) -> SystemSpec:
    return SystemSpec(dim=dim, potential=parse_potential(potential))


def free_system(dim: int = 2) -> SystemSpec:
    """V = 0: the linear end dynamics, where everything decouples."""
    return toy_system("poly:0", dim)


def write_config(directory: str | Path, text: str, name: str = "experiment.cfg") -> Path:
    path = Path(directory) / name
    path.write_text(text)

    return path


def log_log_slope(eps, values) -> float:
    return float(np.polyfit(np.log(eps), np.log(values), 1)[0])
