from typing import Any

from django.conf import settings

DEFAULTS = {
    "MAX_SERIES_ORDER": 8,
    "STEPS_PER_FAST_TIME": 20,
    "RESONANCE_MARGIN": 0.1,
    "QUADRATURE_PANELS_PER_PERIOD": 40,
    "RESIDUAL_FLOOR": 1e-300,
}


def get_setting(name: str) -> Any:
    """
    Read a library default from the `OPTIMAL_BALANCE` settings dict.

    The library is usable without a configured Django project, in which case the built-in defaults apply.
    """
    if name not in DEFAULTS:
        raise KeyError(f"Unknown optimal balance setting '{name}'.")

    if not settings.configured:
        return DEFAULTS[name]

    overrides = getattr(settings, "OPTIMAL_BALANCE", None) or {}

    return overrides.get(name, DEFAULTS[name])
