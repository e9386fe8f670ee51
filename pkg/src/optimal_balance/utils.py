from traceback import format_exception
from typing import Any

import numpy as np


def get_module_path(val: Any) -> str:
    return f"{val.__module__}.{val.__qualname__}"


def get_exception_traceback(exc: BaseException) -> str:
    return "".join(format_exception(exc))


def as_vector(values: Any, dim: int | None = None, name: str = "vector") -> np.ndarray:
    vector = np.array(values, dtype=float).reshape(-1)

    if dim is not None and vector.shape != (dim,):
        raise ValueError(f"{name} must have {dim} entries, got {vector.size}.")

    if not np.all(np.isfinite(vector)):
        raise ValueError(f"{name} must be finite.")

    return vector
