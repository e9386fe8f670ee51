from django.core.exceptions import ImproperlyConfigured


class OptimalBalanceError(Exception):
    pass


class DivergenceError(OptimalBalanceError):
    """
    An integration produced a non-finite state.

    `step` is the index of the offending step within its integration leg. When the failure happens inside a nudging
    iteration, `cycle` carries the index of the backward-forward cycle.
    """

    def __init__(self, step: int, t: float, cycle: int | None = None):
        self.step = step
        self.t = t
        self.cycle = cycle

        super().__init__(self.describe())

    def describe(self) -> str:
        message = f"Integration diverged at step {self.step} (t={self.t:.6g})."
        if self.cycle is not None:
            message = f"Nudging cycle {self.cycle}: {message}"

        return message

    def in_cycle(self, cycle: int) -> "DivergenceError":
        return DivergenceError(self.step, self.t, cycle=cycle)


class SeriesOrderError(OptimalBalanceError, ValueError):
    pass


class UnsupportedDerivativeOrder(OptimalBalanceError, ValueError):
    pass


class ResonanceError(OptimalBalanceError, ValueError):
    pass


class ShootingConvergenceError(OptimalBalanceError):
    def __init__(self, message: str, best_residual: float):
        self.best_residual = best_residual

        super().__init__(f"{message} Best residual norm: {best_residual:.3e}.")


class ConfigError(ImproperlyConfigured):
    def __init__(self, message: str, line: int | None = None):
        self.line = line

        if line is not None:
            message = f"line {line}: {message}"

        super().__init__(message)
