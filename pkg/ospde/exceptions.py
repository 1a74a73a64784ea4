"""
Error types for the obstacle SPDE toolkit.

Everything derives from ValueError or RuntimeError so callers that only
know the standard hierarchy keep working.
"""


class DomainError(ValueError):
    """Argument outside the domain of an operation."""


class ConfigError(ValueError):
    """Experiment config rejected by the schema validators."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__('; '.join(self.errors))


class HypothesisViolation(ValueError):
    """Coefficient set breaks its declared Lipschitz or contraction bounds."""

    def __init__(self, coefficient: str, message: str):
        self.coefficient = coefficient
        super().__init__(f'{coefficient}: {message}')


class ObstacleViolation(ValueError):
    """Obstacle above the terminal condition at time T."""

    def __init__(self, nodes, count: int):
        self.nodes = list(nodes)
        self.count = count
        shown = ', '.join(str(node) for node in self.nodes)
        super().__init__(f'v(T, x) > Phi(x) at {count} node(s): {shown}')


class SeedMismatch(ValueError):
    """Verification was handed a different noise path than the solution used."""


class NumericalError(RuntimeError):
    """Linear solve failure or non-finite values during time stepping."""

    def __init__(self, message: str, step: int = None, diagnostics: dict = None):
        self.step = step
        self.diagnostics = diagnostics or {}
        if step is not None:
            message = f'{message} (step {step})'
        super().__init__(message)


class PsorConvergenceError(NumericalError):
    """Projected SOR hit its iteration cap."""

    def __init__(self, step: int, history):
        self.history = list(history)
        last = self.history[-1] if self.history else float('nan')
        super().__init__(
            f'PSOR did not converge, last residual {last:.3e}',
            step=step,
            diagnostics={'residual_history': self.history},
        )
