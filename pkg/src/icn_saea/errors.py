"""Exception types shared across the package."""


class ContractError(ValueError):
    """An argument violates the documented preconditions of an operation."""


class TrainingDiverged(RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, iteration: int, message: str = ""):
        self.iteration = iteration
        super().__init__(message or f"non-finite loss at iteration {iteration}")


class SurrogateError(RuntimeError):
    """A surrogate returned unusable (non-finite or mis-shaped) values."""
