class InputError(ValueError):
    """Malformed or out-of-contract input; `path` names the offending field when known."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class BudgetError(RuntimeError):
    """An enumeration would exceed the configured point-visit budget."""

    def __init__(self, message: str, estimate: int = 0, budget: int = 0):
        super().__init__(message)
        self.estimate = estimate
        self.budget = budget
