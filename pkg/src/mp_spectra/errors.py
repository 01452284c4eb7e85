"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class CapacityError(RuntimeError):
    """A requested computation exceeds a hard size or cost cap."""

    def __init__(self, message, cost=None, limit=None):
        super().__init__(message)
        self.cost = cost
        self.limit = limit


class ModelError(ValueError):
    """A correlation model is unusable for the requested operation (e.g. not PSD)."""


class InputError(ValueError):
    """Malformed matrix input (wrong shape, not symmetric)."""


class ConfigError(ValueError):
    """Invalid experiment configuration; ``problems`` lists every violated field."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration: " + "; ".join(self.problems))
