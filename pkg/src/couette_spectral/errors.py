class DomainError(ValueError):
    """Input outside the domain of an operation (e.g. ``k = 0`` for p-weighted symbols)."""


class IntegrationError(RuntimeError):
    """Non-finite state during time integration."""

    def __init__(self, message, k=None, eta=None, t=None):
        super().__init__(message)
        self.k = k
        self.eta = eta
        self.t = t


class ConfigError(ValueError):
    """Invalid run configuration; ``key`` is the dotted path of the offending entry."""

    def __init__(self, message, key=""):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


class ConfigSyntaxError(ConfigError):
    pass


class UnknownKeyError(ConfigError):
    pass


class HypothesisViolation(ConfigError):
    pass
