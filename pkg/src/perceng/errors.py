"""Exception types shared across the package."""


class PercengError(Exception):
    """Base class for all package errors."""


class PolicyUndefined(PercengError):
    """An agent's policy has no action for the I-state it was handed."""


class OutsideWindow(PercengError):
    """A simulated state left the finite window of its space."""


class DisturbanceUnresolved(PercengError):
    """A set- or pmf-valued mapping was stepped without a resolver."""


class SpaceNotEnumerable(PercengError):
    """Enumeration was requested from a space defined only by membership."""


class ZeroEvidence(PercengError):
    """The Bayes normalizer vanished: the observation is impossible under the model."""


class SupportMismatch(PercengError):
    """KL divergence requested where p has mass outside the support of q."""


class MetricMissing(PercengError):
    """A margin was requested on a space without a metric."""


class Infeasible(PercengError):
    """No producer action (or sequence) satisfies the goal.

    ``diagnostic`` carries a short human-readable reason.
    """

    def __init__(self, diagnostic):
        super().__init__(diagnostic)
        self.diagnostic = diagnostic


class BudgetExceeded(PercengError):
    """A search expanded more nodes than its configured budget."""


class InconsistentSensing(PercengError):
    """A grid map label was contradicted by a new depth reading."""

    def __init__(self, tile, old, new):
        super().__init__(f"tile {tile} was labeled {old!r}, now sensed {new!r}")
        self.tile = tile
        self.old = old
        self.new = new


class InvalidParams(PercengError):
    """Scenario parameters are missing, unknown or out of range."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class ConfigError(PercengError):
    """A scenario config file could not be parsed or validated."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)
        self.path = path
        self.line = line
