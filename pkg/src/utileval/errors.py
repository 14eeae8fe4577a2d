"""Exception hierarchy shared by every module."""


class UtilEvalError(Exception):
    """Base class for all errors raised by utileval."""


class ContractViolation(UtilEvalError, ValueError):
    """An input does not satisfy an operation's precondition."""


class InvalidScaleError(ContractViolation):
    """Affine rescaling with a non-positive multiplier."""


class DegenerateProblemError(ContractViolation):
    """The decision problem is trivial (e.g. all utilities equal)."""


class InfeasibleError(ContractViolation):
    """Utility coordinates or matrix outside the feasible region."""


class UndefinedMetricError(ContractViolation):
    """A metric is undefined on the given confusion matrix."""


class SamplerError(UtilEvalError, RuntimeError):
    """A rejection sampler exceeded its attempt cap."""


class InputError(UtilEvalError):
    """Malformed user input (files, labels, scores)."""


class ConfigError(UtilEvalError):
    """Malformed or invalid configuration document."""
