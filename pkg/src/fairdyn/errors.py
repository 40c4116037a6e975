"""Exception hierarchy.

Configuration problems derive from :class:`ConfigError`; everything raised
while evaluating the model derives from :class:`NumericError`. The CLI maps
the two families to distinct exit codes.
"""


class FairdynError(Exception):
    """Base class for all package errors."""


class ConfigError(FairdynError, ValueError):
    """Invalid scenario or run configuration.

    ``line`` is the 1-based line in the source file when known.
    """

    def __init__(self, message, *, key=None, line=None, source=None):
        self.key = key
        self.line = line
        self.source = source
        prefix = ""
        if source is not None:
            prefix = f"{source}:{line}: " if line is not None else f"{source}: "
        elif line is not None:
            prefix = f"line {line}: "
        super().__init__(prefix + message)


class InvalidDistribution(ConfigError):
    pass


class InvalidPayoffs(ConfigError):
    pass


class LengthMismatch(FairdynError, ValueError):
    pass


class OutOfSimplex(FairdynError, ValueError):
    """A reconstructed or perturbed state left the unit cube."""


class NumericError(FairdynError, ArithmeticError):
    pass


class NonConvergence(NumericError):
    pass


class DegenerateFitness(NumericError):
    pass


class NegativeFitness(NumericError):
    pass


class NotAtEquilibrium(NumericError):
    pass
