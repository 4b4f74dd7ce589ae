"""Exception and warning types shared across the toolkit.

Two families matter to callers: ``ValidationError`` covers bad inputs or
configuration, ``DegeneracyError`` covers problem instances that are valid
but numerically unsolvable (vanishing denominators, singular information
matrices). The command-line front end maps them to exit codes 2 and 3.
"""


class DaisLocError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(DaisLocError, ValueError):
    """Invalid input data or configuration."""


class DegeneracyError(DaisLocError, ArithmeticError):
    """Numerically degenerate problem instance."""


class DegenerateGeometry(ValidationError):
    """Two positions that must be distinct coincide, or a path length is zero."""


class DelayOutOfRange(ValidationError):
    """A propagation delay falls outside the admissible interval (0, N*Ts]."""


class InvalidInterval(ValidationError):
    """Half-open wrap interval with lower edge >= upper edge."""


class InvalidNoise(ValidationError):
    """Noise standard deviation is zero or negative where a positive one is required."""


class ZeroSignal(ValidationError):
    """All-zero observation means cannot be calibrated to a target SNR."""


class ScenarioError(ValidationError):
    """Malformed scenario document or unknown key."""


class SolverDegenerate(DegeneracyError):
    """The pseudo-true scatterer solve hit a vanishing denominator.

    ``path_index`` identifies the offending propagation path.
    """

    def __init__(self, path_index: int, message: str | None = None):
        self.path_index = int(path_index)
        super().__init__(message or f"degenerate scatterer solve on path {path_index}")


class SingularNuisanceBlock(DegeneracyError):
    """The gain block of the channel FIM is numerically singular."""


class SingularLocalizationFim(DegeneracyError):
    """The localization FIM is not positive definite."""


class SingularMcrbFim(DegeneracyError):
    """The generalized FIM of the mismatched model is not positive definite."""


class NoThresholdInBracket(DegeneracyError):
    """The bound-ordering inequality fails everywhere in the searched bracket."""


class ConditionWarning(RuntimeWarning):
    """A matrix inverse was computed with condition number above 1e12."""
