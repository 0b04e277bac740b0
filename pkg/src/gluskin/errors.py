"""Exception types raised across the package."""


class GluskinError(Exception):
    """Base class for all package errors."""


class SingularMatrix(GluskinError):
    pass


class NonConvergence(GluskinError):
    pass


class InvalidRepresentation(GluskinError):
    pass


class Degenerate(GluskinError):
    pass


class TooLarge(GluskinError):
    pass


class InvalidParameters(GluskinError):
    pass


class Infeasible(GluskinError):
    """No parameter set satisfies the constraint system.

    ``binding`` names the constraint with the most negative slack.
    """

    def __init__(self, message, binding=None):
        super().__init__(message)
        self.binding = binding
