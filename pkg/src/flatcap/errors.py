"""Exception types shared across the package.

The CLI maps ``ValidationError`` and its subclasses to exit code 2 and
``NumericalError`` subclasses to exit code 3.
"""


class ValidationError(ValueError):
    """Bad user input or configuration."""


class DomainError(ValidationError):
    """Argument outside the domain of a function."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to deliver a trustworthy result."""


class ConvergenceError(NumericalError):
    pass


class BracketError(NumericalError):
    pass


class ComplexRootsError(NumericalError):
    def __init__(self, mu, disc):
        super().__init__(f"complex growth rates at mu={mu!r} (discriminant {disc:.3e})")
        self.mu = mu
        self.disc = disc


class SingularSystemError(NumericalError):
    pass


class SpectralGapError(NumericalError):
    pass


class BlowUpError(NumericalError):
    pass
