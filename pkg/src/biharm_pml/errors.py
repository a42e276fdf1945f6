"""Exception types raised across the package."""


class BiharmError(Exception):
    """Base class for all library errors."""


class ConfigError(BiharmError, ValueError):
    """Invalid physical, geometric or study parameters."""


class ResonanceError(BiharmError):
    """A mode sits at the cutoff |alpha_n| = kappa (beta_n = 0)."""

    def __init__(self, n: int, beta: complex):
        super().__init__(f"mode n={n} is resonant (|beta_n| = {abs(beta):.3e})")
        self.n = n
        self.beta = beta


class DegenerateDenominatorError(BiharmError):
    """The PML layer system is (numerically) singular for this thickness."""


class SingularSystemError(BiharmError):
    """Assembled strip system is numerically singular (bad wavenumber)."""


class MissingSymbolError(BiharmError, KeyError):
    """A populated trace mode has no DtN symbol."""


class NotFoundError(BiharmError):
    """A search (e.g. for the positivity threshold) came up empty."""


class DomainError(BiharmError, ValueError):
    """A coordinate lies outside the region the solution is defined on."""
