"""Exception types shared across the package."""


class SuperatomsError(Exception):
    """Base class for all errors raised by this package."""


class OutOfBandError(SuperatomsError):
    """A frequency lies at or beyond a waveguide band edge.

    Raised instead of silently returning zero so that callers can tell
    evanescent (off-band) coupling apart from interference darkness.
    """


class DegenerateError(SuperatomsError):
    """Mixing angle requested for a fully degenerate, uncoupled pair."""


class NotTopologicalError(SuperatomsError):
    """Edge states requested for a dimerized chain in the trivial phase."""


class NotResonantError(SuperatomsError):
    """Bath-mediated coupling requested between non-degenerate modes."""


class NormDriftError(SuperatomsError):
    """State norm drifted beyond tolerance in a Hermitian configuration.

    Signals that the time step is too large for the spectral range of the
    assembled operator.
    """


class ConfigurationError(SuperatomsError):
    """Invalid run configuration (schema or physics validation failure)."""
