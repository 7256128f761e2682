"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A component was wired up inconsistently (grid/stencil/model mismatch)."""


class ParseError(ValueError):
    """Scenario or key text could not be parsed; message carries line info."""


class StepRejectionError(RuntimeError):
    """A sweep saw an interface speed violating the CFL bound for its step.

    Velocities are bounded a priori, so this indicates a configuration bug;
    the caller must shrink the time step rather than clamp fluxes.
    """
