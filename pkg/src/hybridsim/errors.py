"""Exception types shared across the package.

The CLI maps these onto distinct exit codes, so raise the most specific
class available.
"""


class HybridSimError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(HybridSimError):
    """A configuration document or override is malformed or inconsistent."""


class TruncationError(HybridSimError):
    """A Fock truncation is too small for the requested state or run."""


class ConvergenceError(HybridSimError):
    """Propagation or a truncation check failed to converge."""


class CoverageError(HybridSimError):
    """A phase-space grid does not capture enough of the state's weight."""


class SweepError(HybridSimError):
    """Too many cells of a parameter sweep failed."""
