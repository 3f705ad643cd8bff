"""Exception hierarchy shared by every honeydirac module."""


class HoneycombError(Exception):
    """Base error; ``diagnostics`` carries whatever numbers explain the failure."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class DomainError(HoneycombError, ValueError):
    pass


class SymmetryError(HoneycombError):
    pass


class NumericalError(HoneycombError):
    pass


class DiracDetectionError(HoneycombError):
    """Raised when a vertex does not carry a usable Dirac point.

    ``reason`` is one of ``not-simple``, ``unpaired``, ``exceptional``,
    ``degenerate`` or ``unbracketed``.
    """

    def __init__(self, message, reason, diagnostics=None):
        super().__init__(message, diagnostics)
        self.reason = reason


class DeformationError(HoneycombError):
    pass


class DiscrepancyError(HoneycombError):
    pass


class RankError(HoneycombError):
    pass


class ConfigError(HoneycombError):
    pass
