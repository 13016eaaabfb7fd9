"""Exception hierarchy. Every error the package raises derives from SplitLabError."""


class SplitLabError(Exception):
    """Base class for all package errors."""


class ConfigInvalid(SplitLabError):
    """Parameters violate a documented constraint (bad family params, tree params, CLI config)."""


class UnsupportedSplitter(SplitLabError):
    """Requested splitter family is not representable (unknown name or lattice-type law)."""


class QuadratureNotConverged(SplitLabError):
    """Refined quadrature rule disagrees with the base rule beyond tolerance."""


class TooLarge(SplitLabError):
    """Input size exceeds a documented hard cap for the operation."""


class RootNotSplit(SplitLabError):
    """Root subtree sizes requested for a tree whose root never overflowed (n <= s)."""


class StepBudgetExceeded(SplitLabError):
    """Chain trajectory exceeded the hard step budget without stopping."""


class FitUnstable(SplitLabError):
    """Tail-window constant extraction drifts instead of settling."""


class DimMismatch(SplitLabError):
    """Distribution dimensions disagree (Wasserstein distance between unlike samples)."""


class IoError(SplitLabError):
    """Output path cannot be written."""
