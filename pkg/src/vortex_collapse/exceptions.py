"""Custom exceptions for vortex_collapse."""


class VortexCollapseError(Exception):
    """Base exception for vortex_collapse errors."""


class InvalidStateError(VortexCollapseError, ValueError):
    """Raised when a vortex configuration is malformed or already collapsed."""


class DomainError(VortexCollapseError, ValueError):
    """Raised when an argument lies outside the domain of an operation."""


class SingularConfigurationError(VortexCollapseError):
    """Raised when a pairwise distance falls below the configured floor."""


class SizeLimitError(VortexCollapseError):
    """Raised when subset enumeration would exceed the supported size."""


class NeutralClusterError(VortexCollapseError):
    """Raised when a cluster has zero total intensity."""


class DegenerateIntensitiesError(VortexCollapseError):
    """Raised when intensities violate the non-neutral sub-cluster hypothesis."""


class NoCollapseError(VortexCollapseError):
    """Raised when an operation needs a collapse that did not happen."""


class InsufficientSamplesError(VortexCollapseError):
    """Raised when a fit window holds too few samples."""


class BracketError(VortexCollapseError):
    """Raised when a root bracket shows no sign change."""


class InconsistentIntensityError(VortexCollapseError):
    """Raised when the two intensity conditions disagree off a root."""


class ExpandingSolutionError(VortexCollapseError):
    """Raised when the requested triangle orientation expands instead of collapsing."""


class PreconditionError(VortexCollapseError):
    """Raised when an analysis precondition does not hold on the data."""


class ScenarioError(VortexCollapseError):
    """Raised when a scenario file cannot be read or validated."""
