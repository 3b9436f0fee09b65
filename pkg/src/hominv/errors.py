"""Exception types shared across the package.

Each error names the contract it enforces; the command-line layer maps
them onto process exit codes (usage/validation -> 2, statistics -> 3,
verification -> 4).
"""


class ValidationError(ValueError):
    """An input violates a stated invariant (named in the message)."""


class CapacityError(ValueError):
    """A request exceeds a hard resource bound (e.g. dense oracle size)."""


class UnresolvedTermError(LookupError):
    """An identity references a diagram label that was not supplied."""


class CatalogError(RuntimeError):
    """Diagram catalog could not be resolved, loaded, or validated."""


class UnphysicalTripleError(ValueError):
    """An invariant triple does not correspond to a real spectrum."""


class InsufficientStatisticsError(ValueError):
    """A count table carries too few events to estimate anything."""
