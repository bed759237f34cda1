"""Exception hierarchy shared across the package."""


class MlatError(Exception):
    """Base class for all package errors."""


class ConfigurationError(MlatError):
    """Invalid configuration value, file content, or structural mismatch."""


class DomainError(MlatError):
    """Input outside an operation's mathematical or physical domain."""


class GeometryError(DomainError):
    """Degenerate measurement geometry (coincident entities, impossible lengths)."""


class SolverError(MlatError):
    """The least-squares solve cannot proceed."""


class UnderdeterminedError(SolverError):
    """Fewer observation equations than unknowns."""


class RankDeficiencyError(SolverError):
    """Normal matrix lost positive definiteness during factorization."""
