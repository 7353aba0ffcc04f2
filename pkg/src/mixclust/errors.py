"""Exception types shared across the package.

The CLI maps these onto exit codes: usage problems exit 1, data/parse
problems exit 2, numeric/degeneracy problems exit 3.
"""


class ShapeError(ValueError):
    """Operands have incompatible dimensions."""


class DomainError(ValueError):
    """A parameter sits outside the mathematical domain of an operation
    (e.g. a Bernoulli probability at exactly 0 or 1 where a log is taken)."""


class NumericError(RuntimeError):
    """A numerical routine failed (SVD non-convergence, rank deficiency)."""


class DegenerateClusteringError(RuntimeError):
    """A clustering step lost a cluster or community entirely."""


class DataError(ValueError):
    """Malformed input data or configuration."""


class EdgeListParseError(DataError):
    """Edge-list file could not be parsed; message carries the line number."""


class ConfigError(DataError):
    """Scenario configuration file is invalid."""
