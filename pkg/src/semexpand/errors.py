"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataFormatError -> 2,
NumericError -> 3.
"""


class SemexpandError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SemexpandError):
    """Invalid configuration or usage (bad flags, inconsistent settings)."""


class DataFormatError(SemexpandError):
    """Malformed input data or artifact file."""


class EmptyVocabularyError(DataFormatError):
    """Vocabulary construction filtered out every token."""


class NumericError(SemexpandError):
    """Numerical failure during training (NaN/Inf parameters or loss)."""
