"""Exception hierarchy shared across the pipeline.

``ConfigError`` marks caller mistakes (bad flags, inconsistent options) and maps
to CLI exit code 1; ``DataError`` and its subclasses mark problems with input
data and map to exit code 2.
"""


class PartylineError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(PartylineError):
    """Invalid configuration or usage (caller error)."""


class DataError(PartylineError):
    """Invalid or inconsistent input data."""


class FormatError(DataError):
    """A file does not conform to its declared binary/text format."""


class TruncationError(FormatError):
    """A file's declared record count/dimensions disagree with its size."""


class DegenerateCorpusError(DataError):
    """A corpus is too degenerate for the requested statistic

    (e.g. the twin-matching normalizer C(P1)+C(P2) is not positive).
    """
