"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`TadaError`,
which is itself a ``ValueError`` so that callers treating bad input generically
keep working.
"""


class TadaError(ValueError):
    """Base class for all package errors."""


# ingestion / windows
class ParseError(TadaError):
    pass


class DimensionError(TadaError):
    pass


class NonFiniteError(TadaError):
    pass


class ConfigError(TadaError):
    pass


# persistence
class OrderTooLargeError(TadaError):
    pass


class SizeLimitError(TadaError):
    pass


# quantization / vectorization
class EmptySequenceError(TadaError):
    pass


class TooLargeKError(TadaError):
    pass


class TooFewMeasuresError(TadaError):
    pass


class DuplicateCenterError(TadaError):
    pass


# scoring
class TooFewSamplesError(TadaError):
    pass


class DegenerateSubsetError(TadaError):
    pass


class LevelError(TadaError):
    pass


# pipeline / model files
class ChannelMismatchError(TadaError):
    pass


class TooFewWindowsError(TadaError):
    pass


class ModelVersionError(TadaError):
    pass


class CorruptModelError(TadaError):
    pass


# synthetic data
class InvalidGraphError(TadaError):
    pass


class PositionError(TadaError):
    pass


# evaluation
class SingleClassError(TadaError):
    pass


class NoPositivesError(TadaError):
    pass


class LengthMismatchError(TadaError):
    pass
