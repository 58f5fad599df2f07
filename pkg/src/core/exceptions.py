"""Error types raised across the dereverberation pipeline.

Each error also derives from the closest builtin so callers that only
know about ``ValueError`` or ``OSError`` keep working.
"""


class NctfError(Exception):
    """Base class for all pipeline errors"""


class UnsupportedFormatError(NctfError, ValueError):
    """Audio file is multi-channel, compressed or has an unsupported sample format"""


class CorruptHeaderError(NctfError, ValueError):
    """Audio file header could not be parsed"""


class AudioIoError(NctfError, OSError):
    """Audio file could not be read or written"""


class NonFiniteSampleError(NctfError, ValueError):
    """Signal contains NaN or infinite samples"""


class SampleRateMismatchError(NctfError, ValueError):
    pass


class SignalTooShortError(NctfError, ValueError):
    pass


class LengthMismatchError(NctfError, ValueError):
    pass


class DimensionMismatchError(NctfError, ValueError):
    """Matrix shapes do not agree"""


class DegenerateFirstColumnError(NctfError, ValueError):
    """A row of H has a non-positive first tap and cannot be normalized"""


class InvalidRankError(NctfError, ValueError):
    pass


class EmptyTrainingSetError(NctfError, ValueError):
    pass


class InsufficientFramesError(NctfError, ValueError):
    """Fewer non-silent training frames than requested basis vectors"""


class NegativeArgumentError(NctfError, ValueError):
    pass


class InvalidWeightError(NctfError, ValueError):
    """Weighting parameter rho outside the open interval (0, 1)"""


class InvalidWindowError(NctfError, ValueError):
    pass


class InvalidSpecError(NctfError, ValueError):
    pass


class BasisFormatError(NctfError, ValueError):
    """Basis file is truncated or does not carry the expected header"""


class EmptyCorpusError(NctfError, ValueError):
    pass
