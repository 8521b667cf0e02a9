"""Exception hierarchy shared across the package."""


class GenreDreamError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(GenreDreamError, ValueError):
    """Tensor shapes are invalid or do not line up."""


class ContractError(GenreDreamError, ValueError):
    """A caller broke an operation's precondition."""


class DegenerateBatchError(GenreDreamError, ValueError):
    """Batch normalization in training mode needs at least two values per channel."""


class LabelError(GenreDreamError, ValueError):
    """A class label lies outside the genre range."""


class ConfigError(GenreDreamError, ValueError):
    """Invalid configuration or empty dataset."""


class WavDecodeError(GenreDreamError, ValueError):
    """Base class for WAV parsing failures."""


class NotRiffError(WavDecodeError):
    pass


class UnsupportedFormatError(WavDecodeError):
    pass


class UnsupportedBitDepthError(WavDecodeError):
    pass


class TruncatedWavError(WavDecodeError):
    pass


class UnsupportedRateError(GenreDreamError, ValueError):
    """Sample rate cannot be reduced to 8 kHz by an integer factor."""


class ManifestError(GenreDreamError, ValueError):
    """Dataset manifest could not be parsed."""


class CheckpointError(GenreDreamError, ValueError):
    """Base class for checkpoint load failures."""


class BadMagicError(CheckpointError):
    pass


class UnsupportedVersionError(CheckpointError):
    pass


class ArchitectureMismatchError(CheckpointError):
    pass


class TruncatedCheckpointError(CheckpointError):
    pass
