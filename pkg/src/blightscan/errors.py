"""Exception hierarchy shared by every stage of the pipeline."""


class BlightScanError(Exception):
    """Base class for all errors raised by blightscan."""


# dataset
class NotADirectory(BlightScanError):
    pass


class EmptyDataset(BlightScanError):
    pass


class DegenerateClass(BlightScanError, ValueError):
    pass


class BadFraction(BlightScanError, ValueError):
    pass


class MalformedManifest(BlightScanError, ValueError):
    pass


# imaging
class DecodeError(BlightScanError):
    pass


class BadSize(BlightScanError, ValueError):
    pass


# hog
class InvalidConfig(BlightScanError, ValueError):
    pass


class TooSmall(BlightScanError, ValueError):
    pass


class Misaligned(BlightScanError, ValueError):
    pass


class TooFewCells(BlightScanError, ValueError):
    pass


# classifiers
class DimMismatch(BlightScanError, ValueError):
    pass


class SingleClass(BlightScanError, ValueError):
    pass


class NonFinite(BlightScanError, ValueError):
    pass


class EmptyTrainingSet(BlightScanError, ValueError):
    pass


class KTooLarge(BlightScanError, ValueError):
    pass


class EmptyNode(BlightScanError, ValueError):
    pass


# evaluation
class LengthMismatch(BlightScanError, ValueError):
    pass


class EmptyInput(BlightScanError, ValueError):
    pass


class ConfigMismatch(BlightScanError, ValueError):
    pass


class AllImagesFailed(BlightScanError):
    pass


# persistence
class ModelIOError(BlightScanError, OSError):
    pass


class ModelFormatError(BlightScanError, ValueError):
    pass


class BadMagic(ModelFormatError):
    pass


class UnsupportedVersion(ModelFormatError):
    pass


class CorruptPayload(ModelFormatError):
    pass
