"""Exception types shared across the toolkit."""


class PCCorruptError(Exception):
    """Base class for all toolkit errors."""


class DegenerateCloud(PCCorruptError, ValueError):
    pass


class InvalidCloud(PCCorruptError, ValueError):
    pass


class IndexOutOfRange(PCCorruptError, IndexError):
    pass


class KTooLarge(PCCorruptError, ValueError):
    pass


class MTooLarge(PCCorruptError, ValueError):
    pass


class NonFiniteAngle(PCCorruptError, ValueError):
    pass


class InvalidRange(PCCorruptError, ValueError):
    pass


class InvalidSigma(PCCorruptError, ValueError):
    pass


class InvalidSeedContext(PCCorruptError, ValueError):
    pass


class InvalidLevel(PCCorruptError, ValueError):
    pass


class InvalidKind(PCCorruptError, ValueError):
    pass


class EmptyResult(PCCorruptError, ValueError):
    pass


class CloudTooSmall(PCCorruptError, ValueError):
    pass


class DuplicateKind(PCCorruptError, ValueError):
    pass


class CountMismatch(PCCorruptError, ValueError):
    pass


class NMaxTooLarge(PCCorruptError, ValueError):
    pass


class PCBError(PCCorruptError, ValueError):
    pass


class BadMagic(PCBError):
    pass


class TruncatedFile(PCBError):
    pass


class CountOverflow(PCBError):
    pass


class UnsupportedPly(PCCorruptError, ValueError):
    pass


class ManifestMissing(PCCorruptError, FileNotFoundError):
    pass


class MetricsError(PCCorruptError, ValueError):
    pass


class LengthMismatch(MetricsError):
    pass


class EmptyInput(MetricsError):
    pass


class PerfectBaseline(MetricsError):
    pass


class BaselineNoDrop(MetricsError):
    pass


class ValueOutOfRange(MetricsError):
    pass


class WrongArity(MetricsError):
    pass


class IncompleteTable(MetricsError):
    pass


class MissingVariant(MetricsError):
    pass
