"""Exception hierarchy shared by the codec modules."""


class CodecError(Exception):
    """Base class for every error raised by this package."""


class InvalidLength(CodecError, ValueError):
    pass


class InvalidDimensions(CodecError, ValueError):
    pass


class SubbandTooSmall(CodecError, ValueError):
    pass


class SpecMismatch(CodecError, ValueError):
    pass


class EmptyGop(CodecError):
    """Raised when a GOP has no nonzero coefficient to derive a threshold from."""


class EndOfStream(CodecError, EOFError):
    pass


class CorruptStream(CodecError, ValueError):
    pass


class InvalidFile(CodecError, ValueError):
    pass
