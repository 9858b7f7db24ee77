"""Exception types shared across the codec.

Contract violations (bad arguments, incompatible streams, out-of-support
symbols) derive from CodecError and map to CLI exit code 2.  Truncated or
unreadable inputs map to exit code 3 together with plain OSError.
"""


class CodecError(Exception):
    """Base class for all codec-defined failures."""


class InvalidInput(CodecError, ValueError):
    """Caller passed tensors or values violating a documented precondition."""


class ContractViolation(CodecError):
    """An API was driven in a way its mode contract forbids."""


class ConfigError(CodecError):
    """Configuration refers to resources or settings that cannot be honored."""


class EncodeSymbolError(CodecError):
    """A symbol fell outside the support of its entropy-coding table."""


class TableMismatch(CodecError):
    """Bitstream table identifier does not match the supplied table set."""


class DecodeIncompatible(CodecError):
    """Bitstream was produced under a different model configuration."""


class TruncatedStream(CodecError):
    """Payload or container ended in the middle of a record."""


class NoOverlapError(CodecError):
    """Rate-distortion curves share no quality interval."""


class DivergenceError(CodecError):
    """Training loss became non-finite or ran away."""
