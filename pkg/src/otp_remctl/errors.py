"""Exception types shared across the package."""


class OtpRemctlError(Exception):
    """Base class for every error raised by this package."""


class ExhaustedSource(OtpRemctlError):
    """An entropy source cannot supply the requested number of bytes."""


class KeyReused(OtpRemctlError):
    """A key block was requested after it had already been consumed."""


class OutOfRange(OtpRemctlError):
    """A key address lies beyond the end of the store."""


class KeyExhausted(OtpRemctlError):
    """No unconsumed key blocks remain; the store must be recharged."""


class SksFormatError(OtpRemctlError):
    """Base class for malformed key-store files."""


class BadMagic(SksFormatError):
    """The file does not start with the key-store magic bytes."""


class BadVersion(SksFormatError):
    """The key-store file declares an unsupported format version."""


class TruncatedFile(SksFormatError):
    """The key-store file ends before its declared contents do."""


class ChecksumMismatch(SksFormatError):
    """The key-store file fails its CRC-32 integrity check."""


class BadLength(OtpRemctlError):
    """A byte string has the wrong length for its role."""


class KeyLengthMismatch(OtpRemctlError):
    """The supplied key does not match the cipher mode's key length."""


class TooShort(OtpRemctlError):
    """The bit sequence is shorter than the statistical test requires."""


class LagOutOfRange(OtpRemctlError):
    """An autocorrelation lag outside the open interval (0, n)."""
