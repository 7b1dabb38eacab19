"""Exception hierarchy shared by all modules."""


class WolaError(ValueError):
    """Base class for all library errors."""


class InvalidN(WolaError):
    """Subband count is not a power of two or is too small."""


class InvalidShape(WolaError):
    """Window shape parameters are out of range."""


class AsymmetricWindow(WolaError):
    """Window violates h0(N - n) = h0(n)."""


class DegenerateWindow(WolaError):
    """A polyphase component of the analysis window is identically zero."""


class LengthMismatch(WolaError):
    """Vector lengths are inconsistent."""


class KernelMismatch(WolaError):
    """Transfer kernels do not belong to the filter bank they are used with."""


class TapMismatch(WolaError):
    """Regressor and coefficient tap counts differ."""


class TruncationMismatch(WolaError):
    """Cosine series truncation differs from the requested cross-term count."""


class InvalidConfig(WolaError):
    """Inconsistent method or scenario parameters."""


class ConfigError(InvalidConfig):
    """Invalid benchmark scenario configuration."""


class InvalidParam(WolaError):
    """Adaptation parameter outside its domain."""


class NonFinite(WolaError):
    """NaN or Inf encountered in an input."""


class SingularGram(WolaError):
    """Gram matrix of the analysis Toeplitz system is singular."""


class ZeroRir(WolaError):
    """All-zero impulse response."""


class ZeroReference(WolaError):
    """Reference signal for a normalised metric has zero energy."""


class WindowTooShort(WolaError):
    """Metric window contains no samples."""


class InsufficientHistory(WolaError):
    """Not enough signal history and zero extension is disabled."""
