"""Exception hierarchy.

Everything raised on bad input derives from :class:`SoundingError`, which is
also a :class:`ValueError` so callers that only care about "bad input" can
catch the builtin.
"""


class SoundingError(ValueError):
    """Base class for all toolkit errors."""


class ConfigError(SoundingError):
    """Invalid sounding/channel configuration (Nyquist violation, empty path list...)."""


class InvalidRootError(ConfigError):
    """Zadoff-Chu root not coprime with the sequence length."""


class UndefinedPAPRError(SoundingError):
    """PAPR requested for an all-zero waveform."""


class DesignError(SoundingError):
    """Filter specification not attainable with the requested length."""


class AliasingError(SoundingError):
    """Decimation factor violates the Nyquist bound M < fs/delta_f."""


class InsufficientDataError(SoundingError):
    """Not enough samples, frames, tones or lags for the requested operation."""


class CalibrationError(SoundingError):
    """Calibration curve does not cover the sounding band."""


class UndetectablePathError(SoundingError):
    """No leading path stands out of the delay-domain floor."""


class WindowError(SoundingError):
    """Per-path delay window out of range or overlapping a neighbour."""


class EmptyProfileError(SoundingError):
    """All profile mass lies below the noise floor."""


class NoPathError(SoundingError):
    """No qualifying peak in a delay profile."""


class CoverageError(SoundingError):
    """Per-tone data missing for some sounding tone."""


class RangeError(SoundingError):
    """Argument outside its admissible range (segment sizes, path counts, spans)."""
