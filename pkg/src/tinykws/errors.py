"""Exception hierarchy shared across the package.

Everything raised on bad data or bad files derives from ``KwsError`` so the
CLI can map it to a single "data error" exit code.
"""


class KwsError(Exception):
    """Base class for all data/format errors raised by this package."""


class AudioFormatError(KwsError):
    """Malformed RIFF/WAVE container."""


class UnsupportedFormatError(AudioFormatError):
    """Well-formed WAV but not 16-bit PCM."""


class SampleRateError(KwsError):
    """Input sample rate differs from the pipeline's 16 kHz contract."""


class DegenerateNoiseError(KwsError):
    """SNR mixing asked for with a zero-RMS signal or noise clip."""


class ShapeError(KwsError):
    """Array dimensions do not match what an operation requires."""


class InfeasiblePlanError(KwsError):
    """MFCC framing cannot fit the clip without zero-padding."""


class DegenerateFilterError(KwsError):
    """A mel filter has empty support at the FFT resolution."""


class DegenerateStatsError(KwsError):
    """Normalization statistics contain a non-positive std entry."""


class ModelFormatError(KwsError):
    """Bad magic or version in a KWSM/KWSF container."""


class ModelCorruptionError(KwsError):
    """CRC mismatch or truncated payload in a KWSM container."""


class GraphValidationError(KwsError):
    """Layer chain violates the model-graph invariants."""


class CalibrationError(KwsError):
    """Calibration set empty or incompatible with the graph."""


class QuantizationError(KwsError):
    """Quantization parameters cannot be represented."""


class MeasurementError(KwsError):
    """EDP measurement table is incomplete or malformed."""


class EvaluationError(KwsError):
    """Metric asked for on empty or inconsistent inputs."""
