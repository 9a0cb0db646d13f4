"""MFCC front-end for training, matching the inference engine's conventions.

Both sides share the same design choices so features computed here line up
with the engine's own front-end: periodic Hann window, maximal-coverage
hop over the 1-second clip, HTK mel triangles rescaled to unit peak,
natural log with a 1e-6 floor, orthonormal DCT-II over all coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

SAMPLE_RATE = 16000
CLIP_SAMPLES = 16000
LOG_FLOOR = 1e-6
FMIN_HZ = 20.0
FMAX_HZ = 8000.0

FFT_BY_WINDOWS = {32: 1024, 63: 512}

KEYWORDS = ["yes", "no", "up", "down", "left", "right", "on", "off", "stop", "go"]


@dataclass(frozen=True)
class MfccSettings:
    n_mels: int
    n_windows: int
    fft_size: int
    fmin_hz: float = FMIN_HZ
    fmax_hz: float = FMAX_HZ

    @classmethod
    def standard(cls, n_mels: int, n_windows: int) -> "MfccSettings":
        return cls(n_mels=n_mels, n_windows=n_windows, fft_size=FFT_BY_WINDOWS[n_windows])

    @property
    def key(self) -> str:
        return f"{self.n_mels}x{self.n_windows}"


def _hann(n: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def _mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def _hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@lru_cache(maxsize=None)
def _filterbank(settings: MfccSettings) -> np.ndarray:
    n_bins = settings.fft_size // 2 + 1
    edges = _hz(np.linspace(_mel(settings.fmin_hz), _mel(settings.fmax_hz),
                            settings.n_mels + 2))
    bin_hz = np.arange(n_bins) * (SAMPLE_RATE / settings.fft_size)
    fb = np.zeros((settings.n_mels, n_bins))
    for m in range(settings.n_mels):
        lo, mid, hi = edges[m], edges[m + 1], edges[m + 2]
        tri = np.maximum(0.0, np.minimum((bin_hz - lo) / (mid - lo),
                                         (hi - bin_hz) / (hi - mid)))
        fb[m] = tri / tri.max()
    return fb


@lru_cache(maxsize=None)
def _dct_matrix(n: int) -> np.ndarray:
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    basis = np.cos(np.pi * k * (2 * i + 1) / (2 * n))
    return np.where(k == 0, np.sqrt(1.0 / n), np.sqrt(2.0 / n)) * basis


def mfcc(samples: np.ndarray, settings: MfccSettings) -> np.ndarray:
    """MFCC of a canonical 16000-sample clip; returns (n_mels, n_windows)."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.shape != (CLIP_SAMPLES,):
        raise ValueError(f"need a {CLIP_SAMPLES}-sample clip, got {samples.shape}")
    hop = (CLIP_SAMPLES - settings.fft_size) // (settings.n_windows - 1)
    window = _hann(settings.fft_size)
    fb = _filterbank(settings)
    dct = _dct_matrix(settings.n_mels)

    starts = np.arange(settings.n_windows) * hop
    frames = np.stack([samples[s : s + settings.fft_size] for s in starts])
    spectrum = np.fft.rfft(frames * window, axis=1)
    power = spectrum.real**2 + spectrum.imag**2
    return dct @ np.log(power @ fb.T + LOG_FLOOR).T


def norm_stats(feature_maps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-coefficient mean/std over a (N, n_mels, n_windows) stack."""
    flat = feature_maps.transpose(1, 0, 2).reshape(feature_maps.shape[1], -1)
    std = flat.std(axis=1)
    return flat.mean(axis=1), np.where(std > 0, std, 1.0)


def normalize(fmap: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    return (fmap - mean[:, None]) / std[:, None]
