"""MFCC front-end: framing plan, power spectrum, mel filterbank, DCT.

The four standard configurations pair the window count with the FFT size
so that every frame fits inside the 1-second clip with no zero-padding:
32 windows at FFT 1024, 63 windows at FFT 512, each with 15 or 30 mel
filters. Framing uses the maximal-coverage hop

    hop = floor((16000 - frame_len) / (n_windows - 1))

which is the unique choice that spreads the frames over the clip while
never reading past the last sample.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.fft import dct as _scipy_dct

from .audio import CLIP_SAMPLES, SAMPLE_RATE_HZ, AudioClip
from .errors import (
    DegenerateFilterError,
    DegenerateStatsError,
    InfeasiblePlanError,
    ModelFormatError,
    ShapeError,
)

FMIN_HZ = 20.0
FMAX_HZ = 8000.0
LOG_FLOOR = 1e-6  # added to filterbank energies before the log; well below int16 noise

# Window count -> FFT size pairing used throughout the pipeline.
STANDARD_FFT = {32: 1024, 63: 512}

KWSF_MAGIC = b"KWSF"
KWSF_VERSION = 1


@dataclass(frozen=True)
class MfccConfig:
    n_mels: int
    n_windows: int
    fft_size: int
    fmin_hz: float = FMIN_HZ
    fmax_hz: float = FMAX_HZ

    def __post_init__(self):
        if self.n_mels < 1 or self.n_windows < 1 or self.fft_size < 2:
            raise ValueError("n_mels, n_windows, fft_size must be positive")
        if not (0 <= self.fmin_hz < self.fmax_hz <= SAMPLE_RATE_HZ / 2):
            raise ValueError(
                f"need 0 <= fmin < fmax <= {SAMPLE_RATE_HZ // 2}, "
                f"got [{self.fmin_hz}, {self.fmax_hz}]"
            )

    @property
    def key(self) -> str:
        """Short identifier like `15x63` (mels x windows)."""
        return f"{self.n_mels}x{self.n_windows}"


def standard_config(n_mels: int, n_windows: int) -> MfccConfig:
    """One of the four standard configurations (15|30 mels, 32|63 windows)."""
    if n_mels not in (15, 30):
        raise ValueError(f"n_mels must be 15 or 30, got {n_mels}")
    if n_windows not in STANDARD_FFT:
        raise ValueError(f"n_windows must be one of {sorted(STANDARD_FFT)}, got {n_windows}")
    return MfccConfig(n_mels=n_mels, n_windows=n_windows, fft_size=STANDARD_FFT[n_windows])


def standard_configs() -> list[MfccConfig]:
    return [standard_config(m, w) for m in (15, 30) for w in (32, 63)]


@dataclass(frozen=True)
class FramePlan:
    frame_len: int
    hop: int
    n_frames: int

    def frame_start(self, t: int) -> int:
        return t * self.hop

    def last_sample(self) -> int:
        """Index one past the final sample any frame reads."""
        return (self.n_frames - 1) * self.hop + self.frame_len


@dataclass(frozen=True)
class FeatureMap:
    """n_mels x n_windows matrix of MFCCs, column t = frame t."""

    data: np.ndarray
    config: MfccConfig

    def __post_init__(self):
        if self.data.shape != (self.config.n_mels, self.config.n_windows):
            raise ShapeError(
                f"feature shape {self.data.shape} != "
                f"({self.config.n_mels}, {self.config.n_windows})"
            )
        if not np.all(np.isfinite(self.data)):
            raise ValueError("feature map contains NaN/Inf")


@dataclass(frozen=True)
class NormStats:
    """Per-coefficient mean/std computed offline from training features."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise ShapeError("mean/std must be 1-D vectors of equal length")
        if np.any(self.std <= 0):
            raise DegenerateStatsError("std entries must all be > 0")


def frame_plan(config: MfccConfig, clip_samples: int = CLIP_SAMPLES) -> FramePlan:
    """Derive the padding-free framing schedule for a canonical clip."""
    frame_len = config.fft_size
    if frame_len > clip_samples:
        raise InfeasiblePlanError(
            f"frame of {frame_len} samples does not fit a {clip_samples}-sample clip"
        )
    if config.n_windows < 2:
        raise InfeasiblePlanError("need at least 2 windows to derive a hop")
    hop = (clip_samples - frame_len) // (config.n_windows - 1)
    plan = FramePlan(frame_len=frame_len, hop=hop, n_frames=config.n_windows)
    assert plan.last_sample() <= clip_samples
    return plan


def hann_window(n: int) -> np.ndarray:
    """Periodic Hann window, the STFT convention."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def power_spectrum(frame: np.ndarray, fft_size: int) -> np.ndarray:
    """|DFT|^2 of a Hann-windowed frame, bins 0..fft_size/2."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape != (fft_size,):
        raise ShapeError(f"frame length {frame.shape} != fft size {fft_size}")
    spec = np.fft.rfft(frame * hann_window(fft_size))
    return (spec.real * spec.real + spec.imag * spec.imag).astype(np.float64)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(config: MfccConfig) -> np.ndarray:
    """Triangular mel filterbank, shape n_mels x (fft_size/2 + 1).

    Filter centers are equally spaced on the mel scale between fmin and
    fmax; each row is a triangle sampled at the FFT bin frequencies and
    rescaled so its maximum is exactly 1.
    """
    n_bins = config.fft_size // 2 + 1
    edges_hz = mel_to_hz(
        np.linspace(hz_to_mel(config.fmin_hz), hz_to_mel(config.fmax_hz), config.n_mels + 2)
    )
    bin_hz = np.arange(n_bins) * (SAMPLE_RATE_HZ / config.fft_size)

    fbank = np.zeros((config.n_mels, n_bins), dtype=np.float64)
    for m in range(config.n_mels):
        lo, mid, hi = edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]
        rising = (bin_hz - lo) / (mid - lo)
        falling = (hi - bin_hz) / (hi - mid)
        tri = np.maximum(0.0, np.minimum(rising, falling))
        peak = tri.max()
        if peak <= 0.0:
            raise DegenerateFilterError(
                f"filter {m} has empty support: too many mels for FFT size {config.fft_size}"
            )
        fbank[m] = tri / peak
    return fbank


def dct_ii(v: np.ndarray) -> np.ndarray:
    """Orthonormal DCT-II, all coefficients retained."""
    return _scipy_dct(np.asarray(v, dtype=np.float64), type=2, norm="ortho")


def extract_mfcc(clip: AudioClip, config: MfccConfig) -> FeatureMap:
    """Full front-end: frame -> power spectrum -> mel energies -> log -> DCT."""
    if len(clip.samples) != CLIP_SAMPLES:
        raise ShapeError(f"clip must have {CLIP_SAMPLES} samples, got {len(clip.samples)}")
    plan = frame_plan(config)
    fbank = mel_filterbank(config)
    samples = clip.samples.astype(np.float64)

    out = np.empty((config.n_mels, config.n_windows), dtype=np.float64)
    for t in range(plan.n_frames):
        start = plan.frame_start(t)
        spec = power_spectrum(samples[start : start + plan.frame_len], config.fft_size)
        out[:, t] = dct_ii(np.log(fbank @ spec + LOG_FLOOR))
    return FeatureMap(out, config)


def normalize(features: FeatureMap, stats: NormStats) -> FeatureMap:
    """Per-coefficient normalization: row m -> (row - mean[m]) / std[m]."""
    if stats.mean.shape != (features.config.n_mels,):
        raise ShapeError(
            f"stats length {stats.mean.shape[0]} != n_mels {features.config.n_mels}"
        )
    data = (features.data - stats.mean[:, None]) / stats.std[:, None]
    return FeatureMap(data, features.config)


def save_features(features: FeatureMap, path) -> None:
    """Write the KWSF feature container (little-endian, float32 row-major)."""
    cfg = features.config
    hdr = struct.pack("<4sHHH", KWSF_MAGIC, KWSF_VERSION, cfg.n_mels, cfg.n_windows)
    Path(path).write_bytes(hdr + features.data.astype("<f4").tobytes(order="C"))


def load_features(path) -> FeatureMap:
    """Read a KWSF container; the FFT size is implied by the window count."""
    raw = Path(path).read_bytes()
    if len(raw) < 10 or raw[:4] != KWSF_MAGIC:
        raise ModelFormatError(f"{path}: not a KWSF file")
    version, n_mels, n_windows = struct.unpack_from("<HHH", raw, 4)
    if version != KWSF_VERSION:
        raise ModelFormatError(f"{path}: unsupported KWSF version {version}")
    expect = n_mels * n_windows * 4
    body = raw[10:]
    if len(body) != expect:
        raise ModelFormatError(f"{path}: payload {len(body)} bytes, expected {expect}")
    data = np.frombuffer(body, dtype="<f4").astype(np.float64).reshape(n_mels, n_windows)
    fft_size = STANDARD_FFT.get(n_windows)
    if fft_size is None:
        raise ModelFormatError(f"{path}: no standard FFT size for {n_windows} windows")
    return FeatureMap(data, MfccConfig(n_mels=n_mels, n_windows=n_windows, fft_size=fft_size))


def compute_norm_stats(maps: list[FeatureMap]) -> NormStats:
    """Per-coefficient mean/std pooled over a feature-map collection."""
    if not maps:
        raise DegenerateStatsError("no feature maps given")
    stacked = np.concatenate([m.data for m in maps], axis=1)
    std = stacked.std(axis=1)
    std = np.where(std > 0, std, 1.0)  # constant rows normalize to zero
    return NormStats(mean=stacked.mean(axis=1), std=std)
