"""PCM audio ingest, SNR-controlled noise mixing, dataset manifests.

All pipeline audio is mono 16-bit PCM at 16 kHz, padded or truncated to a
canonical 1-second clip (16000 samples). Loading never resamples: a file at
any other rate is rejected so that feature extraction stays comparable
across datasets.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    AudioFormatError,
    DegenerateNoiseError,
    SampleRateError,
    ShapeError,
    UnsupportedFormatError,
)

SAMPLE_RATE_HZ = 16000
CLIP_SAMPLES = 16000

INT16_MIN = -32768
INT16_MAX = 32767


@dataclass(frozen=True)
class AudioClip:
    """Mono PCM buffer. ``samples`` is an int16 array of length 16000."""

    samples: np.ndarray
    sample_rate_hz: int = SAMPLE_RATE_HZ

    def __post_init__(self):
        if self.samples.dtype != np.int16:
            raise ShapeError(f"samples must be int16, got {self.samples.dtype}")
        if self.samples.ndim != 1:
            raise ShapeError(f"samples must be 1-D, got shape {self.samples.shape}")

    def rms(self) -> float:
        x = self.samples.astype(np.float64)
        return float(np.sqrt(np.mean(x * x)))


@dataclass(frozen=True)
class SnrSpec:
    """Normal distribution of mixing SNRs, in dB."""

    mean_db: float = 10.0
    std_db: float = 5.0

    def __post_init__(self):
        if self.std_db < 0:
            raise ValueError(f"std_db must be >= 0, got {self.std_db}")


def _canonical(samples: np.ndarray) -> np.ndarray:
    """Pad with trailing zeros or truncate to exactly CLIP_SAMPLES."""
    if len(samples) >= CLIP_SAMPLES:
        return samples[:CLIP_SAMPLES].copy()
    out = np.zeros(CLIP_SAMPLES, dtype=np.int16)
    out[: len(samples)] = samples
    return out


def load_wav(path) -> AudioClip:
    """Read a 16-bit PCM RIFF/WAVE file as a canonical 1-second mono clip.

    Multi-channel audio is downmixed by arithmetic mean. The file's sample
    rate must already be 16 kHz; anything else raises SampleRateError
    rather than silently resampling.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[0:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise AudioFormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(raw):
        cid, size = struct.unpack_from("<4sI", raw, pos)
        pos += 8
        body = raw[pos : pos + size]
        if cid == b"fmt " and fmt is None:
            if len(body) < 16:
                raise AudioFormatError(f"{path}: fmt chunk too short")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif cid == b"data" and data is None:
            if len(body) < size:
                raise AudioFormatError(f"{path}: data chunk truncated")
            data = body
        pos += size + (size & 1)  # chunks are word-aligned

    if fmt is None or data is None:
        raise AudioFormatError(f"{path}: missing fmt or data chunk")

    audio_format, n_channels, rate, _, _, bits = fmt
    if audio_format != 1:  # WAVE_FORMAT_PCM
        raise UnsupportedFormatError(f"{path}: non-PCM encoding (format {audio_format})")
    if bits != 16:
        raise UnsupportedFormatError(f"{path}: {bits}-bit samples, need 16-bit")
    if n_channels < 1:
        raise AudioFormatError(f"{path}: zero channels")
    if rate != SAMPLE_RATE_HZ:
        raise SampleRateError(f"{path}: sample rate {rate} Hz, need {SAMPLE_RATE_HZ}")

    n_frames = len(data) // (2 * n_channels)
    samples = np.frombuffer(data[: n_frames * 2 * n_channels], dtype="<i2")
    if n_channels > 1:
        mixed = samples.reshape(n_frames, n_channels).mean(axis=1)
        samples = np.clip(np.rint(mixed), INT16_MIN, INT16_MAX).astype(np.int16)
    else:
        samples = samples.astype(np.int16)
    return AudioClip(_canonical(samples), SAMPLE_RATE_HZ)


def save_wav(clip: AudioClip, path) -> None:
    """Write a clip back out as mono 16-bit PCM (used by `augment`)."""
    payload = clip.samples.astype("<i2").tobytes()
    hdr = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(payload), b"WAVE",
        b"fmt ", 16, 1, 1, clip.sample_rate_hz, clip.sample_rate_hz * 2, 2, 16,
        b"data", len(payload),
    )
    Path(path).write_bytes(hdr + payload)


def mix_at_snr(signal: AudioClip, noise: AudioClip, snr_db: float) -> AudioClip:
    """Mix `noise` into `signal` at the requested SNR.

    The noise gain g = rms(signal) / (rms(noise) * 10^(snr_db/20)), so the
    mixed-in noise sits exactly snr_db below the signal. Mixing runs in
    float and the result saturates to the int16 range, as a fixed-point
    front-end would.
    """
    if len(signal.samples) != len(noise.samples):
        raise ShapeError(
            f"length mismatch: signal {len(signal.samples)}, noise {len(noise.samples)}"
        )
    if signal.sample_rate_hz != noise.sample_rate_hz:
        raise ShapeError("sample rate mismatch between signal and noise")
    noise_rms = noise.rms()
    if noise_rms == 0.0:
        raise DegenerateNoiseError("noise clip has zero RMS")
    signal_rms = signal.rms()
    if signal_rms == 0.0:
        raise DegenerateNoiseError("signal clip has zero RMS")

    g = signal_rms / (noise_rms * 10.0 ** (snr_db / 20.0))
    mixed = signal.samples.astype(np.float64) + g * noise.samples.astype(np.float64)
    mixed = np.clip(np.rint(mixed), INT16_MIN, INT16_MAX).astype(np.int16)
    return AudioClip(mixed, signal.sample_rate_hz)


def sample_snr(rng: np.random.Generator, spec: SnrSpec) -> float:
    """Draw one SNR in dB from N(mean_db, std_db)."""
    return float(rng.normal(spec.mean_db, spec.std_db))


def read_manifest(path) -> list[tuple[str, str]]:
    """Parse a dataset manifest: one `relative/path.wav<TAB>label` per line."""
    entries = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise AudioFormatError(f"{path}:{lineno}: expected `path<TAB>label`")
        entries.append((parts[0], parts[1]))
    return entries
