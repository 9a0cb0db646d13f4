"""Google Speech Commands v0.02 handling: splits, loading, noise mixing.

The dataset ships official validation/testing file lists; everything else
under the ten keyword directories is training data. Background recordings
live in `_background_noise_/` and get cropped and mixed into training
clips at an SNR drawn from N(10 dB, 5 dB).
"""

from __future__ import annotations

import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .features import CLIP_SAMPLES, KEYWORDS, SAMPLE_RATE

NOISE_DIR = "_background_noise_"
SNR_MEAN_DB = 10.0
SNR_STD_DB = 5.0


class DatasetError(Exception):
    pass


@dataclass(frozen=True)
class Example:
    path: Path
    label: str


@dataclass(frozen=True)
class Splits:
    train: tuple[Example, ...]
    val: tuple[Example, ...]
    test: tuple[Example, ...]
    noise_files: tuple[Path, ...]


def load_clip(path) -> np.ndarray:
    """Mono int16 clip, padded/truncated to 1 s. GSCD files are 16 kHz PCM."""
    with wave.open(str(path), "rb") as w:
        if w.getframerate() != SAMPLE_RATE:
            raise DatasetError(f"{path}: sample rate {w.getframerate()}, need {SAMPLE_RATE}")
        if w.getsampwidth() != 2:
            raise DatasetError(f"{path}: need 16-bit samples")
        frames = np.frombuffer(w.readframes(w.getnframes()), dtype="<i2")
        if w.getnchannels() > 1:
            frames = frames.reshape(-1, w.getnchannels()).mean(axis=1)
            frames = np.clip(np.rint(frames), -32768, 32767).astype(np.int16)
    out = np.zeros(CLIP_SAMPLES, dtype=np.int16)
    n = min(len(frames), CLIP_SAMPLES)
    out[:n] = frames[:n]
    return out


def _read_list(root: Path, name: str) -> set[str]:
    path = root / name
    if not path.exists():
        raise DatasetError(f"missing {name} in {root}")
    return {line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()}


def prepare_dataset(root) -> Splits:
    """Index the ten keyword classes into official train/val/test splits."""
    root = Path(root)
    for kw in KEYWORDS:
        if not (root / kw).is_dir():
            raise DatasetError(f"missing keyword directory {kw!r} under {root}")

    val_list = _read_list(root, "validation_list.txt")
    test_list = _read_list(root, "testing_list.txt")

    train, val, test = [], [], []
    for kw in KEYWORDS:
        for path in sorted((root / kw).glob("*.wav")):
            rel = f"{kw}/{path.name}"
            ex = Example(path, kw)
            if rel in val_list:
                val.append(ex)
            elif rel in test_list:
                test.append(ex)
            else:
                train.append(ex)
    if not train:
        raise DatasetError(f"no training files under {root}")

    noise_dir = root / NOISE_DIR
    noises = tuple(sorted(noise_dir.glob("*.wav"))) if noise_dir.is_dir() else ()
    return Splits(tuple(train), tuple(val), tuple(test), noises)


def _load_noise(path) -> np.ndarray:
    with wave.open(str(path), "rb") as w:
        return np.frombuffer(w.readframes(w.getnframes()), dtype="<i2")


def mix_at_snr(signal: np.ndarray, noise: np.ndarray, snr_db: float) -> np.ndarray:
    """signal + g*noise with g chosen so the noise sits snr_db below it."""
    s = signal.astype(np.float64)
    n = noise.astype(np.float64)
    s_rms = np.sqrt(np.mean(s * s))
    n_rms = np.sqrt(np.mean(n * n))
    if s_rms == 0 or n_rms == 0:
        return signal.copy()
    g = s_rms / (n_rms * 10.0 ** (snr_db / 20.0))
    return np.clip(np.rint(s + g * n), -32768, 32767).astype(np.int16)


class NoiseAugmenter:
    """Deterministic noise mixing: same seed, same sequence of decisions."""

    def __init__(self, noise_files, mix_rate: float, seed: int,
                 snr_mean_db: float = SNR_MEAN_DB, snr_std_db: float = SNR_STD_DB):
        self.mix_rate = mix_rate
        self.snr_mean_db = snr_mean_db
        self.snr_std_db = snr_std_db
        self.rng = np.random.default_rng(seed)
        self._noises = [self._canonical_pool(_load_noise(p)) for p in noise_files]

    @staticmethod
    def _canonical_pool(noise: np.ndarray) -> np.ndarray:
        if len(noise) >= CLIP_SAMPLES:
            return noise
        reps = -(-CLIP_SAMPLES // len(noise))
        return np.tile(noise, reps)

    def __call__(self, clip: np.ndarray) -> np.ndarray:
        if not self._noises or self.rng.random() >= self.mix_rate:
            return clip
        noise = self._noises[int(self.rng.integers(len(self._noises)))]
        start = int(self.rng.integers(len(noise) - CLIP_SAMPLES + 1))
        snr_db = float(self.rng.normal(self.snr_mean_db, self.snr_std_db))
        return mix_at_snr(clip, noise[start : start + CLIP_SAMPLES], snr_db)
