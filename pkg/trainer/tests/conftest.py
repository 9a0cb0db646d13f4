import wave

import numpy as np
import pytest

from kws_trainer.features import KEYWORDS

TONE_BASE_HZ = 250.0
TONE_STEP_HZ = 140.0


def write_wav(path, samples, rate=16000):
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(rate)
        w.writeframes(np.asarray(samples, dtype="<i2").tobytes())
    return path


def keyword_tone(label, rng, n=16000):
    """Synthetic stand-in for a spoken keyword: one tone per class."""
    freq = TONE_BASE_HZ + TONE_STEP_HZ * KEYWORDS.index(label)
    t = np.arange(n) / 16000.0
    amp = rng.uniform(6000, 12000)
    phase = rng.uniform(0, 2 * np.pi)
    wavp = amp * np.sin(2 * np.pi * freq * t + phase)
    wavp += rng.normal(0, 300, n)
    return np.clip(np.rint(wavp), -32768, 32767).astype(np.int16)


@pytest.fixture(scope="session")
def gscd_tree(tmp_path_factory):
    """Miniature dataset with the GSCD v0.02 directory layout."""
    root = tmp_path_factory.mktemp("gscd")
    rng = np.random.default_rng(2023)
    val_lines, test_lines = [], []
    for kw in KEYWORDS:
        (root / kw).mkdir()
        for i in range(12):
            name = f"spk{i:02d}_nohash_0.wav"
            write_wav(root / kw / name, keyword_tone(kw, rng))
            if i in (8, 9):
                val_lines.append(f"{kw}/{name}")
            elif i in (10, 11):
                test_lines.append(f"{kw}/{name}")
    (root / "validation_list.txt").write_text("\n".join(val_lines) + "\n")
    (root / "testing_list.txt").write_text("\n".join(test_lines) + "\n")
    noise_dir = root / "_background_noise_"
    noise_dir.mkdir()
    write_wav(noise_dir / "white_noise.wav",
              np.clip(rng.normal(0, 2500, 48000), -32768, 32767).astype(np.int16))
    write_wav(noise_dir / "hum.wav",
              (4000 * np.sin(2 * np.pi * 60 * np.arange(48000) / 16000)).astype(np.int16))
    return root


@pytest.fixture
def rng():
    return np.random.default_rng(7)
