import struct

import numpy as np
import pytest

from tinykws.tensorcore import QLayerParams, QTensor, quantize_multiplier


def write_wav(path, samples, rate=16000, channels=1, bits=16, audio_format=1):
    """Raw RIFF writer so tests control every header field."""
    samples = np.asarray(samples)
    if bits == 16:
        payload = samples.astype("<i2").tobytes()
    else:
        payload = samples.astype(np.uint8).tobytes()
    block = channels * bits // 8
    hdr = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(payload), b"WAVE",
        b"fmt ", 16, audio_format, channels, rate, rate * block, block, bits,
        b"data", len(payload),
    )
    path.write_bytes(hdr + payload)
    return path


def tone(freq_hz, n=16000, rate=16000, amp=8000.0, phase=0.0):
    t = np.arange(n) / rate
    return np.round(amp * np.sin(2 * np.pi * freq_hz * t + phase)).astype(np.int16)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_qtensor(rng, shape, scale=None, zero_point=None):
    scale = scale if scale is not None else float(rng.uniform(0.005, 0.05))
    zero_point = zero_point if zero_point is not None else int(rng.integers(-20, 21))
    data = rng.integers(-128, 128, size=shape).astype(np.int8)
    return QTensor(data, scale, zero_point)


def random_qparams(rng, wshape, in_scale, relu=False, acc_taps=None):
    """Random weights plus a consistent requant chain.

    out_scale is sized from the worst-case accumulator so outputs exercise
    both mid-range values and the saturation edges.
    """
    weights = rng.integers(-127, 128, size=wshape).astype(np.int8)
    w_scale = float(rng.uniform(0.002, 0.02))
    taps = acc_taps if acc_taps is not None else int(np.prod(wshape[1:]))
    n_out = wshape[0]
    bias = rng.integers(-taps * 32, taps * 32, size=n_out).astype(np.int32)
    acc_max = taps * 127 * 127
    out_scale = float(in_scale * w_scale * acc_max / rng.uniform(100.0, 260.0))
    out_zp = int(rng.integers(-20, 21))
    mantissa, shift = quantize_multiplier(in_scale * w_scale / out_scale)
    return QLayerParams(
        weights=weights,
        weight_scale=w_scale,
        bias=bias,
        requant_mantissa=mantissa,
        requant_shift=shift,
        out_scale=out_scale,
        out_zero_point=out_zp,
        relu=relu,
    )
