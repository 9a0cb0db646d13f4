"""Independent reference implementations used to check the fast paths.

Everything here is written the slow, obvious way on purpose: explicit
O(N^2) transforms, per-element loops, float arithmetic. These must stay
decoupled from the package internals they verify.
"""

import math

import numpy as np

from tinykws.tensorcore import Q_MAX, Q_MIN


def naive_dft_power(frame):
    """|DFT|^2 of a Hann-windowed frame via the O(N^2) definition."""
    n = len(frame)
    windowed = [
        frame[i] * (0.5 - 0.5 * math.cos(2.0 * math.pi * i / n)) for i in range(n)
    ]
    out = []
    for k in range(n // 2 + 1):
        re = sum(windowed[i] * math.cos(-2.0 * math.pi * k * i / n) for i in range(n))
        im = sum(windowed[i] * math.sin(-2.0 * math.pi * k * i / n) for i in range(n))
        out.append(re * re + im * im)
    return np.array(out)


def naive_dct_ii(v):
    """Orthonormal DCT-II via the direct cosine sum."""
    n = len(v)
    out = np.empty(n)
    for k in range(n):
        s = sum(v[i] * math.cos(math.pi * k * (2 * i + 1) / (2 * n)) for i in range(n))
        norm = math.sqrt(1.0 / n) if k == 0 else math.sqrt(2.0 / n)
        out[k] = norm * s
    return out


def naive_mel_filterbank(n_mels, fft_size, fmin, fmax, sample_rate=16000):
    """Triangle filters on the HTK mel scale, each row peak-normalized."""
    def mel(f):
        return 2595.0 * math.log10(1.0 + f / 700.0)

    def inv(m):
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

    pts = [inv(mel(fmin) + (mel(fmax) - mel(fmin)) * i / (n_mels + 1))
           for i in range(n_mels + 2)]
    n_bins = fft_size // 2 + 1
    fb = np.zeros((n_mels, n_bins))
    for m in range(n_mels):
        for k in range(n_bins):
            f = k * sample_rate / fft_size
            if pts[m] < f < pts[m + 1]:
                fb[m, k] = (f - pts[m]) / (pts[m + 1] - pts[m])
            elif pts[m + 1] <= f < pts[m + 2]:
                fb[m, k] = (pts[m + 2] - f) / (pts[m + 2] - pts[m + 1])
    for m in range(n_mels):
        peak = fb[m].max()
        assert peak > 0, "oracle filter with empty support"
        fb[m] /= peak
    return fb


def naive_mfcc(samples, n_mels, n_windows, fft_size, fmin=20.0, fmax=8000.0):
    """Front-end reference: naive DFT + direct filterbank + naive DCT."""
    hop = (len(samples) - fft_size) // (n_windows - 1)
    fb = naive_mel_filterbank(n_mels, fft_size, fmin, fmax)
    cols = []
    for t in range(n_windows):
        frame = [float(s) for s in samples[t * hop : t * hop + fft_size]]
        power = naive_dft_power(frame)
        energies = fb @ power
        cols.append(naive_dct_ii(np.log(energies + 1e-6)))
    return np.stack(cols, axis=1)


def matrix_dft_power(frame):
    """Same O(N^2) DFT-by-definition as naive_dft_power, via explicit
    cosine/sine matrices so the end-to-end reference stays affordable."""
    n = len(frame)
    windowed = np.asarray(frame, dtype=np.float64) * (
        0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
    )
    k = np.arange(n // 2 + 1)[:, None]
    i = np.arange(n)[None, :]
    re = np.cos(-2.0 * np.pi * k * i / n) @ windowed
    im = np.sin(-2.0 * np.pi * k * i / n) @ windowed
    return re * re + im * im


def matrix_dct_ii(v):
    """Orthonormal DCT-II through its explicit cosine matrix."""
    n = len(v)
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    basis = np.cos(np.pi * k * (2 * i + 1) / (2 * n))
    norms = np.where(k == 0, math.sqrt(1.0 / n), math.sqrt(2.0 / n))
    return (norms * basis) @ v


def matrix_mfcc(samples, n_mels, n_windows, fft_size, fmin=20.0, fmax=8000.0):
    """Vectorized twin of naive_mfcc for whole-corpus comparisons."""
    hop = (len(samples) - fft_size) // (n_windows - 1)
    fb = naive_mel_filterbank(n_mels, fft_size, fmin, fmax)
    cols = []
    for t in range(n_windows):
        frame = np.asarray(samples[t * hop : t * hop + fft_size], dtype=np.float64)
        energies = fb @ matrix_dft_power(frame)
        cols.append(matrix_dct_ii(np.log(energies + 1e-6)))
    return np.stack(cols, axis=1)


# ---------------------------------------------------------------------------
# float twins of the integer kernels


def _quantize_out(real, scale, zero_point, relu):
    q = np.where(real >= 0, np.floor(real / scale + 0.5), np.ceil(real / scale - 0.5))
    q = q + zero_point
    lo = max(zero_point, Q_MIN) if relu else Q_MIN
    return np.clip(q, lo, Q_MAX).astype(np.int8)


def _deq(x):
    return x.scale * (x.data.astype(np.float64) - x.zero_point)


def _deq_params(x, p):
    w = p.weights.astype(np.float64) * p.weight_scale
    b = p.bias.astype(np.float64) * (x.scale * p.weight_scale)
    return w, b


def pointwise_oracle(x, p):
    w, b = _deq_params(x, p)
    real = w @ _deq(x) + b[:, None]
    return _quantize_out(real, p.out_scale, p.out_zero_point, p.relu)


def depthwise1d_oracle(x, p, kernel, stride):
    w, b = _deq_params(x, p)
    xr = _deq(x)
    c, t = xr.shape
    t_out = -(-t // stride)
    pad = max((t_out - 1) * stride + kernel - t, 0)
    left = pad // 2
    xp = np.zeros((c, t + pad))
    xp[:, left : left + t] = xr
    out = np.zeros((c, t_out))
    for ch in range(c):
        for j in range(t_out):
            acc = 0.0
            for k in range(kernel):
                acc += w[ch, k] * xp[ch, j * stride + k]
            out[ch, j] = acc + b[ch]
    return _quantize_out(out, p.out_scale, p.out_zero_point, p.relu)


def conv2d_oracle(x, p, kernel, stride, depthwise):
    w, b = _deq_params(x, p)
    xr = _deq(x)
    c_in, h, wd = xr.shape
    kh, kw = kernel
    sh, sw = stride
    h_out, w_out = -(-h // sh), -(-wd // sw)
    pad_h = max((h_out - 1) * sh + kh - h, 0)
    pad_w = max((w_out - 1) * sw + kw - wd, 0)
    top, left = pad_h // 2, pad_w // 2
    xp = np.zeros((c_in, h + pad_h, wd + pad_w))
    xp[:, top : top + h, left : left + wd] = xr
    c_out = c_in if depthwise else w.shape[0]
    out = np.zeros((c_out, h_out, w_out))
    for o in range(c_out):
        for i in range(h_out):
            for j in range(w_out):
                acc = 0.0
                for a in range(kh):
                    for bb in range(kw):
                        if depthwise:
                            acc += w[o, a, bb] * xp[o, i * sh + a, j * sw + bb]
                        else:
                            for c in range(c_in):
                                acc += w[o, c, a, bb] * xp[c, i * sh + a, j * sw + bb]
                out[o, i, j] = acc + b[o]
    return _quantize_out(out, p.out_scale, p.out_zero_point, p.relu)


def gap_oracle(x):
    mean = _deq(x).reshape(x.shape[0], -1).mean(axis=1, keepdims=True)
    return _quantize_out(mean, x.scale, x.zero_point, relu=False)


def fc_oracle(x, p):
    w, b = _deq_params(x, p)
    real = w @ _deq(x).reshape(-1) + b
    return _quantize_out(real, p.out_scale, p.out_zero_point, p.relu)


def residual_oracle(a, b, out_scale, out_zero_point):
    return _quantize_out(_deq(a) + _deq(b), out_scale, out_zero_point, relu=False)
