"""Integer tensor kernels for the quantized inference engine.

Quantization scheme (the usual MCU convention):
  * activations: affine per-tensor int8, real = scale * (q - zero_point)
  * weights:     symmetric per-tensor int8, zero_point 0
  * bias:        int32 at scale input_scale * weight_scale
  * requantization: the int32 accumulator is scaled back to int8 through a
    fixed-point multiplier (int32 mantissa in [2^30, 2^31), right shift),
    rounding half away from zero, then saturated to [-128, 127].

Accumulators are held in 64-bit here so the Python kernels can never wrap;
for every supported layer geometry the values stay within int32, matching
what an MCU kernel would hold. "Same" padding fills with the input
zero_point, i.e. real zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import QuantizationError, ShapeError

Q_MIN = -128
Q_MAX = 127

_MANTISSA_BITS = 31


@dataclass(frozen=True)
class QTensor:
    """Int8 activation tensor: (channels, time) or (channels, height, width)."""

    data: np.ndarray
    scale: float
    zero_point: int

    def __post_init__(self):
        if self.data.dtype != np.int8:
            raise ShapeError(f"QTensor data must be int8, got {self.data.dtype}")
        if self.data.ndim not in (1, 2, 3):
            raise ShapeError(f"QTensor must be 1-D, 2-D or 3-D, got {self.data.ndim}-D")
        if self.scale <= 0:
            raise QuantizationError(f"scale must be positive, got {self.scale}")
        if not (Q_MIN <= self.zero_point <= Q_MAX):
            raise QuantizationError(f"zero_point {self.zero_point} outside int8 range")

    @property
    def shape(self):
        return self.data.shape

    def dequantize(self) -> np.ndarray:
        return self.scale * (self.data.astype(np.float64) - self.zero_point)


@dataclass(frozen=True)
class QLayerParams:
    """Weights plus the quantization bookkeeping for one layer.

    `weights`/`bias`/`requant_*` are None for param-free layers (gap,
    residual add), which still need the output scale/zero_point.
    """

    weights: np.ndarray | None
    weight_scale: float
    bias: np.ndarray | None
    requant_mantissa: int
    requant_shift: int
    out_scale: float
    out_zero_point: int
    relu: bool = False


def quantize_multiplier(real_multiplier: float) -> tuple[int, int]:
    """Encode a real multiplier as (mantissa, right_shift).

    mantissa is in [2^30, 2^31) and the represented value is
    mantissa * 2^-31 * 2^-shift. Multipliers must be <= 1 (shift >= 0);
    exactly 1.0 is clamped to the largest representable value, which is
    within 2^-31 of it.
    """
    if not (0.0 < real_multiplier):
        raise QuantizationError(f"multiplier must be positive, got {real_multiplier}")
    frac, exp = math.frexp(real_multiplier)  # real = frac * 2^exp, frac in [0.5, 1)
    mantissa = round(frac * (1 << _MANTISSA_BITS))
    if mantissa == (1 << _MANTISSA_BITS):
        mantissa >>= 1
        exp += 1
    shift = -exp
    if shift < 0:
        # Only triggered at real_multiplier ~ 1.0; clamp to 1 - 2^-31.
        if real_multiplier > 1.0 + 2.0**-24:
            raise QuantizationError(
                f"multiplier {real_multiplier} > 1 cannot be represented with shift >= 0"
            )
        return (1 << _MANTISSA_BITS) - 1, 0
    return mantissa, shift


def multiplier_value(mantissa: int, shift: int) -> float:
    """Real value represented by a (mantissa, shift) pair."""
    return mantissa * 2.0 ** -(_MANTISSA_BITS + shift)


def round_half_away(x: np.ndarray) -> np.ndarray:
    """Round to nearest, ties away from zero (np.round ties to even)."""
    return np.where(x >= 0, np.floor(x + 0.5), np.ceil(x - 0.5))


def _requantize(acc: np.ndarray, p: QLayerParams) -> np.ndarray:
    """int64 accumulator -> int8 output per the fixed-point contract."""
    prod = acc.astype(np.int64) * np.int64(p.requant_mantissa)
    total = _MANTISSA_BITS + p.requant_shift
    half = np.int64(1) << np.int64(total - 1)
    scaled = np.where(prod >= 0, (prod + half) >> total, -((-prod + half) >> total))
    q = scaled + p.out_zero_point
    lo = max(p.out_zero_point, Q_MIN) if p.relu else Q_MIN
    return np.clip(q, lo, Q_MAX).astype(np.int8)


def _centered(x: QTensor) -> np.ndarray:
    return x.data.astype(np.int64) - x.zero_point


def _same_pad(extent: int, kernel: int, stride: int) -> tuple[int, int, int]:
    """TF-style same padding: output ceil(extent/stride), split pad (left, right)."""
    out = -(-extent // stride)
    total = max((out - 1) * stride + kernel - extent, 0)
    left = total // 2
    return out, left, total - left


def conv_pointwise(x: QTensor, p: QLayerParams, c_out: int) -> QTensor:
    """1x1 convolution over channels at every time step."""
    if x.data.ndim != 2:
        raise ShapeError(f"pointwise conv needs (channels, time), got {x.shape}")
    c_in = x.shape[0]
    if p.weights.shape != (c_out, c_in):
        raise ShapeError(f"weights {p.weights.shape} != ({c_out}, {c_in})")
    acc = p.weights.astype(np.int64) @ _centered(x)
    acc += p.bias.astype(np.int64)[:, None]
    return QTensor(_requantize(acc, p), p.out_scale, p.out_zero_point)


def conv1d_depthwise(x: QTensor, p: QLayerParams, kernel: int, stride: int) -> QTensor:
    """Per-channel temporal convolution with same padding."""
    if x.data.ndim != 2:
        raise ShapeError(f"depthwise conv1d needs (channels, time), got {x.shape}")
    if stride < 1:
        raise ShapeError(f"stride must be >= 1, got {stride}")
    c, t = x.shape
    if kernel > t:
        raise ShapeError(f"kernel {kernel} longer than input {t}")
    if p.weights.shape != (c, kernel):
        raise ShapeError(f"weights {p.weights.shape} != ({c}, {kernel})")

    t_out, pad_l, pad_r = _same_pad(t, kernel, stride)
    xp = np.zeros((c, t + pad_l + pad_r), dtype=np.int64)
    xp[:, pad_l : pad_l + t] = _centered(x)

    acc = np.zeros((c, t_out), dtype=np.int64)
    for k in range(kernel):
        acc += p.weights[:, k].astype(np.int64)[:, None] * xp[:, k : k + stride * t_out : stride]
    acc += p.bias.astype(np.int64)[:, None]
    return QTensor(_requantize(acc, p), p.out_scale, p.out_zero_point)


def conv2d(
    x: QTensor,
    p: QLayerParams,
    kernel: tuple[int, int],
    stride: tuple[int, int],
    depthwise: bool = False,
) -> QTensor:
    """Standard or depthwise 2-D convolution with same padding."""
    if x.data.ndim != 3:
        raise ShapeError(f"conv2d needs (channels, height, width), got {x.shape}")
    kh, kw = kernel
    sh, sw = stride
    if sh < 1 or sw < 1:
        raise ShapeError(f"strides must be >= 1, got {stride}")
    c_in, h, w = x.shape
    if kh > h or kw > w:
        raise ShapeError(f"kernel {kernel} exceeds input extent ({h}, {w})")

    if depthwise:
        if p.weights.shape != (c_in, kh, kw):
            raise ShapeError(f"weights {p.weights.shape} != ({c_in}, {kh}, {kw})")
        c_out = c_in
    else:
        if p.weights.ndim != 4 or p.weights.shape[1:] != (c_in, kh, kw):
            raise ShapeError(f"weights {p.weights.shape} incompatible with input {x.shape}")
        c_out = p.weights.shape[0]

    h_out, pad_t, pad_b = _same_pad(h, kh, sh)
    w_out, pad_l, pad_r = _same_pad(w, kw, sw)
    xp = np.zeros((c_in, h + pad_t + pad_b, w + pad_l + pad_r), dtype=np.int64)
    xp[:, pad_t : pad_t + h, pad_l : pad_l + w] = _centered(x)

    acc = np.zeros((c_out, h_out, w_out), dtype=np.int64)
    for i in range(kh):
        for j in range(kw):
            patch = xp[:, i : i + sh * h_out : sh, j : j + sw * w_out : sw]
            if depthwise:
                acc += p.weights[:, i, j].astype(np.int64)[:, None, None] * patch
            else:
                acc += np.einsum("oc,chw->ohw", p.weights[:, :, i, j].astype(np.int64), patch)
    acc += p.bias.astype(np.int64)[:, None, None]
    return QTensor(_requantize(acc, p), p.out_scale, p.out_zero_point)


def global_avg_pool(x: QTensor) -> QTensor:
    """Per-channel mean over all non-channel dims, on the quantized grid.

    Output keeps the input scale/zero_point; integer mean rounds half away
    from zero, so it stays within half an LSB of the float mean.
    """
    if x.data.ndim < 2:
        raise ShapeError(f"pooling needs spatial dims, got shape {x.shape}")
    c = x.shape[0]
    n = int(np.prod(x.shape[1:]))
    if n == 0:
        raise ShapeError("empty spatial extent")
    total = x.data.reshape(c, n).astype(np.int64).sum(axis=1)
    mag = (2 * np.abs(total) + n) // (2 * n)  # |total|/n rounded half away from zero
    q = np.clip(np.where(total >= 0, mag, -mag), Q_MIN, Q_MAX).astype(np.int8)
    return QTensor(q.reshape(c, 1), x.scale, x.zero_point)


def fully_connected(x: QTensor, p: QLayerParams, n_out: int) -> QTensor:
    """Affine map on the flattened input vector."""
    flat = x.data.reshape(-1)
    n_in = flat.shape[0]
    if p.weights.shape != (n_out, n_in):
        raise ShapeError(f"weights {p.weights.shape} != ({n_out}, {n_in})")
    acc = p.weights.astype(np.int64) @ (flat.astype(np.int64) - x.zero_point)
    acc += p.bias.astype(np.int64)
    return QTensor(_requantize(acc, p), p.out_scale, p.out_zero_point)


def residual_add(a: QTensor, b: QTensor, out_scale: float, out_zero_point: int) -> QTensor:
    """Dequantize-add-requantize with saturation; symmetric in a and b."""
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    total = a.dequantize() + b.dequantize()
    q = round_half_away(total / out_scale) + out_zero_point
    return QTensor(
        np.clip(q, Q_MIN, Q_MAX).astype(np.int8), out_scale, out_zero_point
    )


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax over a 1-D logit vector."""
    logits = np.asarray(logits, dtype=np.float64)
    e = np.exp(logits - logits.max())
    return e / e.sum()
