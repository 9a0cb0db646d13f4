"""Post-training quantization: range calibration and float-to-int8 conversion.

Calibration runs float inference over representative (already normalized)
feature maps and records the min/max of every activation edge, widened by a
0.1% margin. `quantize_graph` then converts weights to symmetric per-tensor
int8, biases to int32 at the combined input/weight scale, and derives each
layer's fixed-point requantization multiplier.

Float graphs use the same KWSM container as quantized ones, flagged
float32 in the header; any graph with batch normalization must have it
folded into conv weights before it reaches this module.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import tensorcore as tc
from .errors import CalibrationError, QuantizationError
from .frontend import FeatureMap
from .models import FloatParams, LayerSpec, ModelGraph, run_float, validate_graph
from .tensorcore import QLayerParams, quantize_multiplier

log = logging.getLogger(__name__)

# Graphs are float until quantize_graph rewrites their parameters; the type
# is shared, only the parameter payload differs.
FloatGraph = ModelGraph

RANGE_MARGIN = 1e-3
RANGE_FLOOR = 1e-8
WEIGHT_SCALE_FLOOR = 1e-8
INT32_MAX = 2**31 - 1

DEFAULT_CALIBRATION_SIZE = 128


@dataclass(frozen=True)
class CalibrationSet:
    """Normalized feature maps sharing one MFCC configuration."""

    maps: tuple[FeatureMap, ...]

    def __post_init__(self):
        if not self.maps:
            raise CalibrationError("calibration set is empty")
        keys = {m.config.key for m in self.maps}
        if len(keys) > 1:
            raise CalibrationError(f"mixed MFCC configurations in calibration set: {keys}")


@dataclass(frozen=True)
class ActivationRanges:
    """Observed (lo, hi) of the graph input and of every layer output."""

    input_range: tuple[float, float]
    layer_ranges: tuple[tuple[float, float], ...]


def _widen(lo: float, hi: float) -> tuple[float, float]:
    margin = max(RANGE_MARGIN * max(abs(lo), abs(hi)), RANGE_FLOOR)
    return lo - margin, hi + margin


def calibrate(g: FloatGraph, cal: CalibrationSet) -> ActivationRanges:
    """Record per-edge activation extrema over the calibration set."""
    validate_graph(g)
    if g.quantized:
        raise CalibrationError("graph is already quantized")
    if (cal.maps[0].config.n_mels, cal.maps[0].config.n_windows) != (
        g.mfcc_config.n_mels, g.mfcc_config.n_windows,
    ):
        raise CalibrationError(
            f"calibration features are {cal.maps[0].config.key}, "
            f"graph wants {g.mfcc_config.key}"
        )

    in_lo = in_hi = None
    los = [None] * len(g.layers)
    his = [None] * len(g.layers)
    for fmap in cal.maps:
        x = fmap.data
        in_lo = float(x.min()) if in_lo is None else min(in_lo, float(x.min()))
        in_hi = float(x.max()) if in_hi is None else max(in_hi, float(x.max()))
        record: list[np.ndarray] = []
        run_float(g, x, record=record)
        for i, act in enumerate(record):
            lo, hi = float(np.min(act)), float(np.max(act))
            los[i] = lo if los[i] is None else min(los[i], lo)
            his[i] = hi if his[i] is None else max(his[i], hi)

    return ActivationRanges(
        input_range=_widen(in_lo, in_hi),
        layer_ranges=tuple(_widen(lo, hi) for lo, hi in zip(los, his)),
    )


def _affine_params(lo: float, hi: float) -> tuple[float, int]:
    """Affine int8 (scale, zero_point) covering [lo, hi] and real zero."""
    lo, hi = min(lo, 0.0), max(hi, 0.0)
    scale = max((hi - lo) / (tc.Q_MAX - tc.Q_MIN), RANGE_FLOOR)
    zp = int(round(tc.Q_MIN - lo / scale))
    return scale, max(tc.Q_MIN, min(tc.Q_MAX, zp))


def _quantize_weights(w: np.ndarray) -> tuple[np.ndarray, float]:
    max_abs = float(np.max(np.abs(w))) if w.size else 0.0
    scale = max_abs / tc.Q_MAX if max_abs > 0 else WEIGHT_SCALE_FLOOR
    q = tc.round_half_away(np.asarray(w, dtype=np.float64) / scale)
    return np.clip(q, -tc.Q_MAX, tc.Q_MAX).astype(np.int8), scale


def _requant(in_scale: float, w_scale: float, out_scale: float,
             zero_layer: bool) -> tuple[int, int]:
    ratio = in_scale * w_scale / out_scale
    try:
        return quantize_multiplier(ratio)
    except QuantizationError:
        if zero_layer:
            # Accumulator is identically zero; any multiplier maps it to the
            # output zero_point, so clamp instead of failing.
            log.warning("clamping requant multiplier %g on all-zero layer", ratio)
            return quantize_multiplier(1.0)
        raise


def quantize_graph(g: FloatGraph, ranges: ActivationRanges) -> ModelGraph:
    """Convert a calibrated float graph into its int8 form."""
    validate_graph(g)
    if g.quantized:
        raise QuantizationError("graph is already quantized")
    if len(ranges.layer_ranges) != len(g.layers):
        raise QuantizationError(
            f"{len(ranges.layer_ranges)} ranges for {len(g.layers)} layers"
        )

    in_scale, in_zp = _affine_params(*ranges.input_range)
    cur_scale, cur_zp = in_scale, in_zp
    saved: list[tuple[float, int]] = []
    layers: list[LayerSpec] = []

    for spec, (lo, hi) in zip(g.layers, ranges.layer_ranges):
        if isinstance(spec.params, FloatParams):
            qw, w_scale = _quantize_weights(spec.params.weights)
            out_scale, out_zp = _affine_params(lo, hi)
            bias_scale = cur_scale * w_scale
            qb = tc.round_half_away(
                spec.params.bias.astype(np.float64) / bias_scale
            )
            qb = np.clip(qb, -INT32_MAX, INT32_MAX).astype(np.int32)
            zero_layer = not np.any(spec.params.weights) and not np.any(spec.params.bias)
            mantissa, shift = _requant(cur_scale, w_scale, out_scale, zero_layer)
            params = QLayerParams(
                weights=qw,
                weight_scale=w_scale,
                bias=qb,
                requant_mantissa=mantissa,
                requant_shift=shift,
                out_scale=out_scale,
                out_zero_point=out_zp,
                relu=spec.relu,
            )
            layers.append(
                LayerSpec(spec.kind, c_in=spec.c_in, c_out=spec.c_out,
                          kernel=spec.kernel, stride=spec.stride,
                          relu=spec.relu, params=params)
            )
            cur_scale, cur_zp = out_scale, out_zp
        elif spec.kind == "residual_begin":
            saved.append((cur_scale, cur_zp))
            layers.append(spec)
        elif spec.kind == "residual_end":
            saved.pop()
            out_scale, out_zp = _affine_params(lo, hi)
            params = QLayerParams(
                weights=None, weight_scale=1.0, bias=None,
                requant_mantissa=0, requant_shift=0,
                out_scale=out_scale, out_zero_point=out_zp,
            )
            layers.append(LayerSpec(spec.kind, params=params))
            cur_scale, cur_zp = out_scale, out_zp
        else:
            # gap keeps its input grid; softmax runs on dequantized logits
            layers.append(spec)

    quantized = ModelGraph(
        name=g.name,
        mfcc_config=g.mfcc_config,
        norm_stats=g.norm_stats,
        layers=tuple(layers),
        labels=g.labels,
        input_scale=in_scale,
        input_zero_point=in_zp,
    )
    validate_graph(quantized)
    return quantized


def quantize(g: FloatGraph, cal: CalibrationSet) -> ModelGraph:
    """Calibrate and quantize in one step."""
    return quantize_graph(g, calibrate(g, cal))
