"""Model graphs: TKWS and DS-CNN builders, KWSM serialization, inference.

A ModelGraph is an ordered list of layer descriptors between the feature
map and a 10-way probability vector. The same topology carries float32
parameters (fresh builds, trainer exports) or int8 quantized parameters
(after post-training quantization); `infer` runs whichever path the graph
holds. TKWS consumes features as a channels-by-time sequence, DS-CNN as a
single-channel image.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from . import tensorcore as tc
from .errors import (
    GraphValidationError,
    ModelCorruptionError,
    ModelFormatError,
    ShapeError,
)
from .frontend import FeatureMap, MfccConfig, NormStats, normalize
from .tensorcore import QLayerParams, QTensor

KEYWORDS = ["yes", "no", "up", "down", "left", "right", "on", "off", "stop", "go"]

KWSM_MAGIC = b"KWSM"
KWSM_VERSION = 1
_ALIGN = 16

PARAM_KINDS = ("pointwise", "depthwise1d", "conv2d", "depthwise2d", "fc")

# DS-CNN width/depth tuned so the parameter count sits near 46.5k for
# every MFCC configuration (counts are independent of the input size).
DSCNN_WIDTH = 96
DSCNN_BLOCKS = 4
DSCNN_STEM_KERNEL = (4, 10)
DSCNN_STEM_STRIDE = (2, 2)


@dataclass(frozen=True)
class FloatParams:
    """Float32 weights/bias for a layer of a not-yet-quantized graph."""

    weights: np.ndarray
    bias: np.ndarray


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    c_in: int | None = None
    c_out: int | None = None
    kernel: tuple[int, ...] | None = None
    stride: tuple[int, ...] | None = None
    relu: bool = False
    params: FloatParams | QLayerParams | None = None

    @property
    def quantized(self) -> bool:
        return isinstance(self.params, QLayerParams)


@dataclass(frozen=True)
class TkwsHyper:
    """Width/depth knobs of the TKWS inverted-bottleneck stack."""

    stem_channels: int = 32
    block_channels: int = 32
    expansion: int = 2
    dw_kernel: int = 3
    n_blocks: int = 3

    def __post_init__(self):
        for name in ("stem_channels", "block_channels", "expansion", "dw_kernel"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.n_blocks not in (2, 3):
            raise ValueError(f"n_blocks must be 2 or 3, got {self.n_blocks}")


def default_tkws_hyper(n_blocks: int) -> TkwsHyper:
    """Defaults tuned against the published parameter budgets.

    The stem width of 32 puts the 30-vs-15-mel parameter delta at 480; the
    per-block settings land TKWS-2 near 4.6k and TKWS-3 near 14.4k total
    parameters at 15 mels.
    """
    if n_blocks == 2:
        return TkwsHyper(stem_channels=32, block_channels=20, expansion=1, dw_kernel=9, n_blocks=2)
    if n_blocks == 3:
        return TkwsHyper(stem_channels=32, block_channels=32, expansion=2, dw_kernel=3, n_blocks=3)
    raise ValueError(f"n_blocks must be 2 or 3, got {n_blocks}")


@dataclass(frozen=True)
class ModelGraph:
    name: str
    mfcc_config: MfccConfig
    norm_stats: NormStats
    layers: tuple[LayerSpec, ...]
    labels: tuple[str, ...] = tuple(KEYWORDS)
    input_scale: float | None = None
    input_zero_point: int | None = None

    @property
    def quantized(self) -> bool:
        return self.input_scale is not None


def _identity_stats(n_mels: int) -> NormStats:
    return NormStats(mean=np.zeros(n_mels), std=np.ones(n_mels))


def _he(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    return (rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)).astype(np.float32)


def _float_layer(kind, rng, *, c_in=None, c_out=None, kernel=None, stride=None, relu=False):
    if kind == "pointwise":
        w = _he(rng, (c_out, c_in), c_in)
    elif kind == "depthwise1d":
        w = _he(rng, (c_in, kernel[0]), kernel[0])
        c_out = c_in
    elif kind == "conv2d":
        w = _he(rng, (c_out, c_in) + kernel, c_in * kernel[0] * kernel[1])
    elif kind == "depthwise2d":
        w = _he(rng, (c_in,) + kernel, kernel[0] * kernel[1])
        c_out = c_in
    elif kind == "fc":
        w = _he(rng, (c_out, c_in), c_in)
    else:
        raise ValueError(f"not a parameterized kind: {kind}")
    bias = np.zeros(w.shape[0], dtype=np.float32)
    return LayerSpec(kind, c_in=c_in, c_out=c_out, kernel=kernel, stride=stride,
                     relu=relu, params=FloatParams(weights=w, bias=bias))


def build_tkws(hyper: TkwsHyper, config: MfccConfig, seed: int = 0) -> ModelGraph:
    """TKWS graph: pointwise stem, stacked inverted-bottleneck residual
    blocks (expand -> double 1-D depthwise -> project), GAP and a 10-way
    head. Operates on the feature map as an n_mels-channel time sequence.
    Weights are deterministic He-initialized floats; training or
    quantization replaces them.
    """
    rng = np.random.default_rng(seed)
    layers: list[LayerSpec] = []
    k = (hyper.dw_kernel,)

    layers.append(_float_layer("pointwise", rng, c_in=config.n_mels,
                               c_out=hyper.stem_channels, relu=True))
    c = hyper.stem_channels
    for _ in range(hyper.n_blocks):
        hidden = c * hyper.expansion
        skip = c == hyper.block_channels
        if skip:
            layers.append(LayerSpec("residual_begin"))
        layers.append(_float_layer("pointwise", rng, c_in=c, c_out=hidden, relu=True))
        layers.append(_float_layer("depthwise1d", rng, c_in=hidden, kernel=k,
                                   stride=(1,), relu=True))
        layers.append(_float_layer("depthwise1d", rng, c_in=hidden, kernel=k,
                                   stride=(1,), relu=True))
        layers.append(_float_layer("pointwise", rng, c_in=hidden,
                                   c_out=hyper.block_channels, relu=False))
        if skip:
            layers.append(LayerSpec("residual_end"))
        c = hyper.block_channels

    layers.append(LayerSpec("gap"))
    layers.append(_float_layer("fc", rng, c_in=c, c_out=len(KEYWORDS)))
    layers.append(LayerSpec("softmax"))

    graph = ModelGraph(
        name=f"tkws{hyper.n_blocks}-{config.key}",
        mfcc_config=config,
        norm_stats=_identity_stats(config.n_mels),
        layers=tuple(layers),
    )
    validate_graph(graph)
    return graph


def build_dscnn(config: MfccConfig, seed: int = 0) -> ModelGraph:
    """DS-CNN graph: a strided standard conv stem on the 1-channel feature
    image, then depthwise+pointwise pairs, GAP and the 10-way head.
    """
    rng = np.random.default_rng(seed)
    w = DSCNN_WIDTH
    layers = [
        _float_layer("conv2d", rng, c_in=1, c_out=w, kernel=DSCNN_STEM_KERNEL,
                     stride=DSCNN_STEM_STRIDE, relu=True)
    ]
    for _ in range(DSCNN_BLOCKS):
        layers.append(_float_layer("depthwise2d", rng, c_in=w, kernel=(3, 3),
                                   stride=(1, 1), relu=True))
        layers.append(_float_layer("conv2d", rng, c_in=w, c_out=w, kernel=(1, 1),
                                   stride=(1, 1), relu=True))
    layers.append(LayerSpec("gap"))
    layers.append(_float_layer("fc", rng, c_in=w, c_out=len(KEYWORDS)))
    layers.append(LayerSpec("softmax"))

    graph = ModelGraph(
        name=f"dscnn-{config.key}",
        mfcc_config=config,
        norm_stats=_identity_stats(config.n_mels),
        layers=tuple(layers),
    )
    validate_graph(graph)
    return graph


# ---------------------------------------------------------------------------
# shape chain and validation


def input_shape(graph: ModelGraph) -> tuple[int, ...]:
    """(n_mels, n_windows) for 1-D stacks, (1, n_mels, n_windows) for 2-D."""
    cfg = graph.mfcc_config
    for spec in graph.layers:
        if spec.kind in ("conv2d", "depthwise2d"):
            return (1, cfg.n_mels, cfg.n_windows)
        if spec.kind in ("pointwise", "depthwise1d"):
            return (cfg.n_mels, cfg.n_windows)
    return (cfg.n_mels, cfg.n_windows)


def _out_extent(extent: int, stride: int) -> int:
    return -(-extent // stride)


def _layer_out_shape(spec: LayerSpec, shape: tuple[int, ...]) -> tuple[int, ...]:
    kind = spec.kind
    if kind == "pointwise":
        if len(shape) != 2 or shape[0] != spec.c_in:
            raise GraphValidationError(f"pointwise expects ({spec.c_in}, T), got {shape}")
        return (spec.c_out, shape[1])
    if kind == "depthwise1d":
        if len(shape) != 2 or shape[0] != spec.c_in:
            raise GraphValidationError(f"depthwise1d expects ({spec.c_in}, T), got {shape}")
        return (spec.c_in, _out_extent(shape[1], spec.stride[0]))
    if kind == "conv2d":
        if len(shape) != 3 or shape[0] != spec.c_in:
            raise GraphValidationError(f"conv2d expects ({spec.c_in}, h, w), got {shape}")
        return (spec.c_out, _out_extent(shape[1], spec.stride[0]),
                _out_extent(shape[2], spec.stride[1]))
    if kind == "depthwise2d":
        if len(shape) != 3 or shape[0] != spec.c_in:
            raise GraphValidationError(f"depthwise2d expects ({spec.c_in}, h, w), got {shape}")
        return (spec.c_in, _out_extent(shape[1], spec.stride[0]),
                _out_extent(shape[2], spec.stride[1]))
    if kind == "gap":
        if len(shape) < 2:
            raise GraphValidationError(f"gap needs spatial dims, got {shape}")
        return (shape[0], 1)
    if kind == "fc":
        n_in = int(np.prod(shape))
        if n_in != spec.c_in:
            raise GraphValidationError(f"fc expects {spec.c_in} inputs, got {n_in} from {shape}")
        return (spec.c_out,)
    if kind in ("residual_begin", "residual_end", "softmax"):
        return shape
    raise GraphValidationError(f"unknown layer kind {kind!r}")


def activation_shapes(graph: ModelGraph) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """(input shape, output shape) for every layer, checking the chain."""
    shape = input_shape(graph)
    stack: list[tuple[int, ...]] = []
    out = []
    for spec in graph.layers:
        if spec.kind == "residual_begin":
            stack.append(shape)
        elif spec.kind == "residual_end":
            if not stack:
                raise GraphValidationError("residual_end without matching residual_begin")
            saved = stack.pop()
            if saved != shape:
                raise GraphValidationError(
                    f"residual add of mismatched shapes {saved} vs {shape}"
                )
        nxt = _layer_out_shape(spec, shape)
        out.append((shape, nxt))
        shape = nxt
    if stack:
        raise GraphValidationError("residual_begin without matching residual_end")
    return out


def _weight_shape(spec: LayerSpec) -> tuple[int, ...] | None:
    if spec.kind == "pointwise":
        return (spec.c_out, spec.c_in)
    if spec.kind == "depthwise1d":
        return (spec.c_in, spec.kernel[0])
    if spec.kind == "conv2d":
        return (spec.c_out, spec.c_in) + spec.kernel
    if spec.kind == "depthwise2d":
        return (spec.c_in,) + spec.kernel
    if spec.kind == "fc":
        return (spec.c_out, spec.c_in)
    return None


def layer_param_count(spec: LayerSpec) -> int:
    """Weight + bias element count from geometry alone."""
    wshape = _weight_shape(spec)
    if wshape is None:
        return 0
    n_bias = spec.c_in if spec.kind in ("depthwise1d", "depthwise2d") else spec.c_out
    return int(np.prod(wshape)) + n_bias


def validate_graph(graph: ModelGraph) -> None:
    """Check the graph invariants; raises GraphValidationError on any break."""
    kinds = [s.kind for s in graph.layers]
    if kinds.count("gap") != 1 or kinds.count("fc") != 1:
        raise GraphValidationError("graph must contain exactly one gap and one fc")
    if kinds.count("softmax") != 1 or kinds[-1] != "softmax" or kinds[-2] != "fc":
        raise GraphValidationError("graph must end with fc followed by softmax")
    if kinds.index("gap") > kinds.index("fc"):
        raise GraphValidationError("gap must come before fc")
    if list(graph.labels) != KEYWORDS:
        raise GraphValidationError(f"labels must be the 10 keywords {KEYWORDS}")

    shapes = activation_shapes(graph)
    if shapes[-1][1] != (len(KEYWORDS),):
        raise GraphValidationError(f"output shape {shapes[-1][1]} != ({len(KEYWORDS)},)")

    for spec in graph.layers:
        wshape = _weight_shape(spec)
        if wshape is None:
            continue
        if spec.params is None:
            raise GraphValidationError(f"{spec.kind} layer missing parameters")
        w = spec.params.weights
        if w is None or tuple(w.shape) != wshape:
            raise GraphValidationError(
                f"{spec.kind} weight shape {None if w is None else w.shape} != {wshape}"
            )
        n_bias = wshape[0]
        if spec.params.bias is None or spec.params.bias.shape != (n_bias,):
            raise GraphValidationError(f"{spec.kind} bias must have shape ({n_bias},)")

    if graph.quantized:
        if not (tc.Q_MIN <= graph.input_zero_point <= tc.Q_MAX):
            raise GraphValidationError("input zero_point outside int8 range")
        for spec in graph.layers:
            if _weight_shape(spec) is not None and not spec.quantized:
                raise GraphValidationError(f"{spec.kind} layer not quantized in int8 graph")


# ---------------------------------------------------------------------------
# execution


def _float_conv1d_depthwise(x, w, stride):
    c, t = x.shape
    k = w.shape[1]
    t_out, pad_l, pad_r = tc._same_pad(t, k, stride)
    xp = np.zeros((c, t + pad_l + pad_r))
    xp[:, pad_l : pad_l + t] = x
    acc = np.zeros((c, t_out))
    for i in range(k):
        acc += w[:, i][:, None] * xp[:, i : i + stride * t_out : stride]
    return acc


def _float_conv2d(x, w, stride, depthwise):
    c_in, h, wd = x.shape
    if depthwise:
        kh, kw = w.shape[1:]
    else:
        kh, kw = w.shape[2:]
    sh, sw = stride
    h_out, pad_t, pad_b = tc._same_pad(h, kh, sh)
    w_out, pad_l, pad_r = tc._same_pad(wd, kw, sw)
    xp = np.zeros((c_in, h + pad_t + pad_b, wd + pad_l + pad_r))
    xp[:, pad_t : pad_t + h, pad_l : pad_l + wd] = x
    c_out = c_in if depthwise else w.shape[0]
    acc = np.zeros((c_out, h_out, w_out))
    for i in range(kh):
        for j in range(kw):
            patch = xp[:, i : i + sh * h_out : sh, j : j + sw * w_out : sw]
            if depthwise:
                acc += w[:, i, j][:, None, None] * patch
            else:
                acc += np.einsum("oc,chw->ohw", w[:, :, i, j], patch)
    return acc


def run_float(graph: ModelGraph, features: np.ndarray, record: list | None = None) -> np.ndarray:
    """Execute the float path; returns the probability vector.

    When `record` is a list, the float activation array after every layer
    is appended to it (used by calibration).
    """
    x = np.asarray(features, dtype=np.float64).reshape(input_shape(graph))
    stack = []
    for spec in graph.layers:
        p = spec.params
        w = None if p is None else np.asarray(p.weights, dtype=np.float64)
        b = None if p is None or p.bias is None else np.asarray(p.bias, dtype=np.float64)
        if spec.kind == "pointwise":
            x = w @ x + b[:, None]
        elif spec.kind == "depthwise1d":
            x = _float_conv1d_depthwise(x, w, spec.stride[0]) + b[:, None]
        elif spec.kind == "conv2d":
            x = _float_conv2d(x, w, spec.stride, depthwise=False) + b[:, None, None]
        elif spec.kind == "depthwise2d":
            x = _float_conv2d(x, w, spec.stride, depthwise=True) + b[:, None, None]
        elif spec.kind == "gap":
            x = x.reshape(x.shape[0], -1).mean(axis=1, keepdims=True)
        elif spec.kind == "fc":
            x = w @ x.reshape(-1) + b
        elif spec.kind == "residual_begin":
            stack.append(x)
        elif spec.kind == "residual_end":
            x = x + stack.pop()
        elif spec.kind == "softmax":
            x = tc.softmax(x)
        if spec.relu:
            x = np.maximum(x, 0.0)
        if record is not None:
            record.append(x)
    return x


def quantize_features(features: np.ndarray, scale: float, zero_point: int) -> QTensor:
    q = tc.round_half_away(np.asarray(features, dtype=np.float64) / scale) + zero_point
    return QTensor(np.clip(q, tc.Q_MIN, tc.Q_MAX).astype(np.int8), scale, zero_point)


def run_quantized(graph: ModelGraph, features: np.ndarray) -> np.ndarray:
    """Execute the int8 path; returns the probability vector."""
    x = quantize_features(features.reshape(input_shape(graph)),
                          graph.input_scale, graph.input_zero_point)
    stack = []
    logits = None
    for spec in graph.layers:
        p = spec.params
        if spec.kind == "pointwise":
            x = tc.conv_pointwise(x, p, spec.c_out)
        elif spec.kind == "depthwise1d":
            x = tc.conv1d_depthwise(x, p, spec.kernel[0], spec.stride[0])
        elif spec.kind == "conv2d":
            x = tc.conv2d(x, p, spec.kernel, spec.stride, depthwise=False)
        elif spec.kind == "depthwise2d":
            x = tc.conv2d(x, p, spec.kernel, spec.stride, depthwise=True)
        elif spec.kind == "gap":
            x = tc.global_avg_pool(x)
        elif spec.kind == "fc":
            x = tc.fully_connected(x, p, spec.c_out)
        elif spec.kind == "residual_begin":
            stack.append(x)
        elif spec.kind == "residual_end":
            x = tc.residual_add(x, stack.pop(), p.out_scale, p.out_zero_point)
        elif spec.kind == "softmax":
            logits = x.dequantize().reshape(-1)
    return tc.softmax(logits)


def infer(model: ModelGraph, features: FeatureMap, raw: bool = False) -> np.ndarray:
    """Run the model on one feature map; returns 10 class probabilities.

    Pass raw=True for unnormalized features; the model's stored stats are
    applied first.
    """
    validate_graph(model)
    if (features.config.n_mels, features.config.n_windows) != (
        model.mfcc_config.n_mels, model.mfcc_config.n_windows,
    ):
        raise ShapeError(
            f"feature map is {features.config.key}, model wants {model.mfcc_config.key}"
        )
    if raw:
        features = normalize(features, model.norm_stats)
    if model.quantized:
        return run_quantized(model, features.data)
    return run_float(model, features.data)


def predict(probs: np.ndarray, labels=tuple(KEYWORDS)) -> tuple[str, float]:
    """Argmax with lowest-index tie-breaking; returns (label, confidence)."""
    probs = np.asarray(probs, dtype=np.float64)
    idx = int(np.argmax(probs))
    return labels[idx], float(probs[idx])


# ---------------------------------------------------------------------------
# KWSM container

_BLOB_DTYPES = {"int8": "<i1", "int32": "<i4", "float32": "<f4"}


def _align(n: int) -> int:
    return (n + _ALIGN - 1) & ~(_ALIGN - 1)


def _layer_header(spec: LayerSpec) -> dict:
    entry = {
        "kind": spec.kind,
        "c_in": spec.c_in,
        "c_out": spec.c_out,
        "kernel": list(spec.kernel) if spec.kernel else None,
        "stride": list(spec.stride) if spec.stride else None,
        "relu": spec.relu,
        "quant": None,
        "blobs": {},
    }
    p = spec.params
    if isinstance(p, QLayerParams):
        entry["quant"] = {"out_scale": p.out_scale, "out_zero_point": p.out_zero_point}
        if p.weights is not None:
            entry["quant"].update(
                weight_scale=p.weight_scale,
                mantissa=p.requant_mantissa,
                shift=p.requant_shift,
            )
            entry["blobs"] = {
                "weights": {"dtype": "int8", "shape": list(p.weights.shape)},
                "bias": {"dtype": "int32", "shape": list(p.bias.shape)},
            }
    elif isinstance(p, FloatParams):
        entry["blobs"] = {
            "weights": {"dtype": "float32", "shape": list(p.weights.shape)},
            "bias": {"dtype": "float32", "shape": list(p.bias.shape)},
        }
    return entry


def _layer_blobs(spec: LayerSpec) -> list[np.ndarray]:
    p = spec.params
    if isinstance(p, QLayerParams) and p.weights is not None:
        return [p.weights.astype("<i1"), p.bias.astype("<i4")]
    if isinstance(p, FloatParams):
        return [p.weights.astype("<f4"), p.bias.astype("<f4")]
    return []


def serialize_model(graph: ModelGraph) -> bytes:
    """Encode the graph as KWSM bytes (header JSON + aligned blobs + CRC32)."""
    validate_graph(graph)
    cfg = graph.mfcc_config
    header = {
        "name": graph.name,
        "dtype": "int8" if graph.quantized else "float32",
        "mfcc": {
            "n_mels": cfg.n_mels,
            "n_windows": cfg.n_windows,
            "fft_size": cfg.fft_size,
            "fmin_hz": cfg.fmin_hz,
            "fmax_hz": cfg.fmax_hz,
        },
        "labels": list(graph.labels),
        "norm_mean": [float(v) for v in graph.norm_stats.mean],
        "norm_std": [float(v) for v in graph.norm_stats.std],
        "input_quant": (
            {"scale": graph.input_scale, "zero_point": graph.input_zero_point}
            if graph.quantized
            else None
        ),
        "layers": [_layer_header(s) for s in graph.layers],
    }
    header_bytes = json.dumps(header, separators=(",", ":")).encode("utf-8")

    out = bytearray()
    out += struct.pack("<4sHI", KWSM_MAGIC, KWSM_VERSION, len(header_bytes))
    out += header_bytes
    for spec in graph.layers:
        for blob in _layer_blobs(spec):
            out += b"\x00" * (_align(len(out)) - len(out))
            out += blob.tobytes(order="C")
    out += struct.pack("<I", zlib.crc32(bytes(out)) & 0xFFFFFFFF)
    return bytes(out)


def save_model(graph: ModelGraph, path) -> None:
    from pathlib import Path

    Path(path).write_bytes(serialize_model(graph))


def _read_blob(raw: bytes, pos: int, decl: dict) -> tuple[np.ndarray, int]:
    pos = _align(pos)
    dtype = _BLOB_DTYPES[decl["dtype"]]
    shape = tuple(decl["shape"])
    nbytes = int(np.prod(shape)) * np.dtype(dtype).itemsize
    if pos + nbytes > len(raw):
        raise ModelCorruptionError("blob section truncated")
    arr = np.frombuffer(raw[pos : pos + nbytes], dtype=dtype).reshape(shape)
    return arr, pos + nbytes


def deserialize_model(raw: bytes) -> ModelGraph:
    if len(raw) < 14 or raw[:4] != KWSM_MAGIC:
        raise ModelFormatError("not a KWSM container")
    version, header_len = struct.unpack_from("<HI", raw, 4)
    if version != KWSM_VERSION:
        raise ModelFormatError(f"unsupported KWSM version {version}")
    if zlib.crc32(raw[:-4]) & 0xFFFFFFFF != struct.unpack("<I", raw[-4:])[0]:
        raise ModelCorruptionError("CRC32 mismatch")
    try:
        header = json.loads(raw[10 : 10 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ModelFormatError(f"bad KWSM header: {e}") from e

    quantized = header["dtype"] == "int8"
    pos = 10 + header_len
    layers = []
    for entry in header["layers"]:
        weights = bias = None
        if "weights" in entry["blobs"]:
            weights, pos = _read_blob(raw, pos, entry["blobs"]["weights"])
            bias, pos = _read_blob(raw, pos, entry["blobs"]["bias"])
        q = entry["quant"]
        if q is not None:
            params = QLayerParams(
                weights=None if weights is None else weights.astype(np.int8),
                weight_scale=q.get("weight_scale", 1.0),
                bias=None if bias is None else bias.astype(np.int32),
                requant_mantissa=q.get("mantissa", 0),
                requant_shift=q.get("shift", 0),
                out_scale=q["out_scale"],
                out_zero_point=q["out_zero_point"],
                relu=entry["relu"],
            )
        elif weights is not None:
            params = FloatParams(weights=weights.astype(np.float32),
                                 bias=bias.astype(np.float32))
        else:
            params = None
        layers.append(
            LayerSpec(
                kind=entry["kind"],
                c_in=entry["c_in"],
                c_out=entry["c_out"],
                kernel=None if entry["kernel"] is None else tuple(entry["kernel"]),
                stride=None if entry["stride"] is None else tuple(entry["stride"]),
                relu=entry["relu"],
                params=params,
            )
        )

    mfcc = header["mfcc"]
    iq = header["input_quant"]
    graph = ModelGraph(
        name=header["name"],
        mfcc_config=MfccConfig(
            n_mels=mfcc["n_mels"],
            n_windows=mfcc["n_windows"],
            fft_size=mfcc["fft_size"],
            fmin_hz=mfcc["fmin_hz"],
            fmax_hz=mfcc["fmax_hz"],
        ),
        norm_stats=NormStats(
            mean=np.asarray(header["norm_mean"], dtype=np.float64),
            std=np.asarray(header["norm_std"], dtype=np.float64),
        ),
        layers=tuple(layers),
        labels=tuple(header["labels"]),
        input_scale=None if iq is None else iq["scale"],
        input_zero_point=None if iq is None else iq["zero_point"],
    )
    if quantized != graph.quantized:
        raise ModelFormatError("dtype flag inconsistent with quantization parameters")
    validate_graph(graph)
    return graph


def load_model(path) -> ModelGraph:
    from pathlib import Path

    return deserialize_model(Path(path).read_bytes())
