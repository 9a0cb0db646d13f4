"""Fold batch norms and write trained models as float KWSM containers.

The container layout: magic `KWSM`, u16 version, u32 header length, a JSON
header describing topology/geometry/labels/normalization, then float32
weight and bias blobs in header order, each 16-byte aligned, and a closing
CRC32 over everything before it.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np
import torch

from .features import KEYWORDS, MfccSettings
from .models import (
    DSCNN_STEM_KERNEL,
    DSCNN_STEM_STRIDE,
    DscnnNet,
    TKWS_HYPER,
    TkwsNet,
)

KWSM_MAGIC = b"KWSM"
KWSM_VERSION = 1
_ALIGN = 16


class ExportError(Exception):
    pass


def fold_bn(conv: torch.nn.modules.conv._ConvNd, bn) -> tuple[np.ndarray, np.ndarray]:
    """Merge a BatchNorm that follows `conv` into its weights and bias."""
    gamma = bn.weight.detach().numpy().astype(np.float64)
    beta = bn.bias.detach().numpy().astype(np.float64)
    mean = bn.running_mean.detach().numpy().astype(np.float64)
    var = bn.running_var.detach().numpy().astype(np.float64)
    factor = gamma / np.sqrt(var + bn.eps)

    w = conv.weight.detach().numpy().astype(np.float64)
    b = conv.bias.detach().numpy().astype(np.float64) if conv.bias is not None else 0.0
    w_folded = w * factor.reshape((-1,) + (1,) * (w.ndim - 1))
    b_folded = beta + (b - mean) * factor
    return w_folded.astype(np.float32), b_folded.astype(np.float32)


def _layer(kind, w, b, *, c_in=None, c_out=None, kernel=None, stride=None, relu=False):
    return dict(kind=kind, c_in=c_in, c_out=c_out, kernel=kernel, stride=stride,
                relu=relu, weights=w, bias=b)


def _marker(kind):
    return dict(kind=kind, c_in=None, c_out=None, kernel=None, stride=None,
                relu=False, weights=None, bias=None)


def _tkws_layers(net: TkwsNet) -> list[dict]:
    h = TKWS_HYPER[net.variant]
    n_mels = net.stem.in_channels
    w, b = fold_bn(net.stem, net.bn_stem)
    layers = [_layer("pointwise", w[:, :, 0], b, c_in=n_mels, c_out=h["stem"], relu=True)]
    c = h["stem"]
    for block in net.blocks:
        hidden = c * h["expansion"]
        if block.skip:
            layers.append(_marker("residual_begin"))
        w, b = fold_bn(block.expand, block.bn_expand)
        layers.append(_layer("pointwise", w[:, :, 0], b, c_in=c, c_out=hidden, relu=True))
        for dw, bn in ((block.dw1, block.bn_dw1), (block.dw2, block.bn_dw2)):
            w, b = fold_bn(dw, bn)
            layers.append(_layer("depthwise1d", w[:, 0, :], b, c_in=hidden, c_out=hidden,
                                 kernel=(h["kernel"],), stride=(1,), relu=True))
        w, b = fold_bn(block.project, block.bn_project)
        layers.append(_layer("pointwise", w[:, :, 0], b, c_in=hidden, c_out=h["block"]))
        if block.skip:
            layers.append(_marker("residual_end"))
        c = h["block"]
    layers.append(_marker("gap"))
    layers.append(_layer("fc", net.head.weight.detach().numpy().astype(np.float32),
                         net.head.bias.detach().numpy().astype(np.float32),
                         c_in=c, c_out=net.head.out_features))
    layers.append(_marker("softmax"))
    return layers


def _dscnn_layers(net: DscnnNet) -> list[dict]:
    w, b = fold_bn(net.stem, net.bn_stem)
    width = net.stem.out_channels
    layers = [_layer("conv2d", w, b, c_in=1, c_out=width,
                     kernel=DSCNN_STEM_KERNEL, stride=DSCNN_STEM_STRIDE, relu=True)]
    for dw, bn_dw, pw, bn_pw in zip(net.dw, net.bn_dw, net.pw, net.bn_pw):
        w, b = fold_bn(dw, bn_dw)
        layers.append(_layer("depthwise2d", w[:, 0, :, :], b, c_in=width, c_out=width,
                             kernel=(3, 3), stride=(1, 1), relu=True))
        w, b = fold_bn(pw, bn_pw)
        layers.append(_layer("conv2d", w, b, c_in=width, c_out=width,
                             kernel=(1, 1), stride=(1, 1), relu=True))
    layers.append(_marker("gap"))
    layers.append(_layer("fc", net.head.weight.detach().numpy().astype(np.float32),
                         net.head.bias.detach().numpy().astype(np.float32),
                         c_in=width, c_out=net.head.out_features))
    layers.append(_marker("softmax"))
    return layers


def graph_layers(net) -> list[dict]:
    net.eval()
    if isinstance(net, TkwsNet):
        return _tkws_layers(net)
    if isinstance(net, DscnnNet):
        return _dscnn_layers(net)
    raise ExportError(f"cannot export a {type(net).__name__}")


def param_count(net) -> int:
    """Element count of the folded export (what the engine will report)."""
    return sum(e["weights"].size + e["bias"].size
               for e in graph_layers(net) if e["weights"] is not None)


def _align(n: int) -> int:
    return (n + _ALIGN - 1) & ~(_ALIGN - 1)


def serialize_kwsm(name: str, settings: MfccSettings, norm_mean, norm_std,
                   layers: list[dict]) -> bytes:
    header = {
        "name": name,
        "dtype": "float32",
        "mfcc": {
            "n_mels": settings.n_mels,
            "n_windows": settings.n_windows,
            "fft_size": settings.fft_size,
            "fmin_hz": settings.fmin_hz,
            "fmax_hz": settings.fmax_hz,
        },
        "labels": list(KEYWORDS),
        "norm_mean": [float(v) for v in norm_mean],
        "norm_std": [float(v) for v in norm_std],
        "input_quant": None,
        "layers": [
            {
                "kind": e["kind"],
                "c_in": e["c_in"],
                "c_out": e["c_out"],
                "kernel": None if e["kernel"] is None else list(e["kernel"]),
                "stride": None if e["stride"] is None else list(e["stride"]),
                "relu": e["relu"],
                "quant": None,
                "blobs": (
                    {
                        "weights": {"dtype": "float32", "shape": list(e["weights"].shape)},
                        "bias": {"dtype": "float32", "shape": list(e["bias"].shape)},
                    }
                    if e["weights"] is not None
                    else {}
                ),
            }
            for e in layers
        ],
    }
    header_bytes = json.dumps(header, separators=(",", ":")).encode("utf-8")
    out = bytearray()
    out += struct.pack("<4sHI", KWSM_MAGIC, KWSM_VERSION, len(header_bytes))
    out += header_bytes
    for e in layers:
        if e["weights"] is None:
            continue
        for blob in (e["weights"], e["bias"]):
            out += b"\x00" * (_align(len(out)) - len(out))
            out += blob.astype("<f4").tobytes(order="C")
    out += struct.pack("<I", zlib.crc32(bytes(out)) & 0xFFFFFFFF)
    return bytes(out)


def export_kwsm(net, settings: MfccSettings, norm_mean, norm_std, path,
                name: str | None = None) -> Path:
    """Write the float KWSM file the inference engine loads."""
    variant = getattr(net, "variant", "dscnn")
    name = name or f"{variant}-{settings.key}"
    raw = serialize_kwsm(name, settings, norm_mean, norm_std, graph_layers(net))
    path = Path(path)
    path.write_bytes(raw)
    return path
