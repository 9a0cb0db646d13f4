"""Torch definitions of TKWS-2/TKWS-3 and DS-CNN.

These mirror the inference engine's graph builders layer for layer, with
batch normalization inserted after every convolution for trainability;
export folds the BN parameters back into the convolutions so the emitted
KWSM matches the engine's layer vocabulary exactly. The width/depth
constants here must stay in lockstep with the engine's defaults (the
parity tests compare parameter counts against the engine).
"""

from __future__ import annotations

import torch
from torch import nn
from torch.nn import functional as F

from .features import KEYWORDS

N_CLASSES = len(KEYWORDS)

TKWS_HYPER = {
    "tkws2": dict(stem=32, block=20, expansion=1, kernel=9, n_blocks=2),
    "tkws3": dict(stem=32, block=32, expansion=2, kernel=3, n_blocks=3),
}

DSCNN_WIDTH = 96
DSCNN_BLOCKS = 4
DSCNN_STEM_KERNEL = (4, 10)
DSCNN_STEM_STRIDE = (2, 2)


class TkwsBlock(nn.Module):
    """Inverted bottleneck: expand, double depthwise, project, skip."""

    def __init__(self, c_in: int, c_out: int, expansion: int, kernel: int):
        super().__init__()
        hidden = c_in * expansion
        self.skip = c_in == c_out
        self.expand = nn.Conv1d(c_in, hidden, 1)
        self.bn_expand = nn.BatchNorm1d(hidden)
        self.dw1 = nn.Conv1d(hidden, hidden, kernel, padding="same", groups=hidden)
        self.bn_dw1 = nn.BatchNorm1d(hidden)
        self.dw2 = nn.Conv1d(hidden, hidden, kernel, padding="same", groups=hidden)
        self.bn_dw2 = nn.BatchNorm1d(hidden)
        self.project = nn.Conv1d(hidden, c_out, 1)
        self.bn_project = nn.BatchNorm1d(c_out)

    def forward(self, x):
        y = F.relu(self.bn_expand(self.expand(x)))
        y = F.relu(self.bn_dw1(self.dw1(y)))
        y = F.relu(self.bn_dw2(self.dw2(y)))
        y = self.bn_project(self.project(y))
        return x + y if self.skip else y


class TkwsNet(nn.Module):
    """Treats the feature map as an n_mels-channel temporal sequence."""

    def __init__(self, n_mels: int, variant: str):
        super().__init__()
        h = TKWS_HYPER[variant]
        self.variant = variant
        self.stem = nn.Conv1d(n_mels, h["stem"], 1)
        self.bn_stem = nn.BatchNorm1d(h["stem"])
        blocks = []
        c = h["stem"]
        for _ in range(h["n_blocks"]):
            blocks.append(TkwsBlock(c, h["block"], h["expansion"], h["kernel"]))
            c = h["block"]
        self.blocks = nn.ModuleList(blocks)
        self.head = nn.Linear(c, N_CLASSES)

    def forward(self, x):  # x: (batch, n_mels, n_windows)
        y = F.relu(self.bn_stem(self.stem(x)))
        for block in self.blocks:
            y = block(y)
        return self.head(y.mean(dim=2))


class TfSamePad2d(nn.Module):
    """Asymmetric same padding (extra on the bottom/right) for strided convs."""

    def __init__(self, kernel, stride):
        super().__init__()
        self.kernel = kernel
        self.stride = stride

    def forward(self, x):
        h, w = x.shape[-2:]
        pads = []
        for extent, k, s in ((w, self.kernel[1], self.stride[1]),
                             (h, self.kernel[0], self.stride[0])):
            out = -(-extent // s)
            total = max((out - 1) * s + k - extent, 0)
            pads += [total // 2, total - total // 2]
        return F.pad(x, pads)


class DscnnNet(nn.Module):
    """Strided standard conv stem, then depthwise/pointwise pairs."""

    def __init__(self, n_mels: int):
        super().__init__()
        w = DSCNN_WIDTH
        self.pad_stem = TfSamePad2d(DSCNN_STEM_KERNEL, DSCNN_STEM_STRIDE)
        self.stem = nn.Conv2d(1, w, DSCNN_STEM_KERNEL, stride=DSCNN_STEM_STRIDE)
        self.bn_stem = nn.BatchNorm2d(w)
        self.dw = nn.ModuleList()
        self.bn_dw = nn.ModuleList()
        self.pw = nn.ModuleList()
        self.bn_pw = nn.ModuleList()
        for _ in range(DSCNN_BLOCKS):
            self.dw.append(nn.Conv2d(w, w, 3, padding="same", groups=w))
            self.bn_dw.append(nn.BatchNorm2d(w))
            self.pw.append(nn.Conv2d(w, w, 1))
            self.bn_pw.append(nn.BatchNorm2d(w))
        self.head = nn.Linear(w, N_CLASSES)

    def forward(self, x):  # x: (batch, n_mels, n_windows)
        y = x.unsqueeze(1)
        y = F.relu(self.bn_stem(self.stem(self.pad_stem(y))))
        for dw, bn_dw, pw, bn_pw in zip(self.dw, self.bn_dw, self.pw, self.bn_pw):
            y = F.relu(bn_dw(dw(y)))
            y = F.relu(bn_pw(pw(y)))
        return self.head(y.mean(dim=(2, 3)))


def build_net(model: str, n_mels: int) -> nn.Module:
    if model in TKWS_HYPER:
        return TkwsNet(n_mels, model)
    if model == "dscnn":
        return DscnnNet(n_mels)
    raise ValueError(f"unknown model {model!r}; pick tkws2, tkws3 or dscnn")


@torch.no_grad()
def predict_logits(net: nn.Module, features: torch.Tensor) -> torch.Tensor:
    """Eval-mode logits for a (batch, n_mels, n_windows) tensor."""
    net.eval()
    return net(features)
