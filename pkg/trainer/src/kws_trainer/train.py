"""Training loop: cross-entropy with Adam and cosine decay, deterministic
at a fixed seed, emitting a float KWSM plus a JSON training log."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .datasets import Example, NoiseAugmenter, load_clip, prepare_dataset
from .export import export_kwsm
from .features import KEYWORDS, MfccSettings, mfcc, norm_stats, normalize
from .models import build_net


class TrainingError(Exception):
    pass


@dataclass
class TrainConfig:
    model: str = "tkws3"
    n_mels: int = 15
    n_windows: int = 63
    epochs: int = 30
    batch_size: int = 128
    lr: float = 3e-3
    seed: int = 0
    noise_mix_rate: float = 0.8

    @property
    def settings(self) -> MfccSettings:
        return MfccSettings.standard(self.n_mels, self.n_windows)


LABEL_INDEX = {kw: i for i, kw in enumerate(KEYWORDS)}


def features_of(examples: tuple[Example, ...], settings: MfccSettings,
                augment=None) -> tuple[np.ndarray, np.ndarray]:
    """(N, n_mels, n_windows) float features and int labels for a split."""
    feats = np.empty((len(examples), settings.n_mels, settings.n_windows), dtype=np.float64)
    labels = np.empty(len(examples), dtype=np.int64)
    for i, ex in enumerate(examples):
        clip = load_clip(ex.path)
        if augment is not None:
            clip = augment(clip)
        feats[i] = mfcc(clip, settings)
        labels[i] = LABEL_INDEX[ex.label]
    return feats, labels


def _batches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def weighted_f1(true_idx: np.ndarray, pred_idx: np.ndarray, n_classes: int) -> float:
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (true_idx, pred_idx), 1)
    diag = np.diag(counts).astype(np.float64)
    support = counts.sum(axis=1)
    pred = counts.sum(axis=0)
    precision = np.divide(diag, pred, out=np.zeros(n_classes), where=pred > 0)
    recall = np.divide(diag, support, out=np.zeros(n_classes), where=support > 0)
    pr = precision + recall
    f1 = np.divide(2 * precision * recall, pr, out=np.zeros(n_classes), where=pr > 0)
    return float((support * f1).sum() / counts.sum())


@torch.no_grad()
def evaluate(net: nn.Module, x: np.ndarray, y: np.ndarray,
             batch_size: int = 512) -> tuple[float, float]:
    """(accuracy, weighted F1) of eval-mode predictions."""
    net.eval()
    preds = []
    for start in range(0, len(x), batch_size):
        logits = net(torch.from_numpy(x[start : start + batch_size]).float())
        preds.append(logits.argmax(dim=1).numpy())
    preds = np.concatenate(preds)
    return float((preds == y).mean()), weighted_f1(y, preds, len(KEYWORDS))


def fit(net: nn.Module, features_for_epoch, epochs: int, batch_size: int,
        lr: float, seed: int, x_val: np.ndarray | None = None,
        y_val: np.ndarray | None = None) -> list[dict]:
    """Adam + cosine decay over epochs; returns the per-epoch log.

    `features_for_epoch(epoch)` supplies that epoch's (already normalized)
    training features and labels, so augmentation can vary per epoch while
    the optimizer state carries through.
    """
    torch.manual_seed(seed)
    optimizer = torch.optim.Adam(net.parameters(), lr=lr)
    scheduler = torch.optim.lr_scheduler.CosineAnnealingLR(optimizer, T_max=max(epochs, 1))
    loss_fn = nn.CrossEntropyLoss()
    rng = np.random.default_rng(seed)

    log = []
    for epoch in range(epochs):
        x_train, y_train = features_for_epoch(epoch)
        net.train()
        losses = []
        for idx in _batches(len(x_train), batch_size, rng):
            optimizer.zero_grad()
            logits = net(torch.from_numpy(x_train[idx]).float())
            loss = loss_fn(logits, torch.from_numpy(y_train[idx]))
            if not torch.isfinite(loss):
                raise TrainingError(f"loss diverged at epoch {epoch}: {log}")
            loss.backward()
            optimizer.step()
            losses.append(float(loss.detach()))
        scheduler.step()
        entry = {"epoch": epoch, "loss": float(np.mean(losses))}
        if x_val is not None and len(x_val):
            entry["val_acc"], entry["val_f1"] = evaluate(net, x_val, y_val)
        log.append(entry)
    return log


def overfit_steps(net: nn.Module, x: np.ndarray, y: np.ndarray,
                  steps: int, lr: float = 1e-2, seed: int = 0) -> float:
    """Full-batch training on one small batch; returns final train accuracy."""
    torch.manual_seed(seed)
    optimizer = torch.optim.Adam(net.parameters(), lr=lr)
    loss_fn = nn.CrossEntropyLoss()
    xt, yt = torch.from_numpy(x).float(), torch.from_numpy(y)
    for _ in range(steps):
        net.train()
        optimizer.zero_grad()
        loss = loss_fn(net(xt), yt)
        loss.backward()
        optimizer.step()
    acc, _ = evaluate(net, x, y)
    return acc


def train_gscd(cfg: TrainConfig, root, out_path, log_path=None) -> dict:
    """Full pipeline: dataset -> augmented training -> stats -> KWSM export."""
    splits = prepare_dataset(root)
    settings = cfg.settings

    base_feats, y_train = features_of(splits.train, settings)
    mean, std = norm_stats(base_feats)

    def norm_all(feats):
        return np.stack([normalize(f, mean, std) for f in feats]).astype(np.float32)

    x_val = y_val = None
    if splits.val:
        val_feats, y_val = features_of(splits.val, settings)
        x_val = norm_all(val_feats)

    net = build_net(cfg.model, cfg.n_mels)

    def epoch_features(epoch: int):
        augment = NoiseAugmenter(splits.noise_files, cfg.noise_mix_rate,
                                 seed=cfg.seed * 1000 + epoch)
        feats, _ = features_of(splits.train, settings, augment=augment)
        return norm_all(feats), y_train

    log = fit(net, epoch_features, epochs=cfg.epochs, batch_size=cfg.batch_size,
              lr=cfg.lr, seed=cfg.seed, x_val=x_val, y_val=y_val)

    result = {"config": asdict(cfg), "epochs": log}
    if splits.test:
        test_feats, y_test = features_of(splits.test, settings)
        acc, f1 = evaluate(net, norm_all(test_feats), y_test)
        result["test_acc"], result["test_f1"] = acc, f1

    export_kwsm(net, settings, mean, std, out_path)
    result["model_path"] = str(out_path)
    if log_path is not None:
        Path(log_path).write_text(json.dumps(result, indent=2), encoding="utf-8")
    result["net"] = net  # handed back for in-process use, never serialized
    return result


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Train a keyword-spotting model on GSCD v0.02")
    parser.add_argument("--root", required=True, help="dataset directory")
    parser.add_argument("--model", choices=("tkws2", "tkws3", "dscnn"), default="tkws3")
    parser.add_argument("--mels", type=int, choices=(15, 30), default=15)
    parser.add_argument("--windows", type=int, choices=(32, 63), default=63)
    parser.add_argument("--epochs", type=int, default=30)
    parser.add_argument("--batch-size", type=int, default=128)
    parser.add_argument("--lr", type=float, default=3e-3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--mix-rate", type=float, default=0.8)
    parser.add_argument("--out", required=True, help="output .kwsm path")
    parser.add_argument("--log", help="output JSON training log")
    args = parser.parse_args(argv)

    cfg = TrainConfig(model=args.model, n_mels=args.mels, n_windows=args.windows,
                      epochs=args.epochs, batch_size=args.batch_size, lr=args.lr,
                      seed=args.seed, noise_mix_rate=args.mix_rate)
    result = train_gscd(cfg, args.root, args.out, args.log)
    if "test_f1" in result:
        print(f"test weighted F1: {result['test_f1']:.4f}")
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
