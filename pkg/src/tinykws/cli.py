"""Command-line front door: featurize, infer, eval, augment, cost, edp, inspect.

Exit codes: 0 success, 1 usage error, 2 data/format error. Set KWS_LOG to
debug/info/warning to control verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .audio import SnrSpec, load_wav, mix_at_snr, read_manifest, sample_snr, save_wav
from .errors import KwsError
from .frontend import extract_mfcc, save_features, standard_config
from .metrics import ConfusionMatrix, cost_report, format_report, heatmap_report, parse_measurements, weighted_f1
from .models import infer, layer_param_count, load_model, predict


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; the CLI contract wants 1.
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="tinykws", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("featurize", help="extract MFCC features from a WAV file")
    p.add_argument("--wav", required=True)
    p.add_argument("--mels", type=int, choices=(15, 30), required=True)
    p.add_argument("--windows", type=int, choices=(32, 63), required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("infer", help="classify one WAV file")
    p.add_argument("--model", required=True)
    p.add_argument("--wav", required=True)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("eval", help="evaluate a manifest of labeled WAV files")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("augment", help="mix noise into a clip at a chosen SNR")
    p.add_argument("--wav", required=True)
    p.add_argument("--noise", required=True)
    p.add_argument("--out", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--snr", type=float)
    group.add_argument("--snr-random", action="store_true")
    p.add_argument("--snr-mean", type=float, default=10.0)
    p.add_argument("--snr-std", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("cost", help="print the static cost report of a model")
    p.add_argument("--model", required=True)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("edp", help="compose measurements into the EDP report table")
    p.add_argument("--measurements", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("inspect", help="print model topology")
    p.add_argument("--model", required=True)

    return parser


def _cmd_featurize(args) -> int:
    clip = load_wav(args.wav)
    features = extract_mfcc(clip, standard_config(args.mels, args.windows))
    save_features(features, args.out)
    print(f"wrote {args.out} ({args.mels}x{args.windows})")
    return 0


def _cmd_infer(args) -> int:
    model = load_model(args.model)
    clip = load_wav(args.wav)
    features = extract_mfcc(clip, model.mfcc_config)
    label, confidence = predict(infer(model, features, raw=True), model.labels)
    if args.json:
        print(json.dumps({"label": label, "confidence": round(confidence, 4)}))
    else:
        print(f"{label} {confidence:.4f}")
    return 0


def _cmd_eval(args) -> int:
    model = load_model(args.model)
    root = Path(args.manifest).parent
    entries = read_manifest(args.manifest)
    label_idx = {name: i for i, name in enumerate(model.labels)}

    cm = ConfusionMatrix.empty(len(model.labels))
    for relpath, label in entries:
        if label not in label_idx:
            raise KwsError(f"manifest label {label!r} not among model labels")
        clip = load_wav(root / relpath)
        features = extract_mfcc(clip, model.mfcc_config)
        pred_label, _ = predict(infer(model, features, raw=True), model.labels)
        cm.add(label_idx[label], label_idx[pred_label])

    f1 = weighted_f1(cm)
    if args.json:
        print(json.dumps({
            "labels": list(model.labels),
            "confusion": cm.counts.tolist(),
            "weighted_f1": round(f1, 4),
        }))
    else:
        width = max(len(l) for l in model.labels)
        for name, row in zip(model.labels, cm.counts):
            print(f"{name:>{width}} " + " ".join(f"{v:5d}" for v in row))
        print(f"weighted_f1 {f1:.4f}")
    return 0


def _cmd_augment(args) -> int:
    signal = load_wav(args.wav)
    noise = load_wav(args.noise)
    if args.snr_random:
        rng = np.random.default_rng(args.seed)
        snr_db = sample_snr(rng, SnrSpec(args.snr_mean, args.snr_std))
    else:
        snr_db = args.snr
    save_wav(mix_at_snr(signal, noise, snr_db), args.out)
    print(f"wrote {args.out} (snr {snr_db:.2f} dB)")
    return 0


def _cmd_cost(args) -> int:
    report = cost_report(load_model(args.model))
    if args.json:
        print(json.dumps(report.__dict__))
    else:
        print(f"params {report.params}")
        print(f"macs {report.macs}")
        print(f"flash_bytes {report.flash_bytes}")
        print(f"peak_activation_bytes {report.peak_activation_bytes}")
    return 0


def _cmd_edp(args) -> int:
    rows = parse_measurements(Path(args.measurements).read_text(encoding="utf-8"))
    Path(args.out).write_text(format_report(heatmap_report(rows)), encoding="utf-8")
    print(f"wrote {args.out}")
    return 0


def _cmd_inspect(args) -> int:
    model = load_model(args.model)
    cfg = model.mfcc_config
    print(f"name {model.name}")
    print(f"dtype {'int8' if model.quantized else 'float32'}")
    print(f"mfcc {cfg.key} fft={cfg.fft_size}")
    print(f"labels {' '.join(model.labels)}")
    total = 0
    for i, spec in enumerate(model.layers):
        n = layer_param_count(spec)
        total += n
        geo = []
        if spec.c_in is not None:
            geo.append(f"{spec.c_in}->{spec.c_out}")
        if spec.kernel:
            geo.append(f"k={'x'.join(map(str, spec.kernel))}")
        if spec.stride:
            geo.append(f"s={'x'.join(map(str, spec.stride))}")
        if spec.relu:
            geo.append("relu")
        print(f"layer {i:2d} {spec.kind:<14} {' '.join(geo):<24} params {n}")
    print(f"total_params {total}")
    return 0


_COMMANDS = {
    "featurize": _cmd_featurize,
    "infer": _cmd_infer,
    "eval": _cmd_eval,
    "augment": _cmd_augment,
    "cost": _cmd_cost,
    "edp": _cmd_edp,
    "inspect": _cmd_inspect,
}


def run(argv) -> int:
    level = os.environ.get("KWS_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(str(e), file=sys.stderr)
        return 1
    except SystemExit as e:  # --help
        return 0 if e.code in (0, None) else 1
    try:
        return _COMMANDS[args.command](args)
    except KwsError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
