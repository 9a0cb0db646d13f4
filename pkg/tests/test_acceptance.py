"""Acceptance gate: one test per release criterion, each printing a
PASS/FAIL line (run with `pytest tests/test_acceptance.py -s` to see them
inline)."""

import numpy as np
import pytest

import oracles
from conftest import random_qparams, random_qtensor
from tinykws import tensorcore as tc
from tinykws.errors import ModelCorruptionError
from tinykws.frontend import (
    FeatureMap,
    extract_mfcc,
    frame_plan,
    standard_config,
    standard_configs,
)
from tinykws.audio import AudioClip
from tinykws.metrics import (
    ConfusionMatrix,
    MeasurementRow,
    StageMeasurement,
    compose_edp,
    count_params,
    format_report,
    heatmap_report,
    parse_report,
    weighted_f1,
)
from tinykws.models import (
    build_dscnn,
    build_tkws,
    default_tkws_hyper,
    deserialize_model,
    infer,
    serialize_model,
)
from tinykws.quantizer import CalibrationSet, quantize


def report(name, detail=""):
    print(f"\nACCEPT {name}: PASS {detail}")


def test_criterion_parameter_counts():
    targets = {
        ("tkws2", 15): 4600, ("tkws2", 30): 5000,
        ("tkws3", 15): 14400, ("tkws3", 30): 14900,
    }
    counts = {}
    for n_blocks in (2, 3):
        hyper = default_tkws_hyper(n_blocks)
        for n_mels in (15, 30):
            per_window = [
                count_params(build_tkws(hyper, standard_config(n_mels, w)))
                for w in (32, 63)
            ]
            assert per_window[0] == per_window[1], "TKWS count must not depend on windows"
            counts[(f"tkws{n_blocks}", n_mels)] = per_window[0]

    for key, target in targets.items():
        got = counts[key]
        assert abs(got - target) <= 0.15 * target, f"{key}: {got} vs {target} +-15%"

    for model in ("tkws2", "tkws3"):
        delta = counts[(model, 30)] - counts[(model, 15)]
        assert 300 <= delta <= 600, f"{model} mel delta {delta}"

    dscnn = {count_params(build_dscnn(cfg)) for cfg in standard_configs()}
    assert len(dscnn) == 1
    got = dscnn.pop()
    assert abs(got - 46500) <= 0.15 * 46500

    report("parameter-counts",
           f"tkws2={counts[('tkws2', 15)]}/{counts[('tkws2', 30)]} "
           f"tkws3={counts[('tkws3', 15)]}/{counts[('tkws3', 30)]} dscnn={got}")


def test_criterion_mfcc_oracle_equivalence():
    rng = np.random.default_rng(2024)
    clips = [rng.integers(-25000, 25000, 16000).astype(np.int16) for _ in range(10)]
    worst = 0.0
    for cfg in standard_configs():
        for samples in clips:
            fast = extract_mfcc(AudioClip(samples), cfg).data
            slow = oracles.matrix_mfcc(samples, cfg.n_mels, cfg.n_windows, cfg.fft_size)
            rel = float(np.linalg.norm(fast - slow) / np.linalg.norm(slow))
            worst = max(worst, rel)
            assert rel < 1e-4, f"{cfg.key}: relative Frobenius error {rel}"
    report("mfcc-oracle-equivalence", f"worst rel err {worst:.2e} over 10 clips x 4 configs")


def test_criterion_frame_plan():
    plan32 = frame_plan(standard_config(15, 32))
    plan63 = frame_plan(standard_config(15, 63))
    assert plan32.hop == 483
    assert plan63.hop == 249
    for cfg in standard_configs():
        assert frame_plan(cfg).last_sample() <= 16000
    report("frame-plan", f"hops {plan32.hop}/{plan63.hop}, all frames inside the clip")


def _assert_lsb(out, ref):
    assert np.max(np.abs(out.astype(np.int64) - ref.astype(np.int64))) <= 1


def test_criterion_quantized_kernel_fidelity():
    rng = np.random.default_rng(77)
    n = 1000

    for _ in range(n):
        x = random_qtensor(rng, (int(rng.integers(2, 9)), int(rng.integers(3, 12))))
        c_out = int(rng.integers(2, 9))
        p = random_qparams(rng, (c_out, x.shape[0]), x.scale, relu=bool(rng.integers(2)))
        _assert_lsb(tc.conv_pointwise(x, p, c_out).data, oracles.pointwise_oracle(x, p))

    for _ in range(n):
        c, t = int(rng.integers(2, 7)), int(rng.integers(8, 24))
        k, stride = int(rng.integers(1, 8)), int(rng.integers(1, 3))
        x = random_qtensor(rng, (c, t))
        p = random_qparams(rng, (c, k), x.scale, acc_taps=k, relu=bool(rng.integers(2)))
        _assert_lsb(tc.conv1d_depthwise(x, p, k, stride).data,
                    oracles.depthwise1d_oracle(x, p, k, stride))

    for i in range(n):
        depthwise = i % 2 == 1
        c_in = int(rng.integers(1, 4))
        h, w = int(rng.integers(4, 9)), int(rng.integers(4, 9))
        kh, kw = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        stride = (int(rng.integers(1, 3)), int(rng.integers(1, 3)))
        x = random_qtensor(rng, (c_in, h, w))
        if depthwise:
            p = random_qparams(rng, (c_in, kh, kw), x.scale, acc_taps=kh * kw)
        else:
            c_out = int(rng.integers(1, 5))
            p = random_qparams(rng, (c_out, c_in, kh, kw), x.scale,
                               acc_taps=c_in * kh * kw)
        _assert_lsb(tc.conv2d(x, p, (kh, kw), stride, depthwise=depthwise).data,
                    oracles.conv2d_oracle(x, p, (kh, kw), stride, depthwise))

    for _ in range(n):
        dims = (int(rng.integers(2, 9)),) + tuple(
            int(rng.integers(2, 12)) for _ in range(int(rng.integers(1, 3)))
        )
        x = random_qtensor(rng, dims)
        _assert_lsb(tc.global_avg_pool(x).data, oracles.gap_oracle(x))

    for _ in range(n):
        n_in, n_out = int(rng.integers(4, 33)), int(rng.integers(2, 12))
        x = random_qtensor(rng, (n_in,))
        p = random_qparams(rng, (n_out, n_in), x.scale, relu=bool(rng.integers(2)))
        _assert_lsb(tc.fully_connected(x, p, n_out).data, oracles.fc_oracle(x, p))

    for _ in range(n):
        shape = (int(rng.integers(2, 6)), int(rng.integers(2, 10)))
        a, b = random_qtensor(rng, shape), random_qtensor(rng, shape)
        scale, zp = float(rng.uniform(0.01, 0.1)), int(rng.integers(-15, 16))
        _assert_lsb(tc.residual_add(a, b, scale, zp).data,
                    oracles.residual_oracle(a, b, scale, zp))

    # end-to-end: quantized vs float twin on the flagship model
    cfg = standard_config(15, 63)
    g = build_tkws(default_tkws_hyper(3), cfg, seed=7)
    cal = CalibrationSet(tuple(
        FeatureMap(rng.standard_normal((15, 63)), cfg) for _ in range(128)
    ))
    q = quantize(g, cal)
    agree = 0
    for _ in range(1000):
        fm = FeatureMap(rng.standard_normal((15, 63)), cfg)
        agree += int(infer(g, fm).argmax() == infer(q, fm).argmax())
    assert agree >= 950, f"argmax agreement {agree}/1000"
    report("quantized-kernel-fidelity",
           f"6 kernels x {n} cases within 1 LSB; e2e argmax {agree}/1000")


def test_criterion_edp_methodology():
    rng = np.random.default_rng(5)
    # bilinearity: scaling either stage's latency scales EDP linearly
    for _ in range(100):
        lp, ep, li, ei, k = rng.uniform(0.1, 10, 5)
        base = compose_edp(StageMeasurement(lp, ep, "preprocessing"),
                           StageMeasurement(li, ei, "inference")).edp_mj_ms
        scaled = compose_edp(StageMeasurement(k * lp, ep, "preprocessing"),
                             StageMeasurement(k * li, ei, "inference")).edp_mj_ms
        assert scaled == pytest.approx(k * base, rel=1e-9)
        bumped = compose_edp(StageMeasurement(lp + k, ep, "preprocessing"),
                             StageMeasurement(li, ei, "inference")).edp_mj_ms
        assert bumped > base

    platforms = ("u5", "h7", "n6")
    model_names = ("dscnn", "liconet-s", "tenet6", "tenet6-n", "tkws2", "tkws3")
    configs = ("15x32", "30x32", "15x63", "30x63")
    rows = []
    for p in platforms:
        for m in model_names:
            for c in configs:
                rows.append(MeasurementRow(p, m, c, "preprocessing",
                                           float(rng.uniform(0.1, 20)),
                                           float(rng.uniform(0.1, 5))))
                rows.append(MeasurementRow(p, m, c, "inference",
                                           float(rng.uniform(0.1, 20)),
                                           float(rng.uniform(0.1, 5))))
    table = heatmap_report(rows)
    assert len(table) == len(platforms) * len(model_names) * len(configs)
    text = format_report(table)
    assert format_report(parse_report(text)) == text
    report("edp-methodology", f"{len(table)}-row heatmap table round-trips byte-stably")


def test_criterion_weighted_f1():
    cm = ConfusionMatrix(np.array([[5, 1, 0], [1, 3, 1], [0, 1, 4]]))
    assert weighted_f1(cm) == 0.75
    rng = np.random.default_rng(11)
    for _ in range(100):
        counts = rng.integers(0, 30, size=(10, 10))
        perm = rng.permutation(10)
        assert weighted_f1(ConfusionMatrix(counts[np.ix_(perm, perm)])) == pytest.approx(
            weighted_f1(ConfusionMatrix(counts)), abs=1e-12
        )
    report("weighted-f1", "hand case exact; relabeling invariance over 100 matrices")


def test_criterion_kwsm_round_trip():
    rng = np.random.default_rng(21)
    cfg = standard_config(15, 32)
    built = [
        build_tkws(default_tkws_hyper(2), cfg, seed=1),
        build_tkws(default_tkws_hyper(3), cfg, seed=2),
        build_dscnn(cfg, seed=3),
    ]
    cal = CalibrationSet(tuple(
        FeatureMap(rng.standard_normal((15, 32)), cfg) for _ in range(32)
    ))
    built.append(quantize(built[1], cal))

    for model in built:
        raw = serialize_model(model)
        back = deserialize_model(raw)
        assert serialize_model(back) == raw
        for _ in range(5):
            fm = FeatureMap(rng.standard_normal((15, 32)), cfg)
            np.testing.assert_array_equal(infer(model, fm), infer(back, fm))

        corrupted = bytearray(raw)
        corrupted[len(corrupted) // 3] ^= 0x5A
        with pytest.raises(ModelCorruptionError):
            deserialize_model(bytes(corrupted))
        with pytest.raises(ModelCorruptionError):
            deserialize_model(raw[:-40])
    report("kwsm-round-trip", f"{len(built)} models bit-stable; corruption rejected")
