import numpy as np
import pytest

from tinykws.errors import EvaluationError, MeasurementError
from tinykws.frontend import MfccConfig, NormStats, standard_config
from tinykws.metrics import (
    ConfusionMatrix,
    MeasurementRow,
    StageMeasurement,
    compose_edp,
    cost_report,
    count_macs,
    count_params,
    format_report,
    heatmap_report,
    parse_measurements,
    parse_report,
    weighted_f1,
)
from tinykws.models import (
    FloatParams,
    LayerSpec,
    ModelGraph,
    build_tkws,
    default_tkws_hyper,
)


def graph_with_layers(layers, cfg=None):
    cfg = cfg or standard_config(15, 32)
    return ModelGraph(
        name="t",
        mfcc_config=cfg,
        norm_stats=NormStats(np.zeros(cfg.n_mels), np.ones(cfg.n_mels)),
        layers=tuple(layers),
    )


def fc_layer(n_in, n_out):
    return LayerSpec("fc", c_in=n_in, c_out=n_out,
                     params=FloatParams(np.zeros((n_out, n_in), np.float32),
                                        np.zeros(n_out, np.float32)))


class TestWeightedF1:
    def test_perfect_diagonal(self):
        assert weighted_f1(ConfusionMatrix(np.eye(10, dtype=int) * 7)) == 1.0

    def test_zero_diagonal(self):
        cm = np.ones((4, 4), dtype=int) - np.eye(4, dtype=int)
        assert weighted_f1(ConfusionMatrix(cm)) == 0.0

    def test_three_class_hand_computation(self):
        cm = ConfusionMatrix(np.array([[5, 1, 0], [1, 3, 1], [0, 1, 4]]))
        # per-class F1: 10/12, 6/10, 8/10; weighted by support 6, 5, 5 over 16
        assert weighted_f1(cm) == pytest.approx(0.75, abs=1e-12)

    def test_permutation_invariance(self, rng):
        for _ in range(100):
            counts = rng.integers(0, 20, size=(10, 10))
            perm = rng.permutation(10)
            base = weighted_f1(ConfusionMatrix(counts))
            relabeled = weighted_f1(ConfusionMatrix(counts[np.ix_(perm, perm)]))
            assert relabeled == pytest.approx(base, abs=1e-12)

    def test_empty_matrix_rejected(self):
        with pytest.raises(EvaluationError):
            weighted_f1(ConfusionMatrix(np.zeros((10, 10), dtype=int)))

    def test_non_square_rejected(self):
        with pytest.raises(EvaluationError):
            ConfusionMatrix(np.zeros((3, 4), dtype=int))


class TestCounts:
    def test_fc_params(self):
        g = graph_with_layers([LayerSpec("gap"), fc_layer(24, 10), LayerSpec("softmax")])
        assert count_params(g) == 250  # 24*10 + 10

    def test_param_free_graph(self):
        g = graph_with_layers([LayerSpec("gap"), LayerSpec("softmax")])
        assert count_params(g) == 0

    def test_fc_macs(self):
        g = graph_with_layers([LayerSpec("gap"), fc_layer(15, 10), LayerSpec("softmax")])
        assert count_macs(g) == 150

    def test_pointwise_macs(self):
        cfg = MfccConfig(n_mels=8, n_windows=32, fft_size=512)
        pw = LayerSpec("pointwise", c_in=8, c_out=16,
                       params=FloatParams(np.zeros((16, 8), np.float32),
                                          np.zeros(16, np.float32)))
        g = graph_with_layers([pw, LayerSpec("gap"), fc_layer(16, 10),
                               LayerSpec("softmax")], cfg)
        assert count_macs(g) == 8 * 16 * 32 + 160

    def test_tkws_macs_linear_in_windows(self):
        hyper = default_tkws_hyper(3)
        base = MfccConfig(n_mels=15, n_windows=20, fft_size=512)
        double = MfccConfig(n_mels=15, n_windows=40, fft_size=512)
        m1 = count_macs(build_tkws(hyper, base))
        m2 = count_macs(build_tkws(hyper, double))
        fc_macs = 10 * hyper.block_channels
        assert m2 - fc_macs == 2 * (m1 - fc_macs)

    def test_cost_report_fields(self):
        g = build_tkws(default_tkws_hyper(3), standard_config(15, 63))
        report = cost_report(g)
        assert report.params == count_params(g)
        assert report.macs == count_macs(g)
        assert report.flash_bytes >= report.params  # float32 weights + header
        assert report.peak_activation_bytes > 0


class TestComposeEdp:
    def test_unit_case(self):
        pre = StageMeasurement(1.0, 1.0, "preprocessing")
        inf = StageMeasurement(1.0, 1.0, "inference")
        report = compose_edp(pre, inf)
        assert report.total_latency_ms == 2.0
        assert report.total_energy_mj == 2.0
        assert report.edp_mj_ms == 4.0

    def test_latency_scaling(self):
        base = compose_edp(StageMeasurement(1.0, 2.0, "preprocessing"),
                           StageMeasurement(3.0, 4.0, "inference"))
        scaled = compose_edp(StageMeasurement(5.0, 2.0, "preprocessing"),
                             StageMeasurement(15.0, 4.0, "inference"))
        assert scaled.edp_mj_ms == pytest.approx(5.0 * base.edp_mj_ms)

    def test_monotone_in_each_input(self, rng):
        for _ in range(100):
            lp, ep, li, ei = rng.uniform(0.1, 10, 4)
            base = compose_edp(StageMeasurement(lp, ep, "preprocessing"),
                               StageMeasurement(li, ei, "inference")).edp_mj_ms
            bump = rng.uniform(0.01, 1.0)
            for args in (
                (lp + bump, ep, li, ei),
                (lp, ep + bump, li, ei),
                (lp, ep, li + bump, ei),
                (lp, ep, li, ei + bump),
            ):
                edp = compose_edp(StageMeasurement(args[0], args[1], "preprocessing"),
                                  StageMeasurement(args[2], args[3], "inference")).edp_mj_ms
                assert edp > base

    def test_product_invariant(self, rng):
        for _ in range(50):
            lp, ep, li, ei = rng.uniform(0.1, 100, 4)
            r = compose_edp(StageMeasurement(lp, ep, "preprocessing"),
                            StageMeasurement(li, ei, "inference"))
            assert r.edp_mj_ms == pytest.approx(
                r.total_latency_ms * r.total_energy_mj, rel=1e-9)

    def test_stage_swap_leaves_totals(self):
        a = compose_edp(StageMeasurement(1.5, 7.0, "preprocessing"),
                        StageMeasurement(4.0, 2.5, "inference"))
        b = compose_edp(StageMeasurement(4.0, 2.5, "preprocessing"),
                        StageMeasurement(1.5, 7.0, "inference"))
        assert a.edp_mj_ms == b.edp_mj_ms

    def test_wrong_stage_tags_rejected(self):
        pre = StageMeasurement(1.0, 1.0, "preprocessing")
        inf = StageMeasurement(1.0, 1.0, "inference")
        with pytest.raises(MeasurementError):
            compose_edp(inf, pre)

    def test_nonpositive_rejected(self):
        with pytest.raises(MeasurementError):
            StageMeasurement(0.0, 1.0, "preprocessing")
        with pytest.raises(MeasurementError):
            StageMeasurement(1.0, -2.0, "inference")
        with pytest.raises(MeasurementError):
            StageMeasurement(1.0, 1.0, "postprocessing")


def measurement_table(platforms=("u5", "h7"), models=("tkws3",), mfccs=("15x32", "15x63")):
    rows = []
    v = 1.0
    for p in platforms:
        for m in models:
            for c in mfccs:
                rows.append(MeasurementRow(p, m, c, "preprocessing", v, v + 0.5))
                rows.append(MeasurementRow(p, m, c, "inference", v + 1.0, v + 1.5))
                v += 0.37
    return rows


class TestHeatmapReport:
    def test_row_per_complete_triple(self):
        report = heatmap_report(measurement_table())
        assert len(report) == 4
        keys = [(r.platform, r.mfcc, r.model) for r in report]
        assert keys == sorted(keys)  # sorted by platform, config, model

    def test_missing_stage_names_triple(self):
        rows = [r for r in measurement_table()
                if not (r.platform == "h7" and r.mfcc == "15x63" and r.stage == "inference")]
        with pytest.raises(MeasurementError, match="h7/tkws3/15x63"):
            heatmap_report(rows)

    def test_duplicate_stage_rejected(self):
        rows = measurement_table()
        with pytest.raises(MeasurementError, match="duplicate"):
            heatmap_report(rows + [rows[0]])

    def test_csv_round_trip_byte_stable(self):
        text = format_report(heatmap_report(measurement_table()))
        assert format_report(parse_report(text)) == text

    def test_measurement_csv_parsing(self):
        text = (
            "platform,model,mfcc,stage,latency_ms,energy_mj\n"
            "u5,tkws3,15x32,preprocessing,1.5,2.5\n"
            "u5,tkws3,15x32,inference,3.5,4.5\n"
        )
        rows = parse_measurements(text)
        assert len(rows) == 2
        report = heatmap_report(rows)
        assert report[0].edp_mj_ms == pytest.approx(5.0 * 7.0)

    def test_bad_header_rejected(self):
        with pytest.raises(MeasurementError):
            parse_measurements("a,b\n1,2\n")

    def test_bad_stage_rejected(self):
        text = ("platform,model,mfcc,stage,latency_ms,energy_mj\n"
                "u5,tkws3,15x32,warmup,1.0,1.0\n")
        with pytest.raises(MeasurementError):
            parse_measurements(text)
