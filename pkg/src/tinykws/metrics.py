"""Classification metrics, structural cost model, and EDP reporting.

Latency/energy numbers are *inputs* here (hardware measurements); this
module composes them into per-pipeline energy-delay products and emits the
heatmap-shaped report table. MAC counting uses one MAC per multiply-add
and ignores requantization arithmetic.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError, MeasurementError
from .models import ModelGraph, activation_shapes, layer_param_count, serialize_model

STAGES = ("preprocessing", "inference")


@dataclass
class ConfusionMatrix:
    """Square count matrix, rows = true class, cols = predicted class."""

    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 2 or self.counts.shape[0] != self.counts.shape[1]:
            raise EvaluationError(f"confusion matrix must be square, got {self.counts.shape}")
        if np.any(self.counts < 0):
            raise EvaluationError("confusion matrix entries must be >= 0")

    @classmethod
    def empty(cls, n_classes: int) -> "ConfusionMatrix":
        return cls(np.zeros((n_classes, n_classes), dtype=np.int64))

    def add(self, true_idx: int, pred_idx: int) -> None:
        self.counts[true_idx, pred_idx] += 1

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def weighted_f1(cm: ConfusionMatrix) -> float:
    """Support-weighted mean of per-class F1 scores."""
    counts = cm.counts.astype(np.float64)
    total = counts.sum()
    if total == 0:
        raise EvaluationError("empty confusion matrix")
    diag = np.diag(counts)
    support = counts.sum(axis=1)
    pred = counts.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(pred > 0, diag / pred, 0.0)
        recall = np.where(support > 0, diag / support, 0.0)
        pr = precision + recall
        f1 = np.where(pr > 0, 2.0 * precision * recall / np.where(pr > 0, pr, 1.0), 0.0)
    return float((support * f1).sum() / total)


@dataclass(frozen=True)
class StageMeasurement:
    latency_ms: float
    energy_mj: float
    stage: str

    def __post_init__(self):
        if self.stage not in STAGES:
            raise MeasurementError(f"stage must be one of {STAGES}, got {self.stage!r}")
        if self.latency_ms <= 0 or self.energy_mj <= 0:
            raise MeasurementError("latency and energy must be strictly positive")


@dataclass(frozen=True)
class EdpReport:
    total_latency_ms: float
    total_energy_mj: float
    edp_mj_ms: float


def compose_edp(pre: StageMeasurement, inf: StageMeasurement) -> EdpReport:
    """EDP of a pipeline = (L_pre + L_inf) * (E_pre + E_inf), in mJ*ms."""
    if pre.stage != "preprocessing":
        raise MeasurementError(f"first argument must be the preprocessing stage, got {pre.stage}")
    if inf.stage != "inference":
        raise MeasurementError(f"second argument must be the inference stage, got {inf.stage}")
    latency = pre.latency_ms + inf.latency_ms
    energy = pre.energy_mj + inf.energy_mj
    return EdpReport(latency, energy, latency * energy)


@dataclass(frozen=True)
class CostReport:
    params: int
    macs: int
    flash_bytes: int
    peak_activation_bytes: int


def count_params(model: ModelGraph) -> int:
    """Total weight + bias elements over all layers."""
    return sum(layer_param_count(s) for s in model.layers)


def count_macs(model: ModelGraph) -> int:
    """Multiply-accumulate count for one inference."""
    total = 0
    for spec, (_, out_shape) in zip(model.layers, activation_shapes(model)):
        spatial = int(np.prod(out_shape[1:])) if len(out_shape) > 1 else 1
        if spec.kind == "pointwise":
            total += spec.c_out * spec.c_in * spatial
        elif spec.kind == "depthwise1d":
            total += spec.c_in * spec.kernel[0] * spatial
        elif spec.kind == "conv2d":
            total += spec.c_out * spec.c_in * spec.kernel[0] * spec.kernel[1] * spatial
        elif spec.kind == "depthwise2d":
            total += spec.c_in * spec.kernel[0] * spec.kernel[1] * spatial
        elif spec.kind == "fc":
            total += spec.c_in * spec.c_out
    return total


def cost_report(model: ModelGraph) -> CostReport:
    """Static cost summary: parameters, MACs, flash size, activation peak.

    Flash is the serialized KWSM size; the activation peak assumes the
    usual two-buffer execution (input + output live simultaneously).
    """
    elem_bytes = 1 if model.quantized else 4
    peak = 0
    for in_shape, out_shape in activation_shapes(model):
        peak = max(peak, (int(np.prod(in_shape)) + int(np.prod(out_shape))) * elem_bytes)
    return CostReport(
        params=count_params(model),
        macs=count_macs(model),
        flash_bytes=len(serialize_model(model)),
        peak_activation_bytes=peak,
    )


# ---------------------------------------------------------------------------
# measurement tables and the heatmap-shaped report

MEASUREMENT_HEADER = ["platform", "model", "mfcc", "stage", "latency_ms", "energy_mj"]
REPORT_HEADER = ["platform", "model", "mfcc", "L_ms", "E_mj", "EDP_mj_ms"]


@dataclass(frozen=True)
class MeasurementRow:
    platform: str
    model: str
    mfcc: str
    stage: str
    latency_ms: float
    energy_mj: float


@dataclass(frozen=True)
class ReportRow:
    platform: str
    model: str
    mfcc: str
    latency_ms: float
    energy_mj: float
    edp_mj_ms: float


def parse_measurements(text: str) -> list[MeasurementRow]:
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or rows[0] != MEASUREMENT_HEADER:
        raise MeasurementError(f"measurement table must start with {','.join(MEASUREMENT_HEADER)}")
    out = []
    for lineno, row in enumerate(rows[1:], 2):
        if not row:
            continue
        if len(row) != 6:
            raise MeasurementError(f"line {lineno}: expected 6 fields, got {len(row)}")
        try:
            latency, energy = float(row[4]), float(row[5])
        except ValueError as e:
            raise MeasurementError(f"line {lineno}: {e}") from e
        if row[3] not in STAGES:
            raise MeasurementError(f"line {lineno}: unknown stage {row[3]!r}")
        if latency <= 0 or energy <= 0:
            raise MeasurementError(f"line {lineno}: latency/energy must be positive")
        out.append(MeasurementRow(row[0], row[1], row[2], row[3], latency, energy))
    return out


def heatmap_report(measurements: list[MeasurementRow]) -> list[ReportRow]:
    """Compose per-(platform, model, mfcc) totals and EDP.

    Every triple must carry exactly one preprocessing and one inference
    row; the error names the offending triple.
    """
    cells: dict[tuple[str, str, str], dict[str, MeasurementRow]] = {}
    for row in measurements:
        key = (row.platform, row.model, row.mfcc)
        stages = cells.setdefault(key, {})
        if row.stage in stages:
            raise MeasurementError(f"duplicate {row.stage} row for {'/'.join(key)}")
        stages[row.stage] = row

    report = []
    for key in sorted(cells, key=lambda k: (k[0], k[2], k[1])):  # platform, config, model
        stages = cells[key]
        for stage in STAGES:
            if stage not in stages:
                raise MeasurementError(f"missing {stage} row for {'/'.join(key)}")
        edp = compose_edp(
            StageMeasurement(stages["preprocessing"].latency_ms,
                             stages["preprocessing"].energy_mj, "preprocessing"),
            StageMeasurement(stages["inference"].latency_ms,
                             stages["inference"].energy_mj, "inference"),
        )
        report.append(ReportRow(key[0], key[1], key[2], edp.total_latency_ms,
                                edp.total_energy_mj, edp.edp_mj_ms))
    return report


def _fmt(x: float) -> str:
    return f"{x:.4g}"


def format_report(rows: list[ReportRow]) -> str:
    """Render the report CSV; values carry 4 significant digits."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(REPORT_HEADER)
    for r in rows:
        writer.writerow([r.platform, r.model, r.mfcc,
                         _fmt(r.latency_ms), _fmt(r.energy_mj), _fmt(r.edp_mj_ms)])
    return out.getvalue()


def parse_report(text: str) -> list[ReportRow]:
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or rows[0] != REPORT_HEADER:
        raise MeasurementError(f"report must start with {','.join(REPORT_HEADER)}")
    return [
        ReportRow(r[0], r[1], r[2], float(r[3]), float(r[4]), float(r[5]))
        for r in rows[1:]
        if r
    ]
