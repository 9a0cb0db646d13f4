"""Keyword-spotting pipeline: MFCC front-end, int8 inference, cost reports."""

from .audio import AudioClip, SnrSpec, load_wav, mix_at_snr, sample_snr
from .frontend import (
    FeatureMap,
    MfccConfig,
    NormStats,
    extract_mfcc,
    frame_plan,
    normalize,
    standard_config,
    standard_configs,
)
from .metrics import (
    ConfusionMatrix,
    CostReport,
    EdpReport,
    StageMeasurement,
    compose_edp,
    cost_report,
    count_macs,
    count_params,
    heatmap_report,
    weighted_f1,
)
from .models import (
    KEYWORDS,
    ModelGraph,
    TkwsHyper,
    build_dscnn,
    build_tkws,
    default_tkws_hyper,
    infer,
    load_model,
    predict,
    save_model,
)
from .quantizer import CalibrationSet, FloatGraph, calibrate, quantize, quantize_graph

__version__ = "0.1.0"
