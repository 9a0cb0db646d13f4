"""Training side of the keyword-spotting pipeline: GSCD data handling,
float TKWS/DS-CNN training, KWSM export for the quantizing engine."""

from .datasets import prepare_dataset
from .export import export_kwsm, param_count
from .features import KEYWORDS, MfccSettings, mfcc, norm_stats
from .models import build_net
from .train import TrainConfig, fit, overfit_steps, train_gscd

__version__ = "0.1.0"
