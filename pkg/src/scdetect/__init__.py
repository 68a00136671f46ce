"""Multimodal smart-contract vulnerability detection toolkit."""

from .config import Config, ConfigError, load_config, parse_config
from .data import ContractSample, gen_synthetic, labels_matrix, load_dataset, save_dataset
from .detector import MultimodalVulnerabilityDetector, prepare_sample
from .metrics import (
    MetricsReport,
    hamming_score,
    hamming_score_iou,
    hs_degradation,
    metrics_report,
    prf1,
)
from .robustness import RobustnessReport, obfuscate_sample, run_robustness

__version__ = "0.1.0"

__all__ = [
    "Config",
    "ConfigError",
    "load_config",
    "parse_config",
    "ContractSample",
    "gen_synthetic",
    "labels_matrix",
    "load_dataset",
    "save_dataset",
    "MultimodalVulnerabilityDetector",
    "prepare_sample",
    "MetricsReport",
    "hamming_score",
    "hamming_score_iou",
    "hs_degradation",
    "metrics_report",
    "prf1",
    "RobustnessReport",
    "obfuscate_sample",
    "run_robustness",
    "__version__",
]
