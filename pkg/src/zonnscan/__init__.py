"""Boundary-entropy scanning of neural classifiers.

Estimates, by Monte Carlo sampling in a clipped infinity-norm ball, the
expected base-C entropy of a classifier's confidences around an input point,
and ships the surrounding toolkit: dense feed-forward models, SGD training,
fast-gradient attacks, two-sample KS testing, and the diagnostic experiments
comparing index distributions for adversarial, corner-case, and watermarked
inputs.
"""

from .attacks import AdversarialSet, AttackConfig, fgm, generate_adversarial_set
from .data import LabeledDataset, load_csv, load_idx, make_blobs, write_idx
from .errors import (
    DataError,
    NumericError,
    ParseError,
    ValidationError,
    ZonnscanError,
)
from .kernels import active_backend, available_backends
from .model import (
    DenseLayer,
    MlpModel,
    forward,
    forward_logits,
    init_mlp,
    load_model,
    predict_classes,
    save_model,
    softmax,
)
from .rng import SeededStream
from .sampler import BallRegion, make_region, sample
from .scan import (
    ScanConfig,
    ScanReport,
    class_surface,
    entropy,
    entropy_batch,
    radius_sweep,
    zonnscan,
)
from .stats import (
    DistributionSummary,
    KsResult,
    find_disagreements,
    ks_two_sample,
    summarize,
)
from .training import (
    EpochStats,
    FinetuneResult,
    TrainConfig,
    TrainResult,
    WatermarkKey,
    input_gradient,
    loss_and_gradient,
    train,
    watermark_finetune,
)

__version__ = "0.1.0"

__all__ = [
    "AdversarialSet",
    "AttackConfig",
    "BallRegion",
    "DataError",
    "DenseLayer",
    "DistributionSummary",
    "EpochStats",
    "FinetuneResult",
    "KsResult",
    "LabeledDataset",
    "MlpModel",
    "NumericError",
    "ParseError",
    "ScanConfig",
    "ScanReport",
    "SeededStream",
    "TrainConfig",
    "TrainResult",
    "ValidationError",
    "WatermarkKey",
    "ZonnscanError",
    "active_backend",
    "available_backends",
    "class_surface",
    "entropy",
    "entropy_batch",
    "fgm",
    "find_disagreements",
    "forward",
    "forward_logits",
    "generate_adversarial_set",
    "init_mlp",
    "input_gradient",
    "ks_two_sample",
    "load_csv",
    "load_idx",
    "load_model",
    "loss_and_gradient",
    "make_blobs",
    "make_region",
    "predict_classes",
    "radius_sweep",
    "sample",
    "save_model",
    "softmax",
    "summarize",
    "train",
    "watermark_finetune",
    "write_idx",
    "zonnscan",
]
