"""The boundary-entropy index and its Monte Carlo estimator.

The index of a zone is the expected base-C Shannon entropy of the classifier
output over points drawn uniformly from that zone: 0 means every sampled
point was classified with total certainty, 1 means maximal uncertainty
everywhere.  ``zonnscan`` estimates the index around an input point by
averaging the entropy of ``k`` forward passes on samples from the clipped
infinity-norm ball; with radius 0 it reduces to the entropy of the direct
inference of the point itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ValidationError
from .model import MlpModel
from .rng import SeededStream
from .sampler import check_unit_point, make_region

SIMPLEX_ATOL = 1e-9


@dataclass(frozen=True)
class ScanConfig:
    """Estimator parameters: ball radius, sample count, and base seed."""

    radius: float
    num_samples: int
    seed: int
    keep_entropies: bool = False

    def __post_init__(self) -> None:
        if not (isinstance(self.radius, (int, float)) and math.isfinite(self.radius)):
            raise ValidationError(f"radius must be a finite real, got {self.radius!r}")
        if self.radius < 0:
            raise ValidationError(f"radius must be >= 0, got {self.radius}")
        if not isinstance(self.num_samples, (int, np.integer)) or self.num_samples < 1:
            raise ValidationError(f"num_samples must be a positive integer, got {self.num_samples!r}")
        # range check via the stream type
        SeededStream(self.seed, 0)
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "num_samples", int(self.num_samples))
        object.__setattr__(self, "seed", int(self.seed))

    def to_dict(self) -> dict:
        return {
            "radius": self.radius,
            "num_samples": self.num_samples,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class ScanReport:
    """Result of one Monte Carlo scan around one input point."""

    index_value: float
    mean_confidence: np.ndarray
    entropy_std: float
    config: ScanConfig
    stream_id: int
    entropy_samples: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "index_value": self.index_value,
            "mean_confidence": self.mean_confidence.tolist(),
            "entropy_std": self.entropy_std,
            "stream_id": self.stream_id,
            "config": self.config.to_dict(),
        }


def check_prob_vector(p, atol: float = SIMPLEX_ATOL) -> np.ndarray:
    """Validate a confidence vector and renormalize away roundoff.

    Vectors within ``atol`` of the probability simplex are accepted (tiny
    negative components are clamped to zero, the sum is rescaled to one);
    anything farther off is rejected.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.shape[0] < 2:
        raise ValidationError(f"probability vector needs >= 2 components, got shape {p.shape}")
    if not np.isfinite(p).all():
        raise ValidationError("probability vector contains non-finite components")
    if (p < -atol).any() or (p > 1.0 + atol).any():
        raise ValidationError("probability components must lie in [0, 1]")
    total = p.sum()
    if abs(total - 1.0) > atol:
        raise ValidationError(f"probabilities sum to {total!r}, not 1 within {atol}")
    p = np.maximum(p, 0.0)
    return p / p.sum()


def entropy(p) -> float:
    """Base-C Shannon entropy of a confidence vector, in [0, 1].

    Uses the convention ``0 * log(0) = 0``; the maximum 1 is attained at the
    uniform vector and the minimum 0 at any one-hot vector.
    """
    p = check_prob_vector(p)
    return float(kernels.entropy_rows(p[None, :])[0])


def entropy_batch(probs) -> np.ndarray:
    """Row-wise base-C entropy for a matrix of confidence vectors."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2 or probs.shape[1] < 2:
        raise ValidationError(f"expected shape (n, C>=2), got {probs.shape}")
    return kernels.entropy_rows(probs)


def zonnscan(
    model: MlpModel,
    x,
    config: ScanConfig,
    stream_id: int = 0,
    workers: int = 1,
    backend: str | None = None,
) -> ScanReport:
    """Monte Carlo estimate of the boundary-entropy index around ``x``.

    Draws ``config.num_samples`` points uniformly from the clipped ball of
    ``config.radius`` around ``x``, runs inference on each, and averages the
    base-C output entropies.  Also reports the per-class mean confidences over
    the explored zone.  Identical ``(model, x, config, stream_id)`` always
    produce an identical report, for any ``workers``.
    """
    x = check_unit_point(x)
    if x.shape[0] != model.input_dim:
        raise ValidationError(
            f"input has {x.shape[0]} components, model expects {model.input_dim}"
        )
    region = make_region(x, config.radius)
    stream = SeededStream(config.seed, stream_id)
    ent, probs = kernels.scan_region(
        model.packed(), region.lower, region.upper, stream.key,
        config.num_samples, workers=workers, backend=backend,
    )
    return ScanReport(
        index_value=float(np.mean(ent)),
        mean_confidence=np.mean(probs, axis=0),
        entropy_std=float(np.std(ent)),
        config=config,
        stream_id=stream_id,
        entropy_samples=ent if config.keep_entropies else None,
    )


def radius_sweep(
    model: MlpModel,
    x,
    radii,
    num_samples: int,
    seed: int,
    workers: int = 1,
    backend: str | None = None,
    keep_entropies: bool = False,
) -> list[ScanReport]:
    """One scan per radius, all derived from one base seed.

    Radii must be strictly ascending and lie in [0, 1].  The scan for the
    i-th radius uses stream id ``i``, so the whole sweep is reproducible from
    the single seed.
    """
    radii = [float(r) for r in radii]
    if not radii:
        raise ValidationError("radii must be nonempty")
    for r in radii:
        if not (0.0 <= r <= 1.0):
            raise ValidationError(f"sweep radii must lie in [0, 1], got {r}")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValidationError("radii must be strictly ascending")
    reports = []
    for i, r in enumerate(radii):
        cfg = ScanConfig(radius=r, num_samples=num_samples, seed=seed, keep_entropies=keep_entropies)
        reports.append(zonnscan(model, x, cfg, stream_id=i, workers=workers, backend=backend))
    return reports


def class_surface(
    model: MlpModel,
    num_samples: int,
    seed: int,
    workers: int = 1,
    backend: str | None = None,
) -> np.ndarray:
    """Fraction of the unit cube argmax-assigned to each class.

    Samples the whole normalized input space uniformly and counts argmax
    predictions (ties break to the lowest class index).  The shares sum to 1.
    """
    if num_samples < 1:
        raise ValidationError(f"num_samples must be >= 1, got {num_samples}")
    center = np.full(model.input_dim, 0.5)
    region = make_region(center, 1.0)
    stream = SeededStream(seed, 0)
    _, probs = kernels.scan_region(
        model.packed(), region.lower, region.upper, stream.key,
        num_samples, workers=workers, backend=backend,
    )
    winners = np.argmax(probs, axis=1)
    counts = np.bincount(winners, minlength=model.num_classes)
    return counts / float(num_samples)
