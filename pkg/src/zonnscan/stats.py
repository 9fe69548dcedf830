"""Two-sample Kolmogorov-Smirnov test, distribution summaries, disagreements."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .model import MlpModel, predict_classes

_KS_TERM_TOL = 1e-12
_KS_MAX_TERMS = 100_000


@dataclass(frozen=True)
class KsResult:
    """KS statistic D, asymptotic p-value, and the two sample sizes."""

    statistic: float
    p_value: float
    n1: int
    n2: int

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "n1": self.n1,
            "n2": self.n2,
        }


@dataclass(frozen=True)
class DistributionSummary:
    mean: float
    std: float
    min: float
    max: float
    count: int

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std": self.std,
            "min": self.min,
            "max": self.max,
            "count": self.count,
        }


def _as_sample(values, name: str) -> np.ndarray:
    a = np.asarray(values, dtype=np.float64)
    if a.ndim != 1 or a.size == 0:
        raise ValidationError(f"{name} must be a nonempty 1-D sequence of reals")
    if not np.isfinite(a).all():
        raise ValidationError(f"{name} contains non-finite values")
    return a


def ks_statistic(a, b) -> float:
    """Exact sup-difference of the two empirical CDFs.

    Both ECDFs are right-continuous; the difference is evaluated just after
    each distinct merged value, which makes the statistic exact under ties.
    """
    a = np.sort(_as_sample(a, "first sample"))
    b = np.sort(_as_sample(b, "second sample"))
    grid = np.union1d(a, b)
    cdf_a = np.searchsorted(a, grid, side="right") / a.size
    cdf_b = np.searchsorted(b, grid, side="right") / b.size
    return float(np.abs(cdf_a - cdf_b).max())


def ks_pvalue(d: float, n1: int, n2: int) -> float:
    """Asymptotic two-sided p-value with the small-sample correction.

    Uses the effective size ``n_e = n1*n2/(n1+n2)`` and evaluates
    ``2 * sum_{j>=1} (-1)^(j-1) exp(-2 j^2 lambda^2)`` with
    ``lambda = (sqrt(n_e) + 0.12 + 0.11/sqrt(n_e)) * d``, truncating once
    terms drop below 1e-12 and clamping the result to [0, 1].
    """
    en = math.sqrt(n1 * n2 / float(n1 + n2))
    lam = (en + 0.12 + 0.11 / en) * d
    if lam <= 0.0:
        return 1.0
    total = 0.0
    sign = 1.0
    for j in range(1, _KS_MAX_TERMS + 1):
        term = math.exp(-2.0 * (j * lam) ** 2)
        total += sign * term
        if term < _KS_TERM_TOL:
            break
        sign = -sign
    return min(1.0, max(0.0, 2.0 * total))


def ks_two_sample(a, b) -> KsResult:
    """Two-sided two-sample KS test.

    Tests the null hypothesis that both samples come from the same continuous
    distribution.  The statistic is exact; the p-value is asymptotic.
    """
    a = _as_sample(a, "first sample")
    b = _as_sample(b, "second sample")
    d = ks_statistic(a, b)
    return KsResult(statistic=d, p_value=ks_pvalue(d, a.size, b.size), n1=a.size, n2=b.size)


def summarize(values) -> DistributionSummary:
    """Mean, population std, min, max, and count of a nonempty sample."""
    a = _as_sample(values, "values")
    return DistributionSummary(
        mean=float(a.mean()),
        std=float(a.std()),
        min=float(a.min()),
        max=float(a.max()),
        count=int(a.size),
    )


def find_disagreements(models, inputs) -> np.ndarray:
    """Indices of rows where the models' argmax predictions are not unanimous."""
    models = list(models)
    if len(models) < 2:
        raise ValidationError("need at least two models to compare")
    first = models[0]
    for i, m in enumerate(models[1:], start=1):
        if not isinstance(m, MlpModel) or not isinstance(first, MlpModel):
            raise ValidationError("disagreement extraction expects MlpModel instances")
        if m.input_dim != first.input_dim or m.num_classes != first.num_classes:
            raise ValidationError(
                f"model {i} has shape ({m.input_dim}->{m.num_classes}), "
                f"expected ({first.input_dim}->{first.num_classes})"
            )
    inputs = np.asarray(inputs, dtype=np.float64)
    preds = np.stack([predict_classes(m, inputs) for m in models])
    disagree = (preds != preds[0]).any(axis=0)
    return np.flatnonzero(disagree)
