"""Uniform sampling inside a clipped infinity-norm ball.

The scan zone around a point ``x`` with radius ``r`` is the hypercube of side
``2r`` centered at ``x``, intersected with the normalized input domain
``[0,1]^d``.  Per component the zone is the interval
``[max(x_i - r, 0), min(x_i + r, 1)]`` and samples are drawn independently and
uniformly on each interval.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .rng import SeededStream, unit_doubles


@dataclass(frozen=True)
class BallRegion:
    """Axis-aligned box ``B_inf(center, radius) ∩ [0,1]^d``."""

    center: np.ndarray
    radius: float
    lower: np.ndarray
    upper: np.ndarray

    @property
    def dim(self) -> int:
        return self.center.shape[0]


def check_unit_point(x, name: str = "x") -> np.ndarray:
    """Validate a point of the normalized input space and return it as float64."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValidationError(f"{name} must be a nonempty 1-D vector, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValidationError(f"{name} contains non-finite components")
    if (x < 0.0).any() or (x > 1.0).any():
        bad = int(np.argmax((x < 0.0) | (x > 1.0)))
        raise ValidationError(
            f"{name} must lie in [0,1]^d; component {bad} is {x[bad]!r}"
        )
    return x


def make_region(x, r: float) -> BallRegion:
    """Build the clipped ball around ``x``.

    ``r = 0`` is legal and degenerates to the single point ``x``.  ``r >= 1``
    always covers the whole unit cube.
    """
    x = check_unit_point(x)
    r = float(r)
    if not np.isfinite(r) or r < 0.0:
        raise ValidationError(f"radius must be a finite nonnegative real, got {r!r}")
    lower = np.maximum(x - r, 0.0)
    upper = np.minimum(x + r, 1.0)
    lower.flags.writeable = False
    upper.flags.writeable = False
    xr = x.copy()
    xr.flags.writeable = False
    return BallRegion(center=xr, radius=r, lower=lower, upper=upper)


def sample(region: BallRegion, count: int, stream: SeededStream, start: int = 0) -> np.ndarray:
    """Draw ``count`` points of ``stream``, starting at sample index ``start``.

    Sample ``i`` consumes draws ``i*d .. (i+1)*d - 1`` of the stream, so the
    result for a given index never depends on how the index range was split
    across calls or workers.
    """
    if count < 1:
        raise ValidationError(f"count must be >= 1, got {count}")
    if start < 0:
        raise ValidationError(f"start must be >= 0, got {start}")
    d = region.dim
    u = unit_doubles(stream.key, start * d, count * d).reshape(count, d)
    pts = region.lower + u * (region.upper - region.lower)
    # guard against one-ulp overshoot from the affine map
    np.clip(pts, region.lower, region.upper, out=pts)
    return pts
