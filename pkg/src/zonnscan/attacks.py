"""Fast gradient method adversarial examples.

One-step untargeted attack: move each input component by ``epsilon`` in the
direction that increases the cross-entropy at the true label, then clip back
into the normalized input domain.  ``sign(0) = 0`` leaves a component
unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import LabeledDataset
from .errors import DataError, ValidationError
from .model import MlpModel, predict_classes
from .rng import SeededStream
from .sampler import check_unit_point
from .training import input_gradient


@dataclass(frozen=True)
class AttackConfig:
    """Step size of the attack and the seed used for input selection."""

    epsilon: float
    seed: int = 0

    def __post_init__(self) -> None:
        if not np.isfinite(self.epsilon) or self.epsilon <= 0.0:
            raise ValidationError(f"epsilon must be positive, got {self.epsilon!r}")
        SeededStream(self.seed, 0)


@dataclass(frozen=True)
class AdversarialSet:
    """Paired originals and their attacked versions, labels preserved."""

    source_indices: np.ndarray
    originals: np.ndarray
    adversarials: np.ndarray
    orig_labels: np.ndarray
    adv_labels: np.ndarray
    epsilon: float

    @property
    def n(self) -> int:
        return self.originals.shape[0]

    @property
    def linf_distances(self) -> np.ndarray:
        return np.abs(self.adversarials - self.originals).max(axis=1)

    @property
    def success_rate(self) -> float:
        return float((self.adv_labels != self.orig_labels).mean())

    def rows(self):
        """(index, orig_label, adv_label, linf_distance) tuples for export."""
        dists = self.linf_distances
        return [
            (int(self.source_indices[i]), int(self.orig_labels[i]),
             int(self.adv_labels[i]), float(dists[i]))
            for i in range(self.n)
        ]


def fgm(model: MlpModel, x, true_label: int, config: AttackConfig) -> np.ndarray:
    """One fast-gradient step away from ``true_label``, clipped to [0, 1]^d."""
    x = check_unit_point(x)
    grad = input_gradient(model, x, true_label)
    adv = x + config.epsilon * np.sign(grad)
    np.clip(adv, 0.0, 1.0, out=adv)
    return adv


def generate_adversarial_set(
    model: MlpModel, dataset: LabeledDataset, n: int, config: AttackConfig
) -> AdversarialSet:
    """Attack ``n`` seed-selected, correctly-classified dataset inputs.

    Already-misclassified inputs are filtered out before selection; if fewer
    than ``n`` correctly-classified inputs remain, that is a data error.
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    if n > dataset.n:
        raise ValidationError(f"n = {n} exceeds dataset size {dataset.n}")
    preds = predict_classes(model, dataset.inputs)
    correct = np.flatnonzero(preds == dataset.labels)
    if correct.size < n:
        raise DataError(
            f"only {correct.size} correctly-classified inputs available, need {n}"
        )
    rng = np.random.default_rng(config.seed)
    chosen = correct[rng.permutation(correct.size)[:n]]
    originals = dataset.inputs[chosen]
    orig_labels = dataset.labels[chosen]
    adversarials = np.stack(
        [fgm(model, originals[i], int(orig_labels[i]), config) for i in range(n)]
    )
    adv_labels = predict_classes(model, adversarials)
    return AdversarialSet(
        source_indices=chosen,
        originals=originals,
        adversarials=adversarials,
        orig_labels=orig_labels,
        adv_labels=adv_labels,
        epsilon=config.epsilon,
    )
