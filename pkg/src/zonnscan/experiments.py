"""Desk-scale diagnostic experiments built from the library modules.

Each experiment scans a list of points and compares the resulting
boundary-entropy distributions.  Stream ids are assigned by position in the
scan list, so every experiment is reproducible from its single seed:

* adversarial: clean point ``i`` uses stream ``i``; its attacked twin uses
  stream ``n + i``.
* disagreement: corner-case point ``i`` uses stream ``i``; baseline point
  ``j`` uses stream ``n_corner + j``.
* watermark: run ``j`` of key input ``i`` uses stream ``j * key_size + i``,
  with identical streams for the unmarked and the watermarked model so the
  two distributions differ only through the model change.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attacks import AdversarialSet, AttackConfig, fgm, generate_adversarial_set
from .data import LabeledDataset
from .errors import DataError, ValidationError
from .model import MlpModel, predict_classes
from .scan import ScanConfig, zonnscan
from .stats import DistributionSummary, KsResult, find_disagreements, ks_two_sample, summarize
from .training import FinetuneResult, TrainConfig, WatermarkKey, watermark_finetune


def scan_values(
    model: MlpModel,
    points: np.ndarray,
    radius: float,
    num_samples: int,
    seed: int,
    base_stream: int = 0,
    workers: int = 1,
    backend: str | None = None,
) -> np.ndarray:
    """Index value for each point; point ``i`` uses stream ``base_stream + i``."""
    points = np.asarray(points, dtype=np.float64)
    cfg = ScanConfig(radius=radius, num_samples=num_samples, seed=seed)
    return np.array(
        [
            zonnscan(model, points[i], cfg, stream_id=base_stream + i,
                     workers=workers, backend=backend).index_value
            for i in range(points.shape[0])
        ]
    )


@dataclass(frozen=True)
class AdvExperimentResult:
    adversarial_set: AdversarialSet
    clean_values: np.ndarray
    adv_values: np.ndarray
    clean_summary: DistributionSummary
    adv_summary: DistributionSummary
    ks: KsResult

    def to_dict(self) -> dict:
        return {
            "n": int(self.adversarial_set.n),
            "epsilon": self.adversarial_set.epsilon,
            "attack_success_rate": self.adversarial_set.success_rate,
            "clean_summary": self.clean_summary.to_dict(),
            "adversarial_summary": self.adv_summary.to_dict(),
            "ks": self.ks.to_dict(),
        }


def adv_experiment(
    model: MlpModel,
    dataset: LabeledDataset,
    n: int,
    epsilon: float,
    radius: float,
    num_samples: int,
    seed: int,
    workers: int = 1,
    backend: str | None = None,
) -> AdvExperimentResult:
    """Compare index distributions around clean inputs and their attacked twins."""
    adv_set = generate_adversarial_set(model, dataset, n, AttackConfig(epsilon=epsilon, seed=seed))
    clean = scan_values(model, adv_set.originals, radius, num_samples, seed,
                        base_stream=0, workers=workers, backend=backend)
    attacked = scan_values(model, adv_set.adversarials, radius, num_samples, seed,
                           base_stream=n, workers=workers, backend=backend)
    return AdvExperimentResult(
        adversarial_set=adv_set,
        clean_values=clean,
        adv_values=attacked,
        clean_summary=summarize(clean),
        adv_summary=summarize(attacked),
        ks=ks_two_sample(clean, attacked),
    )


@dataclass(frozen=True)
class DisagreementResult:
    corner_indices: np.ndarray
    corner_values: np.ndarray
    baseline_indices: np.ndarray
    baseline_values: np.ndarray
    corner_summary: DistributionSummary | None
    baseline_summary: DistributionSummary
    ks: KsResult | None
    diagnostic: str | None

    def to_dict(self) -> dict:
        return {
            "num_corner_cases": int(self.corner_indices.size),
            "corner_summary": None if self.corner_summary is None else self.corner_summary.to_dict(),
            "baseline_summary": self.baseline_summary.to_dict(),
            "ks": None if self.ks is None else self.ks.to_dict(),
            "diagnostic": self.diagnostic,
        }


def disagreement_experiment(
    models,
    dataset: LabeledDataset,
    baseline_count: int,
    radius: float,
    num_samples: int,
    seed: int,
    workers: int = 1,
    backend: str | None = None,
) -> DisagreementResult:
    """Scan inputs the models disagree on versus a random baseline.

    The index is computed with the first model.  When there are no
    disagreements at all, the KS comparison is impossible and the result
    carries a diagnostic instead.
    """
    models = list(models)
    corner = find_disagreements(models, dataset.inputs)
    if baseline_count < 1:
        raise ValidationError(f"baseline_count must be >= 1, got {baseline_count}")
    rng = np.random.default_rng(seed)
    take = min(baseline_count, dataset.n)
    baseline_idx = np.sort(rng.permutation(dataset.n)[:take])
    primary = models[0]
    corner_values = (
        scan_values(primary, dataset.inputs[corner], radius, num_samples, seed,
                    base_stream=0, workers=workers, backend=backend)
        if corner.size
        else np.empty(0)
    )
    baseline_values = scan_values(
        primary, dataset.inputs[baseline_idx], radius, num_samples, seed,
        base_stream=int(corner.size), workers=workers, backend=backend,
    )
    diagnostic = None
    ks = None
    corner_summary = None
    if corner.size == 0:
        diagnostic = "no disagreements between the models; no test possible"
    else:
        corner_summary = summarize(corner_values)
        ks = ks_two_sample(corner_values, baseline_values)
    return DisagreementResult(
        corner_indices=corner,
        corner_values=corner_values,
        baseline_indices=baseline_idx,
        baseline_values=baseline_values,
        corner_summary=corner_summary,
        baseline_summary=summarize(baseline_values),
        ks=ks,
        diagnostic=diagnostic,
    )


@dataclass(frozen=True)
class WatermarkResult:
    key: WatermarkKey
    finetune: FinetuneResult
    pre_values: np.ndarray
    post_values: np.ndarray
    pre_summary: DistributionSummary
    post_summary: DistributionSummary
    ks: KsResult

    def to_dict(self) -> dict:
        return {
            "key_size": int(self.key.size),
            "key_accuracy": self.finetune.key_accuracy,
            "finetune_epochs": self.finetune.epochs_run,
            "reached_target": self.finetune.reached_target,
            "pre_summary": self.pre_summary.to_dict(),
            "post_summary": self.post_summary.to_dict(),
            "ks": self.ks.to_dict(),
        }


def build_watermark_key(
    model: MlpModel,
    dataset: LabeledDataset,
    key_size: int,
    epsilon: float,
    seed: int,
) -> WatermarkKey:
    """Assemble a key of half clean inputs, half adversarial examples.

    Adversarial members are fast-gradient outputs that genuinely flip the
    model's prediction; their target label is the original class, so
    embedding the key re-integrates them.  Clean members keep their own
    class.  Sources are drawn seed-deterministically from the
    correctly-classified part of the dataset.
    """
    if key_size < 2 or key_size % 2 != 0:
        raise ValidationError(f"key_size must be a positive even number, got {key_size}")
    half = key_size // 2
    preds = predict_classes(model, dataset.inputs)
    correct = np.flatnonzero(preds == dataset.labels)
    if correct.size < key_size:
        raise DataError(
            f"only {correct.size} correctly-classified inputs available, need {key_size}"
        )
    rng = np.random.default_rng(seed)
    pool = correct[rng.permutation(correct.size)]
    clean_idx = pool[:half]
    attack_cfg = AttackConfig(epsilon=epsilon, seed=seed)
    adv_inputs = []
    adv_targets = []
    for idx in pool[half:]:
        label = int(dataset.labels[idx])
        candidate = fgm(model, dataset.inputs[idx], label, attack_cfg)
        if int(predict_classes(model, candidate[None, :])[0]) != label:
            adv_inputs.append(candidate)
            adv_targets.append(label)
            if len(adv_inputs) == half:
                break
    if len(adv_inputs) < half:
        raise DataError(
            f"could not craft {half} adversarial key inputs at epsilon={epsilon}; "
            f"got {len(adv_inputs)}"
        )
    inputs = np.concatenate([dataset.inputs[clean_idx], np.stack(adv_inputs)])
    targets = np.concatenate([dataset.labels[clean_idx], np.array(adv_targets, dtype=np.int64)])
    return WatermarkKey(inputs=inputs, target_labels=targets)


def watermark_experiment(
    model: MlpModel,
    dataset: LabeledDataset,
    key_size: int,
    epsilon: float,
    finetune_config: TrainConfig,
    radius: float,
    num_samples: int,
    runs: int,
    seed: int,
    workers: int = 1,
    backend: str | None = None,
) -> WatermarkResult:
    """Embed a watermark key and compare index distributions before and after.

    Every key input is scanned ``runs`` times per model; the pre and post
    distributions therefore hold ``runs * key_size`` values each.
    """
    if runs < 1:
        raise ValidationError(f"runs must be >= 1, got {runs}")
    key = build_watermark_key(model, dataset, key_size, epsilon, seed)
    finetuned = watermark_finetune(model, key, finetune_config)

    cfg = ScanConfig(radius=radius, num_samples=num_samples, seed=seed)

    def distribution(m: MlpModel) -> np.ndarray:
        values = np.empty(runs * key.size)
        for j in range(runs):
            for i in range(key.size):
                values[j * key.size + i] = zonnscan(
                    m, key.inputs[i], cfg, stream_id=j * key.size + i,
                    workers=workers, backend=backend,
                ).index_value
        return values

    pre = distribution(model)
    post = distribution(finetuned.model)
    return WatermarkResult(
        key=key,
        finetune=finetuned,
        pre_values=pre,
        post_values=post,
        pre_summary=summarize(pre),
        post_summary=summarize(post),
        ks=ks_two_sample(pre, post),
    )
