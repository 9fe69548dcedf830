"""Mini-batch SGD training on cross-entropy loss, plus watermark embedding.

Gradients are computed by hand-rolled backpropagation; the loss is the mean
natural-log cross-entropy with probabilities clamped at 1e-12.  Training is
sequential and fully determined by the config seed (weight updates and
shuffle order).  The input model is never mutated; an updated copy is
returned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import LabeledDataset
from .errors import DataError, ValidationError
from .model import DenseLayer, MlpModel
from .rng import SeededStream
from .sampler import check_unit_point

PROB_CLAMP = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float
    epochs: int
    batch_size: int
    seed: int

    def __post_init__(self) -> None:
        if not np.isfinite(self.learning_rate) or self.learning_rate < 0:
            raise ValidationError(
                f"learning_rate must be a finite nonnegative real, got {self.learning_rate!r}"
            )
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
        SeededStream(self.seed, 0)


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    loss: float
    accuracy: float


@dataclass(frozen=True)
class TrainResult:
    model: MlpModel
    history: list[EpochStats]


@dataclass(frozen=True)
class WatermarkKey:
    """Key inputs with the class each should be (re)integrated into."""

    inputs: np.ndarray
    target_labels: np.ndarray

    def __post_init__(self) -> None:
        inputs = np.asarray(self.inputs, dtype=np.float64)
        labels = np.asarray(self.target_labels, dtype=np.int64)
        if inputs.ndim != 2 or inputs.shape[0] == 0:
            raise DataError(f"key inputs must be a nonempty (m, d) matrix, got shape {inputs.shape}")
        if labels.shape != (inputs.shape[0],):
            raise DataError("key target_labels length must match key inputs")
        if not np.isfinite(inputs).all() or (inputs < 0.0).any() or (inputs > 1.0).any():
            raise DataError("key inputs must lie in [0, 1]")
        if (labels < 0).any():
            raise DataError("key target labels must be nonnegative class indices")
        inputs.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "target_labels", labels)

    @property
    def size(self) -> int:
        return self.inputs.shape[0]


@dataclass(frozen=True)
class FinetuneResult:
    model: MlpModel
    key_accuracy: float
    epochs_run: int
    reached_target: bool


def _act(z: np.ndarray, name: str) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "sigmoid":
        out = np.empty_like(z)
        pos = z >= 0.0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    if name == "tanh":
        return np.tanh(z)
    return z


def _act_deriv(z: np.ndarray, h: np.ndarray, name: str) -> np.ndarray:
    # derivative expressed via pre-activation z and activation value h
    if name == "relu":
        return (z > 0.0).astype(np.float64)
    if name == "sigmoid":
        return h * (1.0 - h)
    if name == "tanh":
        return 1.0 - h * h
    return np.ones_like(z)


def _forward_cached(params, activations, X: np.ndarray):
    """Per-layer pre-activations and activations, then softmax probabilities."""
    hs = [X]
    zs = []
    h = X
    for (w, b), name in zip(params, activations):
        z = h @ w.T + b
        h = _act(z, name)
        zs.append(z)
        hs.append(h)
    logits = hs[-1]
    shifted = logits - logits.max(axis=1, keepdims=True)
    np.exp(shifted, out=shifted)
    probs = shifted / shifted.sum(axis=1, keepdims=True)
    return hs, zs, probs


def _check_batch(model_dim: int, num_classes: int, inputs, labels):
    inputs = np.asarray(inputs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if inputs.ndim != 2 or inputs.shape[0] == 0:
        raise DataError(f"batch inputs must be a nonempty (n, d) matrix, got shape {inputs.shape}")
    if inputs.shape[1] != model_dim:
        raise ValidationError(
            f"batch has {inputs.shape[1]} features, model expects {model_dim}"
        )
    if labels.shape != (inputs.shape[0],):
        raise DataError("labels length must match batch size")
    if (labels < 0).any() or (labels >= num_classes).any():
        raise DataError(f"labels must lie in [0, {num_classes - 1}]")
    return inputs, labels


def _loss_and_grads(params, activations, inputs, labels, want_input_grad=False):
    n = inputs.shape[0]
    hs, zs, probs = _forward_cached(params, activations, inputs)
    picked = np.clip(probs[np.arange(n), labels], PROB_CLAMP, None)
    loss = float(-np.log(picked).mean())

    delta = probs.copy()
    delta[np.arange(n), labels] -= 1.0
    delta /= n
    grads = [None] * len(params)
    for l in range(len(params) - 1, -1, -1):
        delta = delta * _act_deriv(zs[l], hs[l + 1], activations[l])
        grads[l] = (delta.T @ hs[l], delta.sum(axis=0))
        delta = delta @ params[l][0]
    input_grad = delta if want_input_grad else None
    return loss, grads, probs, input_grad


def loss_and_gradient(model: MlpModel, inputs, labels):
    """Mean cross-entropy loss and its gradient w.r.t. every parameter.

    Returns ``(loss, grads)`` where ``grads[l]`` is the ``(dW, db)`` pair of
    layer ``l``.
    """
    inputs, labels = _check_batch(model.input_dim, model.num_classes, inputs, labels)
    params = [(l.weights, l.bias) for l in model.layers]
    activations = [l.activation for l in model.layers]
    loss, grads, _, _ = _loss_and_grads(params, activations, inputs, labels)
    return loss, grads


def input_gradient(model: MlpModel, x, label: int) -> np.ndarray:
    """Gradient of the cross-entropy at ``label`` with respect to the input."""
    x = check_unit_point(x)
    inputs, labels = _check_batch(
        model.input_dim, model.num_classes, x[None, :], np.array([label])
    )
    params = [(l.weights, l.bias) for l in model.layers]
    activations = [l.activation for l in model.layers]
    _, _, _, input_grad = _loss_and_grads(
        params, activations, inputs, labels, want_input_grad=True
    )
    return input_grad[0]


def _accuracy(params, activations, inputs, labels) -> float:
    _, _, probs = _forward_cached(params, activations, inputs)
    return float((np.argmax(probs, axis=1) == labels).mean())


def _rebuild(model: MlpModel, params) -> MlpModel:
    layers = [
        DenseLayer(weights=w, bias=b, activation=layer.activation)
        for (w, b), layer in zip(params, model.layers)
    ]
    return MlpModel(layers, input_dim=model.input_dim, num_classes=model.num_classes)


def _sgd(model: MlpModel, inputs, labels, config: TrainConfig):
    params = [(l.weights.copy(), l.bias.copy()) for l in model.layers]
    activations = [l.activation for l in model.layers]
    n = inputs.shape[0]
    rng = np.random.default_rng(config.seed)
    history = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            loss, grads, _, _ = _loss_and_grads(params, activations, inputs[batch], labels[batch])
            total_loss += loss * batch.size
            for (w, b), (dw, db) in zip(params, grads):
                w -= config.learning_rate * dw
                b -= config.learning_rate * db
        history.append(
            EpochStats(
                epoch=epoch,
                loss=total_loss / n,
                accuracy=_accuracy(params, activations, inputs, labels),
            )
        )
    return params, history


def train(model: MlpModel, data: LabeledDataset, config: TrainConfig) -> TrainResult:
    """Mini-batch SGD on cross-entropy; returns the updated model and history.

    Deterministic given the config seed.  The input model is left untouched.
    """
    if not isinstance(data, LabeledDataset):
        raise DataError("train expects a LabeledDataset")
    if data.dim != model.input_dim:
        raise ValidationError(
            f"dataset dimension {data.dim} does not match model input {model.input_dim}"
        )
    if data.num_classes != model.num_classes:
        raise ValidationError(
            f"dataset has {data.num_classes} classes, model {model.num_classes}"
        )
    if config.batch_size > data.n:
        raise ValidationError(
            f"batch_size {config.batch_size} exceeds dataset size {data.n}"
        )
    params, history = _sgd(model, data.inputs, data.labels, config)
    return TrainResult(model=_rebuild(model, params), history=history)


def watermark_finetune(
    model: MlpModel,
    key: WatermarkKey,
    config: TrainConfig,
    target_accuracy: float = 0.9,
) -> FinetuneResult:
    """Retrain the model over the key inputs until it predicts their targets.

    Runs SGD epochs over the key, stopping as soon as the fraction of key
    inputs classified as their target label reaches ``target_accuracy`` or
    the configured epochs are exhausted.  Failing to reach the target is
    reported through the result, not raised.
    """
    if (key.target_labels >= model.num_classes).any():
        raise DataError(f"key target labels must lie in [0, {model.num_classes - 1}]")
    if key.inputs.shape[1] != model.input_dim:
        raise ValidationError(
            f"key dimension {key.inputs.shape[1]} does not match model input {model.input_dim}"
        )
    params = [(l.weights.copy(), l.bias.copy()) for l in model.layers]
    activations = [l.activation for l in model.layers]
    batch_size = min(config.batch_size, key.size)
    rng = np.random.default_rng(config.seed)
    accuracy = _accuracy(params, activations, key.inputs, key.target_labels)
    epochs_run = 0
    while accuracy < target_accuracy and epochs_run < config.epochs:
        order = rng.permutation(key.size)
        for start in range(0, key.size, batch_size):
            batch = order[start:start + batch_size]
            _, grads, _, _ = _loss_and_grads(
                params, activations, key.inputs[batch], key.target_labels[batch]
            )
            for (w, b), (dw, db) in zip(params, grads):
                w -= config.learning_rate * dw
                b -= config.learning_rate * db
        epochs_run += 1
        accuracy = _accuracy(params, activations, key.inputs, key.target_labels)
    return FinetuneResult(
        model=_rebuild(model, params),
        key_accuracy=accuracy,
        epochs_run=epochs_run,
        reached_target=accuracy >= target_accuracy,
    )
