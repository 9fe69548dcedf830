"""Dense feed-forward classifiers with numerically stable inference.

A model is an ordered stack of dense layers, each with its own activation.
Inference feeds the last layer's output (the logits) through a softmax, which
is applied by ``forward`` itself and never stored as a layer activation.
Models built by this package use ``identity`` on the output layer.

Models are immutable after construction (weight arrays are frozen), so a
single instance may be shared freely across threads.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ParseError, ValidationError
from .sampler import check_unit_point

ACTIVATIONS = ("relu", "sigmoid", "tanh", "identity")
ACTIVATION_CODES = {name: i for i, name in enumerate(ACTIVATIONS)}

MODEL_FORMAT_VERSION = 1


def _frozen_f64(a, name: str) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    if not np.isfinite(a).all():
        raise ValidationError(f"{name} contains non-finite entries")
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class DenseLayer:
    """One affine map plus activation: ``act(W @ h + b)``.

    ``weights`` has shape (out_dim, in_dim); ``bias`` has shape (out_dim,).
    """

    weights: np.ndarray
    bias: np.ndarray
    activation: str

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2 or w.size == 0:
            raise ValidationError(f"weights must be a nonempty 2-D matrix, got shape {w.shape}")
        if b.ndim != 1:
            raise ValidationError(f"bias must be a 1-D vector, got shape {b.shape}")
        if w.shape[0] != b.shape[0]:
            raise ValidationError(
                f"bias length {b.shape[0]} does not match weight row count {w.shape[0]}"
            )
        if self.activation not in ACTIVATIONS:
            raise ValidationError(
                f"unknown activation {self.activation!r}; expected one of {ACTIVATIONS}"
            )
        object.__setattr__(self, "weights", _frozen_f64(w, "weights"))
        object.__setattr__(self, "bias", _frozen_f64(b, "bias"))

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class PackedMlp:
    """Flat, kernel-friendly view of a model.

    ``w_flat`` concatenates the row-major weight matrices, ``b_flat`` the
    biases; offsets and dimensions address each layer inside the flat arrays.
    ``layer_weights``/``layer_biases`` expose the same storage as per-layer
    arrays for the vectorized numpy path.
    """

    w_flat: np.ndarray
    b_flat: np.ndarray
    w_off: np.ndarray
    b_off: np.ndarray
    in_dims: np.ndarray
    out_dims: np.ndarray
    act_codes: np.ndarray
    layer_weights: tuple
    layer_biases: tuple
    input_dim: int
    num_classes: int


class MlpModel:
    """Feed-forward classifier mapping ``[0,1]^d`` to the probability simplex."""

    def __init__(self, layers, input_dim: int, num_classes: int):
        layers = tuple(layers)
        if not layers:
            raise ValidationError("model needs at least one layer")
        input_dim = int(input_dim)
        num_classes = int(num_classes)
        if input_dim < 1:
            raise ValidationError(f"input_dim must be positive, got {input_dim}")
        if num_classes < 2:
            raise ValidationError(f"num_classes must be >= 2, got {num_classes}")
        if layers[0].in_dim != input_dim:
            raise ValidationError(
                f"first layer expects {layers[0].in_dim} inputs, model declares {input_dim}"
            )
        if layers[-1].out_dim != num_classes:
            raise ValidationError(
                f"last layer produces {layers[-1].out_dim} outputs, model declares {num_classes} classes"
            )
        for i in range(len(layers) - 1):
            if layers[i].out_dim != layers[i + 1].in_dim:
                raise ValidationError(
                    f"layer {i} out_dim {layers[i].out_dim} does not chain into "
                    f"layer {i + 1} in_dim {layers[i + 1].in_dim}"
                )
        self.layers = layers
        self.input_dim = input_dim
        self.num_classes = num_classes
        self._packed = None

    def packed(self) -> PackedMlp:
        """Flat representation consumed by the compute kernels (built lazily)."""
        if self._packed is None:
            w_sizes = [l.weights.size for l in self.layers]
            b_sizes = [l.bias.size for l in self.layers]
            w_off = np.zeros(len(self.layers), dtype=np.int64)
            b_off = np.zeros(len(self.layers), dtype=np.int64)
            np.cumsum(w_sizes[:-1], out=w_off[1:])
            np.cumsum(b_sizes[:-1], out=b_off[1:])
            w_flat = np.concatenate([l.weights.ravel() for l in self.layers])
            b_flat = np.concatenate([l.bias for l in self.layers])
            w_flat.flags.writeable = False
            b_flat.flags.writeable = False
            self._packed = PackedMlp(
                w_flat=w_flat,
                b_flat=b_flat,
                w_off=w_off,
                b_off=b_off,
                in_dims=np.array([l.in_dim for l in self.layers], dtype=np.int64),
                out_dims=np.array([l.out_dim for l in self.layers], dtype=np.int64),
                act_codes=np.array(
                    [ACTIVATION_CODES[l.activation] for l in self.layers], dtype=np.int64
                ),
                layer_weights=tuple(l.weights for l in self.layers),
                layer_biases=tuple(l.bias for l in self.layers),
                input_dim=self.input_dim,
                num_classes=self.num_classes,
            )
        return self._packed

    def __eq__(self, other) -> bool:
        if not isinstance(other, MlpModel):
            return NotImplemented
        return (
            self.input_dim == other.input_dim
            and self.num_classes == other.num_classes
            and len(self.layers) == len(other.layers)
            and all(
                a.activation == b.activation
                and np.array_equal(a.weights, b.weights)
                and np.array_equal(a.bias, b.bias)
                for a, b in zip(self.layers, other.layers)
            )
        )

    def __repr__(self) -> str:
        dims = [self.input_dim] + [l.out_dim for l in self.layers]
        return f"MlpModel({'->'.join(map(str, dims))})"


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax (max subtraction before exponentiation)."""
    z = logits - logits.max(axis=-1, keepdims=True)
    np.exp(z, out=z)
    z /= z.sum(axis=-1, keepdims=True)
    return z


def forward_logits(model: MlpModel, x) -> np.ndarray:
    """Pre-softmax output of the model for one input point."""
    from . import kernels

    x = check_unit_point(x)
    if x.shape[0] != model.input_dim:
        raise ValidationError(
            f"input has {x.shape[0]} components, model expects {model.input_dim}"
        )
    return kernels.forward_logits_batch(model.packed(), x[None, :])[0]


def forward(model: MlpModel, x) -> np.ndarray:
    """Class-membership probabilities for one input point.

    Raises a numeric error if any logit is non-finite; otherwise the result is
    a valid probability vector (finite, nonnegative, summing to one).
    """
    return softmax(forward_logits(model, x))


def predict_classes(model: MlpModel, inputs: np.ndarray) -> np.ndarray:
    """Argmax class per row of ``inputs`` (ties break to the lowest index)."""
    from . import kernels

    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[1] != model.input_dim:
        raise ValidationError(
            f"inputs must have shape (n, {model.input_dim}), got {inputs.shape}"
        )
    logits = kernels.forward_logits_batch(model.packed(), inputs)
    return np.argmax(logits, axis=1)


def init_mlp(layer_dims, hidden_activation: str = "relu", seed: int = 0) -> MlpModel:
    """Build a model with scaled uniform random weights.

    ``layer_dims`` lists every dimension, input first, classes last, e.g.
    ``[784, 128, 10]``.  Weights are uniform on ``±sqrt(6/(fan_in+fan_out))``
    and derived from ``seed``; hidden layers use ``hidden_activation`` and the
    output layer is identity.
    """
    dims = [int(v) for v in layer_dims]
    if len(dims) < 2:
        raise ValidationError("layer_dims needs at least input and output dimensions")
    if hidden_activation not in ACTIVATIONS:
        raise ValidationError(f"unknown activation {hidden_activation!r}")
    rng = np.random.default_rng(seed)
    layers = []
    for i in range(len(dims) - 1):
        fan_in, fan_out = dims[i], dims[i + 1]
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        b = np.zeros(fan_out)
        act = hidden_activation if i < len(dims) - 2 else "identity"
        layers.append(DenseLayer(weights=w, bias=b, activation=act))
    return MlpModel(layers, input_dim=dims[0], num_classes=dims[-1])


def save_model(model: MlpModel, path) -> None:
    """Write a model as JSON with full round-trip float precision."""
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "input_dim": model.input_dim,
        "num_classes": model.num_classes,
        "layers": [
            {
                "weights": layer.weights.tolist(),
                "bias": layer.bias.tolist(),
                "activation": layer.activation,
            }
            for layer in model.layers
        ],
    }
    text = json.dumps(doc, allow_nan=False)
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
        fh.write("\n")
    os.replace(tmp, path)


def load_model(path) -> MlpModel:
    """Read a model written by :func:`save_model`, validating all invariants."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: malformed model file: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: model file must contain a JSON object")
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ParseError(f"{path}: unsupported format_version {version!r}")
    for field in ("input_dim", "num_classes", "layers"):
        if field not in doc:
            raise ParseError(f"{path}: missing field {field!r}")
    if not isinstance(doc["layers"], list) or not doc["layers"]:
        raise ParseError(f"{path}: 'layers' must be a nonempty list")
    layers = []
    for i, spec in enumerate(doc["layers"]):
        if not isinstance(spec, dict):
            raise ParseError(f"{path}: layer {i} must be an object")
        for field in ("weights", "bias", "activation"):
            if field not in spec:
                raise ParseError(f"{path}: layer {i} missing field {field!r}")
        try:
            layers.append(
                DenseLayer(
                    weights=np.asarray(spec["weights"], dtype=np.float64),
                    bias=np.asarray(spec["bias"], dtype=np.float64),
                    activation=spec["activation"],
                )
            )
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{path}: layer {i}: {exc}") from exc
        except ValidationError as exc:
            raise ValidationError(f"{path}: layer {i}: {exc}") from exc
    try:
        return MlpModel(
            layers, input_dim=int(doc["input_dim"]), num_classes=int(doc["num_classes"])
        )
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from exc


def check_finite_logits(logits: np.ndarray) -> None:
    if not np.isfinite(logits).all():
        raise NumericError("non-finite logits encountered during inference")
