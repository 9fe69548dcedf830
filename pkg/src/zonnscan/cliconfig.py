"""Flat key-value experiment config files.

Format: one ``key = value`` pair per line, ``#`` starts a comment, blank
lines ignored.  Keys are dotted lowercase names (``dataset.kind``,
``scan.samples``); values stay strings until a command asks for a typed
view.  Unknown keys are rejected up front so typos fail fast.
"""

from __future__ import annotations

import numpy as np

from .data import LabeledDataset, load_csv, load_idx, make_blobs
from .errors import ParseError, ValidationError

KNOWN_KEYS = {
    "out_dir",
    "seed",
    "workers",
    "model",
    "models",
    "dataset.kind",
    "dataset.num_classes",
    "dataset.train_csv",
    "dataset.test_csv",
    "dataset.train_images",
    "dataset.train_labels",
    "dataset.test_images",
    "dataset.test_labels",
    "dataset.limit",
    "dataset.train_n",
    "dataset.test_n",
    "dataset.centers",
    "dataset.spread",
    "dataset.seed",
    "scan.radius",
    "scan.samples",
    "scan.seed",
    "attack.epsilon",
    "attack.count",
    "train.hidden",
    "train.activation",
    "train.learning_rate",
    "train.epochs",
    "train.batch_size",
    "train.seed",
    "finetune.learning_rate",
    "finetune.epochs",
    "finetune.batch_size",
    "watermark.key_size",
    "watermark.runs",
}


class ExperimentConfig:
    """Parsed config file plus typed accessors."""

    def __init__(self, values: dict[str, str], source: str = "<config>"):
        self.values = values
        self.source = source

    @classmethod
    def empty(cls) -> "ExperimentConfig":
        return cls({}, source="<none>")

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        values: dict[str, str] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ParseError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
                key, value = (part.strip() for part in line.split("=", 1))
                if key not in KNOWN_KEYS:
                    raise ParseError(f"{path}:{lineno}: unknown config key {key!r}")
                values[key] = value
        return cls(values, source=str(path))

    def get(self, key: str, default=None) -> str | None:
        return self.values.get(key, default)

    def _typed(self, key: str, cast, kind: str):
        raw = self.values.get(key)
        if raw is None:
            return None
        try:
            return cast(raw)
        except ValueError as exc:
            raise ValidationError(f"{self.source}: {key} = {raw!r} is not {kind}") from exc

    def get_int(self, key: str):
        return self._typed(key, int, "an integer")

    def get_float(self, key: str):
        return self._typed(key, float, "a real number")


def parse_centers(text: str) -> np.ndarray:
    """Parse ``"x,y;x,y;..."`` into an (m, 2) array."""
    try:
        pts = [
            [float(c) for c in chunk.split(",")]
            for chunk in text.split(";")
            if chunk.strip()
        ]
    except ValueError as exc:
        raise ValidationError(f"bad centers spec {text!r}: {exc}") from exc
    arr = np.array(pts, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValidationError(f"centers spec {text!r} must list 2-D points")
    return arr


def parse_radii(text: str) -> list[float]:
    """Parse either ``start:stop:step`` (inclusive ends) or a comma list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValidationError(f"radii range must be start:stop:step, got {text!r}")
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError as exc:
            raise ValidationError(f"bad radii range {text!r}: {exc}") from exc
        if step <= 0 or stop < start:
            raise ValidationError(f"bad radii range {text!r}")
        count = int(round((stop - start) / step)) + 1
        radii = [start + i * step for i in range(count)]
        if radii[-1] > stop + 1e-12:
            radii.pop()
        radii[-1] = min(radii[-1], stop)
        return radii
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise ValidationError(f"bad radii list {text!r}: {exc}") from exc


def _require(config: ExperimentConfig, key: str) -> str:
    value = config.get(key)
    if value is None:
        raise ValidationError(f"{config.source}: missing required config key {key!r}")
    return value


def load_dataset(config: ExperimentConfig, split: str) -> LabeledDataset:
    """Materialize the train or test dataset described by the config.

    Kinds: ``blobs`` (synthetic recipe; the test split uses seed+1), ``csv``,
    and ``idx``.
    """
    kind = _require(config, "dataset.kind")
    if kind == "blobs":
        centers = parse_centers(_require(config, "dataset.centers"))
        spread = config.get_float("dataset.spread")
        if spread is None:
            raise ValidationError(f"{config.source}: missing dataset.spread")
        seed = config.get_int("dataset.seed") or 0
        if split == "train":
            n = config.get_int("dataset.train_n")
        else:
            n = config.get_int("dataset.test_n")
            seed = seed + 1
        if n is None:
            raise ValidationError(f"{config.source}: missing dataset.{split}_n")
        return make_blobs(n, centers, spread, seed, split=split)
    if kind == "csv":
        num_classes = config.get_int("dataset.num_classes")
        if num_classes is None:
            raise ValidationError(f"{config.source}: missing dataset.num_classes")
        path = _require(config, f"dataset.{split}_csv")
        return load_csv(path, num_classes, split=split)
    if kind == "idx":
        images = _require(config, f"dataset.{split}_images")
        labels = _require(config, f"dataset.{split}_labels")
        return load_idx(
            images, labels,
            limit=config.get_int("dataset.limit"),
            num_classes=config.get_int("dataset.num_classes"),
            split=split,
        )
    raise ValidationError(f"{config.source}: unknown dataset.kind {kind!r}")
