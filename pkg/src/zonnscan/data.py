"""Dataset loading (IDX, CSV) and synthetic blob generation.

All loaders produce a :class:`LabeledDataset` with inputs normalized to
``[0,1]^d``.  IDX pixels are divided by 255; CSV features must already be
normalized and are rejected otherwise.
"""

from __future__ import annotations

import csv
import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ParseError, ValidationError

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


@dataclass(frozen=True)
class LabeledDataset:
    """Normalized inputs (n, d) with integer class labels in {0..C-1}."""

    inputs: np.ndarray
    labels: np.ndarray
    num_classes: int
    split: str = "train"

    def __post_init__(self) -> None:
        inputs = np.asarray(self.inputs, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if inputs.ndim != 2 or inputs.shape[0] == 0:
            raise DataError(f"inputs must be a nonempty (n, d) matrix, got shape {inputs.shape}")
        if labels.shape != (inputs.shape[0],):
            raise DataError(
                f"labels shape {labels.shape} does not match {inputs.shape[0]} inputs"
            )
        if not np.isfinite(inputs).all():
            raise DataError("inputs contain non-finite values")
        if (inputs < 0.0).any() or (inputs > 1.0).any():
            raise DataError("inputs must lie in [0, 1]")
        if self.num_classes < 2:
            raise DataError(f"num_classes must be >= 2, got {self.num_classes}")
        if (labels < 0).any() or (labels >= self.num_classes).any():
            raise DataError(f"labels must lie in [0, {self.num_classes - 1}]")
        if self.split not in ("train", "test"):
            raise DataError(f"split must be 'train' or 'test', got {self.split!r}")
        inputs.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]


def _read_exact(fh, count: int, path, what: str) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise ParseError(f"{path}: truncated file while reading {what}")
    return data


def load_idx(images_path, labels_path, limit: int | None = None,
             num_classes: int | None = None, split: str = "train") -> LabeledDataset:
    """Load an IDX image/label file pair (big-endian, MNIST distribution format).

    Pixels are scaled by 1/255 and images flattened row-major.  ``limit``
    truncates to the first N items after validating the headers.
    """
    with open(images_path, "rb") as fh:
        magic, count, rows, cols = struct.unpack(">IIII", _read_exact(fh, 16, images_path, "image header"))
        if magic != IDX_IMAGE_MAGIC:
            raise ParseError(
                f"{images_path}: bad image magic 0x{magic:08x}, expected 0x{IDX_IMAGE_MAGIC:08x}"
            )
        pixels = _read_exact(fh, count * rows * cols, images_path, f"{count} images")
    with open(labels_path, "rb") as fh:
        magic, label_count = struct.unpack(">II", _read_exact(fh, 8, labels_path, "label header"))
        if magic != IDX_LABEL_MAGIC:
            raise ParseError(
                f"{labels_path}: bad label magic 0x{magic:08x}, expected 0x{IDX_LABEL_MAGIC:08x}"
            )
        raw_labels = _read_exact(fh, label_count, labels_path, f"{label_count} labels")
    if count != label_count:
        raise DataError(
            f"image count {count} ({images_path}) does not match label count "
            f"{label_count} ({labels_path})"
        )
    if limit is not None:
        if limit < 1:
            raise ValidationError(f"limit must be >= 1, got {limit}")
        count = min(count, int(limit))
    images = np.frombuffer(pixels, dtype=np.uint8, count=count * rows * cols)
    inputs = images.reshape(count, rows * cols).astype(np.float64) / 255.0
    labels = np.frombuffer(raw_labels, dtype=np.uint8, count=count).astype(np.int64)
    if num_classes is None:
        num_classes = max(int(labels.max()) + 1, 2)
    return LabeledDataset(inputs=inputs, labels=labels, num_classes=num_classes, split=split)


def write_idx(inputs: np.ndarray, labels: np.ndarray, images_path, labels_path,
              image_shape: tuple[int, int]) -> None:
    """Write a dataset as an IDX pair (test-fixture counterpart of load_idx)."""
    inputs = np.asarray(inputs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    rows, cols = image_shape
    if rows * cols != inputs.shape[1]:
        raise ValidationError(
            f"image shape {rows}x{cols} does not match input dimension {inputs.shape[1]}"
        )
    pixels = np.round(inputs * 255.0).astype(np.uint8)
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGE_MAGIC, inputs.shape[0], rows, cols))
        fh.write(pixels.tobytes())
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">II", IDX_LABEL_MAGIC, labels.shape[0]))
        fh.write(labels.astype(np.uint8).tobytes())


def load_csv(path, num_classes: int, split: str = "train") -> LabeledDataset:
    """Load rows of ``d`` feature columns followed by one integer label column.

    Features must already lie in [0, 1]; out-of-range values are an error,
    never rescaled.
    """
    rows = []
    labels = []
    width = None
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if width is None:
                width = len(row)
                if width < 2:
                    raise ParseError(f"{path}:{lineno}: need at least one feature and a label")
            elif len(row) != width:
                raise ParseError(
                    f"{path}:{lineno}: expected {width} columns, found {len(row)}"
                )
            try:
                features = [float(v) for v in row[:-1]]
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: non-numeric feature: {exc}") from exc
            try:
                label = int(row[-1])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: non-integer label {row[-1]!r}") from exc
            for j, v in enumerate(features):
                if not (0.0 <= v <= 1.0):
                    raise DataError(f"{path}:{lineno}: feature {j} = {v!r} outside [0, 1]")
            if not 0 <= label < num_classes:
                raise DataError(
                    f"{path}:{lineno}: label {label} outside [0, {num_classes - 1}]"
                )
            rows.append(features)
            labels.append(label)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return LabeledDataset(
        inputs=np.array(rows, dtype=np.float64),
        labels=np.array(labels, dtype=np.int64),
        num_classes=num_classes,
        split=split,
    )


def save_points_csv(points: np.ndarray, labels: np.ndarray, path) -> None:
    """Write features-plus-label rows readable by :func:`load_csv`."""
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        for row, label in zip(points, labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])
    os.replace(tmp, path)


def make_blobs(n: int, centers, spread: float, seed: int, split: str = "train") -> LabeledDataset:
    """Gaussian clouds around 2-D centers, clipped to the unit square.

    The label of each point is the index of its center.  Points are assigned
    to centers as evenly as possible and the layout is fully determined by
    ``seed``.
    """
    centers = np.asarray(centers, dtype=np.float64)
    if centers.ndim != 2 or centers.shape[0] == 0 or centers.shape[1] != 2:
        raise ValidationError(f"centers must be a nonempty (m, 2) array, got shape {centers.shape}")
    if (centers < 0.0).any() or (centers > 1.0).any():
        raise ValidationError("centers must lie in the unit square")
    if not spread > 0.0:
        raise ValidationError(f"spread must be positive, got {spread}")
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    m = centers.shape[0]
    counts = [n // m + (1 if i < n % m else 0) for i in range(m)]
    rng = np.random.default_rng(seed)
    points = []
    labels = []
    for i, (center, cnt) in enumerate(zip(centers, counts)):
        if cnt == 0:
            continue
        cloud = rng.normal(loc=center, scale=spread, size=(cnt, 2))
        points.append(np.clip(cloud, 0.0, 1.0))
        labels.append(np.full(cnt, i, dtype=np.int64))
    inputs = np.concatenate(points)
    labels = np.concatenate(labels)
    order = rng.permutation(n)
    return LabeledDataset(
        inputs=inputs[order],
        labels=labels[order],
        num_classes=max(m, 2),
        split=split,
    )
