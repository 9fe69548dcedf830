import struct

import numpy as np
import pytest

from zonnscan import (
    DataError,
    LabeledDataset,
    ParseError,
    TrainConfig,
    ValidationError,
    init_mlp,
    load_csv,
    load_idx,
    make_blobs,
    train,
    write_idx,
)


def _write_pair(tmp_path, images, labels, shape=(2, 2)):
    imgs = tmp_path / "images.idx"
    lbls = tmp_path / "labels.idx"
    write_idx(images, labels, imgs, lbls, shape)
    return imgs, lbls


class TestIdx:
    def test_pixel_normalization(self, tmp_path):
        inputs = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 128 / 255]])
        imgs, lbls = _write_pair(tmp_path, inputs, np.array([1, 0]))
        data = load_idx(imgs, lbls)
        assert data.inputs[0, 0] == 1.0
        assert data.inputs[1, 3] == 128 / 255
        assert data.n == 2 and data.dim == 4

    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        inputs = rng.integers(0, 256, size=(20, 9)).astype(np.float64) / 255.0
        labels = rng.integers(0, 7, size=20)
        imgs, lbls = _write_pair(tmp_path, inputs, labels, shape=(3, 3))
        data = load_idx(imgs, lbls, num_classes=7)
        assert np.array_equal(data.inputs, inputs)
        assert np.array_equal(data.labels, labels)

    def test_limit(self, tmp_path):
        inputs = np.zeros((2, 4))
        imgs, lbls = _write_pair(tmp_path, inputs, np.array([0, 1]))
        assert load_idx(imgs, lbls, limit=1).n == 1

    def test_count_mismatch(self, tmp_path):
        imgs, _ = _write_pair(tmp_path, np.zeros((2, 4)), np.array([0, 1]))
        lbls = tmp_path / "bad_labels.idx"
        with open(lbls, "wb") as fh:
            fh.write(struct.pack(">II", 0x00000801, 3))
            fh.write(bytes([0, 1, 0]))
        with pytest.raises(DataError):
            load_idx(imgs, lbls)

    def test_bad_magic(self, tmp_path):
        _, lbls = _write_pair(tmp_path, np.zeros((1, 4)), np.array([0]))
        imgs = tmp_path / "bad_images.idx"
        with open(imgs, "wb") as fh:
            fh.write(struct.pack(">IIII", 0xDEADBEEF, 1, 2, 2))
            fh.write(bytes(4))
        with pytest.raises(ParseError):
            load_idx(imgs, lbls)

    def test_truncated_file(self, tmp_path):
        _, lbls = _write_pair(tmp_path, np.zeros((1, 4)), np.array([0]))
        imgs = tmp_path / "short_images.idx"
        with open(imgs, "wb") as fh:
            fh.write(struct.pack(">IIII", 0x00000803, 5, 2, 2))
            fh.write(bytes(3))  # should be 20 pixel bytes
        with pytest.raises(ParseError):
            load_idx(imgs, lbls)


class TestCsv:
    def test_basic_row(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("0.1,0.9,1\n")
        data = load_csv(path, num_classes=2)
        assert np.array_equal(data.inputs, [[0.1, 0.9]])
        assert data.labels[0] == 1

    def test_out_of_range_feature(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("0.1,0.9,1\n1.5,0.2,0\n")
        with pytest.raises(DataError) as err:
            load_csv(path, num_classes=2)
        assert ":2:" in str(err.value)

    def test_out_of_range_label(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("0.1,0.9,2\n")
        with pytest.raises(DataError):
            load_csv(path, num_classes=2)

    def test_non_numeric_cell(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("0.1,abc,0\n")
        with pytest.raises(ParseError) as err:
            load_csv(path, num_classes=2)
        assert ":1:" in str(err.value)

    def test_ragged_rows(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("0.1,0.9,0\n0.5,1\n")
        with pytest.raises(ParseError):
            load_csv(path, num_classes=2)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("")
        with pytest.raises(DataError):
            load_csv(path, num_classes=2)


class TestMakeBlobs:
    def test_tiny_spread_collapses_to_centers(self):
        centers = np.array([[0.2, 0.3], [0.8, 0.7]])
        data = make_blobs(100, centers, spread=1e-9, seed=0)
        for i in range(100):
            assert np.abs(data.inputs[i] - centers[data.labels[i]]).max() < 1e-6

    def test_seed_determinism(self):
        a = make_blobs(50, [[0.5, 0.5]], 0.1, seed=9)
        b = make_blobs(50, [[0.5, 0.5]], 0.1, seed=9)
        assert np.array_equal(a.inputs, b.inputs)
        assert np.array_equal(a.labels, b.labels)

    def test_points_inside_unit_square(self):
        data = make_blobs(500, [[0.02, 0.98]], 0.3, seed=1)
        assert (data.inputs >= 0.0).all() and (data.inputs <= 1.0).all()

    def test_separable_blobs_train_well(self):
        data = make_blobs(600, [[0.25, 0.25], [0.75, 0.75]], 0.05, seed=2)
        model = init_mlp([2, 2], "identity", seed=3)
        result = train(model, data, TrainConfig(learning_rate=0.5, epochs=40,
                                                batch_size=32, seed=4))
        assert result.history[-1].accuracy >= 0.95

    def test_parameter_validation(self):
        with pytest.raises(ValidationError):
            make_blobs(0, [[0.5, 0.5]], 0.1, seed=0)
        with pytest.raises(ValidationError):
            make_blobs(10, [[0.5, 0.5]], 0.0, seed=0)
        with pytest.raises(ValidationError):
            make_blobs(10, [], 0.1, seed=0)
        with pytest.raises(ValidationError):
            make_blobs(10, [[1.5, 0.5]], 0.1, seed=0)


class TestLabeledDataset:
    def test_rejects_out_of_range_inputs(self):
        with pytest.raises(DataError):
            LabeledDataset(inputs=np.array([[1.5, 0.0]]), labels=np.array([0]), num_classes=2)

    def test_rejects_bad_labels(self):
        with pytest.raises(DataError):
            LabeledDataset(inputs=np.array([[0.5, 0.5]]), labels=np.array([2]), num_classes=2)

    def test_rejects_empty(self):
        with pytest.raises(DataError):
            LabeledDataset(inputs=np.zeros((0, 2)), labels=np.zeros(0, dtype=int), num_classes=2)

    def test_inputs_frozen(self):
        data = make_blobs(10, [[0.5, 0.5]], 0.1, seed=0)
        with pytest.raises(ValueError):
            data.inputs[0, 0] = 0.0
