import numpy as np
import pytest

from zonnscan import (
    DataError,
    ScanConfig,
    TrainConfig,
    ValidationError,
    init_mlp,
    make_blobs,
    predict_classes,
    train,
    zonnscan,
)
from zonnscan.experiments import (
    adv_experiment,
    build_watermark_key,
    disagreement_experiment,
    scan_values,
    watermark_experiment,
)

CENTERS = [[0.35, 0.35], [0.65, 0.65], [0.25, 0.75]]


@pytest.fixture(scope="module")
def setup():
    data = make_blobs(2000, CENTERS, 0.08, seed=70, split="train")
    test = make_blobs(1000, CENTERS, 0.08, seed=71, split="test")
    model = train(init_mlp([2, 16, 3], "relu", seed=72), data,
                  TrainConfig(learning_rate=0.5, epochs=60, batch_size=32, seed=73)).model
    return model, data, test


class TestScanValues:
    def test_stream_assignment_by_position(self, setup):
        model, _, test = setup
        pts = test.inputs[:4]
        values = scan_values(model, pts, radius=0.05, num_samples=128, seed=5, base_stream=3)
        cfg = ScanConfig(radius=0.05, num_samples=128, seed=5)
        for i in range(4):
            assert values[i] == zonnscan(model, pts[i], cfg, stream_id=3 + i).index_value


class TestAdvExperiment:
    def test_adversarial_distribution_shifts_up(self, setup):
        model, _, test = setup
        result = adv_experiment(model, test, n=60, epsilon=0.2, radius=0.025,
                                num_samples=500, seed=74)
        assert result.adv_summary.mean > result.clean_summary.mean
        assert result.ks.p_value < 1e-3
        assert result.clean_values.shape == (60,)
        assert result.adv_values.shape == (60,)

    def test_deterministic(self, setup):
        model, _, test = setup
        a = adv_experiment(model, test, n=10, epsilon=0.2, radius=0.025,
                           num_samples=200, seed=75)
        b = adv_experiment(model, test, n=10, epsilon=0.2, radius=0.025,
                           num_samples=200, seed=75)
        assert np.array_equal(a.clean_values, b.clean_values)
        assert np.array_equal(a.adv_values, b.adv_values)

    def test_report_payload(self, setup):
        model, _, test = setup
        result = adv_experiment(model, test, n=10, epsilon=0.2, radius=0.025,
                                num_samples=100, seed=76)
        doc = result.to_dict()
        assert doc["n"] == 10
        assert set(doc) == {"n", "epsilon", "attack_success_rate", "clean_summary",
                            "adversarial_summary", "ks"}


class TestDisagreementExperiment:
    def test_identical_models_report_diagnostic(self, setup):
        model, _, test = setup
        result = disagreement_experiment([model, model], test, baseline_count=50,
                                         radius=0.025, num_samples=100, seed=77)
        assert result.corner_indices.size == 0
        assert result.ks is None
        assert result.diagnostic is not None
        assert result.baseline_values.shape == (50,)

    def test_corner_cases_scan_higher(self):
        data = make_blobs(2000, CENTERS, 0.12, seed=80, split="train")
        test = make_blobs(2000, CENTERS, 0.12, seed=81, split="test")
        m1 = train(init_mlp([2, 16, 3], "relu", seed=82), data,
                   TrainConfig(0.5, 60, 32, seed=83)).model
        m2 = train(init_mlp([2, 16, 3], "relu", seed=84), data,
                   TrainConfig(0.5, 60, 32, seed=85)).model
        result = disagreement_experiment([m1, m2], test, baseline_count=200,
                                         radius=0.025, num_samples=500, seed=86)
        assert result.corner_indices.size >= 20
        assert result.corner_summary.mean > result.baseline_summary.mean
        assert result.ks.p_value < 1e-3

    def test_baseline_count_validation(self, setup):
        model, _, test = setup
        with pytest.raises(ValidationError):
            disagreement_experiment([model, model], test, baseline_count=0,
                                    radius=0.025, num_samples=10, seed=0)


class TestWatermark:
    def test_key_composition(self, setup):
        model, _, test = setup
        key = build_watermark_key(model, test, key_size=16, epsilon=0.1, seed=90)
        assert key.size == 16
        preds = predict_classes(model, key.inputs)
        clean, adv = preds[:8], preds[8:]
        # clean half already classified as its target; adversarial half not
        assert (clean == key.target_labels[:8]).all()
        assert (adv != key.target_labels[8:]).all()

    def test_key_determinism(self, setup):
        model, _, test = setup
        a = build_watermark_key(model, test, key_size=10, epsilon=0.1, seed=91)
        b = build_watermark_key(model, test, key_size=10, epsilon=0.1, seed=91)
        assert np.array_equal(a.inputs, b.inputs)
        assert np.array_equal(a.target_labels, b.target_labels)

    def test_odd_key_size_rejected(self, setup):
        model, _, test = setup
        with pytest.raises(ValidationError):
            build_watermark_key(model, test, key_size=7, epsilon=0.1, seed=0)

    def test_experiment_distributions_shift(self, setup):
        model, _, test = setup
        result = watermark_experiment(
            model, test, key_size=10, epsilon=0.1,
            finetune_config=TrainConfig(0.3, 2000, 4, seed=92),
            radius=0.025, num_samples=200, runs=10, seed=93,
        )
        assert result.finetune.key_accuracy >= 0.9
        assert result.pre_values.shape == (100,)
        assert result.post_values.shape == (100,)
        assert result.ks.p_value < 1e-3

    def test_runs_validation(self, setup):
        model, _, test = setup
        with pytest.raises(ValidationError):
            watermark_experiment(model, test, key_size=10, epsilon=0.1,
                                 finetune_config=TrainConfig(0.3, 10, 4, seed=0),
                                 radius=0.025, num_samples=10, runs=0, seed=0)

    def test_insufficient_adversarials_is_data_error(self, setup):
        model, _, test = setup
        # a step too small to flip anything
        with pytest.raises(DataError):
            build_watermark_key(model, test, key_size=10, epsilon=1e-9, seed=94)
