import numpy as np
import pytest
from scipy.stats import ks_2samp as scipy_ks

import oracles
from zonnscan import (
    DenseLayer,
    MlpModel,
    TrainConfig,
    ValidationError,
    find_disagreements,
    init_mlp,
    ks_two_sample,
    make_blobs,
    summarize,
    train,
)

# frozen from a 40-digit evaluation of the corrected asymptotic series
KS_EXAMPLE_D = 0.75
KS_EXAMPLE_P = 0.1074904650209663689


class TestKsTwoSample:
    def test_identical_samples(self):
        r = ks_two_sample([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert r.statistic == 0.0
        assert r.p_value == 1.0

    def test_disjoint_supports(self):
        r = ks_two_sample([0.0, 0.0, 0.0], [1.0, 1.0, 1.0])
        assert r.statistic == 1.0
        assert r.p_value < 0.05

    def test_frozen_example(self):
        r = ks_two_sample([0.1, 0.2, 0.3, 0.4], [0.35, 0.45, 0.55, 0.65])
        assert r.statistic == KS_EXAMPLE_D
        assert r.p_value == pytest.approx(KS_EXAMPLE_P, rel=1e-12)

    def test_statistic_matches_brute_force(self):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            n1 = int(rng.integers(1, 12))
            n2 = int(rng.integers(1, 12))
            # mix of continuous values and deliberate ties
            a = np.round(rng.random(n1), int(rng.integers(1, 3)))
            b = np.round(rng.random(n2), int(rng.integers(1, 3)))
            assert ks_two_sample(a, b).statistic == oracles.brute_force_ks_statistic(a, b)

    def test_pvalue_matches_high_precision_series(self):
        for d, n1, n2 in [(0.1, 50, 60), (0.25, 100, 100), (0.5, 30, 45),
                          (0.75, 4, 4), (0.04, 500, 500), (1.0, 10, 10)]:
            from zonnscan.stats import ks_pvalue

            assert ks_pvalue(d, n1, n2) == pytest.approx(
                oracles.mpmath_ks_pvalue(d, n1, n2), rel=1e-10, abs=1e-300
            )

    def test_symmetry(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            a = rng.random(int(rng.integers(1, 40)))
            b = rng.random(int(rng.integers(1, 40)))
            assert ks_two_sample(a, b).statistic == ks_two_sample(b, a).statistic

    def test_invariance_under_increasing_affine_maps(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            a = rng.normal(size=int(rng.integers(2, 30)))
            b = rng.normal(0.4, 1.3, size=int(rng.integers(2, 30)))
            base = ks_two_sample(a, b).statistic
            slope = float(rng.uniform(0.1, 10.0))
            shift = float(rng.uniform(-5.0, 5.0))
            mapped = ks_two_sample(slope * a + shift, slope * b + shift).statistic
            assert mapped == base

    def test_statistic_lattice(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n1 = int(rng.integers(1, 20))
            n2 = int(rng.integers(1, 20))
            d = ks_two_sample(rng.random(n1), rng.random(n2)).statistic
            assert d == 0.0 or (1.0 / max(n1, n2)) - 1e-15 <= d <= 1.0

    def test_null_calibration(self):
        rng = np.random.default_rng(12345)
        rejections = sum(
            ks_two_sample(rng.random(100), rng.random(100)).p_value < 0.05
            for _ in range(1000)
        )
        assert 0.03 <= rejections / 1000 <= 0.08

    def test_agrees_with_scipy_statistic(self):
        rng = np.random.default_rng(9)
        for _ in range(25):
            a = rng.normal(size=80)
            b = rng.normal(0.2, 1.0, size=120)
            ours = ks_two_sample(a, b)
            ref = scipy_ks(a, b)
            assert ours.statistic == pytest.approx(ref.statistic, abs=1e-15)
            # scipy's asymptotic mode omits the small-sample correction, so
            # p-values agree only approximately
            assert ours.p_value == pytest.approx(
                scipy_ks(a, b, method="asymp").pvalue, rel=0.25, abs=1e-6
            )

    def test_empty_sample_rejected(self):
        with pytest.raises(ValidationError):
            ks_two_sample([], [1.0])
        with pytest.raises(ValidationError):
            ks_two_sample([1.0], [])


class TestSummarize:
    def test_single_value(self):
        s = summarize([0.5])
        assert s.mean == 0.5 and s.std == 0.0 and s.count == 1
        assert s.min == 0.5 and s.max == 0.5

    def test_two_values(self):
        s = summarize([0.0, 1.0])
        assert s.mean == 0.5 and s.min == 0.0 and s.max == 1.0

    def test_invariants(self):
        rng = np.random.default_rng(10)
        for _ in range(100):
            s = summarize(rng.normal(size=int(rng.integers(1, 50))))
            assert s.min <= s.mean <= s.max
            assert s.std >= 0.0

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            summarize([])


class TestFindDisagreements:
    def test_identical_models_agree_everywhere(self, linear2d_model):
        rng = np.random.default_rng(1)
        inputs = rng.random((100, 2))
        assert find_disagreements([linear2d_model, linear2d_model], inputs).size == 0

    def test_constant_models_disagree_everywhere(self):
        def constant(cls):
            bias = np.zeros(3)
            bias[cls] = 5.0
            return MlpModel(
                [DenseLayer(weights=np.zeros((3, 2)), bias=bias, activation="identity")],
                input_dim=2, num_classes=3,
            )

        inputs = np.random.default_rng(2).random((40, 2))
        idx = find_disagreements([constant(0), constant(1)], inputs)
        assert np.array_equal(idx, np.arange(40))

    def test_incompatible_models_rejected(self, linear2d_model, uniform_model):
        with pytest.raises(ValidationError):
            find_disagreements([linear2d_model, uniform_model], np.zeros((3, 2)))

    def test_single_model_rejected(self, linear2d_model):
        with pytest.raises(ValidationError):
            find_disagreements([linear2d_model], np.zeros((3, 2)))

    def test_disagreements_concentrate_near_class_boundary(self):
        # centers sit on the main diagonal, so the Bayes boundary between the
        # two blobs is the anti-diagonal x0 + x1 = 1
        centers = [[0.35, 0.35], [0.65, 0.65]]
        data = make_blobs(1500, centers, 0.12, seed=3, split="train")
        test = make_blobs(1500, centers, 0.12, seed=4, split="test")
        cfg_a = TrainConfig(learning_rate=0.5, epochs=60, batch_size=32, seed=13)
        cfg_b = TrainConfig(learning_rate=0.5, epochs=60, batch_size=32, seed=14)
        m_a = train(init_mlp([2, 12, 2], "relu", seed=3), data, cfg_a).model
        m_b = train(init_mlp([2, 12, 2], "tanh", seed=4), data, cfg_b).model
        idx = find_disagreements([m_a, m_b], test.inputs)
        assert idx.size > 0
        dist = np.abs(test.inputs[:, 0] + test.inputs[:, 1] - 1.0) / np.sqrt(2)
        assert dist[idx].mean() < dist.mean() / 2
        assert dist[idx].max() < 0.1
