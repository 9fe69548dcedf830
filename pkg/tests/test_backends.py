"""Backend equivalence and selection.

The numba and numpy paths consume bitwise-identical uniforms, so their scan
results must agree to floating-point roundoff; each path individually must be
bitwise deterministic, including across worker counts.
"""

import numpy as np
import pytest

from tests_support_random import random_model_and_input
from zonnscan import NumericError, ScanConfig, ValidationError, zonnscan
from zonnscan.kernels import (
    CHUNK,
    ENV_BACKEND,
    HAS_NUMBA,
    active_backend,
    available_backends,
    forward_logits_batch,
    scan_region,
)
from zonnscan.model import DenseLayer, MlpModel
from zonnscan.sampler import make_region

needs_numba = pytest.mark.skipif(not HAS_NUMBA, reason="numba not importable")


class TestSelection:
    def test_env_flag_selects_numpy(self, monkeypatch):
        monkeypatch.setenv(ENV_BACKEND, "numpy")
        assert active_backend() == "numpy"

    @needs_numba
    def test_env_flag_selects_numba(self, monkeypatch):
        monkeypatch.setenv(ENV_BACKEND, "numba")
        assert active_backend() == "numba"

    def test_explicit_override_beats_env(self, monkeypatch):
        monkeypatch.setenv(ENV_BACKEND, "numba" if HAS_NUMBA else "numpy")
        assert active_backend("numpy") == "numpy"

    def test_unknown_backend_rejected(self):
        with pytest.raises(ValidationError):
            active_backend("cuda")

    def test_unknown_env_value_rejected(self, monkeypatch):
        monkeypatch.setenv(ENV_BACKEND, "fortran")
        with pytest.raises(ValidationError):
            active_backend()

    def test_available_reported(self):
        assert "numpy" in available_backends()


@needs_numba
class TestAgreement:
    def test_scan_values_agree_to_roundoff(self):
        rng = np.random.default_rng(50)
        for _ in range(15):
            model, x = random_model_and_input(rng)
            cfg = ScanConfig(radius=float(rng.random()), num_samples=257,
                             seed=int(rng.integers(1 << 30)))
            a = zonnscan(model, x, cfg, backend="numpy")
            b = zonnscan(model, x, cfg, backend="numba")
            assert abs(a.index_value - b.index_value) < 1e-9
            assert np.abs(a.mean_confidence - b.mean_confidence).max() < 1e-9

    def test_wide_model_agreement(self):
        from zonnscan import init_mlp

        model = init_mlp([50, 32, 5], "relu", seed=51)
        x = np.random.default_rng(52).random(50)
        cfg = ScanConfig(radius=0.1, num_samples=CHUNK + 100, seed=53)
        a = zonnscan(model, x, cfg, backend="numpy")
        b = zonnscan(model, x, cfg, backend="numba")
        assert abs(a.index_value - b.index_value) < 1e-9

    def test_forward_batch_agreement(self):
        from zonnscan import init_mlp

        model = init_mlp([6, 9, 4], "sigmoid", seed=54)
        X = np.random.default_rng(55).random((64, 6))
        a = forward_logits_batch(model.packed(), X, backend="numpy")
        b = forward_logits_batch(model.packed(), X, backend="numba")
        assert np.abs(a - b).max() < 1e-10


class TestWorkerDeterminism:
    @pytest.mark.parametrize("backend", ["numpy", "numba"])
    def test_worker_count_never_changes_bytes(self, backend):
        if backend == "numba" and not HAS_NUMBA:
            pytest.skip("numba not importable")
        from zonnscan import init_mlp

        model = init_mlp([8, 16, 4], "relu", seed=60)
        x = np.random.default_rng(61).random(8)
        # spans several chunks so the thread pool actually partitions work
        cfg = ScanConfig(radius=0.2, num_samples=3 * CHUNK + 17, seed=62,
                         keep_entropies=True)
        reports = [
            zonnscan(model, x, cfg, workers=w, backend=backend) for w in (1, 2, 7)
        ]
        for other in reports[1:]:
            assert other.index_value == reports[0].index_value
            assert np.array_equal(other.mean_confidence, reports[0].mean_confidence)
            assert np.array_equal(other.entropy_samples, reports[0].entropy_samples)

    def test_worker_validation(self, linear2d_model):
        with pytest.raises(ValidationError):
            zonnscan(linear2d_model, np.array([0.5, 0.5]),
                     ScanConfig(0.1, 10, 0), workers=0)


class TestNumericErrors:
    @pytest.mark.parametrize("backend", ["numpy"] + (["numba"] if HAS_NUMBA else []))
    def test_overflowing_model_raises(self, backend):
        model = MlpModel(
            [DenseLayer(weights=np.full((2, 2), 1e308), bias=np.zeros(2),
                        activation="identity")],
            input_dim=2, num_classes=2,
        )
        region = make_region(np.array([1.0, 1.0]), 0.0)
        with pytest.raises(NumericError):
            scan_region(model.packed(), region.lower, region.upper, 1, 32,
                        backend=backend)
