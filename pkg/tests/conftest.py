import numpy as np
import pytest

from zonnscan import DenseLayer, MlpModel
from zonnscan.kernels import warmup


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # compile the jitted kernels once so individual tests measure steady state
    warmup()


@pytest.fixture
def uniform_model():
    """All-zero single layer: every input maps to the uniform vector."""
    return MlpModel(
        [DenseLayer(weights=np.zeros((3, 2)), bias=np.zeros(3), activation="identity")],
        input_dim=2,
        num_classes=3,
    )


@pytest.fixture
def identity_model():
    """1-layer 2x2 identity weights, zero bias."""
    return MlpModel(
        [DenseLayer(weights=np.eye(2), bias=np.zeros(2), activation="identity")],
        input_dim=2,
        num_classes=2,
    )


LINEAR2D_W = np.array([[6.0, 0.0], [0.0, 6.0]])
LINEAR2D_B = np.array([0.0, 0.0])


@pytest.fixture
def linear2d_model():
    """Two-class linear-softmax model whose decision line is x0 == x1."""
    return MlpModel(
        [DenseLayer(weights=LINEAR2D_W, bias=LINEAR2D_B, activation="identity")],
        input_dim=2,
        num_classes=2,
    )
