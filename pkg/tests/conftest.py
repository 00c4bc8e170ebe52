import numpy as np
import pytest

from src.collectors.datasets import BINARY_ALPHABET, LabeledDataset, demo_nine_points


@pytest.fixture
def demo():
    return demo_nine_points()


@pytest.fixture
def line3():
    """1-D points {0, 1, 2}, all labeled +1."""
    return LabeledDataset(np.array([[0.0], [1.0], [2.0]]), np.array([1, 1, 1]), BINARY_ALPHABET)


@pytest.fixture
def two_points():
    """Opposite labels at l2 distance 2 along the first axis."""
    return LabeledDataset(np.array([[0.0, 0.0], [2.0, 0.0]]), np.array([0, 1]), BINARY_ALPHABET)
