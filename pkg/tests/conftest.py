import numpy as np
import pytest

from nlmarkov.catalog import example1, example2
from nlmarkov.kernels import AffineKernel


@pytest.fixture
def ex1():
    return example1(0.2)


@pytest.fixture
def ex2():
    return example2(0.4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def frozen_kernel():
    """Doubly stochastic, law-independent, with alpha > 0."""
    base = np.array([[0.5, 0.3, 0.2], [0.2, 0.5, 0.3], [0.3, 0.2, 0.5]])
    return AffineKernel(base, None, name="frozen")
