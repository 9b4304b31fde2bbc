import numpy as np
import pytest

from src.domain.math_utils import argmax_lowest, argmax_set, sample_index, stable_softmax


def test_stable_softmax_handles_large_values():
    probs = stable_softmax([1000.0, 1000.0])
    assert probs.tolist() == [0.5, 0.5]


def test_stable_softmax_sums_to_one():
    probs = stable_softmax([0.1, -3.0, 2.5])
    assert probs.sum() == pytest.approx(1.0)
    assert np.argmax(probs) == 2


def test_argmax_lowest_breaks_ties_towards_lowest_index():
    assert argmax_lowest([1.0, 3.0, 3.0]) == 1


def test_argmax_set_returns_every_maximiser():
    assert argmax_set([2.0, 1.0, 2.0]) == [0, 2]
    assert argmax_set([2.0, 1.9999, 1.0], tol=1e-3) == [0, 1]


def test_sample_index_consumes_one_draw():
    rng = np.random.default_rng(3)
    reference = np.random.default_rng(3)
    i = sample_index([0.25, 0.25, 0.5], rng)
    u = reference.random()
    assert i == (0 if u < 0.25 else 1 if u < 0.5 else 2)
    assert rng.random() == reference.random()


def test_sample_index_point_mass():
    rng = np.random.default_rng(0)
    assert all(sample_index([0.0, 1.0], rng) == 1 for _ in range(20))
