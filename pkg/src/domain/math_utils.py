from typing import Sequence

import numpy as np


def stable_softmax(values: Sequence[float]) -> np.ndarray:
    """Softmax with the max subtracted before exponentiation."""
    x = np.asarray(values, dtype=float)
    x = x - np.max(x)
    e = np.exp(x)
    return e / e.sum()


def argmax_lowest(values: Sequence[float]) -> int:
    # np.argmax returns the first maximal index; ties therefore go to the lowest action
    return int(np.argmax(np.asarray(values, dtype=float)))


def argmax_set(values: Sequence[float], tol: float = 0.0) -> list[int]:
    best = max(values)
    return [i for i, v in enumerate(values) if v >= best - tol]


def sample_index(probabilities: Sequence[float], rng: np.random.Generator) -> int:
    """Inverse-CDF draw consuming exactly one uniform from `rng`."""
    u = rng.random()
    cumulative = 0.0
    for i, p in enumerate(probabilities):
        cumulative += p
        if u < cumulative:
            return i
    # float round-off can leave the cumulative sum just below 1
    return len(probabilities) - 1
