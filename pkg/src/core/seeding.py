"""Seeded counter-based random streams.

Every run draws all randomness from one Philox key. Work units get their
own stream by index, so results do not depend on how units are scheduled
across threads.
"""

import numpy as np


def make_generator(seed: int) -> np.random.Generator:
    """The run's root generator."""
    return np.random.Generator(np.random.Philox(seed))


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for work unit ``index`` (jumped Philox state)."""
    return np.random.Generator(np.random.Philox(seed).jumped(index + 1))


def complex_gaussian(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    """Standard complex Gaussian samples."""
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
