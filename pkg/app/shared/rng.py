"""Generador aleatorio con semilla para simulación reproducible."""

from __future__ import annotations

import hashlib
from typing import Sequence

import numpy as np


class SeededRNG:
    """
    Envoltorio sobre numpy.random.Generator.

    Cada subsistema recibe su propio hijo vía fork(name) para que
    añadir consumo de aleatoriedad en uno no altere a los demás.
    """

    def __init__(self, seed: int, path: Sequence[int] = ()):
        self._seed = int(seed)
        self._path = tuple(int(p) for p in path)
        self._rng = np.random.default_rng([self._seed, *self._path])

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def generator(self) -> np.random.Generator:
        return self._rng

    def uniform(self, a: float, b: float) -> float:
        return float(self._rng.uniform(a, b))

    def integers(self, low: int, high: int) -> int:
        """Entero en [low, high)."""
        return int(self._rng.integers(low, high))

    def random(self) -> float:
        return float(self._rng.random())

    def choice(self, seq: Sequence):
        return seq[int(self._rng.integers(0, len(seq)))]

    def permutation(self, n: int) -> np.ndarray:
        return self._rng.permutation(n)

    def fork(self, name: str) -> SeededRNG:
        """Hijo determinista identificado por nombre (independiente del orden de uso)."""
        tag = int.from_bytes(hashlib.sha256(name.encode("utf-8")).digest()[:8], "little")
        return SeededRNG(self._seed, (*self._path, tag))


def line_generator(seed: int, line_index: int) -> np.random.Generator:
    """Generador propio de una línea de escaneo: el ruido no depende del orden de llamada."""
    return np.random.default_rng([int(seed), int(line_index)])
