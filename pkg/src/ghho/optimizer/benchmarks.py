"""Synthetic objectives for validating the optimizers.

Each entry records its usual search box and its global minimum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


def sphere(x: np.ndarray) -> float:
    return float(np.sum(np.square(x)))


def rastrigin(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    return float(10.0 * x.size + np.sum(x * x - 10.0 * np.cos(2.0 * np.pi * x)))


def rosenbrock(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))


def ackley(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    n = x.size
    return float(
        -20.0 * np.exp(-0.2 * np.sqrt(np.sum(x * x) / n))
        - np.exp(np.sum(np.cos(2.0 * np.pi * x)) / n)
        + 20.0
        + np.e
    )


@dataclass(frozen=True)
class Benchmark:
    name: str
    fn: Callable[[np.ndarray], float]
    lower: float
    upper: float
    minimizer: float  # every coordinate of the global minimiser
    minimum: float = 0.0

    def __call__(self, x):
        return self.fn(x)


def benchmark_functions() -> dict[str, Benchmark]:
    return {
        "sphere": Benchmark("sphere", sphere, -100.0, 100.0, 0.0),
        "rastrigin": Benchmark("rastrigin", rastrigin, -5.12, 5.12, 0.0),
        "rosenbrock": Benchmark("rosenbrock", rosenbrock, -30.0, 30.0, 1.0),
        "ackley": Benchmark("ackley", ackley, -32.0, 32.0, 0.0),
    }
