from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ghho.errors import ContractViolation

FitnessFn = Callable[[np.ndarray], float]

HHO = "HHO"
GWO = "GWO"


@dataclass(frozen=True)
class SearchSpace:
    """Box-bounded search domain."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).ravel()
        upper = np.asarray(self.upper, dtype=float).ravel()
        if lower.shape != upper.shape or lower.size == 0:
            raise ContractViolation("lower and upper must be non-empty and of equal length")
        if not np.all(lower < upper):
            raise ContractViolation("every lower bound must be strictly below its upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def uniform(cls, dim: int, low: float, high: float) -> "SearchSpace":
        if dim < 1:
            raise ContractViolation(f"dim must be positive, got {dim}")
        return cls(np.full(dim, float(low)), np.full(dim, float(high)))

    @property
    def dim(self) -> int:
        return self.lower.size

    def clamp(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.lower + rng.random(self.dim) * (self.upper - self.lower)


@dataclass
class Candidate:
    """A position in the search space with its cached fitness (None until evaluated)."""

    position: np.ndarray
    fitness: Optional[float] = None

    def copy(self) -> "Candidate":
        return Candidate(self.position.copy(), self.fitness)


@dataclass(frozen=True)
class RunConfig:
    population: int = 30
    max_iterations: int = 500
    seed: int = 0
    hho_fraction: float = 0.5
    beta: float = 1.5
    workers: int = 1

    def __post_init__(self):
        if self.population < 1:
            raise ContractViolation("population must be positive")
        if self.max_iterations < 1:
            raise ContractViolation("max_iterations must be positive")
        if not 0 <= self.seed < 2**64:
            raise ContractViolation("seed must be a 64-bit unsigned integer")
        if not 0.0 < self.hho_fraction < 1.0:
            raise ContractViolation("hho_fraction must lie in (0, 1)")
        if self.workers < 1:
            raise ContractViolation("workers must be positive")

    @property
    def hho_iterations(self) -> int:
        return int(np.floor(self.hho_fraction * self.max_iterations))

    @property
    def gwo_iterations(self) -> int:
        return self.max_iterations - self.hho_iterations


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    phase: str
    best_fitness: float
    best_position: np.ndarray
    evaluations: int


@dataclass
class Trace:
    """Per-iteration convergence history; ``evaluations`` is cumulative."""

    initial_best_fitness: float = np.inf
    initial_evaluations: int = 0
    records: list[TraceRecord] = field(default_factory=list)

    def append(self, record: TraceRecord) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def best_fitness(self) -> np.ndarray:
        return np.array([r.best_fitness for r in self.records])

    @property
    def evaluations(self) -> int:
        return self.records[-1].evaluations if self.records else self.initial_evaluations


def check_dims(*vectors: np.ndarray) -> None:
    sizes = {np.shape(v) for v in vectors}
    if len(sizes) != 1:
        raise ContractViolation(f"dimension mismatch between vectors: {sorted(sizes)}")


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator keyed by (seed, *key); order of creation never matters."""
    return np.random.default_rng(np.random.SeedSequence([seed, *key]))
