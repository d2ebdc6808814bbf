"""Harris Hawks Optimization moves and the HHO driver.

Every hawk update in an iteration reads the same iteration-start snapshot
(population, prey, mean position), so the per-hawk work can run in any order
or concurrently. Random numbers for hawk ``k`` at iteration ``i`` come from
a generator keyed by ``(seed, HHO_STREAM, i, k)``.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from ghho.errors import ContractViolation
from ghho.optimizer._parallel import Mapper, mapper, serial_map
from ghho.optimizer.types import (
    HHO,
    Candidate,
    FitnessFn,
    RunConfig,
    SearchSpace,
    Trace,
    TraceRecord,
    check_dims,
    substream,
)

INIT_STREAM = 0
HHO_STREAM = 1


def mean_position(population: Sequence[Candidate]) -> np.ndarray:
    if len(population) == 0:
        raise ContractViolation("mean_position of an empty population")
    positions = [c.position for c in population]
    check_dims(*positions)
    return np.mean(np.stack(positions), axis=0)


def update_energy(eng0: float, iteration: int, max_iterations: int) -> float:
    """Escape energy ``2 * eng0 * (1 - iteration / max_iterations)``."""
    if max_iterations <= 0:
        raise ContractViolation("max_iterations must be positive")
    if not 0 <= iteration <= max_iterations:
        raise ContractViolation(f"iteration {iteration} outside [0, {max_iterations}]")
    if not -1.0 <= eng0 <= 1.0:
        raise ContractViolation(f"initial energy {eng0} outside [-1, 1]")
    return 2.0 * eng0 * (1.0 - iteration / max_iterations)


def hho_explore(
    hawk: Candidate,
    prey: Candidate,
    rand_member: Candidate,
    mean: np.ndarray,
    space: SearchSpace,
    rng,
) -> Candidate:
    """Exploration move; draws q, r1, r2, r3, r4 from ``rng`` in that order."""
    x, x_prey, x_rand = hawk.position, prey.position, rand_member.position
    check_dims(x, x_prey, x_rand, mean, space.lower)
    q, r1, r2, r3, r4 = (rng.random() for _ in range(5))
    if q >= 0.5:
        new = x_rand - r1 * np.abs(x_rand - 2.0 * r2 * x)
    else:
        new = (x_prey - mean) - r3 * (space.lower + r4 * (space.upper - space.lower))
    return Candidate(space.clamp(new))


def _jump(rng, jump: Optional[float]) -> float:
    return 2.0 * (1.0 - rng.random()) if jump is None else jump


def soft_besiege(
    hawk: Candidate,
    prey: Candidate,
    eng: float,
    space: SearchSpace,
    rng=None,
    jump: Optional[float] = None,
) -> Candidate:
    x, x_prey = hawk.position, prey.position
    check_dims(x, x_prey, space.lower)
    j = _jump(rng, jump)
    new = (x_prey - x) - eng * np.abs(j * x_prey - x)
    return Candidate(space.clamp(new))


def hard_besiege(hawk: Candidate, prey: Candidate, eng: float, space: SearchSpace) -> Candidate:
    x, x_prey = hawk.position, prey.position
    check_dims(x, x_prey, space.lower)
    new = x_prey - eng * np.abs(x_prey - x)
    return Candidate(space.clamp(new))


def levy_sigma(beta: float) -> float:
    if not 1.0 < beta <= 2.0:
        raise ContractViolation(f"Levy exponent must lie in (1, 2], got {beta}")
    num = math.gamma(1.0 + beta) * math.sin(math.pi * beta / 2.0)
    den = math.gamma((1.0 + beta) / 2.0) * beta * 2.0 ** ((beta - 1.0) / 2.0)
    return (num / den) ** (1.0 / beta)


def levy_flight(dim: int, beta: float, rng) -> np.ndarray:
    """Mantegna-style Levy steps: ``0.01 * u / |v|**(1/beta)`` with u ~ N(0, sigma^2), v ~ N(0, 1)."""
    sigma = levy_sigma(beta)
    u = np.asarray(rng.standard_normal(dim), dtype=float) * sigma
    v = np.asarray(rng.standard_normal(dim), dtype=float)
    return 0.01 * u / np.abs(v) ** (1.0 / beta)


def _dive(
    hawk: Candidate,
    y: np.ndarray,
    space: SearchSpace,
    fitness: FitnessFn,
    rng,
    beta: float,
) -> Candidate:
    if hawk.fitness is None:
        raise ContractViolation("diving hawk must carry a current fitness")
    y = space.clamp(y)
    s = rng.random(space.dim)
    z = space.clamp(y + s * levy_flight(space.dim, beta, rng))
    fy = float(fitness(y))
    fz = float(fitness(z))
    if fy < hawk.fitness:
        return Candidate(y, fy)
    if fz < hawk.fitness:
        return Candidate(z, fz)
    return hawk.copy()


def soft_besiege_dive(
    hawk: Candidate,
    prey: Candidate,
    eng: float,
    space: SearchSpace,
    fitness: FitnessFn,
    rng,
    beta: float = 1.5,
) -> Candidate:
    """Soft besiege with progressive rapid dives.

    Tries ``Y = prey - eng * |prey - x|`` then a Levy-perturbed ``Z``; keeps the
    first that beats the hawk's current fitness, otherwise leaves the hawk in
    place. Costs two fitness evaluations.
    """
    x, x_prey = hawk.position, prey.position
    check_dims(x, x_prey, space.lower)
    y = x_prey - eng * np.abs(x_prey - x)
    return _dive(hawk, y, space, fitness, rng, beta)


def hard_besiege_dive(
    hawk: Candidate,
    prey: Candidate,
    mean: np.ndarray,
    eng: float,
    space: SearchSpace,
    fitness: FitnessFn,
    rng,
    beta: float = 1.5,
    jump: Optional[float] = None,
) -> Candidate:
    """Hard besiege with progressive rapid dives, pulling toward the population mean."""
    x_prey = prey.position
    check_dims(hawk.position, x_prey, mean, space.lower)
    j = _jump(rng, jump)
    y = x_prey - eng * np.abs(j * x_prey - mean)
    return _dive(hawk, y, space, fitness, rng, beta)


def _move_hawk(
    index: int,
    snapshot: Sequence[Candidate],
    prey: Candidate,
    mean: np.ndarray,
    iteration: int,
    max_iterations: int,
    space: SearchSpace,
    fitness: FitnessFn,
    seed: int,
    beta: float,
) -> tuple[Candidate, int]:
    rng = substream(seed, HHO_STREAM, iteration, index)
    hawk = snapshot[index]
    eng0 = 2.0 * rng.random() - 1.0
    jump = 2.0 * (1.0 - rng.random())
    r = rng.random()
    eng = update_energy(eng0, iteration, max_iterations)

    evaluations = 0
    if abs(eng) >= 1.0:
        partner = snapshot[int(rng.integers(len(snapshot)))]
        moved = hho_explore(hawk, prey, partner, mean, space, rng)
    elif r >= 0.5 and abs(eng) >= 0.5:
        moved = soft_besiege(hawk, prey, eng, space, jump=jump)
    elif r >= 0.5:
        moved = hard_besiege(hawk, prey, eng, space)
    elif abs(eng) >= 0.5:
        moved = soft_besiege_dive(hawk, prey, eng, space, fitness, rng, beta)
        evaluations += 2
    else:
        moved = hard_besiege_dive(hawk, prey, mean, eng, space, fitness, rng, beta, jump=jump)
        evaluations += 2

    moved.fitness = float(fitness(moved.position))
    return moved, evaluations + 1


def best_index(population: Sequence[Candidate]) -> int:
    """Index of the lowest fitness; the first one wins ties."""
    return int(np.argmin([c.fitness for c in population]))


def hho_step(
    population: Sequence[Candidate],
    prey: Candidate,
    iteration: int,
    max_iterations: int,
    space: SearchSpace,
    fitness: FitnessFn,
    seed: int,
    beta: float = 1.5,
    map_fn: Mapper = serial_map,
) -> tuple[list[Candidate], Candidate, int]:
    """One HHO iteration. Returns the moved population, the (elitist) prey and
    the number of fitness evaluations spent."""
    if any(c.fitness is None for c in population):
        raise ContractViolation("population must be evaluated before an HHO step")
    snapshot = list(population)
    mean = mean_position(snapshot)

    def task(index):
        return _move_hawk(
            index, snapshot, prey, mean, iteration, max_iterations, space, fitness, seed, beta
        )

    results = map_fn(task, range(len(snapshot)))
    moved = [c for c, _ in results]
    evaluations = sum(n for _, n in results)

    best = moved[best_index(moved)]
    if best.fitness < prey.fitness:
        prey = best.copy()
    return moved, prey, evaluations


def init_population(
    n: int, space: SearchSpace, fitness: FitnessFn, seed: int, map_fn: Mapper = serial_map
) -> list[Candidate]:
    def task(index):
        x = space.sample(substream(seed, INIT_STREAM, 0, index))
        return Candidate(x, float(fitness(x)))

    return map_fn(task, range(n))


def run_hho_phase(
    population: list[Candidate],
    prey: Candidate,
    iterations: int,
    space: SearchSpace,
    fitness: FitnessFn,
    seed: int,
    beta: float,
    trace: Trace,
    map_fn: Mapper,
    start: int = 0,
) -> tuple[list[Candidate], Candidate]:
    evaluations = trace.evaluations
    for i in range(iterations):
        population, prey, spent = hho_step(
            population, prey, i, iterations, space, fitness, seed, beta, map_fn
        )
        evaluations += spent
        trace.append(TraceRecord(start + i, HHO, prey.fitness, prey.position.copy(), evaluations))
    return population, prey


def hho_optimize(
    config: RunConfig, space: SearchSpace, fitness: FitnessFn
) -> tuple[Candidate, Trace]:
    """Plain HHO over the whole iteration budget."""
    with mapper(config.workers) as map_fn:
        population = init_population(config.population, space, fitness, config.seed, map_fn)
        prey = population[best_index(population)].copy()
        trace = Trace(prey.fitness, len(population))
        population, prey = run_hho_phase(
            population, prey, config.max_iterations, space, fitness,
            config.seed, config.beta, trace, map_fn,
        )
    return prey, trace
