"""Grey Wolf Optimizer: alpha/beta/delta-guided encircling with a linearly
decaying coefficient ``a`` (2 -> 0)."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ghho.errors import ContractViolation
from ghho.optimizer._parallel import Mapper, mapper, serial_map
from ghho.optimizer.hho import init_population
from ghho.optimizer.types import (
    GWO,
    Candidate,
    FitnessFn,
    RunConfig,
    SearchSpace,
    Trace,
    TraceRecord,
    substream,
)

GWO_STREAM = 2


def gwo_coefficient(iteration: int, max_iterations: int) -> float:
    if max_iterations <= 0:
        raise ContractViolation("max_iterations must be positive")
    return 2.0 * (1.0 - iteration / max_iterations)


def select_leaders(candidates: Sequence[Candidate]) -> list[Candidate]:
    """Three best candidates (alpha, beta, delta), stable on ties.

    With fewer than three candidates the weakest available leader is repeated.
    """
    if len(candidates) == 0:
        raise ContractViolation("cannot pick leaders from an empty pack")
    order = sorted(range(len(candidates)), key=lambda k: candidates[k].fitness)
    order = (order + [order[-1]] * 3)[:3]
    return [candidates[k].copy() for k in order]


def gwo_move(
    wolf: Candidate, leaders: Sequence[Candidate], a: float, space: SearchSpace, rng
) -> Candidate:
    x = wolf.position
    pulls = []
    for leader in leaders:
        r1 = rng.random(space.dim)
        r2 = rng.random(space.dim)
        coef_a = 2.0 * a * r1 - a
        coef_c = 2.0 * r2
        distance = np.abs(coef_c * leader.position - x)
        pulls.append(leader.position - coef_a * distance)
    return Candidate(space.clamp(sum(pulls) / 3.0))


def gwo_step(
    wolves: Sequence[Candidate],
    leaders: Sequence[Candidate],
    iteration: int,
    max_iterations: int,
    space: SearchSpace,
    fitness: FitnessFn,
    seed: int,
    map_fn: Mapper = serial_map,
) -> tuple[list[Candidate], list[Candidate], int]:
    """Move every wolf toward the current leaders, evaluate, and re-rank.

    Leaders are elitist: the incumbents compete with the moved pack.
    """
    if len(wolves) < 1:
        raise ContractViolation("GWO needs at least one wolf")
    a = gwo_coefficient(iteration, max_iterations)

    def task(index):
        rng = substream(seed, GWO_STREAM, iteration, index)
        moved = gwo_move(wolves[index], leaders, a, space, rng)
        moved.fitness = float(fitness(moved.position))
        return moved

    moved = map_fn(task, range(len(wolves)))
    leaders = select_leaders(list(leaders) + moved)
    return moved, leaders, len(moved)


def run_gwo_phase(
    wolves: list[Candidate],
    leaders: list[Candidate],
    iterations: int,
    space: SearchSpace,
    fitness: FitnessFn,
    seed: int,
    trace: Trace,
    map_fn: Mapper,
    start: int = 0,
) -> tuple[list[Candidate], list[Candidate]]:
    evaluations = trace.evaluations
    for i in range(iterations):
        wolves, leaders, spent = gwo_step(
            wolves, leaders, i, iterations, space, fitness, seed, map_fn
        )
        evaluations += spent
        alpha = leaders[0]
        trace.append(TraceRecord(start + i, GWO, alpha.fitness, alpha.position.copy(), evaluations))
    return wolves, leaders


def gwo_optimize(
    config: RunConfig, space: SearchSpace, fitness: FitnessFn
) -> tuple[Candidate, Trace]:
    """Plain GWO over the whole iteration budget."""
    with mapper(config.workers) as map_fn:
        wolves = init_population(config.population, space, fitness, config.seed, map_fn)
        leaders = select_leaders(wolves)
        trace = Trace(leaders[0].fitness, len(wolves))
        wolves, leaders = run_gwo_phase(
            wolves, leaders, config.max_iterations, space, fitness, config.seed, trace, map_fn
        )
    return leaders[0], trace
