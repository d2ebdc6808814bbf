"""Two-phase hybrid: an HHO phase whose final pack and prey seed a GWO phase."""

from __future__ import annotations

import numpy as np

from ghho.errors import ContractViolation
from ghho.optimizer._parallel import mapper
from ghho.optimizer.gwo import run_gwo_phase, select_leaders
from ghho.optimizer.hho import best_index, init_population, run_hho_phase
from ghho.optimizer.types import Candidate, FitnessFn, RunConfig, SearchSpace, Trace


def seed_pack(population: list[Candidate], prey: Candidate) -> list[Candidate]:
    """Copy the HHO population for GWO, swapping the worst hawk for the prey
    when the prey is strictly better than everything in the population."""
    wolves = [c.copy() for c in population]
    if prey.fitness < wolves[best_index(wolves)].fitness:
        worst = int(np.argmax([w.fitness for w in wolves]))
        wolves[worst] = prey.copy()
    return wolves


def g_hho_optimize(
    config: RunConfig, space: SearchSpace, fitness: FitnessFn
) -> tuple[Candidate, Trace]:
    """Minimise ``fitness`` over ``space``.

    Runs ``floor(hho_fraction * max_iterations)`` HHO iterations, then GWO for
    the remainder starting from the HHO pack with the prey as alpha. The
    result is fully determined by ``config`` (including ``config.seed``),
    whatever ``config.workers`` is.
    """
    n_hho, n_gwo = config.hho_iterations, config.gwo_iterations
    if n_hho < 1 or n_gwo < 1:
        raise ContractViolation(
            f"both phases need at least one iteration (HHO={n_hho}, GWO={n_gwo})"
        )
    with mapper(config.workers) as map_fn:
        population = init_population(config.population, space, fitness, config.seed, map_fn)
        prey = population[best_index(population)].copy()
        trace = Trace(prey.fitness, len(population))

        population, prey = run_hho_phase(
            population, prey, n_hho, space, fitness, config.seed, config.beta, trace, map_fn
        )
        wolves = seed_pack(population, prey)
        leaders = select_leaders([prey] + wolves)
        wolves, leaders = run_gwo_phase(
            wolves, leaders, n_gwo, space, fitness, config.seed, trace, map_fn, start=n_hho
        )
    return leaders[0], trace
