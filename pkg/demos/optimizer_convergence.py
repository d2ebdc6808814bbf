"""Compare HHO, GWO and the hybrid on the classic test functions.

Run: python3 demos/optimizer_convergence.py
"""

import numpy as np

from ghho.optimizer import (RunConfig, SearchSpace, benchmark_functions, g_hho_optimize,
                            gwo_optimize, hho_optimize)

runs = {"HHO": hho_optimize, "GWO": gwo_optimize, "G-HHO": g_hho_optimize}
zoo = benchmark_functions()

# 30 candidates, 200 iterations, 10 dimensions; every run is seeded
config = RunConfig(population=30, max_iterations=200, seed=1)

for name in ("sphere", "rastrigin", "rosenbrock", "ackley"):
    bench = zoo[name]
    space = SearchSpace.uniform(10, bench.lower, bench.upper)
    line = [f"{name:<11}"]
    for label, run in runs.items():
        best, trace = run(config, space, bench)
        line.append(f"{label} {best.fitness:9.3g} ({trace.evaluations} evals)")
    print("  ".join(line))

# the hybrid switches from hawks to wolves halfway; the trace records the phase per iteration
best, trace = g_hho_optimize(config, SearchSpace.uniform(10, -100, 100), zoo["sphere"])
phases = [r.phase for r in trace.records]
switch = phases.index("GWO")
print(f"\nphase switch after iteration {switch}: best {trace.best_fitness[switch - 1]:.3g} "
      f"-> final {trace.best_fitness[-1]:.3g}")

# elitism: the best-so-far curve never goes up
assert np.all(np.diff(trace.best_fitness) <= 0)
for k in range(0, len(trace.records), 25):
    r = trace.records[k]
    print(f"  iter {r.iteration:>3} {r.phase}  best {r.best_fitness:.3e}")
