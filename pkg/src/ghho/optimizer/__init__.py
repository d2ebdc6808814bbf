from ghho.optimizer.benchmarks import Benchmark, benchmark_functions
from ghho.optimizer.gwo import gwo_coefficient, gwo_optimize, gwo_step, select_leaders
from ghho.optimizer.hho import (
    hard_besiege,
    hard_besiege_dive,
    hho_explore,
    hho_optimize,
    hho_step,
    levy_flight,
    levy_sigma,
    mean_position,
    soft_besiege,
    soft_besiege_dive,
    update_energy,
)
from ghho.optimizer.hybrid import g_hho_optimize
from ghho.optimizer.types import Candidate, RunConfig, SearchSpace, Trace, TraceRecord

__all__ = [
    "Benchmark",
    "Candidate",
    "RunConfig",
    "SearchSpace",
    "Trace",
    "TraceRecord",
    "benchmark_functions",
    "g_hho_optimize",
    "gwo_coefficient",
    "gwo_optimize",
    "gwo_step",
    "hard_besiege",
    "hard_besiege_dive",
    "hho_explore",
    "hho_optimize",
    "hho_step",
    "levy_flight",
    "levy_sigma",
    "mean_position",
    "select_leaders",
    "soft_besiege",
    "soft_besiege_dive",
    "update_energy",
]
