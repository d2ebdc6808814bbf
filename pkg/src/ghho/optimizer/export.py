from __future__ import annotations

import csv
import json
from dataclasses import asdict
from pathlib import Path

from ghho.optimizer.types import Candidate, RunConfig, Trace


def write_trace_csv(trace: Trace, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "phase", "best_fitness", "evaluations"])
        for r in trace.records:
            writer.writerow([r.iteration, r.phase, repr(float(r.best_fitness)), r.evaluations])


def run_summary(config: RunConfig, best: Candidate, seconds: float) -> dict:
    return {
        "seed": config.seed,
        "config": asdict(config),
        "best_position": [float(v) for v in best.position],
        "best_fitness": float(best.fitness),
        "wall_clock_seconds": seconds,
    }


def write_summary_json(summary: dict, path) -> None:
    Path(path).write_text(json.dumps(summary, indent=2) + "\n")
