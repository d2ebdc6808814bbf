"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` (or execute this file) to see
the report lines next to the pytest verdicts.
"""

import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from scipy.special import gamma

from oracles import (
    components_union_find,
    conv_naive,
    fc_naive,
    fill_holes_bfs,
    maxpool_naive,
    minimal_gwo,
    minimal_hho,
    otsu_brute_force,
    random_image,
)
from ghho.cli import bench_optimizers
from ghho.data import synthetic_blobs
from ghho.features import segment_mean, segment_variance
from ghho.network import (
    Weights,
    build_spec,
    conv_forward,
    default_spec,
    fc_forward,
    forward,
    head_input,
    init_weights,
    layer_names,
    logits,
    maxpool,
)
from ghho.optimizer import (
    RunConfig,
    SearchSpace,
    benchmark_functions,
    g_hho_optimize,
    gwo_optimize,
    hho_optimize,
    levy_sigma,
)
from ghho.pipeline import prepare
from ghho.segmentation import SegmentMask, extract_segments, fill_holes, histogram, otsu_threshold
from ghho.trainer import ConfusionMatrix, Sample, metrics, split_dataset, train

README = Path(__file__).resolve().parents[1] / "README.md"
ALGORITHMS = {"HHO": hho_optimize, "GWO": gwo_optimize, "G-HHO": g_hho_optimize}


def report(number, title, ok, detail):
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} -- {detail}")
    assert ok, detail


def close(value, target, tol):
    return value is not None and abs(value - target) <= tol


def test_01_metrics_fidelity():
    m = metrics(ConfusionMatrix(tp=1075, fp=10, fn=51, tn=929))
    targets = {"accuracy": 0.9705, "precision": 0.9908, "recall": 0.9547, "f_measure": 0.9724}
    got = {k: getattr(m, k) for k in targets}
    ok = all(close(got[k], v, 0.0005) for k, v in targets.items())
    printed = [round(got[k], 2) for k in targets]
    ok = ok and printed == [0.97, 0.99, 0.95, 0.97]
    report(1, "metrics fidelity", ok, ", ".join(f"{k}={v:.4f}" for k, v in got.items()))


def test_02_otsu_oracle_equivalence():
    rng = np.random.default_rng(2024)
    hists = []
    for _ in range(200):
        h, w = rng.integers(8, 65, size=2)
        hists.append(histogram(random_image(rng, h, w)))
    t0 = time.perf_counter()
    ours = [otsu_threshold(hist) for hist in hists]
    elapsed = time.perf_counter() - t0
    mismatches = sum(a != otsu_brute_force(hist) for a, hist in zip(ours, hists))
    report(2, "Otsu equals brute force", mismatches == 0 and elapsed < 5,
           f"{mismatches} mismatches over 200 images, thresholds in {elapsed:.2f} s")


def test_03_shape_fidelity():
    spec = default_spec()
    weights = init_weights(spec, 0)
    record = []
    t0 = time.perf_counter()
    forward(spec, weights, np.random.default_rng(3).random((1, 143, 143)), np.zeros(3), record=record)
    elapsed = time.perf_counter() - t0
    shapes = dict(record)
    ok = shapes["conv1"] == (52, 69, 69) and shapes["conv2"] == (256, 15, 15) and elapsed < 1
    report(3, "default network shapes", ok,
           f"conv1 {shapes['conv1']}, conv2 {shapes['conv2']}, forward {elapsed:.3f} s")


def _final_best(algorithm, function, seed, population=30, iterations=500):
    bench = benchmark_functions()[function]
    space = SearchSpace.uniform(10, bench.lower, bench.upper)
    best, _ = ALGORITHMS[algorithm](RunConfig(population, iterations, seed), space, bench)
    return best.fitness


def test_04_optimizer_convergence():
    t0 = time.perf_counter()
    finals = {a: [_final_best(a, "sphere", s) for s in range(10)] for a in ALGORITHMS}
    rastrigin = [_final_best("G-HHO", "rastrigin", s) for s in range(10)]
    elapsed = time.perf_counter() - t0
    medians = {a: float(np.median(v)) for a, v in finals.items()}
    wins = sum(g <= h for g, h in zip(finals["G-HHO"], finals["HHO"]))
    print(f"\n    G-HHO Rastrigin median {np.median(rastrigin):.3g} (reported, target < 50); "
          f"G-HHO <= HHO on sphere in {wins}/10 paired seeds (reported)")

    # the threshold is attainable by textbook implementations sharing no code with the package
    sphere = benchmark_functions()["sphere"]
    ref_hho = np.median([minimal_hho(sphere, 10, -100.0, 100.0, 30, 500, s) for s in range(3)])
    ref_gwo = np.median([minimal_gwo(sphere, 10, -100.0, 100.0, 30, 500, s) for s in range(3)])
    print(f"    reference HHO median {ref_hho:.3g}, reference GWO median {ref_gwo:.3g}")
    assert ref_hho < 1e-2 and ref_gwo < 1e-2

    ok = all(m < 1e-2 for m in medians.values()) and elapsed < 60
    report(4, "sphere convergence", ok,
           ", ".join(f"{a} median {m:.3g}" for a, m in medians.items()) + f" in {elapsed:.1f} s")


def _trace_bytes(trace):
    return b"".join([np.float64(trace.initial_best_fitness).tobytes()]
                    + [np.float64(r.best_fitness).tobytes() + r.best_position.tobytes()
                       + r.phase.encode() + int(r.evaluations).to_bytes(8, "little")
                       for r in trace.records])


def test_05_elitism_and_determinism():
    t0 = time.perf_counter()
    zoo = benchmark_functions()
    monotone, identical, runs = True, True, 0
    for name in ("sphere", "rastrigin", "ackley", "rosenbrock"):
        bench = zoo[name]
        space = SearchSpace.uniform(10, bench.lower, bench.upper)
        for algorithm, run in ALGORITHMS.items():
            for seed in range(2):
                traces = [run(RunConfig(15, 40, seed, workers=w), space, bench)[1]
                          for w in (1, 1, 4)]
                series = np.concatenate([[traces[0].initial_best_fitness], traces[0].best_fitness])
                monotone &= bool(np.all(np.diff(series) <= 0))
                identical &= len({_trace_bytes(t) for t in traces}) == 1
                runs += 1
    elapsed = time.perf_counter() - t0
    report(5, "elitism and determinism", monotone and identical and elapsed < 30,
           f"{runs} run triples (serial, serial, 4 threads): monotone={monotone}, "
           f"bit-identical={identical}, {elapsed:.1f} s")


def test_06_levy_constant():
    beta = 1.5
    reference = (gamma(1 + beta) * math.sin(math.pi * beta / 2)
                 / (gamma((1 + beta) / 2) * beta * 2 ** ((beta - 1) / 2))) ** (1 / beta)
    sigma = levy_sigma(beta)
    ok = abs(sigma - 0.6966) <= 0.001 and abs(sigma - reference) <= 1e-12
    report(6, "Levy sigma", ok, f"sigma={sigma:.6f}, scipy gamma reference {reference:.6f}")


def _random_mask(rng, h, w):
    bits = rng.random((h, w)) < rng.uniform(0.3, 0.7)
    if rng.random() < 0.5:  # ring shapes guarantee enclosed holes
        r0, c0 = rng.integers(0, max(1, h - 4)), rng.integers(0, max(1, w - 4))
        bits[r0:r0 + 4, c0:c0 + 4] = True
        bits[r0 + 1:r0 + 3, c0 + 1:c0 + 3] = False
    return bits


def test_07_numeric_oracles():
    rng = np.random.default_rng(77)
    t0 = time.perf_counter()
    counts = dict.fromkeys(["conv", "maxpool", "fc", "mean/variance", "fill_holes", "segments"], 0)
    for _ in range(100):
        c, f, k, s = rng.integers(1, 3), rng.integers(1, 4), rng.integers(1, 4), rng.integers(1, 3)
        x = rng.normal(size=(c, rng.integers(k, 8), rng.integers(k, 8)))
        kern, bias = rng.normal(size=(f, c, k, k)), rng.normal(size=f)
        np.testing.assert_allclose(conv_forward(x, kern, bias, s), conv_naive(x, kern, bias, s),
                                   rtol=1e-9, atol=1e-12)
        counts["conv"] += 1

        win, stride = rng.integers(1, 4), rng.integers(1, 3)
        x = rng.normal(size=(c, rng.integers(win, 9), rng.integers(win, 9)))
        np.testing.assert_array_equal(maxpool(x, win, stride), maxpool_naive(x, win, stride))
        counts["maxpool"] += 1

        m, n = rng.integers(1, 6), rng.integers(1, 9)
        mat, b, v = rng.normal(size=(m, n)), rng.normal(size=m), rng.normal(size=n)
        np.testing.assert_allclose(fc_forward(v, mat, b, "identity"), fc_naive(v, mat, b),
                                   rtol=1e-9, atol=1e-12)
        counts["fc"] += 1

        pixels = rng.integers(0, 256, rng.integers(1, 200))
        exact_mean = Fraction(int(pixels.sum()), pixels.size)
        exact_mad = sum(abs(p - exact_mean) for p in pixels.tolist()) / pixels.size
        mean = segment_mean(pixels)
        assert math.isclose(mean, exact_mean, rel_tol=1e-9)
        assert math.isclose(segment_variance(pixels, mean), exact_mad, rel_tol=1e-9, abs_tol=1e-12)
        counts["mean/variance"] += 1

        bits = _random_mask(rng, rng.integers(3, 16), rng.integers(3, 16))
        np.testing.assert_array_equal(fill_holes(SegmentMask(bits)).bits, fill_holes_bfs(bits))
        counts["fill_holes"] += 1

        segs = extract_segments(SegmentMask(bits))
        expected = components_union_find(bits)
        assert [set(zip(sg.rows.tolist(), sg.cols.tolist())) for sg in segs] == expected
        counts["segments"] += 1
    elapsed = time.perf_counter() - t0
    ok = all(v >= 100 for v in counts.values()) and elapsed < 30
    report(7, "numeric oracles", ok,
           ", ".join(f"{k} {v}" for k, v in counts.items()) + f" instances in {elapsed:.1f} s")


def test_08_end_to_end_training():
    t0 = time.perf_counter()
    samples = []
    for item in synthetic_blobs(200, seed=8):
        prep = prepare(item.image)
        samples.append(Sample(prep.masked, prep.features, item.label, item.name))
    train_set, test_set = split_dataset(samples, seed=8)
    _, rep = train(train_set, config=RunConfig(population=20, max_iterations=100, seed=8),
                   test_set=test_set)
    elapsed = time.perf_counter() - t0
    acc = rep.metrics.accuracy
    report(8, "synthetic end-to-end accuracy", acc >= 0.90 and elapsed < 300,
           f"test accuracy {acc:.3f} on {len(test_set)} held-out images, {elapsed:.1f} s")


def test_09_scope_statement_and_bench_format():
    text = " ".join(README.read_text().split())
    statement = "not reproducible at desk scale" in text and "2073" in text
    rows = bench_optimizers(["sphere"], dim=10, runs=2, population=10, iterations=20)
    columns = ["algorithm", "function", "median_best_fitness", "mean_seconds", "peak_memory_mb"]
    fmt = ([list(r) for r in rows] == [columns] * 3
           and [r["algorithm"] for r in rows] == ["HHO", "GWO", "G-HHO"]
           and all(r["mean_seconds"] > 0 and r["peak_memory_mb"] > 0 for r in rows))
    report(9, "scope statement and bench-opt table format", statement and fmt,
           f"README statement present={statement}, bench-opt columns {columns}")


def test_10_dropout_expectation():
    spec = build_spec(input_size=15, conv_filters=(3,), conv_kernels=(3,), fc_units=32, dropout=0.5)
    out_layer = [n for n in layer_names(spec) if n and n.startswith("fc")][-1]
    blocks = init_weights(spec, 10).blocks()
    # non-negative output weights keep the logits away from zero, so a relative bound is meaningful
    blocks[f"{out_layer}.weight"] = np.abs(blocks[f"{out_layer}.weight"])
    weights = Weights.from_blocks(spec, blocks)
    data = np.random.default_rng(10)
    image, features = data.random((15, 15)), data.random(3)
    expected = logits(spec, weights, image, features)

    # inverted dropout at p = 0.5 gives each logit variance sum_j W_ij^2 h_j^2; the mask-free
    # noise floor of a 10^4-sample mean must sit well inside the 2% tolerance for the test to mean anything
    h = head_input(spec, weights, image, features)
    floor = np.sqrt((weights.block(f"{out_layer}.weight") ** 2 @ h ** 2).sum() / 1e4) / np.linalg.norm(expected)
    assert floor <= 0.02 / 4, floor

    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    samples = np.array([logits(spec, weights, image, features, inference=False, rng=rng)
                        for _ in range(10_000)])
    elapsed = time.perf_counter() - t0
    rel = np.linalg.norm(samples.mean(0) - expected) / np.linalg.norm(expected)
    report(10, "dropout expectation", rel <= 0.02 and elapsed < 10,
           f"relative gap {rel:.4f} over 10^4 masks (noise floor {floor:.4f}), {elapsed:.1f} s")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-s", "-q"]))
