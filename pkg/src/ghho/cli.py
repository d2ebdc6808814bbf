"""Command-line front end.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 contract violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
import tracemalloc
from pathlib import Path

import numpy as np
from PIL import Image

from ghho.config import ConfigError, load_config, network_spec, pipeline_options, run_config
from ghho.data import LabeledImage, augment, fit_square, ingest, read_gray, write_mask_pgm
from ghho.errors import ContractViolation, DataError
from ghho.features import extract_features, write_features_csv
from ghho.network import load_model, save_model
from ghho.optimizer import (
    RunConfig,
    SearchSpace,
    benchmark_functions,
    g_hho_optimize,
    gwo_optimize,
    hho_optimize,
)
from ghho.pipeline import prepare
from ghho.segmentation import extract_segments
from ghho.trainer import (
    Classifier,
    ConfusionMatrix,
    Sample,
    evaluate,
    metrics,
    roc_points,
    split_dataset,
    train,
    write_roc_csv,
)

log = logging.getLogger("ghho")

ALGORITHMS = {"HHO": hho_optimize, "GWO": gwo_optimize, "G-HHO": g_hho_optimize}
ROC_THRESHOLDS = [round(k / 20, 2) for k in range(21)]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _fmt(value) -> str:
    return "undefined" if value is None else f"{value:.2f}"


def _load_images(paths) -> list[tuple[str, np.ndarray]]:
    return [(Path(p).name, read_gray(p)) for p in paths]


def _prepare_items(items, cfg) -> list[Sample]:
    opts = pipeline_options(cfg)
    out = []
    for item in items:
        prep = prepare(item.image, opts)
        out.append(Sample(prep.masked, prep.features, item.label, item.name))
    return out


def _dataset(args, cfg) -> list[LabeledImage]:
    data_dir = args.data or cfg["input"]["data_dir"]
    if data_dir is None:
        raise ConfigError("no data directory given (--data or input.data_dir)")
    labels = args.labels or cfg["input"]["labels_file"]
    return ingest(data_dir, labels, cfg["network"]["input_size"])


def cmd_segment(args, cfg, out: Path) -> None:
    opts = pipeline_options(cfg)
    report = []
    for name, image in _load_images(args.images):
        prep = prepare(image, opts)
        stem = Path(name).stem
        write_mask_pgm(out / f"{stem}_mask.pgm", prep.mask.bits)
        report.append({"image": name, "threshold": prep.mask.threshold,
                       "segments": len(extract_segments(prep.mask)),
                       "foreground_pixels": int(prep.mask.bits.sum())})
    _dump(report, out / "segments.json")
    for row in report:
        print(f"{row['image']}: threshold={row['threshold']} segments={row['segments']}")


def cmd_features(args, cfg, out: Path) -> None:
    opts = pipeline_options(cfg)
    rows = []
    for name, image in _load_images(args.images):
        prep = prepare(image, opts)
        for label, fv in enumerate(extract_features(prep.masked, prep.mask, opts.squared_variance), 1):
            rows.append((name, label, fv))
    write_features_csv(rows, out / "features.csv")
    print(f"wrote {len(rows)} segment feature rows to {out / 'features.csv'}")


def cmd_augment(args, cfg, out: Path) -> None:
    aug = cfg["augmentation"]
    items = augment(_dataset(args, cfg), aug["ops"], aug["include_original"])
    for item in items:
        folder = out / ("yes" if item.label else "no")
        folder.mkdir(parents=True, exist_ok=True)
        base, _, op = item.name.partition("#")
        stem = Path(base).stem + (f"_{op}" if op else "")
        Image.fromarray(item.image).save(folder / f"{stem}.png")
    print(f"wrote {len(items)} images to {out}")


def cmd_train(args, cfg, out: Path) -> None:
    items = _dataset(args, cfg)
    if cfg["augmentation"]["enabled"]:
        items = augment(items, cfg["augmentation"]["ops"], cfg["augmentation"]["include_original"])
    samples = _prepare_items(items, cfg)
    train_set, test_set = split_dataset(samples, cfg["seed"], cfg["split"]["train_fraction"])
    o = cfg["optimizer"]
    classifier, report = train(train_set, network_spec(cfg), run_config(cfg, args.threads), test_set,
                               extended=o["extended_head"], batch_size=o["batch_size"], bound=o["bound"])
    save_model(out / "model.bin", classifier.weights, classifier.model_extra())
    report.write(out / "report.json", out / "curves.csv")
    if test_set:
        points = roc_points(classifier, test_set, ROC_THRESHOLDS)
        write_roc_csv(zip(ROC_THRESHOLDS, points), out / "roc.csv")
    _dump({"train": sorted(s.name for s in train_set), "test": sorted(s.name for s in test_set)},
          out / "split.json")
    m = report.metrics
    print(f"trained on {len(train_set)} items, tested on {len(test_set)}")
    if m:
        print(f"accuracy={_fmt(m.accuracy)} precision={_fmt(m.precision)} "
              f"recall={_fmt(m.recall)} f_measure={_fmt(m.f_measure)}")


def _classifier(args) -> Classifier:
    if not args.model or not Path(args.model).is_file():
        raise DataError(f"model file {args.model!r} not found")
    weights, extra = load_model(args.model)
    return Classifier.from_model(weights, extra)


def cmd_predict(args, cfg, out: Path) -> None:
    classifier = _classifier(args)
    opts = pipeline_options(cfg)
    size = classifier.spec.input_shape[1]
    results = []
    for name, image in _load_images(args.images):
        prep = prepare(fit_square(image, size), opts)
        p = classifier.predict_proba(Sample(prep.masked, prep.features, 0, name))
        label = int(p[1] > p[0])
        results.append({"image": name, "label": "yes" if label else "no",
                        "probability": float(p[label]), "p_tumor": float(p[1])})
    _dump(results, out / "predictions.json")
    for r in results:
        print(f"{r['image']}: {r['label']} ({r['probability']:.4f})")


def cmd_evaluate(args, cfg, out: Path) -> None:
    if args.confusion:
        try:
            data = json.loads(Path(args.confusion).read_text())
            cm = ConfusionMatrix(**{k: int(data[k]) for k in ("tp", "fp", "fn", "tn")})
        except (OSError, KeyError, TypeError, ValueError) as exc:
            raise DataError(f"bad confusion matrix file {args.confusion}: {exc}") from exc
    else:
        classifier = _classifier(args)
        samples = _prepare_items(_dataset(args, cfg), cfg)
        cm = evaluate(classifier, samples)
    m = metrics(cm)
    _dump({"confusion": {"tp": cm.tp, "fp": cm.fp, "fn": cm.fn, "tn": cm.tn},
           "metrics": {"accuracy": m.accuracy, "precision": m.precision,
                       "recall": m.recall, "f_measure": m.f_measure}}, out / "metrics.json")
    print(f"accuracy={_fmt(m.accuracy)} precision={_fmt(m.precision)} "
          f"recall={_fmt(m.recall)} f_measure={_fmt(m.f_measure)}")


def bench_optimizers(functions, dim: int, runs: int, population: int, iterations: int,
                     seed: int = 0, workers: int = 1, algorithms=tuple(ALGORITHMS)) -> list[dict]:
    """Median best fitness, mean wall-clock seconds and peak traced memory per (algorithm, function)."""
    zoo = benchmark_functions()
    rows = []
    for fname in functions:
        bench = zoo[fname]
        space = SearchSpace.uniform(dim, bench.lower, bench.upper)
        for algo in algorithms:
            best, seconds, peak = [], [], 0
            for k in range(runs):
                cfg = RunConfig(population, iterations, seed + k, workers=workers)
                tracemalloc.start()
                t0 = time.monotonic()
                result, _ = ALGORITHMS[algo](cfg, space, bench)
                seconds.append(time.monotonic() - t0)
                peak = max(peak, tracemalloc.get_traced_memory()[1])
                tracemalloc.stop()
                best.append(result.fitness)
            rows.append({"algorithm": algo, "function": fname,
                         "median_best_fitness": float(np.median(best)),
                         "mean_seconds": float(np.mean(seconds)),
                         "peak_memory_mb": round(peak / 2**20, 3)})
    return rows


def cmd_bench_opt(args, cfg, out: Path) -> None:
    functions = args.functions.split(",")
    unknown = set(functions) - set(benchmark_functions())
    if unknown:
        raise ConfigError(f"unknown benchmark function(s): {sorted(unknown)}")
    rows = bench_optimizers(functions, args.dim, args.runs, args.population, args.iterations,
                            cfg["seed"], args.threads)
    with open(out / "bench.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    print(f"{'algorithm':<8} {'function':<11} {'median best':>12} {'time (s)':>9} {'memory (MB)':>12}")
    for r in rows:
        print(f"{r['algorithm']:<8} {r['function']:<11} {r['median_best_fitness']:>12.4g} "
              f"{r['mean_seconds']:>9.3f} {r['peak_memory_mb']:>12.3f}")


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the subcommand; each parser gets its own
    # actions, and the subcommand copies leave the namespace alone unless the flag is given
    def add_globals(p, default):
        p.add_argument("--config", default=default, help="JSON pipeline configuration")
        p.add_argument("--seed", type=int, default=default, help="override the configured seed")
        p.add_argument("--threads", type=int, default=default, help="fitness evaluation threads")
        p.add_argument("--out", default=default, help="output directory")

    common = _Parser(add_help=False)
    add_globals(common, argparse.SUPPRESS)
    parser = _Parser(prog="ghho", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    add_globals(parser, None)
    parser.set_defaults(threads=1, out="out")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("segment", parents=[common], help="Otsu masks for images")
    p.add_argument("images", nargs="+")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("features", parents=[common], help="per-segment feature CSV")
    p.add_argument("images", nargs="+")
    p.set_defaults(func=cmd_features)

    for name, func, helptext in (("augment", cmd_augment, "write an augmented dataset"),
                                 ("train", cmd_train, "train the classifier head")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--data", help="image directory (yes/ and no/ subfolders or a labels file)")
        p.add_argument("--labels", help="CSV of filename,label")
        p.set_defaults(func=func)

    p = sub.add_parser("predict", parents=[common], help="classify images with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("images", nargs="+")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", parents=[common], help="metrics from a model + data or a confusion matrix")
    p.add_argument("--model")
    p.add_argument("--data")
    p.add_argument("--labels")
    p.add_argument("--confusion", help="JSON file with tp, fp, fn, tn")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench-opt", parents=[common], help="compare HHO, GWO and G-HHO on test functions")
    p.add_argument("--functions", default="sphere,rastrigin,rosenbrock,ackley")
    p.add_argument("--dim", type=int, default=10)
    p.add_argument("--runs", type=int, default=30)
    p.add_argument("--population", type=int, default=30)
    p.add_argument("--iterations", type=int, default=500)
    p.set_defaults(func=cmd_bench_opt)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        overrides = {"seed": args.seed} if args.seed is not None else None
        cfg = load_config(args.config, overrides)
        if args.threads < 1:
            raise ConfigError("--threads must be positive")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        args.func(args, cfg, out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ContractViolation as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
