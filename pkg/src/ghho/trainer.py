"""Metaheuristic training of the classifier head and binary-classification metrics."""

from __future__ import annotations

import csv
import json
import resource
import time
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from ghho.errors import ContractViolation
from ghho.features import FeatureScaler, FeatureVector
from ghho.network import (
    Dropout,
    FullyConnected,
    NetworkSpec,
    Softmax,
    Weights,
    _run,
    default_spec,
    forward,
    init_weights,
    layer_names,
    softmax,
)
from ghho.optimizer import Candidate, RunConfig, SearchSpace, Trace, g_hho_optimize
from ghho.pipeline import network_input


@dataclass(frozen=True)
class Sample:
    """A prepared example: masked uint8 image, its raw feature vector and label (1 = tumour)."""

    image: np.ndarray
    features: FeatureVector
    label: int
    name: str = ""


def split_dataset(samples: Sequence, seed: int, train_fraction: float = 0.7):
    """Seeded shuffle; the first ``floor(train_fraction * n)`` items train, the rest test."""
    n = len(samples)
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(np.floor(train_fraction * n))
    return [samples[i] for i in order[:n_train]], [samples[i] for i in order[n_train:]]


@dataclass
class Classifier:
    weights: Weights
    scaler: FeatureScaler

    @property
    def spec(self) -> NetworkSpec:
        return self.weights.spec

    def predict_proba(self, sample: Sample) -> np.ndarray:
        return forward(self.spec, self.weights, network_input(sample.image),
                       self.scaler.transform(sample.features))

    def predict_many(self, samples: Sequence[Sample]) -> np.ndarray:
        return np.array([self.predict_proba(s) for s in samples]).reshape(-1, 2)

    def model_extra(self) -> dict:
        return {"feature_lower": self.scaler.lower.tolist(), "feature_upper": self.scaler.upper.tolist()}

    @classmethod
    def from_model(cls, weights: Weights, extra: dict) -> "Classifier":
        return cls(weights, FeatureScaler(extra.get("feature_lower", [0, 0, 0]),
                                          extra.get("feature_upper", [1, 1, 1])))


def one_hot(labels: Sequence[int]) -> np.ndarray:
    labels = np.asarray(labels, dtype=int)
    return np.eye(2)[labels]


def rmse(probabilities: np.ndarray, labels: Sequence[int]) -> float:
    p = np.asarray(probabilities, dtype=np.float64).reshape(-1, 2)
    if p.shape[0] == 0:
        raise ContractViolation("RMSE of an empty batch")
    return float(np.sqrt(np.mean((p - one_hot(labels)) ** 2)))


def rmse_fitness(head_weights: np.ndarray, classifier: Classifier, span: slice,
                 batch: Sequence[Sample]) -> float:
    """RMSE between softmax outputs and one-hot labels with ``head_weights`` written into ``span``.

    Runs the full network on a scratch copy of the weights.
    """
    if len(batch) == 0:
        raise ContractViolation("RMSE of an empty batch")
    head_weights = np.asarray(head_weights, dtype=np.float64)
    if head_weights.size != span.stop - span.start:
        raise ContractViolation("head weight vector does not match the search slice")
    scratch = Classifier(classifier.weights.with_slice(span, head_weights), classifier.scaler)
    return rmse(scratch.predict_many(batch), [s.label for s in batch])


class HeadFitness:
    """Fast, equivalent form of :func:`rmse_fitness`.

    Everything upstream of the searched slice is fixed, so the activation
    entering the first searched layer is computed once per sample and only the
    tail of the network is re-run per evaluation. Thread-safe: evaluations
    never mutate shared state.
    """

    def __init__(self, classifier: Classifier, span: slice, batch: Sequence[Sample]):
        if len(batch) == 0:
            raise ContractViolation("fitness batch is empty")
        self.classifier = classifier
        self.span = span
        self.targets = one_hot([s.label for s in batch])
        spec = classifier.spec
        blocks = {b.name: b for b in classifier.weights.layout}
        names = layer_names(spec)
        searched = [k for k, n in enumerate(names)
                    if n and blocks[f"{n}.weight"].offset >= span.start]
        if not searched:
            raise ContractViolation("search slice covers no layer")
        self.start_layer = searched[0]
        self.tail = []
        for k in range(self.start_layer, len(spec.layers)):
            layer, name = spec.layers[k], names[k]
            if isinstance(layer, FullyConnected):
                self.tail.append((layer, blocks[f"{name}.weight"], blocks[f"{name}.bias"]))
            elif isinstance(layer, (Dropout, Softmax)):
                self.tail.append((layer, None, None))
            else:
                raise ContractViolation("search slice must cover only trailing dense layers")
        self.inputs = self.activations(batch)

    def activations(self, samples: Sequence[Sample]) -> np.ndarray:
        c = self.classifier
        rows = []
        for s in samples:
            side = c.scaler.transform(s.features)
            x = _run(c.spec, c.weights, network_input(s.image), side, True, None, None,
                     self.start_layer)
            if x.ndim > 1:
                # stopped in front of the first dense layer, before the side features join
                x = np.concatenate([x.ravel(), side])
            rows.append(x)
        return np.stack(rows)

    def probabilities(self, vector: np.ndarray, inputs: np.ndarray) -> np.ndarray:
        flat = self.classifier.weights.flat.copy()
        flat[self.span] = vector
        x = inputs
        for layer, wb, bb in self.tail:
            if isinstance(layer, FullyConnected):
                w = flat[wb.offset:wb.stop].reshape(wb.shape)
                x = x @ w.T + flat[bb.offset:bb.stop]
                if layer.activation == "relu":
                    x = np.maximum(x, 0.0)
            elif isinstance(layer, Softmax):
                x = softmax(x)
        return x

    def __call__(self, vector: np.ndarray) -> float:
        p = self.probabilities(vector, self.inputs)
        return float(np.sqrt(np.mean((p - self.targets) ** 2)))


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ContractViolation("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @classmethod
    def from_predictions(cls, predicted: Sequence[int], actual: Sequence[int]) -> "ConfusionMatrix":
        p = np.asarray(predicted, dtype=int)
        a = np.asarray(actual, dtype=int)
        return cls(
            tp=int(np.sum((p == 1) & (a == 1))),
            fp=int(np.sum((p == 1) & (a == 0))),
            fn=int(np.sum((p == 0) & (a == 1))),
            tn=int(np.sum((p == 0) & (a == 0))),
        )


@dataclass(frozen=True)
class Metrics:
    """Scores are None where their denominator is zero."""

    accuracy: Optional[float]
    precision: Optional[float]
    recall: Optional[float]
    f_measure: Optional[float]


def _ratio(num: float, den: float) -> Optional[float]:
    return num / den if den else None


def metrics(cm: ConfusionMatrix) -> Metrics:
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    f = None
    if precision is not None and recall is not None:
        f = _ratio(2.0 * precision * recall, precision + recall)
    return Metrics(_ratio(cm.tp + cm.tn, cm.total), precision, recall, f)


def predicted_classes(probabilities: np.ndarray) -> np.ndarray:
    p = np.asarray(probabilities).reshape(-1, 2)
    return (p[:, 1] > p[:, 0]).astype(int)


def evaluate(classifier: Classifier, samples: Sequence[Sample]) -> ConfusionMatrix:
    """Argmax prediction (ties go to class 0) tallied with label 1 as positive."""
    if len(samples) == 0:
        raise ContractViolation("cannot evaluate an empty split")
    return ConfusionMatrix.from_predictions(
        predicted_classes(classifier.predict_many(samples)), [s.label for s in samples]
    )


def roc_from_scores(scores: Sequence[float], labels: Sequence[int],
                    thresholds: Sequence[float]) -> list[tuple[float, float]]:
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    pos, neg = np.sum(labels == 1), np.sum(labels == 0)
    points = []
    for tau in thresholds:
        flagged = scores >= tau
        tpr = np.sum(flagged & (labels == 1)) / pos if pos else float("nan")
        fpr = np.sum(flagged & (labels == 0)) / neg if neg else float("nan")
        points.append((float(fpr), float(tpr)))
    return points


def roc_points(classifier: Classifier, samples: Sequence[Sample],
               thresholds: Sequence[float]) -> list[tuple[float, float]]:
    """(false-positive rate, true-positive rate) with positive iff P(class 1) >= threshold."""
    probs = classifier.predict_many(samples)
    return roc_from_scores(probs[:, 1], [s.label for s in samples], thresholds)


@dataclass
class TrainReport:
    trace: Trace
    metrics: Optional[Metrics]
    confusion: Optional[ConfusionMatrix]
    train_loss: list[float] = field(default_factory=list)
    test_loss: list[float] = field(default_factory=list)
    train_acc: list[float] = field(default_factory=list)
    test_acc: list[float] = field(default_factory=list)
    seconds: float = 0.0
    peak_memory_bytes: int = 0
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "metrics": asdict(self.metrics) if self.metrics else None,
            "confusion": asdict(self.confusion) if self.confusion else None,
            "final_train_loss": self.train_loss[-1] if self.train_loss else None,
            "final_test_loss": self.test_loss[-1] if self.test_loss else None,
            "best_fitness": float(self.trace.records[-1].best_fitness) if self.trace.records else None,
            "evaluations": self.trace.evaluations,
            "config": self.config,
            "timing": {"wall_clock_seconds": self.seconds,
                       "peak_memory_mb": round(self.peak_memory_bytes / 2**20, 3)},
        }

    def write(self, json_path, curves_path) -> None:
        with open(json_path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")
        with open(curves_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "train_loss", "test_loss", "train_acc", "test_acc"])
            for k in range(len(self.train_loss)):
                row = [self.train_loss[k], self.test_loss[k] if self.test_loss else "",
                       self.train_acc[k], self.test_acc[k] if self.test_acc else ""]
                writer.writerow([k, *row])


def peak_memory_bytes() -> int:
    # ru_maxrss is reported in KiB on Linux
    return int(resource.getrusage(resource.RUSAGE_SELF).ru_maxrss) * 1024


def write_roc_csv(points, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "false_positive_rate", "true_positive_rate"])
        for tau, (fpr, tpr) in points:
            writer.writerow([tau, fpr, tpr])


def train(
    train_set: Sequence[Sample],
    spec: Optional[NetworkSpec] = None,
    config: RunConfig = RunConfig(population=20, max_iterations=100),
    test_set: Sequence[Sample] = (),
    extended: bool = False,
    batch_size: int = 1024,
    bound: float = 1.0,
) -> tuple[Classifier, TrainReport]:
    """Fit the classifier head with the hybrid optimiser, minimising batch RMSE.

    Convolutional weights stay at their seeded initialisation; the searched
    slice is the last dense layer (``extended=True`` adds the one before it),
    bounded to ``[-bound, bound]``. Curves hold one entry per optimiser
    iteration, evaluated at that iteration's best weights.
    """
    if len(train_set) < 2:
        raise ContractViolation("training needs at least two samples")
    spec = spec or default_spec()
    started = time.monotonic()

    scaler = FeatureScaler.fit([s.features for s in train_set])
    base = Classifier(init_weights(spec, config.seed), scaler)
    span = base.weights.head_slice(extended)

    batch_rng = np.random.default_rng([config.seed, 0xBA7C])
    n_batch = min(batch_size, len(train_set))
    batch = [train_set[i] for i in np.sort(batch_rng.choice(len(train_set), n_batch, replace=False))]
    fitness = HeadFitness(base, span, batch)

    dim = span.stop - span.start
    space = SearchSpace.uniform(dim, -bound, bound)
    best, trace = g_hho_optimize(config, space, fitness)
    classifier = Classifier(base.weights.with_slice(span, best.position), scaler)

    report = TrainReport(trace, None, None, config={**asdict(config), "extended": extended,
                                                    "batch_size": n_batch, "bound": bound})
    train_inputs = fitness.activations(train_set)
    test_inputs = fitness.activations(test_set) if len(test_set) else None
    train_labels = np.array([s.label for s in train_set])
    test_labels = np.array([s.label for s in test_set])
    for record in trace.records:
        p = fitness.probabilities(record.best_position, train_inputs)
        report.train_loss.append(rmse(p, train_labels))
        report.train_acc.append(float(np.mean(predicted_classes(p) == train_labels)))
        if test_inputs is not None:
            p = fitness.probabilities(record.best_position, test_inputs)
            report.test_loss.append(rmse(p, test_labels))
            report.test_acc.append(float(np.mean(predicted_classes(p) == test_labels)))

    if len(test_set):
        report.confusion = evaluate(classifier, test_set)
        report.metrics = metrics(report.confusion)
    report.seconds = time.monotonic() - started
    report.peak_memory_bytes = peak_memory_bytes()
    return classifier, report
