"""Forward-only convolutional classifier.

Tensors are float64 numpy arrays shaped ``(channels, height, width)`` or flat.
All parameters live in one flat vector (:class:`Weights`) so an optimiser can
search over a contiguous slice of it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ghho.errors import ContractViolation


@dataclass(frozen=True)
class Conv:
    filters: int
    kernel: int
    stride: int = 1
    padding: int = 0
    kind: str = field(default="conv", init=False)

    def __post_init__(self):
        if self.filters < 1 or self.kernel < 1 or self.stride < 1 or self.padding < 0:
            raise ContractViolation(f"invalid conv layer {self}")


@dataclass(frozen=True)
class Relu:
    kind: str = field(default="relu", init=False)


@dataclass(frozen=True)
class MaxPool:
    window: int = 3
    stride: int = 2
    kind: str = field(default="maxpool", init=False)

    def __post_init__(self):
        if self.window < 1 or self.stride < 1:
            raise ContractViolation(f"invalid maxpool layer {self}")


@dataclass(frozen=True)
class FullyConnected:
    units: int
    activation: str = "relu"  # or "identity"
    kind: str = field(default="fully_connected", init=False)

    def __post_init__(self):
        if self.units < 1 or self.activation not in ("relu", "identity"):
            raise ContractViolation(f"invalid fully connected layer {self}")


@dataclass(frozen=True)
class Dropout:
    probability: float = 0.5
    kind: str = field(default="dropout", init=False)

    def __post_init__(self):
        if not 0.0 <= self.probability < 1.0:
            raise ContractViolation("dropout probability must lie in [0, 1)")


@dataclass(frozen=True)
class Softmax:
    kind: str = field(default="softmax_classifier", init=False)


LayerSpec = Union[Conv, Relu, MaxPool, FullyConnected, Dropout, Softmax]
_KINDS = {cls.kind: cls for cls in (Conv, Relu, MaxPool, FullyConnected, Dropout, Softmax)}


@dataclass(frozen=True)
class NetworkSpec:
    layers: tuple
    input_shape: tuple = (1, 143, 143)
    side_inputs: int = 3

    def to_dict(self) -> dict:
        layers = []
        for layer in self.layers:
            d = asdict(layer)
            d["kind"] = layer.kind
            layers.append(d)
        return {"layers": layers, "input_shape": list(self.input_shape), "side_inputs": self.side_inputs}

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkSpec":
        layers = []
        for d in data["layers"]:
            d = dict(d)
            kind = d.pop("kind")
            if kind not in _KINDS:
                raise ContractViolation(f"unknown layer kind {kind!r}")
            layers.append(_KINDS[kind](**d))
        return cls(tuple(layers), tuple(data["input_shape"]), int(data["side_inputs"]))


def default_spec() -> NetworkSpec:
    return NetworkSpec(
        layers=(
            Conv(52, 7, stride=2), Relu(), MaxPool(3, 2),
            Conv(256, 5, stride=2), Relu(), MaxPool(3, 2),
            Conv(156, 3, stride=2), Relu(), MaxPool(3, 2),
            FullyConnected(512, "relu"), Dropout(0.5),
            FullyConnected(2, "identity"), Softmax(),
        )
    )


def build_spec(input_size: int = 143, conv_filters=(52, 256, 156), conv_kernels=(7, 5, 3),
               conv_stride: int = 2, pool_window: int = 3, pool_stride: int = 2,
               fc_units: int = 512, dropout: float = 0.5, side_inputs: int = 3) -> NetworkSpec:
    """Conv/ReLU/max-pool stages followed by FC(relu) -> dropout -> FC(2) -> softmax."""
    if len(conv_filters) != len(conv_kernels):
        raise ContractViolation("conv_filters and conv_kernels must have equal length")
    layers: list = []
    for filters, kernel in zip(conv_filters, conv_kernels):
        layers += [Conv(filters, kernel, stride=conv_stride), Relu(), MaxPool(pool_window, pool_stride)]
    layers += [FullyConnected(fc_units, "relu"), Dropout(dropout), FullyConnected(2, "identity"), Softmax()]
    spec = NetworkSpec(tuple(layers), (1, input_size, input_size), side_inputs)
    shape_chain(spec)
    return spec


def layer_names(spec: NetworkSpec) -> list[Optional[str]]:
    """Parameter-block prefix per layer (``conv1``, ``fc2``...), None for parameter-free layers."""
    names, n_conv, n_fc = [], 0, 0
    for layer in spec.layers:
        if isinstance(layer, Conv):
            n_conv += 1
            names.append(f"conv{n_conv}")
        elif isinstance(layer, FullyConnected):
            n_fc += 1
            names.append(f"fc{n_fc}")
        else:
            names.append(None)
    return names


def _out_dim(n: int, k: int, stride: int, padding: int = 0) -> int:
    return (n + 2 * padding - k) // stride + 1


def shape_chain(spec: NetworkSpec) -> list[tuple[str, tuple]]:
    """Output shape after every layer, validating the whole chain."""
    shape: tuple = tuple(spec.input_shape)
    chain = []
    for name, layer in zip(_display_names(spec), spec.layers):
        if isinstance(layer, Conv):
            c, h, w = shape
            if h + 2 * layer.padding < layer.kernel or w + 2 * layer.padding < layer.kernel:
                raise ContractViolation(f"{name}: kernel {layer.kernel} larger than input {shape}")
            shape = (layer.filters, _out_dim(h, layer.kernel, layer.stride, layer.padding),
                     _out_dim(w, layer.kernel, layer.stride, layer.padding))
        elif isinstance(layer, MaxPool):
            c, h, w = shape
            if h < layer.window or w < layer.window:
                raise ContractViolation(f"{name}: input {shape} smaller than window {layer.window}")
            shape = (c, _out_dim(h, layer.window, layer.stride), _out_dim(w, layer.window, layer.stride))
        elif isinstance(layer, FullyConnected):
            shape = (layer.units,)
        chain.append((name, shape))
    return chain


def _display_names(spec: NetworkSpec) -> list[str]:
    counts: dict[str, int] = {}
    out = []
    for layer in spec.layers:
        counts[layer.kind] = counts.get(layer.kind, 0) + 1
        out.append(f"{layer.kind}{counts[layer.kind]}")
    return out


@dataclass(frozen=True)
class Block:
    name: str
    offset: int
    shape: tuple

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def stop(self) -> int:
        return self.offset + self.size


def weight_layout(spec: NetworkSpec) -> list[Block]:
    blocks, offset = [], 0
    shape: tuple = tuple(spec.input_shape)
    flattened = False
    for name, layer, (_, out_shape) in zip(layer_names(spec), spec.layers, shape_chain(spec)):
        if isinstance(layer, Conv):
            shapes = [(layer.filters, shape[0], layer.kernel, layer.kernel), (layer.filters,)]
        elif isinstance(layer, FullyConnected):
            fan_in = int(np.prod(shape))
            if not flattened:
                fan_in += spec.side_inputs
                flattened = True
            shapes = [(layer.units, fan_in), (layer.units,)]
        else:
            shapes = []
        for suffix, s in zip(("weight", "bias"), shapes):
            blocks.append(Block(f"{name}.{suffix}", offset, s))
            offset += int(np.prod(s))
        shape = out_shape
    return blocks


class Weights:
    """Flat parameter vector with a named block layout."""

    def __init__(self, spec: NetworkSpec, flat: Optional[np.ndarray] = None):
        self.spec = spec
        self.layout = weight_layout(spec)
        self._index = {b.name: b for b in self.layout}
        size = self.layout[-1].stop if self.layout else 0
        if flat is None:
            flat = np.zeros(size)
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (size,):
            raise ContractViolation(f"expected {size} parameters, got {flat.size}")
        self.flat = flat

    def __len__(self) -> int:
        return self.flat.size

    def block(self, name: str) -> np.ndarray:
        b = self._index[name]
        return self.flat[b.offset:b.stop].reshape(b.shape)

    def blocks(self) -> dict[str, np.ndarray]:
        return {b.name: self.block(b.name) for b in self.layout}

    @classmethod
    def from_blocks(cls, spec: NetworkSpec, blocks: dict[str, np.ndarray]) -> "Weights":
        w = cls(spec)
        for b in w.layout:
            w.flat[b.offset:b.stop] = np.asarray(blocks[b.name], dtype=np.float64).ravel()
        return w

    def copy(self) -> "Weights":
        return Weights(self.spec, self.flat.copy())

    def slice_bounds(self, prefixes: Sequence[str]) -> slice:
        """Contiguous span covering every block whose layer prefix is listed."""
        chosen = [b for b in self.layout if b.name.split(".")[0] in prefixes]
        if not chosen:
            raise ContractViolation(f"no parameter blocks match {list(prefixes)}")
        start, stop = min(b.offset for b in chosen), max(b.stop for b in chosen)
        if sum(b.size for b in chosen) != stop - start:
            raise ContractViolation(f"blocks {list(prefixes)} are not contiguous")
        return slice(start, stop)

    def head_slice(self, extended: bool = False) -> slice:
        fcs = [n for n in layer_names(self.spec) if n and n.startswith("fc")]
        return self.slice_bounds(fcs[-2:] if extended else fcs[-1:])

    def with_slice(self, span: slice, values: np.ndarray) -> "Weights":
        out = self.copy()
        out.flat[span] = values
        return out


def init_weights(spec: NetworkSpec, seed: int = 0) -> Weights:
    """He-normal weights, zero biases, each block drawn from its own seeded stream."""
    w = Weights(spec)
    for k, b in enumerate(w.layout):
        if b.name.endswith(".weight"):
            fan_in = int(np.prod(b.shape[1:]))
            rng = np.random.default_rng([seed, k])
            w.flat[b.offset:b.stop] = rng.standard_normal(b.size) * np.sqrt(2.0 / fan_in)
    return w


def conv_forward(x, kernels, biases, stride: int = 1, padding: int = 0) -> np.ndarray:
    """Cross-correlation ``out[f,p,q] = b[f] + sum K[f,c,z,s] * x[c, p*stride+z, q*stride+s]``."""
    x = np.asarray(x, dtype=np.float64)
    kernels = np.asarray(kernels, dtype=np.float64)
    biases = np.asarray(biases, dtype=np.float64)
    if x.ndim != 3 or kernels.ndim != 4:
        raise ContractViolation("conv expects a (C,H,W) input and (F,C,kh,kw) kernels")
    if kernels.shape[1] != x.shape[0] or biases.shape != (kernels.shape[0],):
        raise ContractViolation(f"conv kernels {kernels.shape} / biases {biases.shape} do not fit input {x.shape}")
    if stride < 1:
        raise ContractViolation("stride must be at least 1")
    if padding:
        x = np.pad(x, ((0, 0), (padding, padding), (padding, padding)))
    kh, kw = kernels.shape[2:]
    if x.shape[1] < kh or x.shape[2] < kw:
        raise ContractViolation(f"kernel {kh}x{kw} larger than input {x.shape[1:]}")
    windows = sliding_window_view(x, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
    out = np.tensordot(kernels, windows, axes=([1, 2, 3], [0, 3, 4]))
    return out + biases[:, None, None]


def relu(t) -> np.ndarray:
    return np.maximum(np.asarray(t, dtype=np.float64), 0.0)


def maxpool(t, window: int = 3, stride: int = 2) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 3:
        raise ContractViolation("maxpool expects a (C,H,W) tensor")
    if t.shape[1] < window or t.shape[2] < window:
        raise ContractViolation(f"input {t.shape[1:]} smaller than pooling window {window}")
    windows = sliding_window_view(t, (window, window), axis=(1, 2))[:, ::stride, ::stride]
    return windows.max(axis=(3, 4))


def fc_forward(x, matrix, bias, activation: str = "relu") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).ravel()
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != x.size or np.shape(bias) != (matrix.shape[0],):
        raise ContractViolation(f"fc matrix {matrix.shape} does not fit input of length {x.size}")
    out = matrix @ x + bias
    return relu(out) if activation == "relu" else out


def softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def _run(spec, weights, image, features, inference, rng, record, stop):
    if weights.spec != spec:
        raise ContractViolation("weights were built for a different network spec")
    x = np.asarray(image, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    if x.shape != tuple(spec.input_shape):
        raise ContractViolation(f"input shape {x.shape} != expected {tuple(spec.input_shape)}")
    side = np.asarray(features, dtype=np.float64).ravel()
    if side.size != spec.side_inputs:
        raise ContractViolation(f"expected {spec.side_inputs} side features, got {side.size}")

    joined = False
    names = layer_names(spec)
    for k, (name, display, layer) in enumerate(zip(names, _display_names(spec), spec.layers)):
        if k == stop:
            break
        try:
            if isinstance(layer, Conv):
                x = conv_forward(x, weights.block(f"{name}.weight"), weights.block(f"{name}.bias"),
                                 layer.stride, layer.padding)
            elif isinstance(layer, Relu):
                x = relu(x)
            elif isinstance(layer, MaxPool):
                x = maxpool(x, layer.window, layer.stride)
            elif isinstance(layer, FullyConnected):
                if not joined:
                    x = np.concatenate([x.ravel(), side])
                    joined = True
                x = fc_forward(x, weights.block(f"{name}.weight"), weights.block(f"{name}.bias"),
                               layer.activation)
            elif isinstance(layer, Dropout):
                if not inference and layer.probability > 0:
                    if rng is None:
                        raise ContractViolation("training-mode dropout needs an rng")
                    keep = rng.random(x.shape) >= layer.probability
                    x = x * keep / (1.0 - layer.probability)
            elif isinstance(layer, Softmax):
                x = softmax(x)
        except ContractViolation as exc:
            raise ContractViolation(f"{display}: {exc}") from exc
        if record is not None:
            record.append((display, x.shape))
    return x


def forward(spec: NetworkSpec, weights: Weights, image, features, inference: bool = True,
            rng: Optional[np.random.Generator] = None, record: Optional[list] = None) -> np.ndarray:
    """Class probabilities for one image and its side features.

    The flattened convolutional output is concatenated with ``features``
    (already scaled) in front of the first fully connected layer.
    ``record``, if given, collects ``(layer, output_shape)`` pairs.
    """
    return _run(spec, weights, image, features, inference, rng, record, stop=None)


def logits(spec, weights, image, features, inference=True, rng=None) -> np.ndarray:
    """Pre-softmax scores (all layers except a trailing softmax)."""
    stop = len(spec.layers) - 1 if isinstance(spec.layers[-1], Softmax) else None
    return _run(spec, weights, image, features, inference, rng, None, stop)


def head_input(spec, weights, image, features) -> np.ndarray:
    """Inference-mode activation entering the last fully connected layer."""
    last_fc = max(k for k, layer in enumerate(spec.layers) if isinstance(layer, FullyConnected))
    return _run(spec, weights, image, features, True, None, None, last_fc)


MODEL_MAGIC = b"GHHO-MODEL"
MODEL_VERSION = 1


def save_model(path, weights: Weights, extra: Optional[dict] = None) -> None:
    """Write ``MAGIC VERSION\\n`` + one JSON header line + little-endian float64 blocks."""
    payload = weights.flat.astype("<f8").tobytes()
    header = {
        "spec": weights.spec.to_dict(),
        "layout": [[b.name, list(b.shape)] for b in weights.layout],
        "n_params": len(weights),
        "sha256": hashlib.sha256(payload).hexdigest(),
        "extra": extra or {},
    }
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC + b" %d\n" % MODEL_VERSION)
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(payload)


def load_model(path) -> tuple[Weights, dict]:
    with open(path, "rb") as fh:
        first = fh.readline().split()
        if len(first) != 2 or first[0] != MODEL_MAGIC:
            raise ContractViolation(f"{path} is not a model file")
        if int(first[1]) != MODEL_VERSION:
            raise ContractViolation(f"unsupported model version {first[1].decode()}")
        header = json.loads(fh.readline())
        payload = fh.read()
    if hashlib.sha256(payload).hexdigest() != header["sha256"]:
        raise ContractViolation("model checksum mismatch")
    spec = NetworkSpec.from_dict(header["spec"])
    flat = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    expected = sum(b.size for b in weight_layout(spec))
    if flat.size != expected or header["n_params"] != expected:
        raise ContractViolation(f"model holds {flat.size} parameters, spec needs {expected}")
    return Weights(spec, flat), header.get("extra", {})
