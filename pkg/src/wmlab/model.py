"""Minimal self-contained convolutional classifier.

Layers (valid-padding convolution, ReLU, max-pool, dense) with analytic
forward/backward passes over float64 numpy arrays, SGD-with-momentum training
with stepped learning-rate decay, and a versioned binary checkpoint format.
Inputs are batches shaped (N, H, W, C); predictions break argmax ties toward
the lowest class index.
"""
from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import FormatError, ParameterError, ShapeError, TrainingDivergedError
from .rng import RngStream

__all__ = [
    "Conv", "Relu", "MaxPool", "Dense", "Architecture", "ModelParams",
    "TrainConfig", "init_params", "forward", "predict", "accuracy", "softmax",
    "cross_entropy", "input_gradient", "train", "TrainLoop", "save_model",
    "load_model", "default_architecture",
]


# -- architecture -------------------------------------------------------------

@dataclass(frozen=True)
class Conv:
    out_channels: int
    kernel: int
    stride: int = 1
    kind: str = field(default="conv", init=False)


@dataclass(frozen=True)
class Relu:
    kind: str = field(default="relu", init=False)


@dataclass(frozen=True)
class MaxPool:
    size: int = 2
    kind: str = field(default="maxpool", init=False)


@dataclass(frozen=True)
class Dense:
    width: int
    kind: str = field(default="dense", init=False)


_LAYER_KINDS = {"conv": Conv, "relu": Relu, "maxpool": MaxPool, "dense": Dense}


@dataclass(frozen=True)
class Architecture:
    """Layer stack with validated dimension flow for a fixed input size."""

    input_shape: tuple[int, int, int]
    layers: tuple
    num_classes: int

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(self.input_shape))
        object.__setattr__(self, "layers", tuple(self.layers))
        shapes = self.shape_flow()  # raises on invalid flow
        last = self.layers[-1] if self.layers else None
        if not isinstance(last, Dense) or last.width != self.num_classes:
            raise ParameterError("last layer must be a Dense of width num_classes")
        assert shapes[-1] == (self.num_classes,)

    def shape_flow(self) -> list[tuple]:
        """Per-layer output shapes (without the batch axis)."""
        shape = self.input_shape
        flow = [shape]
        for i, layer in enumerate(self.layers):
            if isinstance(layer, Conv):
                if len(shape) != 3:
                    raise ParameterError(f"layer {i}: conv after flattening")
                h, w, _ = shape
                if layer.kernel < 1 or layer.stride < 1:
                    raise ParameterError(f"layer {i}: bad conv spec {layer}")
                oh = (h - layer.kernel) // layer.stride + 1
                ow = (w - layer.kernel) // layer.stride + 1
                if h < layer.kernel or w < layer.kernel or oh < 1 or ow < 1:
                    raise ParameterError(f"layer {i}: kernel {layer.kernel} exceeds input {shape}")
                shape = (oh, ow, layer.out_channels)
            elif isinstance(layer, MaxPool):
                if len(shape) != 3:
                    raise ParameterError(f"layer {i}: pool after flattening")
                h, w, c = shape
                if h < layer.size or w < layer.size:
                    raise ParameterError(f"layer {i}: pool {layer.size} exceeds input {shape}")
                shape = (h // layer.size, w // layer.size, c)
            elif isinstance(layer, Dense):
                shape = (layer.width,)
            elif isinstance(layer, Relu):
                pass
            else:
                raise ParameterError(f"layer {i}: unknown layer {layer!r}")
            flow.append(shape)
        return flow

    def to_dict(self) -> dict:
        layers = []
        for layer in self.layers:
            d = {"kind": layer.kind}
            if isinstance(layer, Conv):
                d.update(out_channels=layer.out_channels, kernel=layer.kernel,
                         stride=layer.stride)
            elif isinstance(layer, MaxPool):
                d.update(size=layer.size)
            elif isinstance(layer, Dense):
                d.update(width=layer.width)
            layers.append(d)
        return {"input_shape": list(self.input_shape), "layers": layers,
                "num_classes": self.num_classes}

    @classmethod
    def from_dict(cls, d: dict) -> "Architecture":
        layers = []
        for spec in d["layers"]:
            kind = spec.get("kind")
            if kind not in _LAYER_KINDS:
                raise FormatError(f"unknown layer kind {kind!r}")
            args = {k: v for k, v in spec.items() if k != "kind"}
            layers.append(_LAYER_KINDS[kind](**args))
        return cls(tuple(d["input_shape"]), tuple(layers), int(d["num_classes"]))


def default_architecture(input_shape=(32, 32, 1), num_classes=10,
                         conv_channels=(12, 24), kernel=3, hidden=64) -> Architecture:
    """Two conv blocks (ReLU + 2x2 max-pool) and one hidden dense layer."""
    layers = []
    for ch in conv_channels:
        layers += [Conv(ch, kernel), Relu(), MaxPool(2)]
    layers += [Dense(hidden), Relu(), Dense(num_classes)]
    return Architecture(tuple(input_shape), tuple(layers), num_classes)


# -- parameters ---------------------------------------------------------------

class ModelParams:
    """Weights/biases aligned with an Architecture's layers.

    tensors[i] is None for parameter-free layers, else a dict {"w": .., "b": ..}.
    """

    def __init__(self, arch: Architecture, tensors: list):
        self.arch = arch
        self.tensors = tensors

    def copy(self) -> "ModelParams":
        return ModelParams(self.arch, [
            None if t is None else {"w": t["w"].copy(), "b": t["b"].copy()}
            for t in self.tensors
        ])

    def equal(self, other: "ModelParams") -> bool:
        if self.arch != other.arch:
            return False
        for a, b in zip(self.tensors, other.tensors):
            if (a is None) != (b is None):
                return False
            if a is not None and not (np.array_equal(a["w"], b["w"])
                                      and np.array_equal(a["b"], b["b"])):
                return False
        return True

    def all_finite(self) -> bool:
        return all(t is None or (np.isfinite(t["w"]).all() and np.isfinite(t["b"]).all())
                   for t in self.tensors)


def init_params(arch: Architecture, rng: RngStream) -> ModelParams:
    """Uniform init scaled by per-layer fan-in; zero biases."""
    shape = arch.input_shape
    tensors = []
    for layer in arch.layers:
        if isinstance(layer, Conv):
            fan_in = layer.kernel * layer.kernel * shape[2]
            limit = np.sqrt(6.0 / fan_in)
            w = rng.uniform(-limit, limit,
                            (layer.kernel, layer.kernel, shape[2], layer.out_channels))
            tensors.append({"w": w, "b": np.zeros(layer.out_channels)})
            h, ww, _ = shape
            shape = ((h - layer.kernel) // layer.stride + 1,
                     (ww - layer.kernel) // layer.stride + 1, layer.out_channels)
        elif isinstance(layer, MaxPool):
            tensors.append(None)
            shape = (shape[0] // layer.size, shape[1] // layer.size, shape[2])
        elif isinstance(layer, Dense):
            fan_in = int(np.prod(shape))
            limit = np.sqrt(6.0 / fan_in)
            w = rng.uniform(-limit, limit, (fan_in, layer.width))
            tensors.append({"w": w, "b": np.zeros(layer.width)})
            shape = (layer.width,)
        else:
            tensors.append(None)
    return ModelParams(arch, tensors)


# -- forward / backward -------------------------------------------------------

def _conv_patches(x: np.ndarray, kernel: int, stride: int) -> np.ndarray:
    """(N, OH, OW, k*k*C) patch matrix for a valid-padding convolution."""
    win = sliding_window_view(x, (kernel, kernel), axis=(1, 2))
    win = win[:, ::stride, ::stride]  # (N, OH, OW, C, k, k)
    n, oh, ow = win.shape[:3]
    return win.transpose(0, 1, 2, 4, 5, 3).reshape(n, oh, ow, -1)


def _forward_cached(params: ModelParams, x: np.ndarray):
    caches = []
    out = x
    for layer, t in zip(params.arch.layers, params.tensors):
        if isinstance(layer, Conv):
            patches = _conv_patches(out, layer.kernel, layer.stride)
            n, oh, ow, d = patches.shape
            flat = patches.reshape(-1, d)
            w2 = t["w"].reshape(d, -1)
            z = flat @ w2 + t["b"]
            caches.append(("conv", out.shape, flat))
            out = z.reshape(n, oh, ow, -1)
        elif isinstance(layer, Relu):
            caches.append(("relu", out > 0))
            out = np.maximum(out, 0.0)
        elif isinstance(layer, MaxPool):
            p = layer.size
            n, h, w, c = out.shape
            h2, w2 = h // p, w // p
            tiles = (out[:, :h2 * p, :w2 * p]
                     .reshape(n, h2, p, w2, p, c)
                     .transpose(0, 1, 3, 2, 4, 5)
                     .reshape(n, h2, w2, p * p, c))
            idx = tiles.argmax(axis=3)  # first max wins: deterministic
            caches.append(("maxpool", (n, h, w, c), idx))
            out = np.take_along_axis(tiles, idx[:, :, :, None, :], axis=3)[:, :, :, 0, :]
        elif isinstance(layer, Dense):
            shape_in = out.shape
            flat = out.reshape(out.shape[0], -1)
            caches.append(("dense", shape_in, flat))
            out = flat @ t["w"] + t["b"]
    return out, caches


def _backward(params: ModelParams, caches: list, dlogits: np.ndarray):
    grads: list = [None] * len(params.tensors)
    d = dlogits
    for i in range(len(params.arch.layers) - 1, -1, -1):
        layer, t, cache = params.arch.layers[i], params.tensors[i], caches[i]
        if isinstance(layer, Dense):
            _, shape_in, flat = cache
            grads[i] = {"w": flat.T @ d, "b": d.sum(axis=0)}
            d = (d @ t["w"].T).reshape(shape_in)
        elif isinstance(layer, Relu):
            d = d * cache[1]
        elif isinstance(layer, MaxPool):
            _, (n, h, w, c), idx = cache
            p = layer.size
            h2, w2 = h // p, w // p
            dtiles = np.zeros((n, h2, w2, p * p, c))
            np.put_along_axis(dtiles, idx[:, :, :, None, :], d[:, :, :, None, :], axis=3)
            dcrop = (dtiles.reshape(n, h2, w2, p, p, c)
                     .transpose(0, 1, 3, 2, 4, 5)
                     .reshape(n, h2 * p, w2 * p, c))
            dx = np.zeros((n, h, w, c))
            dx[:, :h2 * p, :w2 * p] = dcrop
            d = dx
        elif isinstance(layer, Conv):
            _, in_shape, flat = cache
            n, h, w, c = in_shape
            k, s = layer.kernel, layer.stride
            oh = (h - k) // s + 1
            ow = (w - k) // s + 1
            dflat = d.reshape(-1, layer.out_channels)
            grads[i] = {"w": (flat.T @ dflat).reshape(t["w"].shape),
                        "b": dflat.sum(axis=0)}
            dpatches = (dflat @ t["w"].reshape(-1, layer.out_channels).T
                        ).reshape(n, oh, ow, k, k, c)
            dx = np.zeros(in_shape)
            for ki in range(k):
                for kj in range(k):
                    dx[:, ki:ki + s * oh:s, kj:kj + s * ow:s, :] += dpatches[:, :, :, ki, kj, :]
            d = dx
    return grads, d


def _check_batch(params: ModelParams, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 4 or tuple(x.shape[1:]) != params.arch.input_shape:
        raise ShapeError(
            f"batch shape {x.shape} does not match input {params.arch.input_shape}")
    return np.ascontiguousarray(x)


def forward(params: ModelParams, x: np.ndarray) -> np.ndarray:
    """Logits (N, num_classes) for a batch (N, H, W, C)."""
    logits, _ = _forward_cached(params, _check_batch(params, x))
    return logits


def predict(params: ModelParams, x: np.ndarray, batch_size: int = 512) -> np.ndarray:
    """Argmax labels, lowest index on ties; evaluates in chunks."""
    x = _check_batch(params, x)
    out = np.empty(x.shape[0], dtype=np.int64)
    for i in range(0, x.shape[0], batch_size):
        out[i:i + batch_size] = np.argmax(forward(params, x[i:i + batch_size]), axis=1)
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean softmax cross-entropy and its gradient w.r.t. the logits."""
    n = logits.shape[0]
    z = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1))
    loss = float((lse - z[np.arange(n), labels]).mean())
    dlogits = softmax(logits)
    dlogits[np.arange(n), labels] -= 1.0
    return loss, dlogits / n


def accuracy(params: ModelParams, x: np.ndarray, y: np.ndarray) -> float:
    """Fraction of argmax predictions equal to the labels."""
    y = np.asarray(y)
    if y.size == 0:
        raise ParameterError("accuracy of an empty set is undefined")
    return float((predict(params, x) == y).mean())


def input_gradient(params: ModelParams, x: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Gradient of the mean cross-entropy w.r.t. the input batch."""
    x = _check_batch(params, x)
    logits, caches = _forward_cached(params, x)
    _, dlogits = cross_entropy(logits, np.asarray(labels))
    _, dx = _backward(params, caches, dlogits)
    return dx


def loss_and_grads(params: ModelParams, x: np.ndarray, y: np.ndarray):
    """(loss, per-layer grads) on one batch; used by the trainer and tests."""
    logits, caches = _forward_cached(params, _check_batch(params, x))
    loss, dlogits = cross_entropy(logits, y)
    grads, _ = _backward(params, caches, dlogits)
    return loss, grads


# -- training -----------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    """SGD-with-momentum settings; defaults mirror the batch-100 / lr-0.2 setup."""

    epochs: int
    batch_size: int = 100
    lr_init: float = 0.2
    momentum: float = 0.9
    lr_decay_factor: float = 0.1
    lr_decay_milestones: tuple[float, ...] = (0.5, 0.75)  # fractions of epochs
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ParameterError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr_init <= 0:
            raise ParameterError(f"lr_init must be > 0, got {self.lr_init}")
        if self.epochs < 0:
            raise ParameterError(f"epochs must be >= 0, got {self.epochs}")

    def lr_at(self, epoch: int) -> float:
        """Stepped decay; extension epochs past `epochs` keep the final rate."""
        lr = self.lr_init
        for frac in sorted(self.lr_decay_milestones):
            if epoch >= int(frac * self.epochs):
                lr *= self.lr_decay_factor
        return lr


class TrainLoop:
    """Owns optimizer state so training can be extended beyond cfg.epochs."""

    def __init__(self, init: ModelParams, cfg: TrainConfig, rng: RngStream | None = None):
        self.params = init.copy()
        self.cfg = cfg
        self.rng = rng if rng is not None else RngStream(cfg.seed)
        self.velocity = [None if t is None else {"w": np.zeros_like(t["w"]),
                                                 "b": np.zeros_like(t["b"])}
                         for t in self.params.tensors]
        self.epoch = 0

    def run(self, data_provider, epochs: int) -> ModelParams:
        """Run `epochs` more epochs; data_provider(epoch) -> (x, y)."""
        num_classes = self.params.arch.num_classes
        for _ in range(epochs):
            x, y = data_provider(self.epoch)
            y = np.asarray(y, dtype=np.int64)
            if y.size and (y.min() < 0 or y.max() >= num_classes):
                raise ParameterError(
                    f"labels must lie in [0, {num_classes}), got range "
                    f"[{y.min()}, {y.max()}]")
            lr = self.cfg.lr_at(self.epoch)
            order = self.rng.permutation(len(y))
            for start in range(0, len(y), self.cfg.batch_size):
                sel = order[start:start + self.cfg.batch_size]
                loss, grads = loss_and_grads(self.params, x[sel], y[sel])
                if not np.isfinite(loss):
                    raise TrainingDivergedError(
                        f"non-finite loss {loss} at epoch {self.epoch}, "
                        f"batch {start // self.cfg.batch_size}, lr {lr}")
                for t, v, g in zip(self.params.tensors, self.velocity, grads):
                    if t is None:
                        continue
                    v["w"] = self.cfg.momentum * v["w"] - lr * g["w"]
                    v["b"] = self.cfg.momentum * v["b"] - lr * g["b"]
                    t["w"] += v["w"]
                    t["b"] += v["b"]
            self.epoch += 1
        return self.params


def train(init: ModelParams, data, cfg: TrainConfig,
          rng: RngStream | None = None) -> ModelParams:
    """SGD training; `data` is (x, y) arrays or a callable epoch -> (x, y).

    Deterministic given (init, cfg, rng): the shuffle stream comes from `rng`
    (falling back to cfg.seed). Returns new params; `init` is not mutated.
    """
    provider = data if callable(data) else (lambda _epoch: data)
    loop = TrainLoop(init, cfg, rng)
    return loop.run(provider, cfg.epochs)


# -- checkpoint format --------------------------------------------------------

_MAGIC = b"WMLMODEL"
_VERSION = 1


def _tensor_list(params: ModelParams):
    for t in params.tensors:
        if t is not None:
            yield t["w"]
            yield t["b"]


def save_model(params: ModelParams, path) -> None:
    """Versioned binary checkpoint: magic, version, JSON header, LE payload, CRC."""
    arrays = list(_tensor_list(params))
    header = json.dumps(
        {"architecture": params.arch.to_dict(),
         "tensors": [list(a.shape) for a in arrays]},
        sort_keys=True, separators=(",", ":")).encode("utf-8")
    payload = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays)
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(_VERSION.to_bytes(4, "little"))
        f.write(len(header).to_bytes(4, "little"))
        f.write(header)
        f.write(payload)
        f.write(zlib.crc32(payload).to_bytes(4, "little"))


def load_model(path) -> ModelParams:
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < 16 or blob[:8] != _MAGIC:
        raise FormatError(f"{path}: not a model checkpoint (bad magic)")
    version = int.from_bytes(blob[8:12], "little")
    if version != _VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version} "
                          f"(reader supports {_VERSION})")
    hlen = int.from_bytes(blob[12:16], "little")
    if len(blob) < 16 + hlen:
        raise FormatError(f"{path}: truncated header")
    try:
        header = json.loads(blob[16:16 + hlen].decode("utf-8"))
        arch = Architecture.from_dict(header["architecture"])
        shapes = [tuple(s) for s in header["tensors"]]
    except (ValueError, KeyError, TypeError) as e:
        raise FormatError(f"{path}: malformed header ({e})") from e
    need = sum(int(np.prod(s)) * 8 for s in shapes)
    start = 16 + hlen
    if len(blob) != start + need + 4:
        raise FormatError(f"{path}: payload size mismatch "
                          f"(expected {start + need + 4} bytes, file has {len(blob)})")
    payload = blob[start:start + need]
    crc = int.from_bytes(blob[start + need:], "little")
    if zlib.crc32(payload) != crc:
        raise FormatError(f"{path}: payload CRC mismatch")
    arrays = []
    off = 0
    for s in shapes:
        count = int(np.prod(s))
        arrays.append(np.frombuffer(payload, dtype="<f8", count=count,
                                    offset=off).reshape(s).copy())
        off += count * 8
    tensors = []
    it = iter(arrays)
    for layer in arch.layers:
        if isinstance(layer, (Conv, Dense)):
            tensors.append({"w": next(it), "b": next(it)})
        else:
            tensors.append(None)
    params = ModelParams(arch, tensors)
    if not params.all_finite():
        raise FormatError(f"{path}: checkpoint holds non-finite values")
    return params
