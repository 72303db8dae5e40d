"""From-scratch multilayer perceptron: ReLU hidden layers, softmax cross-entropy,
backpropagation, and SGD with classical (heavy-ball) momentum.

Everything is plain numpy on float64; no autodiff framework.
"""
from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset, Shard
from .errors import ConfigurationError, LoadError, NumericError, UsageError
from .rng import as_generator


@dataclass
class ModelParams:
    """Ordered layer parameters: weight matrices (out x in) and bias vectors."""

    weights: list        # list of (out, in) float64 arrays
    biases: list         # list of (out,) float64 arrays
    layer_sizes: list    # [input, hidden..., output]

    def __post_init__(self):
        expected = list(zip(self.layer_sizes[1:], self.layer_sizes[:-1]))
        shapes = [w.shape for w in self.weights]
        if shapes != expected:
            raise ConfigurationError(f"weight shapes {shapes} do not chain as {expected}")
        for w, b, out in zip(self.weights, self.biases, self.layer_sizes[1:]):
            if b.shape != (out,):
                raise ConfigurationError("bias shapes must match layer output sizes")

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "ModelParams":
        return ModelParams([w.copy() for w in self.weights],
                           [b.copy() for b in self.biases], list(self.layer_sizes))

    def flat(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)

    def zeros_like(self) -> "ModelParams":
        return ModelParams([np.zeros_like(w) for w in self.weights],
                           [np.zeros_like(b) for b in self.biases], list(self.layer_sizes))


@dataclass
class OptimizerState:
    """Momentum buffers plus the fixed learning rate and momentum factor."""

    velocity: ModelParams
    lr: float = 0.001
    momentum: float = 0.5

    def __post_init__(self):
        if self.lr <= 0:
            raise ConfigurationError("learning rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigurationError("momentum must lie in [0,1)")

    @classmethod
    def for_params(cls, params: ModelParams, lr: float = 0.001, momentum: float = 0.5):
        return cls(velocity=params.zeros_like(), lr=lr, momentum=momentum)


@dataclass
class Batch:
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if len(self.features) != len(self.labels):
            raise ConfigurationError("batch features and labels must have equal length")


def init_mlp(layer_sizes, seed=None) -> ModelParams:
    """Glorot-uniform weights, zero biases, deterministic per seed."""
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2:
        raise ConfigurationError("layer_sizes needs at least input and output sizes")
    if any(s < 1 for s in sizes):
        raise ConfigurationError("layer sizes must be positive")
    rng = as_generator(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        a = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-a, a, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return ModelParams(weights=weights, biases=biases, layer_sizes=sizes)


def _forward_cached(params: ModelParams, x: np.ndarray):
    """Return (activations per layer input, logits); checks for non-finite values."""
    acts = [x]
    h = x
    last = params.n_layers - 1
    with np.errstate(invalid="ignore", over="ignore"):  # non-finites raised below
        for l, (w, b) in enumerate(zip(params.weights, params.biases)):
            z = h @ w.T + b
            if not np.all(np.isfinite(z)):
                raise NumericError(f"non-finite activations at layer {l}")
            h = z if l == last else np.maximum(z, 0.0)
            acts.append(h)
    return acts, h


def forward(params: ModelParams, batch) -> np.ndarray:
    """Batched logits: affine + ReLU on hidden layers, final layer affine only."""
    x = batch.features if isinstance(batch, Batch) else np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.layer_sizes[0]:
        raise UsageError(
            f"input features must be (batch, {params.layer_sizes[0]}), got {x.shape}"
        )
    _, logits = _forward_cached(params, x)
    return logits


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def loss_and_grad(params: ModelParams, batch: Batch):
    """Mean softmax cross-entropy over the batch and its backpropagated gradients."""
    x = np.asarray(batch.features, dtype=np.float64)
    y = np.asarray(batch.labels, dtype=np.int64)
    if x.shape[1] != params.layer_sizes[0]:
        raise UsageError(f"feature dimension {x.shape[1]} does not match input size {params.layer_sizes[0]}")
    if len(y) and (y.min() < 0 or y.max() >= params.layer_sizes[-1]):
        raise UsageError("batch labels must lie in [0, output size)")
    n = len(y)
    acts, logits = _forward_cached(params, x)
    logp = _log_softmax(logits)
    loss = float(-logp[np.arange(n), y].mean())
    probs = np.exp(logp)

    grads = params.zeros_like()
    delta = probs
    delta[np.arange(n), y] -= 1.0
    delta /= n
    for l in range(params.n_layers - 1, -1, -1):
        grads.weights[l][...] = delta.T @ acts[l]
        grads.biases[l][...] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ params.weights[l]) * (acts[l] > 0)
    if not math.isfinite(loss):
        raise NumericError("non-finite loss at output layer")
    return loss, grads


def cross_entropy(params: ModelParams, features, labels) -> float:
    """Mean softmax cross-entropy without gradients (used for test-set loss logging)."""
    logits = forward(params, np.asarray(features, dtype=np.float64))
    logp = _log_softmax(logits)
    y = np.asarray(labels, dtype=np.int64)
    return float(-logp[np.arange(len(y)), y].mean())


def sgd_step(params: ModelParams, grads: ModelParams, state: OptimizerState):
    """Classical momentum: v <- mu*v + g; p <- p - lr*v. Updates in place."""
    for pw, gw, vw in zip(params.weights, grads.weights, state.velocity.weights):
        vw *= state.momentum
        vw += gw
        pw -= state.lr * vw
    for pb, gb, vb in zip(params.biases, grads.biases, state.velocity.biases):
        vb *= state.momentum
        vb += gb
        pb -= state.lr * vb
    return params, state


@dataclass
class NodeState:
    """Everything one node owns: parameters, optimizer, local data, RNG stream."""

    id: int
    params: ModelParams
    opt: OptimizerState
    shard: Shard
    features: np.ndarray  # local training features, materialized once
    labels: np.ndarray
    rng: np.random.Generator

    @classmethod
    def create(cls, node_id: int, params: ModelParams, opt: OptimizerState,
               shard: Shard, dataset: Dataset, rng) -> "NodeState":
        idx = shard.sample_indices
        return cls(id=node_id, params=params, opt=opt, shard=shard,
                   features=dataset.features[idx], labels=dataset.labels[idx],
                   rng=as_generator(rng))

    @property
    def local_size(self) -> int:
        return len(self.labels)


def train_epochs(node: NodeState, epochs: int, batch_size: int) -> NodeState:
    """Seeded-shuffle mini-batch SGD on the node's shard; no-op for empty shards."""
    if batch_size < 1:
        raise ConfigurationError("batch_size must be at least 1")
    if epochs < 0:
        raise ConfigurationError("epochs must be non-negative")
    n = node.local_size
    if n == 0:
        return node
    for _ in range(epochs):
        order = node.rng.permutation(n)
        for start in range(0, n, batch_size):
            sel = order[start:start + batch_size]
            batch = Batch(node.features[sel], node.labels[sel])
            _, grads = loss_and_grad(node.params, batch)
            sgd_step(node.params, grads, node.opt)
    return node


def evaluate(params: ModelParams, test: Dataset):
    """Accuracy and the C x C confusion matrix on a test set.

    Argmax ties break toward the lowest class index.
    """
    if len(test) == 0:
        raise UsageError("cannot evaluate on an empty test set")
    logits = forward(params, test.features)
    preds = logits.argmax(axis=1)
    accuracy = float((preds == test.labels).mean())
    c = test.class_count
    confusion = np.zeros((c, c), dtype=np.int64)
    np.add.at(confusion, (test.labels, preds), 1)
    return accuracy, confusion


def save_params(params: ModelParams, path) -> None:
    """JSON header line with layer sizes, then the flat little-endian float64 stream."""
    header = json.dumps({"layer_sizes": list(params.layer_sizes)}).encode("utf-8") + b"\n"
    Path(path).write_bytes(header + params.flat().astype("<f8").tobytes())


def load_params(path) -> ModelParams:
    raw = Path(path).read_bytes()
    nl = raw.index(b"\n")
    sizes = json.loads(raw[:nl].decode("utf-8"))["layer_sizes"]
    flat = np.frombuffer(raw, dtype="<f8", offset=nl + 1)
    params = init_mlp(sizes, seed=0)
    if flat.size != params.n_params:
        raise LoadError(f"{path}: expected {params.n_params} parameters, found {flat.size}")
    pos = 0
    for l, (out, inp) in enumerate(zip(sizes[1:], sizes[:-1])):
        params.weights[l][...] = flat[pos:pos + out * inp].reshape(out, inp)
        pos += out * inp
        params.biases[l][...] = flat[pos:pos + out]
        pos += out
    return params
