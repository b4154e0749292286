"""Feed-forward binary classifier approximating the performance indicator.

A plain fully connected network: SELU hidden activations, logistic output,
trained on binary cross entropy with mini-batch ADAM and exact backpropagated
gradients.  The same backward machinery exposes the gradient of the output
with respect to the *input* point, which is what makes the bound optimization
gradient-based.  Everything is numpy; no autograd framework.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .numerics import sigmoid_slope, stable_sigmoid
from .optim import AdamConfig, AdamState, adam_step

# Self-normalizing constants for the scaled exponential linear unit.
SELU_ALPHA = 1.6732632423543772
SELU_LAMBDA = 1.0507009873554805

PREDICTION_CLAMP = 1e-7
MODEL_FORMAT_VERSION = 1


class TrainingDivergedError(RuntimeError):
    """Training loss became non-finite."""


class ModelFormatError(RuntimeError):
    """A model file is corrupt or carries an unsupported format version."""


def selu(x):
    x = np.asarray(x, dtype=float)
    return SELU_LAMBDA * np.where(x > 0, x, SELU_ALPHA * np.expm1(np.minimum(x, 0.0)))


def selu_grad(x):
    x = np.asarray(x, dtype=float)
    return SELU_LAMBDA * np.where(x > 0, 1.0, SELU_ALPHA * np.exp(np.minimum(x, 0.0)))


def _forward_arrays(weights, biases, X):
    """Forward pass returning logits plus the per-layer caches for backprop."""
    a = X
    pre = []
    acts = [a]
    for W, b in zip(weights[:-1], biases[:-1]):
        z = a @ W + b
        pre.append(z)
        a = selu(z)
        acts.append(a)
    logits = (a @ weights[-1] + biases[-1])[:, 0]
    return logits, pre, acts


def _input_gradient_of_logits(weights, pre):
    """d logit / d input for every sample in the cached forward pass."""
    n = pre[0].shape[0] if pre else None
    G = np.broadcast_to(weights[-1][:, 0], (n, weights[-1].shape[0])).copy()
    for W, z in zip(reversed(weights[:-1]), reversed(pre)):
        G = (G * selu_grad(z)) @ W.T
    return G


@dataclass(frozen=True)
class MlpModel:
    """Immutable trained classifier: layer sizes plus weight/bias arrays."""

    layer_sizes: tuple
    weights: tuple
    biases: tuple

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        weights = tuple(np.asarray(W, dtype=float) for W in self.weights)
        biases = tuple(np.asarray(b, dtype=float) for b in self.biases)
        if len(sizes) < 2 or sizes[-1] != 1:
            raise ValueError("need at least input and scalar output layers")
        if len(weights) != len(sizes) - 1 or len(biases) != len(sizes) - 1:
            raise ValueError("one weight matrix and bias vector per layer transition")
        for i, (W, b) in enumerate(zip(weights, biases)):
            if W.shape != (sizes[i], sizes[i + 1]) or b.shape != (sizes[i + 1],):
                raise ValueError(f"layer {i} shapes do not chain: {W.shape} / {b.shape}")
        for arr in weights + biases:
            arr.setflags(write=False)
        object.__setattr__(self, "layer_sizes", sizes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "biases", biases)

    @classmethod
    def initialize(cls, layer_sizes, seed: int = 0) -> "MlpModel":
        """Zero-mean Gaussian weights scaled by 1/sqrt(fan_in), zero biases."""
        rng = np.random.default_rng(seed)
        sizes = tuple(int(s) for s in layer_sizes)
        weights = []
        biases = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            weights.append(rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(sizes, tuple(weights), tuple(biases))

    @property
    def input_dimension(self) -> int:
        return self.layer_sizes[0]

    def _as_batch(self, X):
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.input_dimension:
            raise ValueError(
                f"input dimension {X.shape[1]} does not match model ({self.input_dimension})"
            )
        return X, single

    def logits(self, X):
        X, single = self._as_batch(X)
        z, _, _ = _forward_arrays(self.weights, self.biases, X)
        if not np.all(np.isfinite(z)):
            raise FloatingPointError("non-finite value in forward pass")
        return float(z[0]) if single else z

    def forward(self, X):
        """Class-1 probability, strictly inside (0, 1) for finite inputs."""
        z = self.logits(X)
        return stable_sigmoid(z) if np.ndim(z) else float(stable_sigmoid(z))

    def logits_and_input_gradient(self, X):
        """Logit values and their exact reverse-mode input gradients."""
        X, single = self._as_batch(X)
        z, pre, _ = _forward_arrays(self.weights, self.biases, X)
        if pre:
            G = _input_gradient_of_logits(self.weights, pre)
        else:
            G = np.broadcast_to(self.weights[-1][:, 0], X.shape).copy()
        if single:
            return float(z[0]), G[0]
        return z, G

    def input_gradient(self, x):
        """Gradient of the output probability with respect to the input point."""
        z, G = self.logits_and_input_gradient(np.asarray(x, dtype=float))
        return sigmoid_slope(z) * G

    def num_params(self) -> int:
        return sum(W.size + b.size for W, b in zip(self.weights, self.biases))


def bce_loss(predictions, labels) -> float:
    """Mean negative binary cross entropy, with predictions clamped away
    from {0, 1} so the logs stay finite."""
    p = np.atleast_1d(np.asarray(predictions, dtype=float))
    y = np.atleast_1d(np.asarray(labels, dtype=float))
    if p.shape != y.shape:
        raise ValueError("predictions and labels must have the same length")
    p = np.clip(p, PREDICTION_CLAMP, 1.0 - PREDICTION_CLAMP)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def accuracy(predictions, labels, threshold: float = 0.5) -> float:
    p = np.atleast_1d(np.asarray(predictions, dtype=float))
    y = np.atleast_1d(np.asarray(labels, dtype=float))
    return float(np.mean((p >= threshold) == (y > 0.5)))


@dataclass(frozen=True)
class LabeledDataset:
    """Normalized input points with binary failure labels."""

    inputs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float)).copy()
        labels = np.atleast_1d(np.asarray(self.labels, dtype=float)).copy()
        if inputs.shape[0] != labels.shape[0]:
            raise ValueError("one label per input row required")
        if inputs.shape[0] < 1:
            raise ValueError("dataset must be nonempty")
        if not np.all((labels == 0.0) | (labels == 1.0)):
            raise ValueError("labels must be binary")
        inputs.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_response(cls, X, y_response, threshold: float) -> "LabeledDataset":
        """Derive labels from raw responses: failure when y >= threshold.

        Deriving at load time lets one response table serve many thresholds.
        """
        y_response = np.asarray(y_response, dtype=float)
        return cls(X, (y_response >= threshold).astype(float))

    @property
    def size(self) -> int:
        return self.inputs.shape[0]

    @property
    def dimension(self) -> int:
        return self.inputs.shape[1]


@dataclass(frozen=True)
class TrainConfig:
    train_size: int
    test_size: int
    hidden: tuple = (200, 200, 200, 200)
    batch_size: int = 128
    epochs: int = 150
    adam: AdamConfig = field(default_factory=lambda: AdamConfig(lr=1e-3))
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch size must be at least 1")
        if self.train_size < 1 or self.test_size < 0:
            raise ValueError("split sizes must be positive")


@dataclass(frozen=True)
class TrainResult:
    model: MlpModel
    train_trace: np.ndarray
    test_trace: np.ndarray
    train_accuracy: float
    test_accuracy: float
    final_train_loss: float
    final_test_loss: float


def _pack(weights, biases) -> np.ndarray:
    return np.concatenate([a.ravel() for a in weights] + [b.ravel() for b in biases])


def _unpack(flat, layer_sizes):
    weights = []
    biases = []
    offset = 0
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        weights.append(flat[offset : offset + fan_in * fan_out].reshape(fan_in, fan_out))
        offset += fan_in * fan_out
    for fan_out in layer_sizes[1:]:
        biases.append(flat[offset : offset + fan_out])
        offset += fan_out
    return weights, biases


def _bce_value_and_grad(flat, layer_sizes, X, y):
    """BCE loss and its gradient in packed parameter space.

    The sigmoid and the cross entropy are fused, so the output-layer error is
    simply (p - y)/n and no clamping enters the gradient path.
    """
    weights, biases = _unpack(flat, layer_sizes)
    logits, pre, acts = _forward_arrays(weights, biases, X)
    p = stable_sigmoid(logits)
    loss = bce_loss(p, y)
    n = X.shape[0]
    delta = ((p - y) / n)[:, None]
    grad_w = [None] * len(weights)
    grad_b = [None] * len(biases)
    grad_w[-1] = acts[-1].T @ delta
    grad_b[-1] = delta.sum(axis=0)
    g = delta @ weights[-1].T
    for l in range(len(weights) - 2, -1, -1):
        g = g * selu_grad(pre[l])
        grad_w[l] = acts[l].T @ g
        grad_b[l] = g.sum(axis=0)
        if l > 0:
            g = g @ weights[l].T
    return loss, _pack(grad_w, grad_b)


def train(dataset: LabeledDataset, config: TrainConfig) -> TrainResult:
    """Mini-batch ADAM on BCE; deterministic for a fixed seed.

    The dataset is permuted once with the config seed, the first
    ``train_size`` rows train and the next ``test_size`` rows test.  The
    per-epoch trace records full train and test BCE.
    """
    if config.train_size + config.test_size > dataset.size:
        raise ValueError("split sizes exceed the dataset")
    rng = np.random.default_rng(config.seed)
    order = rng.permutation(dataset.size)
    train_idx = order[: config.train_size]
    test_idx = order[config.train_size : config.train_size + config.test_size]
    X_train, y_train = dataset.inputs[train_idx], dataset.labels[train_idx]
    X_test, y_test = dataset.inputs[test_idx], dataset.labels[test_idx]
    if len(np.unique(y_train)) < 2:
        warnings.warn("training labels contain a single class", UserWarning)

    layer_sizes = (dataset.dimension, *config.hidden, 1)
    model0 = MlpModel.initialize(layer_sizes, seed=int(rng.integers(2**31 - 1)))
    flat = _pack(model0.weights, model0.biases)
    state = AdamState.zeros(flat.shape)

    n_train = X_train.shape[0]
    batch = min(config.batch_size, n_train)
    train_trace = np.empty(config.epochs)
    test_trace = np.empty(config.epochs)
    for epoch in range(config.epochs):
        perm = rng.permutation(n_train)
        for start in range(0, n_train, batch):
            rows = perm[start : start + batch]
            loss, grad = _bce_value_and_grad(flat, layer_sizes, X_train[rows], y_train[rows])
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"loss became non-finite at epoch {epoch}")
            flat, state = adam_step(state, flat, grad, config.adam)
        weights, biases = _unpack(flat, layer_sizes)
        p_train = stable_sigmoid(_forward_arrays(weights, biases, X_train)[0])
        train_trace[epoch] = bce_loss(p_train, y_train)
        if X_test.shape[0]:
            p_test = stable_sigmoid(_forward_arrays(weights, biases, X_test)[0])
            test_trace[epoch] = bce_loss(p_test, y_test)
            if not np.isfinite(test_trace[epoch]):
                raise TrainingDivergedError(f"loss became non-finite at epoch {epoch}")
        else:
            test_trace[epoch] = np.nan
        if not np.isfinite(train_trace[epoch]):
            raise TrainingDivergedError(f"loss became non-finite at epoch {epoch}")

    weights, biases = _unpack(flat, layer_sizes)
    model = MlpModel(layer_sizes, tuple(w.copy() for w in weights), tuple(b.copy() for b in biases))
    p_train = model.forward(X_train)
    train_acc = accuracy(p_train, y_train)
    if X_test.shape[0]:
        p_test = model.forward(X_test)
        test_acc = accuracy(p_test, y_test)
        final_test = bce_loss(p_test, y_test)
    else:
        test_acc = np.nan
        final_test = np.nan
    return TrainResult(
        model=model,
        train_trace=train_trace,
        test_trace=test_trace,
        train_accuracy=train_acc,
        test_accuracy=test_acc,
        final_train_loss=bce_loss(p_train, y_train),
        final_test_loss=final_test,
    )


def save_model(model: MlpModel, path) -> None:
    """Versioned npz container; round-trips the forward map bit-identically."""
    payload = {
        "format_version": np.array(MODEL_FORMAT_VERSION, dtype=np.int64),
        "layer_sizes": np.asarray(model.layer_sizes, dtype=np.int64),
    }
    for i, (W, b) in enumerate(zip(model.weights, model.biases)):
        payload[f"W{i}"] = W
        payload[f"b{i}"] = b
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def load_model(path) -> MlpModel:
    try:
        with np.load(path, allow_pickle=False) as data:
            if "format_version" not in data:
                raise ModelFormatError(f"{path}: missing format version")
            version = int(data["format_version"])
            if version > MODEL_FORMAT_VERSION:
                raise ModelFormatError(
                    f"{path}: format version {version} is newer than supported "
                    f"({MODEL_FORMAT_VERSION})"
                )
            layer_sizes = tuple(int(s) for s in data["layer_sizes"])
            weights = tuple(data[f"W{i}"] for i in range(len(layer_sizes) - 1))
            biases = tuple(data[f"b{i}"] for i in range(len(layer_sizes) - 1))
    except ModelFormatError:
        raise
    except Exception as exc:
        raise ModelFormatError(f"{path}: cannot read model file ({exc})") from exc
    return MlpModel(layer_sizes, weights, biases)
