"""Minimal deterministic trainer for ReLU classification networks.

The classifier's output IS the ReLU layer: logits z = relu(Wx + b), class =
argmax z.  Certification objectives then act on z directly.  Full-batch
gradient descent on softmax cross-entropy is enough at Iris scale and keeps
runs reproducible from a single seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from relucert.data import Dataset
from relucert.network import Network

__all__ = ["TrainConfig", "TrainResult", "train_one_layer", "make_safety_specs", "accuracy"]

TARGET_ACCURACY = 0.90


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 2000
    seed: int = 42
    hidden: int | None = None  # adds one hidden ReLU layer when set
    init_scale: float = 0.3
    init_bias: float = 0.1  # small positive bias keeps output ReLUs alive


@dataclass(frozen=True)
class TrainResult:
    network: Network
    train_accuracy: float
    test_accuracy: float
    reached_target: bool  # test accuracy >= TARGET_ACCURACY


def _softmax(Z):
    E = np.exp(Z - Z.max(axis=1, keepdims=True))
    return E / E.sum(axis=1, keepdims=True)


def accuracy(net: Network, X, y) -> float:
    H = X
    for W, b in net.layers:
        H = np.maximum(H @ W.T + b, 0.0)
    return float(np.mean(np.argmax(H, axis=1) == y))


def train_one_layer(data: Dataset, config: TrainConfig = TrainConfig()) -> TrainResult:
    """Deterministic full-batch gradient descent; returns the net regardless
    of whether the accuracy target was reached (the flag says which)."""
    rng = np.random.default_rng(config.seed)
    X, y = data.split("train")
    n_classes = data.num_classes
    n_in = data.num_features
    Y = np.eye(n_classes)[y]

    dims = [n_in] + ([config.hidden] if config.hidden else []) + [n_classes]
    weights = [
        rng.normal(scale=config.init_scale, size=(dims[k + 1], dims[k]))
        for k in range(len(dims) - 1)
    ]
    biases = [np.full(dims[k + 1], config.init_bias) for k in range(len(dims) - 1)]

    n = X.shape[0]
    for _ in range(config.epochs):
        # forward, keeping activations for backprop
        acts = [X]
        pres = []
        H = X
        for W, b in zip(weights, biases):
            Z = H @ W.T + b
            H = np.maximum(Z, 0.0)
            pres.append(Z)
            acts.append(H)
        grad = (_softmax(acts[-1]) - Y) / n
        for k in reversed(range(len(weights))):
            grad = grad * (pres[k] > 0)
            gW = grad.T @ acts[k]
            gb = grad.sum(axis=0)
            grad = grad @ weights[k]
            weights[k] -= config.learning_rate * gW
            biases[k] -= config.learning_rate * gb

    net = Network(tuple((W, b) for W, b in zip(weights, biases)))
    Xte, yte = data.split("test")
    test_acc = accuracy(net, Xte, yte)
    return TrainResult(
        network=net,
        train_accuracy=accuracy(net, X, y),
        test_accuracy=test_acc,
        reached_target=test_acc >= TARGET_ACCURACY,
    )


def make_safety_specs(net: Network, x_nominal, true_label: int) -> list[np.ndarray]:
    """Misclassification objectives c = e_a - e_y, one per adversarial label.

    The network keeps its classification of ``x_nominal`` iff every
    certified bound on these objectives over the surrounding region is <= 0.
    Ordered by ascending adversarial label.
    """
    x_nominal = np.atleast_1d(np.asarray(x_nominal, dtype=float))
    if x_nominal.shape[0] != net.input_dim:
        raise ValueError("nominal input dimension does not match the network")
    n_classes = net.output_dim
    if not 0 <= true_label < n_classes:
        raise ValueError(f"label {true_label} out of range for {n_classes} classes")
    specs = []
    for a in range(n_classes):
        if a == true_label:
            continue
        c = np.zeros(n_classes)
        c[a] = 1.0
        c[true_label] = -1.0
        specs.append(c)
    return specs
