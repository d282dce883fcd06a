"""Feedforward ReLU network model, evaluation, and JSON serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = ["Network", "ActivationTrace", "forward", "load_network", "save_network"]


class NetworkFormatError(ValueError):
    """Raised when a serialized network document is malformed."""


def _as_finite_array(data, name: str, ndim: int) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise NetworkFormatError(f"{name} is not a rectangular numeric array: {exc}") from exc
    if arr.ndim != ndim:
        raise NetworkFormatError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NetworkFormatError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class Network:
    """Layered ReLU network z = relu(W_K ... relu(W_1 x + b_1) ... + b_K).

    ``layers`` is a tuple of (weight, bias) pairs with chained dimensions:
    weight of layer k+1 has as many columns as layer k has rows.  Immutable
    after construction; safe to share across workers.
    """

    layers: tuple[tuple[np.ndarray, np.ndarray], ...]

    def __post_init__(self):
        if len(self.layers) == 0:
            raise ValueError("network needs at least one layer")
        frozen = []
        prev_rows = None
        for k, (W, b) in enumerate(self.layers):
            W = _as_finite_array(W, f"layer {k} weight", 2)
            b = _as_finite_array(b, f"layer {k} bias", 1)
            if b.shape[0] != W.shape[0]:
                raise NetworkFormatError(
                    f"layer {k}: bias length {b.shape[0]} != weight rows {W.shape[0]}"
                )
            if prev_rows is not None and W.shape[1] != prev_rows:
                raise NetworkFormatError(
                    f"layer {k}: weight has {W.shape[1]} columns but previous layer outputs {prev_rows}"
                )
            prev_rows = W.shape[0]
            W.setflags(write=False)
            b.setflags(write=False)
            frozen.append((W, b))
        object.__setattr__(self, "layers", tuple(frozen))

    @property
    def input_dim(self) -> int:
        return self.layers[0][0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1][0].shape[0]

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def layer_dims(self) -> tuple[int, ...]:
        """Neuron counts per layer (excluding the input)."""
        return tuple(W.shape[0] for W, _ in self.layers)

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return len(self.layers) == len(other.layers) and all(
            np.array_equal(Wa, Wb) and np.array_equal(ba, bb)
            for (Wa, ba), (Wb, bb) in zip(self.layers, other.layers)
        )


@dataclass(frozen=True)
class ActivationTrace:
    """Per-layer preactivations and postactivations from one forward pass."""

    preactivations: tuple[np.ndarray, ...]
    postactivations: tuple[np.ndarray, ...]

    @property
    def output(self) -> np.ndarray:
        return self.postactivations[-1]


def forward(net: Network, x) -> ActivationTrace:
    """Evaluate the network at ``x``, recording every layer's activations.

    Pure function: raises on dimension mismatch or non-finite input.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (net.input_dim,):
        raise ValueError(f"input has shape {x.shape}, expected ({net.input_dim},)")
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains non-finite entries")
    pre, post = [], []
    h = x
    for W, b in net.layers:
        z_hat = W @ h + b
        h = np.maximum(z_hat, 0.0)
        pre.append(z_hat)
        post.append(h)
    return ActivationTrace(tuple(pre), tuple(post))


def save_network(net: Network) -> bytes:
    """Serialize to the JSON layer list format (round-trips bit-exactly)."""
    doc = {
        "layers": [
            {"weight": W.tolist(), "bias": b.tolist()} for W, b in net.layers
        ]
    }
    return json.dumps(doc, indent=1).encode("utf-8")


def _reject_constant(token: str):
    raise NetworkFormatError(f"non-finite token {token!r} in network document")


def load_network(data: bytes | str) -> Network:
    """Parse the JSON layer list format; rejects NaN/Infinity tokens."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "layers" not in doc:
        raise NetworkFormatError("document must be an object with a 'layers' list")
    layers = doc["layers"]
    if not isinstance(layers, list) or not layers:
        raise NetworkFormatError("'layers' must be a non-empty list")
    parsed = []
    for k, layer in enumerate(layers):
        if not isinstance(layer, dict) or "weight" not in layer or "bias" not in layer:
            raise NetworkFormatError(f"layer {k} must have 'weight' and 'bias'")
        parsed.append((layer["weight"], layer["bias"]))
    return Network(tuple(parsed))
