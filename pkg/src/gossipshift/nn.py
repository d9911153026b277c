"""Minimal dense feed-forward network engine with explicit backprop.

Models are treated as immutable values: forward/backward are pure functions
and updates return new LayeredModel instances. Layers are addressable by
index so the aggregation code can average arbitrary layer ranges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError

RELU = "relu"
IDENTITY = "identity"

ALL_LAYERS = "all_layers"
CLASSIFIER_ONLY = "classifier_only"

# Cross-entropy values below this are clamped before any downstream reciprocal.
LOSS_FLOOR = 1e-8


@dataclass(frozen=True)
class DenseLayer:
    weights: np.ndarray  # (out_dim, in_dim)
    biases: np.ndarray  # (out_dim,)
    activation: str = RELU

    def __post_init__(self):
        if self.weights.ndim != 2 or self.biases.ndim != 1:
            raise ShapeError("weights must be 2-d and biases 1-d")
        if self.weights.shape[0] != self.biases.shape[0]:
            raise ShapeError(
                f"bias length {self.biases.shape[0]} != out_dim {self.weights.shape[0]}"
            )
        if self.activation not in (RELU, IDENTITY):
            raise ConfigError(f"unknown activation {self.activation!r}")
        if not (np.isfinite(self.weights).all() and np.isfinite(self.biases).all()):
            raise ShapeError("layer parameters must be finite")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def param_count(self) -> int:
        return self.weights.size + self.biases.size


@dataclass(frozen=True)
class LayeredModel:
    """Ordered dense layers; layers[:split_index] form the feature extractor,
    layers[split_index:] the classifier."""

    layers: tuple[DenseLayer, ...]
    split_index: int

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not 0 < self.split_index < len(self.layers):
            raise ConfigError(
                f"split_index {self.split_index} out of range for {len(self.layers)} layers"
            )
        for i in range(len(self.layers) - 1):
            if self.layers[i].out_dim != self.layers[i + 1].in_dim:
                raise ShapeError(
                    f"layer {i} out_dim {self.layers[i].out_dim} != "
                    f"layer {i + 1} in_dim {self.layers[i + 1].in_dim}"
                )

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def num_classes(self) -> int:
        return self.layers[-1].out_dim

    @property
    def param_count(self) -> int:
        return sum(l.param_count for l in self.layers)

    def param_count_range(self, layer_range: range) -> int:
        return sum(self.layers[i].param_count for i in layer_range)


@dataclass(frozen=True)
class Batch:
    inputs: np.ndarray  # (batch, in_dim)
    labels: np.ndarray  # (batch,) int class ids

    def __post_init__(self):
        if self.inputs.ndim != 2:
            raise ShapeError("batch inputs must be 2-d")
        if len(self.inputs) != len(self.labels):
            raise ShapeError("inputs and labels disagree on batch size")
        if len(self.labels) == 0:
            raise ShapeError("empty batch")

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class GradientSet:
    """Per-layer (weight_grad, bias_grad) pairs mirroring a LayeredModel."""

    weight_grads: tuple[np.ndarray, ...]
    bias_grads: tuple[np.ndarray, ...]


def init_model(layer_dims, split_index, rng, final_activation=IDENTITY) -> LayeredModel:
    """Build a model from a dims chain [d0, d1, ..., dL], fan-based uniform init.

    Weights ~ U(-a, a) with a = sqrt(6 / (in + out)); biases zero. Hidden
    layers use relu, the final layer `final_activation`.
    """
    layers = []
    n = len(layer_dims) - 1
    for i in range(n):
        d_in, d_out = layer_dims[i], layer_dims[i + 1]
        a = np.sqrt(6.0 / (d_in + d_out))
        w = rng.uniform(-a, a, size=(d_out, d_in))
        act = final_activation if i == n - 1 else RELU
        layers.append(DenseLayer(w, np.zeros(d_out), act))
    return LayeredModel(tuple(layers), split_index)


def _apply_layer(layer: DenseLayer, x: np.ndarray) -> np.ndarray:
    z = x @ layer.weights.T + layer.biases
    if layer.activation == RELU:
        return np.maximum(z, 0.0)
    return z


def forward(model: LayeredModel, inputs: np.ndarray) -> np.ndarray:
    """Evaluate the network, returning logits of shape (batch, num_classes)."""
    if inputs.ndim != 2 or inputs.shape[1] != model.in_dim:
        raise ShapeError(
            f"inputs of shape {inputs.shape} incompatible with in_dim {model.in_dim}"
        )
    x = inputs
    for layer in model.layers:
        x = _apply_layer(layer, x)
    return x


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def loss_and_accuracy(model: LayeredModel, batch: Batch) -> tuple[float, float]:
    """Mean cross-entropy (stable log-softmax) and argmax accuracy.

    Argmax ties break toward the lowest class index.
    """
    logits = forward(model, batch.inputs)
    logp = log_softmax(logits)
    n = len(batch)
    loss = -logp[np.arange(n), batch.labels].mean()
    acc = float((np.argmax(logits, axis=1) == batch.labels).mean())
    return float(loss), acc


def backward(model: LayeredModel, batch: Batch) -> GradientSet:
    """Mean-over-batch gradients of the cross-entropy loss."""
    # Forward pass keeping pre- and post-activation values.
    x = batch.inputs
    if x.ndim != 2 or x.shape[1] != model.in_dim:
        raise ShapeError(
            f"inputs of shape {x.shape} incompatible with in_dim {model.in_dim}"
        )
    activations = [x]  # inputs to each layer
    pre_acts = []
    for layer in model.layers:
        z = x @ layer.weights.T + layer.biases
        pre_acts.append(z)
        x = np.maximum(z, 0.0) if layer.activation == RELU else z
        activations.append(x)

    n = len(batch)
    logits = activations[-1]
    probs = np.exp(log_softmax(logits))
    delta = probs
    delta[np.arange(n), batch.labels] -= 1.0
    delta /= n  # d(mean loss)/d(logits)

    w_grads = [None] * model.num_layers
    b_grads = [None] * model.num_layers
    for i in range(model.num_layers - 1, -1, -1):
        layer = model.layers[i]
        if layer.activation == RELU:
            delta = delta * (pre_acts[i] > 0)
        w_grads[i] = delta.T @ activations[i]
        b_grads[i] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ layer.weights
    return GradientSet(tuple(w_grads), tuple(b_grads))


def sgd_step(model: LayeredModel, grads: GradientSet, lr: float, scope: str = ALL_LAYERS) -> LayeredModel:
    """One plain SGD step. classifier_only leaves layers before split_index
    bit-identical (the layer objects are reused)."""
    if lr <= 0:
        raise ConfigError(f"learning rate must be positive, got {lr}")
    if scope not in (ALL_LAYERS, CLASSIFIER_ONLY):
        raise ConfigError(f"unknown update scope {scope!r}")
    start = 0 if scope == ALL_LAYERS else model.split_index
    new_layers = list(model.layers)
    for i in range(start, model.num_layers):
        layer = model.layers[i]
        new_layers[i] = DenseLayer(
            layer.weights - lr * grads.weight_grads[i],
            layer.biases - lr * grads.bias_grads[i],
            layer.activation,
        )
    return LayeredModel(tuple(new_layers), model.split_index)


def get_layer_params(model: LayeredModel, layer_range: range) -> list[np.ndarray]:
    """Flat parameter block per layer in the range (weights then biases)."""
    _check_range(model, layer_range)
    return [
        np.concatenate([model.layers[i].weights.ravel(), model.layers[i].biases])
        for i in layer_range
    ]


def set_layer_params(model: LayeredModel, layer_range: range, blocks) -> LayeredModel:
    """Replace the parameters of the layers in the range from flat blocks."""
    _check_range(model, layer_range)
    if len(blocks) != len(layer_range):
        raise ShapeError(f"expected {len(layer_range)} blocks, got {len(blocks)}")
    new_layers = list(model.layers)
    for i, block in zip(layer_range, blocks):
        layer = model.layers[i]
        if block.shape != (layer.param_count,):
            raise ShapeError(
                f"layer {i} expects a flat block of {layer.param_count} values"
            )
        w = block[: layer.weights.size].reshape(layer.weights.shape)
        b = block[layer.weights.size:]
        new_layers[i] = DenseLayer(w.copy(), b.copy(), layer.activation)
    return LayeredModel(tuple(new_layers), model.split_index)


def _check_range(model: LayeredModel, layer_range: range):
    if len(layer_range) == 0:
        return
    if layer_range.start < 0 or layer_range.stop > model.num_layers or layer_range.step != 1:
        raise ShapeError(
            f"layer range {layer_range} out of bounds for {model.num_layers} layers"
        )
