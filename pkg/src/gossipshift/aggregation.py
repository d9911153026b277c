"""Federated-averaging primitives: full-model and depth-limited suffix
averaging."""

from __future__ import annotations

import logging

import numpy as np

from .errors import AggregationError, ConfigError
from .nn import DenseLayer, LayeredModel

log = logging.getLogger(__name__)


def check_compatible(a: LayeredModel, b: LayeredModel):
    if a.num_layers != b.num_layers or a.split_index != b.split_index:
        raise AggregationError("models differ in layer count or split index")
    for i, (la, lb) in enumerate(zip(a.layers, b.layers)):
        if la.weights.shape != lb.weights.shape:
            raise AggregationError(
                f"layer {i}: weight shapes {la.weights.shape} vs {lb.weights.shape}"
            )


def fedavg(recipient: LayeredModel, contributors, layer_range: range) -> LayeredModel:
    """Weighted parameter average over the layers in layer_range.

    contributors: list of (client_id, model, weight), weight > 0. Weights are
    normalized to sum 1; summation runs in ascending client id for
    bit-reproducibility. Layers outside the range are taken bit-exact from
    the recipient.
    """
    if not contributors:
        raise AggregationError("fedavg needs at least one contributor")
    ordered = sorted(contributors, key=lambda c: c[0])
    total = sum(w for _, _, w in ordered)
    if total <= 0:
        raise AggregationError("contributor weights must be positive")
    for _, model, _ in ordered:
        check_compatible(recipient, model)

    new_layers = list(recipient.layers)
    for i in layer_range:
        w_sum = np.zeros_like(recipient.layers[i].weights)
        b_sum = np.zeros_like(recipient.layers[i].biases)
        for _, model, weight in ordered:
            frac = weight / total
            w_sum += frac * model.layers[i].weights
            b_sum += frac * model.layers[i].biases
        new_layers[i] = DenseLayer(w_sum, b_sum, recipient.layers[i].activation)
    return LayeredModel(tuple(new_layers), recipient.split_index)


def suffix_scope(model: LayeredModel, depth: int) -> range:
    """The last `depth` layers; depth 1 is the output layer only and
    num_layers - 1 is everything except the first layer."""
    if not 1 <= depth <= model.num_layers - 1:
        raise ConfigError(
            f"aggregation depth {depth} outside [1, {model.num_layers - 1}]"
        )
    return range(model.num_layers - depth, model.num_layers)


def classifier_scope(model: LayeredModel, depth: int | None = None) -> range:
    """Classifier layers [split_index, num_layers). When an explicit depth is
    given and disagrees with the split, the depth wins (logged)."""
    split_range = range(model.split_index, model.num_layers)
    if depth is None:
        return split_range
    depth_range = suffix_scope(model, depth)
    if depth_range != split_range:
        log.info(
            "aggregation depth %d overrides classifier split (layers %s instead of %s)",
            depth, list(depth_range), list(split_range),
        )
    return depth_range
