"""Shared test utilities: model/batch factories and independent oracles."""

import numpy as np

from gossipshift import nn


def random_model(rng, dims=None, split_index=1, final_activation=nn.IDENTITY):
    dims = dims or [4, 8, 3]
    return nn.init_model(dims, split_index, rng, final_activation)


def random_batch(rng, n, in_dim, num_classes):
    return nn.Batch(
        rng.normal(size=(n, in_dim)),
        rng.integers(num_classes, size=n),
    )


def brute_force_forward(model, inputs):
    """Plain matrix arithmetic, independent of the library forward pass."""
    x = np.asarray(inputs, dtype=float)
    for layer in model.layers:
        z = np.zeros((x.shape[0], layer.out_dim))
        for r in range(x.shape[0]):
            for o in range(layer.out_dim):
                acc = layer.biases[o]
                for i in range(layer.in_dim):
                    acc += layer.weights[o, i] * x[r, i]
                z[r, o] = acc
        x = np.where(z > 0, z, 0.0) if layer.activation == nn.RELU else z
    return x


def brute_force_loss(model, batch):
    """Direct softmax + negative log formula."""
    logits = brute_force_forward(model, batch.inputs)
    total = 0.0
    for r, label in enumerate(batch.labels):
        row = logits[r] - logits[r].max()
        p = np.exp(row) / np.exp(row).sum()
        total += -np.log(p[label])
    return total / len(batch.labels)


def _relu_pattern(model, inputs):
    """Which relu units are active; central differences are only valid for a
    perturbation that does not flip any unit (the loss is non-differentiable
    at a relu kink)."""
    x = np.asarray(inputs, dtype=float)
    pattern = []
    for layer in model.layers:
        z = x @ layer.weights.T + layer.biases
        if layer.activation == nn.RELU:
            pattern.append(z > 0)
            x = np.maximum(z, 0.0)
        else:
            x = z
    return pattern


def finite_difference_grads(model, batch, h=1e-4):
    """Central finite differences of the mean cross-entropy, per parameter.

    Returns (weight_grads, bias_grads, weight_valid, bias_valid) where the
    valid masks exclude perturbations that cross a relu kink.
    """

    def probe(m):
        loss = nn.loss_and_accuracy(m, batch)[0]
        return loss, _relu_pattern(m, batch.inputs)

    def fd(li, weights, biases, put):
        plus, minus = put(h), put(-h)
        lp, pat_p = probe(_with_layer(model, li, *plus))
        lm, pat_m = probe(_with_layer(model, li, *minus))
        same = all(np.array_equal(a, b) for a, b in zip(pat_p, pat_m))
        return (lp - lm) / (2 * h), same

    w_grads, b_grads, w_valid, b_valid = [], [], [], []
    for li, layer in enumerate(model.layers):
        wg = np.zeros_like(layer.weights)
        wv = np.ones(layer.weights.shape, dtype=bool)
        for idx in np.ndindex(layer.weights.shape):
            def put(delta, idx=idx):
                w = layer.weights.copy()
                w[idx] += delta
                return w, layer.biases
            wg[idx], wv[idx] = fd(li, layer.weights, layer.biases, put)
        bg = np.zeros_like(layer.biases)
        bv = np.ones(layer.biases.shape, dtype=bool)
        for idx in range(layer.biases.shape[0]):
            def put(delta, idx=idx):
                b = layer.biases.copy()
                b[idx] += delta
                return layer.weights, b
            bg[idx], bv[idx] = fd(li, layer.weights, layer.biases, put)
        w_grads.append(wg)
        b_grads.append(bg)
        w_valid.append(wv)
        b_valid.append(bv)
    return w_grads, b_grads, w_valid, b_valid


def _with_layer(model, li, weights, biases):
    layers = list(model.layers)
    layers[li] = nn.DenseLayer(weights, biases, layers[li].activation)
    return nn.LayeredModel(tuple(layers), model.split_index)


def max_grad_rel_error(model, batch, h=1e-4):
    """Max relative error between analytic and finite-difference gradients."""
    analytic = nn.backward(model, batch)
    fd_w, fd_b, valid_w, valid_b = finite_difference_grads(model, batch, h)
    worst = 0.0
    for a, f, v in list(zip(analytic.weight_grads, fd_w, valid_w)) + list(
        zip(analytic.bias_grads, fd_b, valid_b)
    ):
        denom = np.maximum(np.abs(f), 1e-3)
        rel = np.abs(a - f) / denom
        if np.any(v):
            worst = max(worst, float(np.max(rel[v])))
    return worst


def models_equal(a, b, layer_range=None):
    rng_ = layer_range if layer_range is not None else range(a.num_layers)
    return all(
        np.array_equal(a.layers[i].weights, b.layers[i].weights)
        and np.array_equal(a.layers[i].biases, b.layers[i].biases)
        for i in rng_
    )
