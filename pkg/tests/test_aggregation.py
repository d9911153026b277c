import numpy as np
import pytest

from gossipshift import nn
from gossipshift.aggregation import (
    check_compatible,
    classifier_scope,
    fedavg,
    suffix_scope,
)
from gossipshift.errors import AggregationError, ConfigError

from helpers import models_equal, random_model


def full_range(model):
    return range(0, model.num_layers)


class TestFedavg:
    def setup_method(self):
        rng = np.random.default_rng(0)
        self.models = [random_model(rng, [3, 5, 5, 4], split_index=2) for _ in range(4)]

    def test_two_equal_weights_give_plain_mean(self):
        a, b = self.models[0], self.models[1]
        out = fedavg(a, [(0, a, 1.0), (1, b, 1.0)], full_range(a))
        for i in full_range(a):
            expected = (a.layers[i].weights + b.layers[i].weights) / 2
            assert np.allclose(out.layers[i].weights, expected, atol=1e-15)

    def test_single_contributor_is_identity(self):
        a = self.models[0]
        out = fedavg(a, [(0, a, 3.0)], full_range(a))
        assert models_equal(out, a)

    def test_matches_explicit_weighted_sum_oracle(self):
        rng = np.random.default_rng(1)
        weights = [2.0, 5.0, 1.0, 3.5]
        contributors = list(zip(range(4), self.models, weights))
        out = fedavg(self.models[0], contributors, full_range(self.models[0]))
        total = sum(weights)
        for i in full_range(self.models[0]):
            expected = sum(
                (w / total) * m.layers[i].weights for m, w in zip(self.models, weights)
            )
            assert np.allclose(out.layers[i].weights, expected, atol=1e-12)
            expected_b = sum(
                (w / total) * m.layers[i].biases for m, w in zip(self.models, weights)
            )
            assert np.allclose(out.layers[i].biases, expected_b, atol=1e-12)

    def test_scoped_average_leaves_other_layers_bit_exact(self):
        a, b = self.models[0], self.models[1]
        scope = range(2, 3)
        out = fedavg(a, [(0, a, 1.0), (1, b, 1.0)], scope)
        assert models_equal(out, a, range(0, 2))
        assert not models_equal(out, a, scope)

    def test_average_is_convex_combination(self):
        # every output parameter lies within the contributors' min/max
        contributors = [(i, m, 1.0 + i) for i, m in enumerate(self.models)]
        out = fedavg(self.models[0], contributors, full_range(self.models[0]))
        for i in full_range(self.models[0]):
            stack = np.stack([m.layers[i].weights for m in self.models])
            assert np.all(out.layers[i].weights >= stack.min(axis=0) - 1e-12)
            assert np.all(out.layers[i].weights <= stack.max(axis=0) + 1e-12)

    def test_contributor_order_is_bit_irrelevant(self):
        contributors = [(i, m, float(i + 1)) for i, m in enumerate(self.models)]
        out1 = fedavg(self.models[0], contributors, full_range(self.models[0]))
        out2 = fedavg(self.models[0], contributors[::-1], full_range(self.models[0]))
        for a, b in zip(out1.layers, out2.layers):
            assert np.array_equal(a.weights, b.weights)
            assert np.array_equal(a.biases, b.biases)

    def test_weight_scaling_invariance(self):
        contributors = [(i, m, w) for i, (m, w) in
                        enumerate(zip(self.models, [1.0, 2.0, 3.0, 4.0]))]
        scaled = [(i, m, 10 * w) for i, m, w in contributors]
        out1 = fedavg(self.models[0], contributors, full_range(self.models[0]))
        out2 = fedavg(self.models[0], scaled, full_range(self.models[0]))
        for a, b in zip(out1.layers, out2.layers):
            assert np.allclose(a.weights, b.weights, atol=1e-15)

    def test_empty_contributors_rejected(self):
        with pytest.raises(AggregationError):
            fedavg(self.models[0], [], full_range(self.models[0]))

    def test_nonpositive_weight_sum_rejected(self):
        with pytest.raises(AggregationError):
            fedavg(self.models[0], [(0, self.models[0], 0.0)],
                   full_range(self.models[0]))

    def test_incompatible_shapes_rejected(self):
        other = random_model(np.random.default_rng(5), [3, 6, 6, 4], split_index=2)
        with pytest.raises(AggregationError):
            fedavg(self.models[0], [(0, self.models[0], 1.0), (1, other, 1.0)],
                   full_range(self.models[0]))

    def test_layer_count_mismatch_rejected(self):
        other = random_model(np.random.default_rng(5), [3, 5, 4], split_index=1)
        with pytest.raises(AggregationError):
            check_compatible(self.models[0], other)


class TestScopes:
    def setup_method(self):
        self.model = random_model(
            np.random.default_rng(0), [16, 32, 32, 16, 16, 8], split_index=2
        )

    def test_suffix_scope_counts_from_the_end(self):
        assert suffix_scope(self.model, 1) == range(4, 5)
        assert suffix_scope(self.model, 3) == range(2, 5)
        assert suffix_scope(self.model, 4) == range(1, 5)

    def test_suffix_scope_bounds(self):
        with pytest.raises(ConfigError):
            suffix_scope(self.model, 0)
        with pytest.raises(ConfigError):
            suffix_scope(self.model, 5)

    def test_classifier_scope_defaults_to_split(self):
        assert classifier_scope(self.model) == range(2, 5)

    def test_explicit_depth_overrides_split(self):
        assert classifier_scope(self.model, 2) == range(3, 5)
        assert classifier_scope(self.model, 3) == range(2, 5)

    def test_depth_scoped_fedavg_never_touches_prefix_bits(self):
        rng = np.random.default_rng(7)
        other = random_model(rng, [16, 32, 32, 16, 16, 8], split_index=2)
        for depth in range(1, 5):
            scope = suffix_scope(self.model, depth)
            out = fedavg(self.model, [(0, self.model, 1.0), (1, other, 1.0)], scope)
            assert models_equal(out, self.model, range(0, 5 - depth))
