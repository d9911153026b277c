import numpy as np
import pytest

from gossipshift import nn
from gossipshift.data import (
    COVARIATE_ROTATION,
    LABEL_SWAP,
    BlobUniverse,
    ConceptSpec,
    sample_concept_dataset,
)
from gossipshift.errors import ConfigError
from gossipshift.netsim import Network
from gossipshift.protocols import (
    DAC,
    HAST,
    RANDOM,
    ROUND_FNS,
    ClientState,
    ProtocolConfig,
    apply_concept_change,
    dac_round,
    hast_round,
    local_train,
    random_round,
)
from gossipshift.similarity import SimilarityBelief, sample_peers, uniform_distribution

from helpers import models_equal

DIMS = [6, 10, 10, 8, 8, 4]
SPLIT = 2


def make_dataset(universe, concept, seed):
    return sample_concept_dataset(universe, concept, (40, 10, 40), seed)


def build_clients(num_clients, seed=0, concept=None):
    universe = BlobUniverse(4, 6, 3.0, seed=seed)
    concept = concept or ConceptSpec(concept_id=0, kind=COVARIATE_ROTATION)
    states = {}
    for k in range(num_clients):
        states[k] = ClientState(
            id=k,
            model=nn.init_model(DIMS, SPLIT, np.random.default_rng([seed, 1, k])),
            dataset=make_dataset(universe, concept, [seed, 2, k]),
            belief=SimilarityBelief(owner=k),
            rng=np.random.default_rng([seed, 4, k]),
        )
    net = Network()
    net.train_sizes = {k: 40 for k in states}
    return states, net, universe


def run_one_round(states, net, cfg, round_idx=0):
    ids = sorted(states)
    net.start_round(round_idx, {k: states[k].model for k in ids})
    for k in ids:
        states[k] = ROUND_FNS[cfg.protocol](states[k], net, cfg, ids)
        net.stage(k, states[k].model)
    net.commit()
    return states


class TestConfigValidation:
    def test_defaults_are_valid(self):
        ProtocolConfig().validate(num_clients=20, model_layers=5)

    def test_budget_exceeding_peer_count_rejected(self):
        with pytest.raises(ConfigError, match="2n"):
            ProtocolConfig(n=3).validate(num_clients=6, model_layers=5)

    def test_unknown_protocol_rejected(self):
        with pytest.raises(ConfigError):
            ProtocolConfig(protocol="push_sum").validate(20, 5)

    def test_depth_out_of_range_rejected(self):
        with pytest.raises(ConfigError):
            ProtocolConfig(depth=5).validate(20, 5)
        with pytest.raises(ConfigError):
            ProtocolConfig(depth=0).validate(20, 5)

    def test_nonpositive_lr_tau_rejected(self):
        with pytest.raises(ConfigError):
            ProtocolConfig(lr=0.0).validate(20, 5)
        with pytest.raises(ConfigError):
            ProtocolConfig(tau=-1.0).validate(20, 5)

    def test_zero_epochs_allowed_negative_rejected(self):
        ProtocolConfig(local_epochs=0, finetune_epochs=0).validate(20, 5)
        with pytest.raises(ConfigError):
            ProtocolConfig(local_epochs=-1).validate(20, 5)


class TestLocalTrain:
    def test_zero_epochs_is_identity(self):
        states, _, _ = build_clients(1)
        st = states[0]
        cfg = ProtocolConfig()
        model, loss = local_train(st.model, st.dataset.train, cfg, st.rng, 0,
                                  nn.ALL_LAYERS)
        assert models_equal(model, st.model)
        assert np.isnan(loss)

    def test_training_reduces_loss(self):
        states, _, _ = build_clients(1)
        st = states[0]
        cfg = ProtocolConfig(lr=0.1, batch_size=8)
        before, _ = nn.loss_and_accuracy(st.model, st.dataset.train)
        model = st.model
        for _ in range(20):
            model, _ = local_train(model, st.dataset.train, cfg, st.rng, 1,
                                   nn.ALL_LAYERS)
        after, _ = nn.loss_and_accuracy(model, st.dataset.train)
        assert after < before

    def test_classifier_scope_freezes_feature_extractor(self):
        states, _, _ = build_clients(1)
        st = states[0]
        cfg = ProtocolConfig()
        model, _ = local_train(st.model, st.dataset.train, cfg, st.rng, 3,
                               nn.CLASSIFIER_ONLY)
        assert models_equal(model, st.model, range(0, SPLIT))
        assert not models_equal(model, st.model, range(SPLIT, len(DIMS) - 1))


class TestBudgetParity:
    @pytest.mark.parametrize("protocol", [RANDOM, DAC, HAST])
    def test_every_protocol_contacts_2n_peers(self, protocol):
        states, net, _ = build_clients(8)
        cfg = ProtocolConfig(protocol=protocol, n=3)
        run_one_round(states, net, cfg)
        for k in states:
            msgs, params = net.log.round_cost(0, k)
            assert msgs == 6
            assert params > 0

    def test_partial_payloads_make_hast_cheaper_than_dac(self):
        states_h, net_h, _ = build_clients(8)
        states_d, net_d, _ = build_clients(8)
        run_one_round(states_h, net_h, ProtocolConfig(protocol=HAST))
        run_one_round(states_d, net_d, ProtocolConfig(protocol=DAC))
        params_h = net_h.log.round_cost(0, 0)[1]
        params_d = net_d.log.round_cost(0, 0)[1]
        assert params_h < params_d


class TestHastRound:
    def test_stage2_never_touches_feature_extractor_bits(self):
        # with all training disabled the returned model's feature extractor
        # must equal the stage-1 uniform average exactly: stage 2 merges only
        # the suffix(depth) layers
        states, net, _ = build_clients(8, seed=3)
        cfg = ProtocolConfig(protocol=HAST, local_epochs=0, finetune_epochs=0)
        ids = sorted(states)
        # replay client 0's stage-1 peer draw with an identical rng stream
        rng_replay = np.random.default_rng([3, 4, 0])
        expected_peers = sample_peers(uniform_distribution(0, ids), cfg.n, rng_replay)
        snapshot = {k: states[k].model for k in ids}

        net.start_round(0, snapshot)
        out = hast_round(states[0], net, cfg, ids)

        total = 40.0 * (1 + cfg.n)
        for li in range(SPLIT):
            expected_w = (40.0 / total) * snapshot[0].layers[li].weights
            for p in expected_peers:
                expected_w = expected_w + (40.0 / total) * snapshot[p].layers[li].weights
            assert np.array_equal(out.model.layers[li].weights, expected_w) or \
                np.allclose(out.model.layers[li].weights, expected_w, atol=1e-15)

    def test_beliefs_updated_for_both_stages(self):
        states, net, _ = build_clients(8)
        cfg = ProtocolConfig(protocol=HAST)
        run_one_round(states, net, cfg)
        for k in states:
            contacted = {r.responder for r in net.log.records if r.requester == k}
            assert set(states[k].belief.scores) == contacted
            assert all(v > 0 for v in states[k].belief.scores.values())

    def test_stage2_disjoint_flag_avoids_stage1_peers(self):
        states, net, _ = build_clients(8, seed=5)
        cfg = ProtocolConfig(protocol=HAST, stage2_disjoint=True)
        run_one_round(states, net, cfg)
        for k in states:
            full = [r.responder for r in net.log.records
                    if r.requester == k and r.kind == "full_model"]
            partial = [r.responder for r in net.log.records
                       if r.requester == k and r.kind == "classifier_only"]
            assert not set(full) & set(partial)


class TestRoundFunctions:
    def test_random_round_leaves_beliefs_empty(self):
        states, net, _ = build_clients(8)
        run_one_round(states, net, ProtocolConfig(protocol=RANDOM))
        assert all(not states[k].belief.scores for k in states)

    def test_dac_round_scores_all_contacted_peers(self):
        states, net, _ = build_clients(8)
        run_one_round(states, net, ProtocolConfig(protocol=DAC))
        for k in states:
            assert len(states[k].belief.scores) >= 1

    def test_pure_averaging_reaches_consensus_in_one_round(self):
        # n=1 over 3 clients: everyone averages all three equally-weighted
        # models, so one round collapses to the global mean (oracle below)
        states, net, _ = build_clients(3)
        initial = {k: states[k].model for k in states}
        cfg = ProtocolConfig(protocol=RANDOM, n=1, local_epochs=0,
                             finetune_epochs=0)
        run_one_round(states, net, cfg)
        for li in range(len(DIMS) - 1):
            mean_w = np.mean([initial[k].layers[li].weights for k in initial], axis=0)
            for k in states:
                assert np.allclose(states[k].model.layers[li].weights, mean_w,
                                   atol=1e-12)
        for a, b in [(0, 1), (1, 2)]:
            assert all(np.allclose(states[a].model.layers[i].weights,
                                   states[b].model.layers[i].weights, atol=1e-15)
                       for i in range(len(DIMS) - 1))

    @pytest.mark.parametrize("protocol", [RANDOM, DAC, HAST])
    def test_rounds_are_bit_deterministic(self, protocol):
        results = []
        for _ in range(2):
            states, net, _ = build_clients(8, seed=11)
            cfg = ProtocolConfig(protocol=protocol)
            for r in range(3):
                run_one_round(states, net, cfg, round_idx=r)
            results.append(states)
        a, b = results
        for k in a:
            assert models_equal(a[k].model, b[k].model)
            assert a[k].belief.scores == b[k].belief.scores

    def test_finetune_flag_changes_classifier_only(self):
        cfg_on = ProtocolConfig(protocol=RANDOM, finetune_enabled=True)
        cfg_off = ProtocolConfig(protocol=RANDOM, finetune_enabled=False)
        out = {}
        for name, cfg in (("on", cfg_on), ("off", cfg_off)):
            states, net, _ = build_clients(8, seed=2)
            run_one_round(states, net, cfg)
            out[name] = states[0].model
        assert models_equal(out["on"], out["off"], range(0, SPLIT))
        assert not models_equal(out["on"], out["off"], range(SPLIT, len(DIMS) - 1))


class TestConceptChange:
    def test_model_and_beliefs_survive_a_dataset_swap(self):
        states, net, universe = build_clients(8)
        run_one_round(states, net, ProtocolConfig(protocol=DAC))
        st = states[0]
        model_before = st.model
        beliefs_before = dict(st.belief.scores)
        new_concept = ConceptSpec(concept_id=1, kind=COVARIATE_ROTATION,
                                  angle=np.pi / 2)
        new_ds = make_dataset(universe, new_concept, [0, 2, 0, 1])
        apply_concept_change(st, new_ds)
        assert st.model is model_before
        assert st.belief.scores == beliefs_before
        assert st.dataset.concept_id == 1

    def test_label_swap_concept_degrades_a_base_trained_model(self):
        universe = BlobUniverse(4, 6, 5.0, seed=9)
        base = ConceptSpec(concept_id=0, kind=COVARIATE_ROTATION)
        swapped = ConceptSpec(concept_id=1, kind=LABEL_SWAP, swap_pair=(0, 3),
                              base_concept_id=0)
        ds_base = sample_concept_dataset(universe, base, (200, 10, 200), seed=1)
        ds_swap = sample_concept_dataset(universe, swapped, (200, 10, 200), seed=1)
        model = nn.init_model(DIMS, SPLIT, np.random.default_rng(0))
        cfg = ProtocolConfig(lr=0.1, batch_size=32)
        rng = np.random.default_rng(1)
        for _ in range(40):
            model, _ = local_train(model, ds_base.train, cfg, rng, 1, nn.ALL_LAYERS)
        _, acc_base = nn.loss_and_accuracy(model, ds_base.test)
        _, acc_swap = nn.loss_and_accuracy(model, ds_swap.test)
        assert acc_base > 0.9
        assert acc_swap < acc_base - 0.3
