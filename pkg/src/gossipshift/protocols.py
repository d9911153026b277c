"""Per-round client state machines for the three protocols.

Each *_round function consumes the pre-round snapshots held by the Network
and returns the client's next state; the orchestrator commits all staged
models at the round barrier.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from .aggregation import classifier_scope, fedavg
from .data import ClientDataset
from .errors import ConfigError
from .nn import Batch, LayeredModel
from .similarity import (
    SimilarityBelief,
    sample_peers,
    softmax_distribution,
    uniform_distribution,
)

RANDOM = "random"
DAC = "dac"
HAST = "hast"
PROTOCOLS = (RANDOM, DAC, HAST)


@dataclass(frozen=True)
class ProtocolConfig:
    protocol: str = HAST
    n: int = 3  # peers per sampling stage; every protocol contacts 2n per round
    tau: float = 0.1
    depth: int = 3  # trailing layers merged in the similarity stage
    local_epochs: int = 1
    finetune_epochs: int = 1
    lr: float = 0.1
    batch_size: int = 32
    finetune_enabled: bool = True
    stage2_include_self: bool = True
    stage2_disjoint: bool = False  # forbid stage-2 re-picking a stage-1 peer

    def validate(self, num_clients: int, model_layers: int):
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"unknown protocol {self.protocol!r}")
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if 2 * self.n > num_clients - 1:
            raise ConfigError(
                f"budget 2n={2 * self.n} exceeds peer count {num_clients - 1}"
            )
        if not 1 <= self.depth <= model_layers - 1:
            raise ConfigError(
                f"depth {self.depth} outside [1, {model_layers - 1}]"
            )
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        if self.tau <= 0:
            raise ConfigError("tau must be positive")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        # zero epochs = skip that training phase (pure-averaging experiments)
        if self.local_epochs < 0 or self.finetune_epochs < 0:
            raise ConfigError("epoch counts cannot be negative")


@dataclass
class ClientState:
    id: int
    model: LayeredModel
    dataset: ClientDataset
    belief: SimilarityBelief
    rng: np.random.Generator
    last_train_loss: float = float("nan")


def local_train(model, batch: Batch, cfg: ProtocolConfig, rng, epochs: int, scope: str):
    """Minibatch SGD over shuffled passes of the batch; returns the updated
    model and the mean minibatch loss of the last epoch."""
    n = len(batch)
    mean_loss = float("nan")
    for _ in range(epochs):
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            mb = Batch(batch.inputs[idx], batch.labels[idx])
            loss, _ = nn.loss_and_accuracy(model, mb)
            grads = nn.backward(model, mb)
            model = nn.sgd_step(model, grads, cfg.lr, scope)
            losses.append(loss)
        mean_loss = float(np.mean(losses))
    return model, mean_loss


def _train_weight(net, pid: int) -> float:
    sizes = getattr(net, "train_sizes", None)
    return float(sizes[pid]) if sizes else 1.0


def _avg_full(state: ClientState, net, fetched) -> LayeredModel:
    contributors = [(state.id, state.model, _train_weight(net, state.id))]
    contributors += [(pid, m, _train_weight(net, pid)) for pid, m in fetched]
    return fedavg(state.model, contributors, range(0, state.model.num_layers))


def _finish_local(state: ClientState, model, cfg: ProtocolConfig):
    model, train_loss = local_train(
        model, state.dataset.train, cfg, state.rng, cfg.local_epochs, nn.ALL_LAYERS
    )
    if cfg.finetune_enabled:
        model, _ = local_train(
            model, state.dataset.train, cfg, state.rng, cfg.finetune_epochs,
            nn.CLASSIFIER_ONLY,
        )
    state.model = model
    state.last_train_loss = train_loss
    return state


def hast_round(state: ClientState, net, cfg: ProtocolConfig, all_ids) -> ClientState:
    """Stage 1: uniform peers, full-model FedAvg. Stage 2: similarity peers,
    suffix(depth) FedAvg. Stage 3: local training plus classifier fine-tune.

    Every payload received in stages 1-2 also updates the similarity belief.
    """
    own_train = state.dataset.train

    # Stage 1: uniform sampling, merge all layers.
    uni = uniform_distribution(state.id, all_ids)
    peers_r = sample_peers(uni, cfg.n, state.rng)
    fetched = net.fetch_models(state.id, peers_r)
    for pid, peer_model in fetched:
        state.belief.update(pid, peer_model, own_train, net.round)
    model = _avg_full(state, net, fetched)

    # Stage 2: similarity sampling, merge only the trailing layers.
    candidates = [p for p in all_ids if p != state.id]
    if cfg.stage2_disjoint:
        candidates = [p for p in candidates if p not in peers_r]
    dist = softmax_distribution(state.belief, candidates, cfg.tau)
    peers_s = sample_peers(dist, cfg.n, state.rng)
    scope = classifier_scope(model, cfg.depth)
    fetched_blocks = net.fetch_blocks(
        state.id, peers_s, lambda m: classifier_scope(m, cfg.depth)
    )
    contributors = []
    if cfg.stage2_include_self:
        contributors.append((state.id, model, _train_weight(net, state.id)))
    for pid, peer_scope, blocks in fetched_blocks:
        # Compose the received suffix onto the local model, both for the
        # belief update and as a structurally complete fedavg contributor
        # (out-of-scope layers never enter the scoped average).
        composite = nn.set_layer_params(model, peer_scope, blocks)
        state.belief.update(pid, composite, own_train, net.round)
        contributors.append((pid, composite, _train_weight(net, pid)))
    model = fedavg(model, contributors, scope)

    # Stage 3: local training, then classifier fine-tuning.
    return _finish_local(state, model, cfg)


def dac_round(state: ClientState, net, cfg: ProtocolConfig, all_ids) -> ClientState:
    """Similarity-sampled gossip: 2n peers from the softmax, all layers merged."""
    candidates = [p for p in all_ids if p != state.id]
    dist = softmax_distribution(state.belief, candidates, cfg.tau)
    peers = sample_peers(dist, 2 * cfg.n, state.rng)
    fetched = net.fetch_models(state.id, peers)
    for pid, peer_model in fetched:
        state.belief.update(pid, peer_model, state.dataset.train, net.round)
    model = _avg_full(state, net, fetched)
    return _finish_local(state, model, cfg)


def random_round(state: ClientState, net, cfg: ProtocolConfig, all_ids) -> ClientState:
    """Plain gossip: 2n uniform peers, all layers merged; beliefs untouched."""
    uni = uniform_distribution(state.id, all_ids)
    peers = sample_peers(uni, 2 * cfg.n, state.rng)
    fetched = net.fetch_models(state.id, peers)
    model = _avg_full(state, net, fetched)
    return _finish_local(state, model, cfg)


ROUND_FNS = {RANDOM: random_round, DAC: dac_round, HAST: hast_round}


def apply_concept_change(state: ClientState, new_dataset: ClientDataset) -> ClientState:
    """Swap in the new concept's data; model and beliefs carry over."""
    state.dataset = new_dataset
    return state
