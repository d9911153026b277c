"""Similarity beliefs over peers and the two peer-sampling modes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, GossipShiftError
from .nn import LOSS_FLOOR, Batch, LayeredModel, loss_and_accuracy

SIMILARITY_CAP = 1.0 / LOSS_FLOOR


def similarity_from_loss(loss: float) -> float:
    """Reciprocal training loss, clamped so a perfect model stays finite."""
    if loss < 0:
        raise GossipShiftError(f"cross-entropy cannot be negative, got {loss}")
    return 1.0 / max(loss, LOSS_FLOOR)


@dataclass
class SimilarityBelief:
    """One client's raw similarity scores over its peers."""

    owner: int
    scores: dict[int, float] = field(default_factory=dict)
    last_observed_round: dict[int, int] = field(default_factory=dict)

    def update(self, peer_id: int, peer_model: LayeredModel, own_train: Batch, round_idx: int):
        """Score the peer by its model's loss on the owner's training data."""
        if peer_id == self.owner:
            raise GossipShiftError("a client does not score itself")
        loss, _ = loss_and_accuracy(peer_model, own_train)
        self.scores[peer_id] = similarity_from_loss(loss)
        self.last_observed_round[peer_id] = round_idx


@dataclass(frozen=True)
class SamplingDistribution:
    peer_ids: tuple[int, ...]
    probabilities: np.ndarray

    def __post_init__(self):
        if abs(self.probabilities.sum() - 1.0) > 1e-9:
            raise GossipShiftError("sampling probabilities must sum to 1")


def softmax_distribution(belief: SimilarityBelief, peer_ids, tau: float) -> SamplingDistribution:
    """Softmax over raw scores at temperature tau (max-subtracted).

    Peers never observed get the mean of observed scores, or a shared
    constant when nothing has been observed yet (-> uniform).
    """
    if tau <= 0:
        raise ConfigError(f"temperature must be positive, got {tau}")
    ids = tuple(sorted(p for p in peer_ids if p != belief.owner))
    if not ids:
        raise GossipShiftError("no peers to sample from")
    observed = [belief.scores[p] for p in ids if p in belief.scores]
    default = float(np.mean(observed)) if observed else 1.0
    raw = np.array([belief.scores.get(p, default) for p in ids])
    z = raw / tau
    z -= z.max()
    e = np.exp(z)
    return SamplingDistribution(ids, e / e.sum())


def uniform_distribution(owner: int, peer_ids) -> SamplingDistribution:
    ids = tuple(sorted(p for p in peer_ids if p != owner))
    if not ids:
        raise GossipShiftError("no peers to sample from")
    return SamplingDistribution(ids, np.full(len(ids), 1.0 / len(ids)))


def sample_peers(dist: SamplingDistribution, n: int, rng) -> list[int]:
    """Draw n distinct peers sequentially without replacement, renormalizing
    the remaining mass after each draw."""
    if n > len(dist.peer_ids):
        raise ConfigError(
            f"cannot sample {n} peers from {len(dist.peer_ids)} candidates"
        )
    ids = list(dist.peer_ids)
    probs = dist.probabilities.astype(float).copy()
    chosen = []
    for _ in range(n):
        total = probs.sum()
        if total > 0:
            probs_norm = probs / total
        else:
            # Remaining mass underflowed (extremely peaked softmax): the
            # conditional distribution over the rest degenerates to uniform.
            probs_norm = np.full(len(ids), 1.0 / len(ids))
        idx = int(rng.choice(len(ids), p=probs_norm))
        chosen.append(ids.pop(idx))
        probs = np.delete(probs, idx)
    return chosen
