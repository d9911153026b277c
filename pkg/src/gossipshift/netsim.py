"""Simulated synchronous peer-to-peer network with round barriers.

All fetches within a round observe the models committed at the start of the
round; new models are staged and become visible only after commit().
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .errors import GossipShiftError
from .nn import LayeredModel, get_layer_params, set_layer_params

FULL_MODEL = "full_model"
CLASSIFIER_ONLY = "classifier_only"


@dataclass(frozen=True)
class ExchangeRecord:
    round: int
    requester: int
    responder: int
    kind: str
    param_count: int


class ExchangeLog:
    def __init__(self):
        self.records: list[ExchangeRecord] = []

    def append(self, rec: ExchangeRecord):
        if rec.requester == rec.responder:
            raise GossipShiftError("a client does not exchange with itself")
        self.records.append(rec)

    def round_cost(self, round_idx: int, client_id: int) -> tuple[int, int]:
        """(messages, parameters transferred) for one requester in one round."""
        msgs = params = 0
        for r in self.records:
            if r.round == round_idx and r.requester == client_id:
                msgs += 1
                params += r.param_count
        return msgs, params

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["round", "requester", "responder", "kind", "param_count"])
            for r in self.records:
                writer.writerow([r.round, r.requester, r.responder, r.kind, r.param_count])


class Network:
    """Holds the per-round model snapshots for every client."""

    def __init__(self):
        self._snapshots: dict[int, LayeredModel] = {}
        self._staged: dict[int, LayeredModel] = {}
        self.log = ExchangeLog()
        self.round = -1

    def start_round(self, round_idx: int, models: dict[int, LayeredModel]):
        self.round = round_idx
        self._snapshots = dict(models)
        self._staged = {}

    def _snapshot(self, requester: int, pid: int) -> LayeredModel:
        if pid == requester:
            raise GossipShiftError("requester cannot fetch from itself")
        if pid not in self._snapshots:
            raise GossipShiftError(f"unknown peer id {pid}")
        return self._snapshots[pid]

    def fetch_models(self, requester: int, peer_ids) -> list[tuple[int, LayeredModel]]:
        """Fetch full deep-copied model snapshots; one log entry per peer."""
        out = []
        for pid in peer_ids:
            snap = self._snapshot(requester, pid)
            full = range(0, snap.num_layers)
            # Deep copy via the flat-block round trip: mutating the returned
            # model can never touch the live snapshot.
            copy = set_layer_params(snap, full, get_layer_params(snap, full))
            out.append((pid, copy))
            self.log.append(
                ExchangeRecord(self.round, requester, pid, FULL_MODEL, snap.param_count)
            )
        return out

    def fetch_blocks(self, requester: int, peer_ids, scope_range_of):
        """Fetch only the layers selected by scope_range_of(model) as flat
        per-layer blocks: list of (peer_id, layer_range, blocks)."""
        out = []
        for pid in peer_ids:
            snap = self._snapshot(requester, pid)
            scope = scope_range_of(snap)
            blocks = [b.copy() for b in get_layer_params(snap, scope)]
            out.append((pid, scope, blocks))
            self.log.append(
                ExchangeRecord(self.round, requester, pid, CLASSIFIER_ONLY,
                               snap.param_count_range(scope))
            )
        return out

    def snapshot_of(self, client_id: int) -> LayeredModel:
        return self._snapshots[client_id]

    def stage(self, client_id: int, model: LayeredModel):
        self._staged[client_id] = model

    def commit(self) -> dict[int, LayeredModel]:
        committed = dict(self._snapshots)
        committed.update(self._staged)
        self._staged = {}
        return committed
