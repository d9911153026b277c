"""Experiment driver: builds clients, iterates rounds, injects shifts,
evaluates, and persists metrics.

Output files under the configured directory:
  metrics.csv            round, client_id, concept_id, test_accuracy,
                         test_loss, train_loss, messages, params_transferred
                         (client_id -1 is the cross-client mean row)
  similarity_<round>.csv raw similarity matrix snapshots at eval rounds
  exchange_log.csv       every model transfer
  summary.json           run-level aggregates
  config.yaml            the resolved configuration (round-trippable)
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np
import yaml

from . import nn
from .config import ExperimentConfig, config_to_dict
from .data import (
    BlobUniverse,
    ShiftSchedule,
    ingest_csv_dataset,
    sample_concept_dataset,
    schedule_from_table,
    schedule_switch_at_round,
)
from .errors import GossipShiftError
from .netsim import Network
from .protocols import ROUND_FNS, DAC, HAST, ClientState, apply_concept_change
from .similarity import SimilarityBelief

# Seed-stream domains, so every random decision has its own derived stream.
_SEED_UNIVERSE = 0
_SEED_MODEL = 1
_SEED_DATA = 2
_SEED_SCHEDULE = 3
_SEED_CLIENT = 4

DIP_WINDOW = 10
MEAN_CLIENT_ID = -1


@dataclass
class RunResult:
    config: ExperimentConfig
    out_dir: str
    summary: dict
    final_states: dict = field(default_factory=dict)
    similarity_final: dict = field(default_factory=dict)  # owner -> {peer: score}


def _fmt(x) -> str:
    return repr(float(x))


def build_universe(config: ExperimentConfig):
    ds = config.dataset
    if ds.csv_path:
        return ingest_csv_dataset(ds.csv_path, ds.num_classes, ds.csv_has_header)
    return BlobUniverse(ds.num_classes, ds.dim, ds.class_separation,
                        [config.seed, _SEED_UNIVERSE])


def build_schedule(config: ExperimentConfig) -> ShiftSchedule:
    sch = config.schedule
    if sch.kind == "table":
        full = schedule_from_table(sch.table, sch.rounds_per_stage)
        return ShiftSchedule(full.assignment[: config.num_rounds])
    return schedule_switch_at_round(
        config.num_clients, len(config.concepts), config.num_rounds,
        sch.shift_round, sch.switch_prob, [config.seed, _SEED_SCHEDULE],
    )


def _client_dataset(config, universe, client_id, round_idx, concept_id):
    concept = next(c for c in config.concepts if c.concept_id == concept_id)
    ds = config.dataset
    return sample_concept_dataset(
        universe, concept, (ds.train_size, ds.val_size, ds.test_size),
        [config.seed, _SEED_DATA, client_id, round_idx, concept_id],
    )


def evaluate_all(states: dict, round_idx: int, log) -> list[dict]:
    """Per-client metrics rows plus the cross-client mean row (client -1)."""
    rows = []
    for cid in sorted(states):
        st = states[cid]
        loss, acc = nn.loss_and_accuracy(st.model, st.dataset.test)
        msgs, params = log.round_cost(round_idx, cid)
        rows.append({
            "round": round_idx, "client_id": cid,
            "concept_id": st.dataset.concept_id,
            "test_accuracy": acc, "test_loss": loss,
            "train_loss": st.last_train_loss,
            "messages": msgs, "params_transferred": params,
        })
    mean = {
        "round": round_idx, "client_id": MEAN_CLIENT_ID, "concept_id": -1,
        "test_accuracy": float(np.mean([r["test_accuracy"] for r in rows])),
        "test_loss": float(np.mean([r["test_loss"] for r in rows])),
        "train_loss": float(np.mean([r["train_loss"] for r in rows])),
        "messages": int(sum(r["messages"] for r in rows)),
        "params_transferred": int(sum(r["params_transferred"] for r in rows)),
    }
    return rows + [mean]


def snapshot_similarity(states: dict, round_idx: int, out_dir: str):
    """K x K raw-score matrix, empty cells where nothing was observed."""
    ids = sorted(states)
    path = os.path.join(out_dir, f"similarity_{round_idx}.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["client_id"] + [str(j) for j in ids])
        for i in ids:
            scores = states[i].belief.scores
            row = [str(i)]
            for j in ids:
                row.append("" if (j == i or j not in scores) else _fmt(scores[j]))
            writer.writerow(row)


def run_experiment(config: ExperimentConfig) -> RunResult:
    config.validate()
    os.makedirs(config.out_dir, exist_ok=True)

    universe = build_universe(config)
    schedule = build_schedule(config)
    ids = list(range(config.num_clients))

    states = {}
    for k in ids:
        model = nn.init_model(
            config.layer_dims, config.split_index,
            np.random.default_rng([config.seed, _SEED_MODEL, k]),
        )
        concept_id = schedule.concept_at(0, k)
        states[k] = ClientState(
            id=k, model=model,
            dataset=_client_dataset(config, universe, k, 0, concept_id),
            belief=SimilarityBelief(owner=k),
            rng=np.random.default_rng([config.seed, _SEED_CLIENT, k]),
        )

    net = Network()
    net.train_sizes = {k: config.dataset.train_size for k in ids}
    round_fn = ROUND_FNS[config.protocol.protocol]
    track_similarity = config.protocol.protocol in (DAC, HAST)

    fieldnames = ["round", "client_id", "concept_id", "test_accuracy",
                  "test_loss", "train_loss", "messages", "params_transferred"]
    metrics_path = os.path.join(config.out_dir, "metrics.csv")
    mean_acc_by_round: dict[int, float] = {}

    with open(metrics_path, "w", newline="") as metrics_fh:
        writer = csv.writer(metrics_fh)
        writer.writerow(fieldnames)
        try:
            for r in range(config.num_rounds):
                if r > 0:
                    for k in schedule.changed_clients(r):
                        new_ds = _client_dataset(
                            config, universe, k, r, schedule.concept_at(r, k)
                        )
                        apply_concept_change(states[k], new_ds)
                net.start_round(r, {k: states[k].model for k in ids})
                for k in ids:
                    try:
                        states[k] = round_fn(states[k], net, config.protocol, ids)
                    except GossipShiftError as exc:
                        raise GossipShiftError(
                            f"round {r}, client {k}: {exc}"
                        ) from exc
                    net.stage(k, states[k].model)
                net.commit()

                if r % config.eval_every == 0 or r == config.num_rounds - 1:
                    rows = evaluate_all(states, r, net.log)
                    for row in rows:
                        writer.writerow([
                            row["round"], row["client_id"], row["concept_id"],
                            _fmt(row["test_accuracy"]), _fmt(row["test_loss"]),
                            _fmt(row["train_loss"]),
                            row["messages"], row["params_transferred"],
                        ])
                    mean_acc_by_round[r] = rows[-1]["test_accuracy"]
                    if track_similarity:
                        snapshot_similarity(states, r, config.out_dir)
        finally:
            metrics_fh.flush()
            net.log.write_csv(os.path.join(config.out_dir, "exchange_log.csv"))

    summary = _summarize(config, schedule, mean_acc_by_round)
    with open(os.path.join(config.out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(config.out_dir, "config.yaml"), "w") as fh:
        yaml.safe_dump(config_to_dict(config), fh, sort_keys=False)

    return RunResult(
        config=config, out_dir=config.out_dir, summary=summary,
        final_states=states,
        similarity_final={k: dict(states[k].belief.scores) for k in ids},
    )


def _summarize(config, schedule, mean_acc_by_round: dict[int, float]) -> dict:
    eval_rounds = sorted(mean_acc_by_round)
    final_acc = mean_acc_by_round[eval_rounds[-1]]
    last10 = [mean_acc_by_round[r] for r in eval_rounds[-10:]]
    shift_rounds = schedule.shift_rounds()
    dips = []
    for s in shift_rounds:
        before = [r for r in eval_rounds if r < s]
        window = [r for r in eval_rounds if s <= r < s + DIP_WINDOW]
        if not before or not window:
            continue
        pre = mean_acc_by_round[before[-1]]
        dips.append({
            "shift_round": s,
            "dip": pre - min(mean_acc_by_round[r] for r in window),
        })
    return {
        "protocol": config.protocol.protocol,
        "seed": config.seed,
        "num_rounds": config.num_rounds,
        "final_mean_accuracy": final_acc,
        "mean_accuracy_last_10_evals": float(np.mean(last10)),
        "shift_rounds": shift_rounds,
        "post_shift_dips": dips,
        "max_post_shift_dip": max((d["dip"] for d in dips), default=0.0),
    }
