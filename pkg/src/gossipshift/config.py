"""Experiment configuration: dataclasses plus dict round-tripping.

The on-disk format is YAML whose nesting mirrors these dataclasses exactly;
see README for the documented schema.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .data import (
    COVARIATE_ROTATION,
    LABEL_SUBSET,
    LABEL_SWAP,
    ConceptSpec,
)
from .errors import ConfigError
from .protocols import ProtocolConfig

DEFAULT_LAYER_DIMS = [16, 32, 32, 16, 16, 8]
DEFAULT_SPLIT_INDEX = 2


@dataclass(frozen=True)
class DatasetSpec:
    num_classes: int = 8
    dim: int = 16
    class_separation: float = 2.5
    train_size: int = 100
    val_size: int = 25
    test_size: int = 200
    csv_path: str | None = None  # tabular source instead of Gaussian blobs
    csv_has_header: bool = False


@dataclass(frozen=True)
class ScheduleSpec:
    kind: str = "switch_at_round"  # or "table"
    shift_round: int = 75
    switch_prob: float = 0.75
    table: list | None = None  # stage -> per-client concept ids
    rounds_per_stage: int = 50


@dataclass(frozen=True)
class ExperimentConfig:
    num_clients: int = 20
    num_rounds: int = 150
    seed: int = 0
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    concepts: tuple[ConceptSpec, ...] = ()
    schedule: ScheduleSpec = field(default_factory=ScheduleSpec)
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    layer_dims: tuple[int, ...] = tuple(DEFAULT_LAYER_DIMS)
    split_index: int = DEFAULT_SPLIT_INDEX
    eval_every: int = 1
    out_dir: str = "runs/out"

    def validate(self):
        if self.num_clients < 2:
            raise ConfigError("num_clients must be >= 2")
        if self.num_rounds < 1:
            raise ConfigError("num_rounds must be >= 1")
        if not self.concepts:
            raise ConfigError("at least one concept is required")
        ids = [c.concept_id for c in self.concepts]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate concept_id")
        if self.layer_dims[0] != self.dataset.dim:
            raise ConfigError(
                f"layer_dims[0]={self.layer_dims[0]} must equal dataset dim {self.dataset.dim}"
            )
        if self.layer_dims[-1] != self.dataset.num_classes:
            raise ConfigError(
                f"layer_dims[-1]={self.layer_dims[-1]} must equal num_classes "
                f"{self.dataset.num_classes}"
            )
        if not 0 < self.split_index < len(self.layer_dims) - 1:
            raise ConfigError(f"split_index {self.split_index} out of range")
        if self.eval_every < 1:
            raise ConfigError("eval_every must be >= 1")
        if self.schedule.kind == "switch_at_round":
            if self.schedule.shift_round >= self.num_rounds:
                raise ConfigError(
                    f"shift_round {self.schedule.shift_round} must be < num_rounds "
                    f"{self.num_rounds}"
                )
        elif self.schedule.kind == "table":
            if not self.schedule.table:
                raise ConfigError("table schedule requires a non-empty table")
            n_stages = len(self.schedule.table)
            if n_stages * self.schedule.rounds_per_stage < self.num_rounds:
                raise ConfigError("schedule table does not cover all rounds")
            for row in self.schedule.table:
                if len(row) != self.num_clients:
                    raise ConfigError("schedule table rows must have one entry per client")
                for cid in row:
                    if cid not in set(ids):
                        raise ConfigError(f"schedule references unknown concept {cid}")
        else:
            raise ConfigError(f"unknown schedule kind {self.schedule.kind!r}")
        for c in self.concepts:
            _validate_concept(c, self.dataset.num_classes)
        self.protocol.validate(self.num_clients, len(self.layer_dims) - 1)


def _validate_concept(c: ConceptSpec, num_classes: int):
    if c.kind == LABEL_SUBSET:
        if not set(c.allowed_labels) <= set(range(num_classes)):
            raise ConfigError(
                f"concept {c.concept_id}: allowed labels outside [0, {num_classes})"
            )
    elif c.kind == LABEL_SWAP:
        a, b = c.swap_pair
        if not (0 <= a < num_classes and 0 <= b < num_classes):
            raise ConfigError(f"concept {c.concept_id}: swap pair outside label range")


def concept_to_dict(c: ConceptSpec) -> dict:
    d = {"concept_id": c.concept_id, "kind": c.kind}
    if c.kind == COVARIATE_ROTATION:
        d["angle"] = c.angle
    elif c.kind == LABEL_SUBSET:
        d["allowed_labels"] = list(c.allowed_labels)
    elif c.kind == LABEL_SWAP:
        d["swap_pair"] = list(c.swap_pair)
        d["base_concept_id"] = c.base_concept_id
    return d


def concept_from_dict(d: dict) -> ConceptSpec:
    kind = d.get("kind")
    kwargs = {"concept_id": int(d["concept_id"]), "kind": kind}
    if kind == COVARIATE_ROTATION:
        kwargs["angle"] = float(d.get("angle", 0.0))
    elif kind == LABEL_SUBSET:
        kwargs["allowed_labels"] = tuple(int(v) for v in d.get("allowed_labels", ()))
    elif kind == LABEL_SWAP:
        pair = d.get("swap_pair", (0, 0))
        kwargs["swap_pair"] = (int(pair[0]), int(pair[1]))
        kwargs["base_concept_id"] = int(d.get("base_concept_id", -1))
    return ConceptSpec(**kwargs)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return {
        "num_clients": cfg.num_clients,
        "num_rounds": cfg.num_rounds,
        "seed": cfg.seed,
        "dataset": dataclasses.asdict(cfg.dataset),
        "concepts": [concept_to_dict(c) for c in cfg.concepts],
        "schedule": dataclasses.asdict(cfg.schedule),
        "protocol": dataclasses.asdict(cfg.protocol),
        "layer_dims": list(cfg.layer_dims),
        "split_index": cfg.split_index,
        "eval_every": cfg.eval_every,
        "out_dir": cfg.out_dir,
    }


def _dataclass_from_dict(cls, d: dict, what: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(d) - names
    if unknown:
        raise ConfigError(f"unknown {what} key(s): {', '.join(sorted(unknown))}")
    return cls(**d)


def config_from_dict(d: dict) -> ExperimentConfig:
    d = dict(d)
    known = {
        "num_clients", "num_rounds", "seed", "dataset", "concepts",
        "schedule", "protocol", "layer_dims", "split_index", "eval_every",
        "out_dir",
    }
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    kwargs = {}
    for key in ("num_clients", "num_rounds", "seed", "split_index", "eval_every"):
        if key in d:
            kwargs[key] = int(d[key])
    if "out_dir" in d:
        kwargs["out_dir"] = str(d["out_dir"])
    if "layer_dims" in d:
        kwargs["layer_dims"] = tuple(int(v) for v in d["layer_dims"])
    if "dataset" in d:
        kwargs["dataset"] = _dataclass_from_dict(DatasetSpec, d["dataset"], "dataset")
    if "schedule" in d:
        sd = dict(d["schedule"])
        if sd.get("table") is not None:
            sd["table"] = [list(map(int, row)) for row in sd["table"]]
        kwargs["schedule"] = _dataclass_from_dict(ScheduleSpec, sd, "schedule")
    if "protocol" in d:
        kwargs["protocol"] = _dataclass_from_dict(ProtocolConfig, d["protocol"], "protocol")
    if "concepts" in d:
        kwargs["concepts"] = tuple(concept_from_dict(c) for c in d["concepts"])
    return ExperimentConfig(**kwargs)
