"""Synthetic concept data and time-varying concept assignment.

A "concept" is a recipe for generating labeled data. All concepts of one
experiment draw from a shared universe (Gaussian blobs, or an ingested
tabular pool) and differ by an input rotation, a restricted label set, or a
swapped label pair.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, GenerationError, IngestionError
from .nn import Batch

COVARIATE_ROTATION = "covariate_rotation"
LABEL_SUBSET = "label_subset"
LABEL_SWAP = "label_swap"

_MEAN_RETRIES = 1000


@dataclass(frozen=True)
class ConceptSpec:
    concept_id: int
    kind: str
    # kind-specific parameters
    angle: float = 0.0  # covariate_rotation, radians in [0, 2*pi)
    allowed_labels: tuple[int, ...] = ()  # label_subset
    swap_pair: tuple[int, int] = (0, 0)  # label_swap
    base_concept_id: int = -1  # label_swap

    def __post_init__(self):
        if self.kind == COVARIATE_ROTATION:
            if not 0.0 <= self.angle < 2 * np.pi:
                raise ConfigError(f"rotation angle {self.angle} outside [0, 2*pi)")
        elif self.kind == LABEL_SUBSET:
            if not self.allowed_labels:
                raise ConfigError("label_subset requires a non-empty allowed set")
        elif self.kind == LABEL_SWAP:
            a, b = self.swap_pair
            if a == b:
                raise ConfigError("label_swap pair must be two distinct labels")
        else:
            raise ConfigError(f"unknown concept kind {self.kind!r}")


@dataclass(frozen=True)
class ClientDataset:
    train: Batch
    val: Batch
    test: Batch
    concept_id: int


class BlobUniverse:
    """Fixed Gaussian mean per class (unit covariance), seeded placement with
    pairwise mean distance >= class_separation."""

    def __init__(self, num_classes: int, dim: int, class_separation: float, seed: int):
        if num_classes < 2:
            raise ConfigError("need at least 2 classes")
        if dim < 2:
            raise ConfigError("need input dim >= 2")
        if class_separation <= 0:
            raise ConfigError("class_separation must be positive")
        self.num_classes = num_classes
        self.dim = dim
        self.class_separation = class_separation
        rng = np.random.default_rng(seed)
        means = []
        for _ in range(num_classes):
            for _attempt in range(_MEAN_RETRIES):
                cand = rng.normal(0.0, class_separation, size=dim)
                if all(np.linalg.norm(cand - m) >= class_separation for m in means):
                    means.append(cand)
                    break
            else:
                raise GenerationError(
                    f"could not place {num_classes} class means at separation "
                    f"{class_separation} in dim {dim}"
                )
        self.means = np.stack(means)

    def sample(self, allowed_labels, n: int, rng) -> tuple[np.ndarray, np.ndarray]:
        labels = rng.choice(np.asarray(allowed_labels, dtype=np.int64), size=n)
        inputs = self.means[labels] + rng.normal(0.0, 1.0, size=(n, self.dim))
        return inputs, labels

    @property
    def all_labels(self) -> tuple[int, ...]:
        return tuple(range(self.num_classes))


class TabularUniverse:
    """Universe backed by an ingested tabular pool; samples rows per class
    with replacement."""

    def __init__(self, inputs: np.ndarray, labels: np.ndarray, num_classes: int):
        self.num_classes = num_classes
        self.dim = inputs.shape[1]
        self.inputs = inputs
        self.labels = labels
        self._by_class = {c: np.flatnonzero(labels == c) for c in range(num_classes)}

    def sample(self, allowed_labels, n: int, rng) -> tuple[np.ndarray, np.ndarray]:
        labels = rng.choice(np.asarray(allowed_labels, dtype=np.int64), size=n)
        rows = np.empty(n, dtype=np.int64)
        for i, c in enumerate(labels):
            pool = self._by_class[int(c)]
            if len(pool) == 0:
                raise GenerationError(f"no samples available for class {c}")
            rows[i] = pool[rng.integers(len(pool))]
        return self.inputs[rows].copy(), labels

    @property
    def all_labels(self) -> tuple[int, ...]:
        return tuple(range(self.num_classes))


def _rotate_first_two(inputs: np.ndarray, angle: float) -> np.ndarray:
    """Plane rotation in the first two coordinates, identity elsewhere."""
    out = inputs.copy()
    c, s = np.cos(angle), np.sin(angle)
    x0, x1 = inputs[:, 0], inputs[:, 1]
    out[:, 0] = c * x0 - s * x1
    out[:, 1] = s * x0 + c * x1
    return out


def concept_label_set(universe, concept: ConceptSpec) -> tuple[int, ...]:
    if concept.kind == LABEL_SUBSET:
        return tuple(concept.allowed_labels)
    return universe.all_labels


def sample_concept_dataset(universe, concept: ConceptSpec, sizes, seed: int) -> ClientDataset:
    """Draw train/val/test splits for a concept.

    The label_swap transform relabels after sampling from the base recipe, so
    a swap concept consumes the identical rng stream as its base: inputs are
    bit-equal under a shared seed.
    """
    n_train, n_val, n_test = sizes
    if min(n_train, n_val, n_test) < 1:
        raise ConfigError("all split sizes must be >= 1")
    rng = np.random.default_rng(seed)
    labels_allowed = concept_label_set(universe, concept)

    def draw(n: int) -> Batch:
        x, y = universe.sample(labels_allowed, n, rng)
        if concept.kind == COVARIATE_ROTATION:
            x = _rotate_first_two(x, concept.angle)
        elif concept.kind == LABEL_SWAP:
            a, b = concept.swap_pair
            y = y.copy()
            mask_a = y == a
            mask_b = y == b
            y[mask_a] = b
            y[mask_b] = a
        return Batch(x, y)

    return ClientDataset(draw(n_train), draw(n_val), draw(n_test), concept.concept_id)


@dataclass(frozen=True)
class ShiftSchedule:
    """Concept id per (round, client), piecewise-constant in round."""

    assignment: np.ndarray  # (num_rounds, num_clients) int

    @property
    def num_rounds(self) -> int:
        return self.assignment.shape[0]

    @property
    def num_clients(self) -> int:
        return self.assignment.shape[1]

    def concept_at(self, round_idx: int, client_id: int) -> int:
        return int(self.assignment[round_idx, client_id])

    def shift_rounds(self) -> list[int]:
        """Rounds where at least one client's concept differs from the
        previous round."""
        diff = (self.assignment[1:] != self.assignment[:-1]).any(axis=1)
        return [int(r) for r in np.flatnonzero(diff) + 1]

    def changed_clients(self, round_idx: int) -> list[int]:
        if round_idx == 0:
            return list(range(self.num_clients))
        changed = self.assignment[round_idx] != self.assignment[round_idx - 1]
        return [int(c) for c in np.flatnonzero(changed)]


def schedule_switch_at_round(
    num_clients: int,
    num_concepts: int,
    num_rounds: int,
    shift_round: int,
    switch_prob: float,
    seed: int,
) -> ShiftSchedule:
    """Uniform random initial partition; at shift_round each client
    independently switches with the given probability to a uniformly drawn
    *other* concept."""
    if not 0.0 <= switch_prob <= 1.0:
        raise ConfigError(f"switch_prob {switch_prob} outside [0, 1]")
    if num_concepts < 1:
        raise ConfigError("need at least one concept")
    if shift_round >= num_rounds:
        raise ConfigError(
            f"shift_round {shift_round} must be < num_rounds {num_rounds}"
        )
    rng = np.random.default_rng(seed)
    initial = rng.integers(num_concepts, size=num_clients)
    after = initial.copy()
    if num_concepts > 1:
        for k in range(num_clients):
            if rng.random() < switch_prob:
                others = [c for c in range(num_concepts) if c != initial[k]]
                after[k] = others[rng.integers(len(others))]
    assignment = np.empty((num_rounds, num_clients), dtype=np.int64)
    assignment[:shift_round] = initial
    assignment[shift_round:] = after
    return ShiftSchedule(assignment)


def schedule_from_table(table, rounds_per_stage: int) -> ShiftSchedule:
    """Explicit staged schedule: table[s][k] is client k's concept in stage s;
    stage s occupies rounds [s*rounds_per_stage, (s+1)*rounds_per_stage)."""
    if rounds_per_stage < 1:
        raise ConfigError("rounds_per_stage must be >= 1")
    widths = {len(row) for row in table}
    if len(widths) != 1:
        raise ConfigError(f"ragged schedule table: row widths {sorted(widths)}")
    stages = np.asarray(table, dtype=np.int64)
    assignment = np.repeat(stages, rounds_per_stage, axis=0)
    return ShiftSchedule(assignment)


def ingest_csv_dataset(path, num_classes: int, has_header: bool = False) -> TabularUniverse:
    """Load a plain numeric CSV (features..., integer label) as a universe."""
    inputs, labels = [], []
    width = None
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if has_header and lineno == 1:
                continue
            if not row:
                continue
            if width is None:
                width = len(row)
                if width < 2:
                    raise IngestionError(f"line {lineno}: need features plus a label column")
            elif len(row) != width:
                raise IngestionError(
                    f"line {lineno}: expected {width} columns, got {len(row)}"
                )
            try:
                feats = [float(v) for v in row[:-1]]
                label = int(row[-1])
            except ValueError as exc:
                raise IngestionError(f"line {lineno}: non-numeric value ({exc})") from None
            if not 0 <= label < num_classes:
                raise IngestionError(
                    f"line {lineno}: label {label} outside [0, {num_classes})"
                )
            inputs.append(feats)
            labels.append(label)
    if not inputs:
        raise IngestionError(f"{path}: no data rows")
    return TabularUniverse(
        np.asarray(inputs, dtype=np.float64),
        np.asarray(labels, dtype=np.int64),
        num_classes,
    )


def export_csv_dataset(universe: TabularUniverse, path):
    """Inverse of ingest_csv_dataset (full float precision)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for x, y in zip(universe.inputs, universe.labels):
            writer.writerow([repr(float(v)) for v in x] + [int(y)])
