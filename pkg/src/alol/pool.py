"""Dataset container, partition bookkeeping, and candidate sampling.

The pool owns four pairwise-disjoint id sets over one dataset:

* ``labeled``, the committed training set,
* ``unlabeled``, the pool candidates are drawn from,
* ``eval``, the evaluation set policies use to score candidates,
* ``report``, a held-out set used only for learning-curve checkpoints.

PoolState is an immutable value; every operation returns a new state, so
states can be shared read-only across parallel candidate evaluations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AlolError,
    PartitionInfeasibleError,
    PoolExhaustedError,
    StaleCandidateError,
)
from .rng import PURPOSE_SAMPLE, PURPOSE_SPLIT, SplitMix64, derive_seed


@dataclass(frozen=True, eq=False)
class Example:
    """One datapoint: a (token_count, feature_dim) matrix plus per-token labels.

    Single-vector classification examples are stored as one-token sequences;
    ``sequence`` records which payload kind the source file used so round
    trips preserve it.
    """

    id: int
    features: np.ndarray
    labels: np.ndarray
    sequence: bool

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Example)
            and self.id == other.id
            and self.sequence == other.sequence
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
        )

    def __post_init__(self) -> None:
        feats = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if feats.ndim != 2 or feats.shape[0] < 1:
            raise AlolError(f"example {self.id}: features must be (tokens, dim), got {feats.shape}")
        if labels.shape != (feats.shape[0],):
            raise AlolError(
                f"example {self.id}: {feats.shape[0]} tokens but {labels.shape} labels"
            )
        if np.any(labels < 0):
            raise AlolError(f"example {self.id}: negative label")
        feats.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)

    @property
    def token_count(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class Dataset:
    """Immutable collection of examples with unique ids and one feature dim."""

    examples: tuple[Example, ...]

    def __post_init__(self) -> None:
        if not self.examples:
            raise AlolError("dataset is empty")
        by_id: dict[int, Example] = {}
        dim = self.examples[0].features.shape[1]
        for ex in self.examples:
            if ex.id in by_id:
                raise AlolError(f"duplicate example id {ex.id}")
            if ex.features.shape[1] != dim:
                raise AlolError(
                    f"example {ex.id}: feature dim {ex.features.shape[1]} != {dim}"
                )
            by_id[ex.id] = ex
        object.__setattr__(self, "examples", tuple(self.examples))
        object.__setattr__(self, "_by_id", by_id)

    def __len__(self) -> int:
        return len(self.examples)

    @property
    def feature_dim(self) -> int:
        return self.examples[0].features.shape[1]

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(sorted(self._by_id))

    def get(self, example_id: int) -> Example:
        try:
            return self._by_id[example_id]
        except KeyError:
            raise AlolError(f"unknown example id {example_id}") from None

    def subset(self, ids: Iterable[int]) -> list[Example]:
        return [self.get(i) for i in ids]


@dataclass(frozen=True)
class PoolState:
    """The four disjoint id partitions; sizes change only via commits."""

    labeled: tuple[int, ...]
    unlabeled: tuple[int, ...]
    eval: tuple[int, ...]
    report: tuple[int, ...]

    def __post_init__(self) -> None:
        parts = [self.labeled, self.unlabeled, self.eval, self.report]
        names = ["labeled", "unlabeled", "eval", "report"]
        canon = [tuple(sorted(p)) for p in parts]
        for name, p in zip(names, canon):
            if len(set(p)) != len(p):
                raise AlolError(f"duplicate ids inside the {name} partition")
            object.__setattr__(self, name, p)
        union: set[int] = set()
        total = 0
        for p in canon:
            union.update(p)
            total += len(p)
        if len(union) != total:
            raise AlolError("partitions overlap")


@dataclass(frozen=True)
class CandidateSet:
    """Ordered distinct unlabeled ids plus the 0-based slot in its iteration."""

    ids: tuple[int, ...]
    candidate_index: int

    def __post_init__(self) -> None:
        ids = tuple(int(i) for i in self.ids)
        if len(set(ids)) != len(ids):
            raise AlolError(f"candidate {self.candidate_index}: duplicate ids {ids}")
        if not ids:
            raise AlolError(f"candidate {self.candidate_index}: empty id list")
        object.__setattr__(self, "ids", ids)


def split_dataset(
    dataset: Dataset, sizes: Sequence[int], seed: int
) -> PoolState:
    """Randomly partition dataset ids into (labeled, unlabeled, eval, report).

    Deterministic for a given seed; ids not covered by the four sizes stay
    unassigned. The labeled slice may be empty.
    """
    if len(sizes) != 4:
        raise PartitionInfeasibleError(f"need 4 partition sizes, got {len(sizes)}")
    counts = [int(s) for s in sizes]
    if any(c < 0 for c in counts):
        raise PartitionInfeasibleError(f"negative partition size in {counts}")
    if sum(counts) > len(dataset):
        raise PartitionInfeasibleError(
            f"partition sizes {counts} need {sum(counts)} examples, dataset has {len(dataset)}"
        )
    ids = list(dataset.ids)
    stream = SplitMix64(derive_seed(seed, purpose=PURPOSE_SPLIT))
    stream.shuffle(ids)
    out: list[tuple[int, ...]] = []
    cursor = 0
    for c in counts:
        out.append(tuple(ids[cursor : cursor + c]))
        cursor += c
    return PoolState(labeled=out[0], unlabeled=out[1], eval=out[2], report=out[3])


def sample_candidates(
    pool: PoolState, candidate_count: int, set_size: int, seed: int
) -> list[CandidateSet]:
    """Draw ``candidate_count`` independent uniform sets of ``set_size`` ids.

    Sets may overlap each other; ids within one set are distinct. Each set
    has its own derived stream, so the draw is independent of evaluation
    order and thread count.
    """
    if candidate_count < 1 or set_size < 1:
        raise AlolError(f"need K >= 1 and L >= 1, got K={candidate_count}, L={set_size}")
    universe = pool.unlabeled
    if len(universe) < set_size:
        raise PoolExhaustedError(
            f"unlabeled pool has {len(universe)} ids, need {set_size}"
        )
    sets: list[CandidateSet] = []
    for j in range(candidate_count):
        stream = SplitMix64(derive_seed(seed, candidate=j + 1, purpose=PURPOSE_SAMPLE))
        picks = stream.distinct_below(len(universe), set_size)
        sets.append(CandidateSet(ids=tuple(universe[p] for p in picks), candidate_index=j))
    return sets


def commit_selection(pool: PoolState, chosen: CandidateSet) -> PoolState:
    """Move the chosen ids from unlabeled to labeled; eval/report untouched."""
    unlabeled = set(pool.unlabeled)
    for i in chosen.ids:
        if i not in unlabeled:
            raise StaleCandidateError(f"id {i} is not in the unlabeled pool")
    unlabeled.difference_update(chosen.ids)
    return PoolState(
        labeled=tuple(sorted(set(pool.labeled) | set(chosen.ids))),
        unlabeled=tuple(sorted(unlabeled)),
        eval=pool.eval,
        report=pool.report,
    )


def load_dataset(path) -> Dataset:
    """Read a JSON-lines dataset file.

    Each line is either {"id", "features": [f, ...], "label": c} or
    {"id", "tokens": [[f, ...], ...], "label": [c, ...]}. Mixing the two
    payload kinds within one file is rejected.
    """
    examples: list[Example] = []
    kind: str | None = None
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise AlolError(f"{path}:{lineno}: bad JSON ({exc})") from None
            if "tokens" in record:
                this_kind = "tokens"
                feats = np.asarray(record["tokens"], dtype=np.float64)
                labels = np.asarray(record["label"], dtype=np.int64)
                sequence = True
            elif "features" in record:
                this_kind = "features"
                feats = np.asarray(record["features"], dtype=np.float64).reshape(1, -1)
                labels = np.asarray([record["label"]], dtype=np.int64)
                sequence = False
            else:
                raise AlolError(f"{path}:{lineno}: neither 'features' nor 'tokens'")
            if kind is None:
                kind = this_kind
            elif kind != this_kind:
                raise AlolError(
                    f"{path}:{lineno}: mixes '{this_kind}' examples into a '{kind}' file"
                )
            examples.append(
                Example(id=int(record["id"]), features=feats, labels=labels, sequence=sequence)
            )
    if not examples:
        raise AlolError(f"{path}: no examples")
    return Dataset(examples=tuple(examples))


def save_dataset(dataset: Dataset, path) -> None:
    """Write a dataset back to JSON-lines, preserving the payload kind."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for ex in dataset.examples:
            if ex.sequence:
                record = {
                    "id": ex.id,
                    "tokens": [[float(v) for v in row] for row in ex.features],
                    "label": [int(v) for v in ex.labels],
                }
            else:
                record = {
                    "id": ex.id,
                    "features": [float(v) for v in ex.features[0]],
                    "label": int(ex.labels[0]),
                }
            handle.write(json.dumps(record, separators=(",", ":")) + "\n")
