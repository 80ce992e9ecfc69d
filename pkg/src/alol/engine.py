"""End-to-end simulation driver: B selection iterations plus learning curves.

Each iteration samples K candidate sets, lets the configured policy choose
one, commits it to the labeled pool, and periodically trains a fresh
checkpoint model on the current labeled set to measure a report metric on
the held-out report partition. The run is a pure function of
(config, dataset): every stochastic call draws from a stream derived off
the master seed with the iteration/candidate/run coordinates, so thread
count and scheduling cannot change a byte of the output.

Seed scoping used by the driver (ops mix in their purpose tags themselves):

* dataset split:            master seed
* iteration i scope:        derive(master, iteration=i)  (sampling, base
                            model, policy draws)
* candidate j fine-tune:    derived inside the policy from the iteration
                            scope with candidate=j+1
* checkpoint after iter i:  derive(master, iteration=i, run=1); the
                            pre-loop checkpoint uses iteration=0
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Sequence

from .errors import (
    AlignmentError,
    MissingScoresError,
    PoolExhaustedError,
    SpecMismatchError,
    UndefinedPointError,
)
from .learners import LearnerSpec, ModelState, evaluate, spec_from_json, spec_to_json, train
from .metrics import MetricKind
from .policies import (
    PolicyName,
    PolicySpec,
    SelectionOutcome,
    TrainingMode,
    oracle_candidate_scores,
    select_epsilon_greedy,
    select_longest,
    select_loss_oracle,
    select_oracle,
    select_random,
    select_uncertainty,
)
from .pool import Dataset, commit_selection, sample_candidates, split_dataset
from .rng import RUN_CHECKPOINT, derive_seed

ORACLE_FAMILY = frozenset(
    {
        PolicyName.ORACLE,
        PolicyName.LOSS_ORACLE,
        PolicyName.EPSILON_GREEDY,
        PolicyName.ORACLE_SWITCH,
    }
)


@dataclass(frozen=True)
class SimulationConfig:
    iterations: int
    candidate_count: int
    set_size: int
    policy: PolicySpec
    learner: LearnerSpec
    selection_metric: MetricKind
    report_metric: MetricKind
    master_seed: int
    partition_sizes: tuple[int, int, int, int]
    checkpoint_every: int = 10
    log_oracle_scores: bool = False

    def __post_init__(self) -> None:
        if self.iterations < 1 or self.candidate_count < 1 or self.set_size < 1:
            raise SpecMismatchError(
                f"iterations={self.iterations}, candidate_count={self.candidate_count}, "
                f"set_size={self.set_size} must all be >= 1"
            )
        if self.checkpoint_every < 1:
            raise SpecMismatchError(f"checkpoint_every={self.checkpoint_every} must be >= 1")
        sizes = tuple(int(s) for s in self.partition_sizes)
        if len(sizes) != 4 or any(s < 0 for s in sizes):
            raise SpecMismatchError(f"partition_sizes must be 4 non-negative counts, got {sizes}")
        object.__setattr__(self, "partition_sizes", sizes)
        if (
            self.policy.name is PolicyName.ORACLE_SWITCH
            and self.policy.switch_after > self.iterations
        ):
            raise SpecMismatchError(
                f"switch_after={self.policy.switch_after} exceeds iterations={self.iterations}"
            )


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    candidate_ids: tuple[tuple[int, ...], ...]
    scores: tuple[float, ...] | None
    chosen_index: int
    branch: str | None
    labeled_size_after: int
    checkpoint: float | None
    base_model_fingerprint: str | None


@dataclass(frozen=True)
class RunLog:
    config: SimulationConfig
    initial_labeled_ids: tuple[int, ...]
    initial_checkpoint: float
    records: tuple[IterationRecord, ...]
    final_model_fingerprint: str
    truncated: bool


def run_simulation(config: SimulationConfig, dataset: Dataset, *, jobs: int = 1) -> RunLog:
    """Run the selection loop for the configured number of iterations."""
    if config.learner.input_dim != dataset.feature_dim:
        raise SpecMismatchError(
            f"learner expects dim {config.learner.input_dim}, dataset has {dataset.feature_dim}"
        )
    if config.partition_sizes[2] == 0 or config.partition_sizes[3] == 0:
        raise SpecMismatchError("eval and report partitions must be non-empty")
    master = config.master_seed
    pool = split_dataset(dataset, config.partition_sizes, master)
    initial_labeled_ids = pool.labeled
    eval_examples = dataset.subset(pool.eval)
    report_examples = dataset.subset(pool.report)

    def checkpoint_model(iteration: int) -> ModelState:
        seed = derive_seed(master, iteration=iteration, run=RUN_CHECKPOINT)
        return train(
            config.learner,
            dataset.subset(pool.labeled),
            eval_examples,
            seed,
            metric=config.report_metric,
        )

    initial_model = checkpoint_model(0)
    initial_checkpoint = evaluate(initial_model, report_examples, config.report_metric)
    final_fingerprint = initial_model.fingerprint()

    records: list[IterationRecord] = []
    truncated = False
    for i in range(1, config.iterations + 1):
        scope = derive_seed(master, iteration=i)
        try:
            candidates = sample_candidates(
                pool, config.candidate_count, config.set_size, scope
            )
        except PoolExhaustedError:
            truncated = True
            break
        labeled_examples = dataset.subset(pool.labeled)
        base_model: ModelState | None = None

        def ensure_base() -> ModelState:
            nonlocal base_model
            if base_model is None:
                base_model = train(
                    config.learner,
                    labeled_examples,
                    eval_examples,
                    scope,
                    metric=config.selection_metric,
                )
            return base_model

        def oracle_outcome(loss_based: bool) -> SelectionOutcome:
            selector = select_loss_oracle if loss_based else select_oracle
            mode = config.policy.training_mode
            base = None if mode is TrainingMode.INDEPENDENT_FROM_SCRATCH else ensure_base()
            return selector(
                base,
                pool,
                candidates,
                dataset,
                labeled_examples,
                eval_examples,
                mode,
                config.selection_metric,
                scope,
                jobs=jobs,
                spec=config.learner,
            )

        name = config.policy.name
        if name is PolicyName.RANDOM:
            outcome = select_random(config.candidate_count, scope)
        elif name is PolicyName.LONGEST:
            outcome = select_longest(candidates, dataset)
        elif name is PolicyName.UNCERTAINTY:
            outcome = select_uncertainty(ensure_base(), candidates, dataset)
        elif name is PolicyName.ORACLE:
            outcome = oracle_outcome(loss_based=False)
        elif name is PolicyName.LOSS_ORACLE:
            outcome = oracle_outcome(loss_based=True)
        elif name is PolicyName.EPSILON_GREEDY:
            outcome = select_epsilon_greedy(
                config.policy.epsilon,
                lambda: oracle_outcome(loss_based=False),
                config.candidate_count,
                scope,
            )
        elif name is PolicyName.ORACLE_SWITCH:
            if i <= config.policy.switch_after:
                outcome = replace(oracle_outcome(loss_based=False), branch="oracle")
            else:
                outcome = replace(
                    select_random(config.candidate_count, scope), branch="random"
                )
        else:
            raise SpecMismatchError(f"unhandled policy {name!r}")

        scores = outcome.scores
        if config.log_oracle_scores and scores is None:
            mode = config.policy.training_mode
            base = None if mode is TrainingMode.INDEPENDENT_FROM_SCRATCH else ensure_base()
            scores = oracle_candidate_scores(
                base,
                pool,
                candidates,
                dataset,
                labeled_examples,
                eval_examples,
                mode,
                config.selection_metric,
                scope,
                jobs=jobs,
                spec=config.learner,
            )

        chosen = candidates[outcome.chosen_index]
        size_before = len(pool.labeled)
        pool = commit_selection(pool, chosen)
        assert len(pool.labeled) == size_before + config.set_size

        checkpoint_value: float | None = None
        if i % config.checkpoint_every == 0 or i == config.iterations:
            model = checkpoint_model(i)
            checkpoint_value = evaluate(model, report_examples, config.report_metric)
            final_fingerprint = model.fingerprint()

        records.append(
            IterationRecord(
                iteration=i,
                candidate_ids=tuple(c.ids for c in candidates),
                scores=scores,
                chosen_index=outcome.chosen_index,
                branch=outcome.branch,
                labeled_size_after=len(pool.labeled),
                checkpoint=checkpoint_value,
                base_model_fingerprint=(
                    base_model.fingerprint() if base_model is not None else None
                ),
            )
        )

    if truncated and records and records[-1].checkpoint is None:
        last = records[-1]
        model = checkpoint_model(last.iteration)
        records[-1] = replace(
            last, checkpoint=evaluate(model, report_examples, config.report_metric)
        )
        final_fingerprint = model.fingerprint()

    return RunLog(
        config=config,
        initial_labeled_ids=initial_labeled_ids,
        initial_checkpoint=initial_checkpoint,
        records=tuple(records),
        final_model_fingerprint=final_fingerprint,
        truncated=truncated,
    )


def learning_curve(log: RunLog) -> list[tuple[int, float]]:
    """(labeled_size, report_metric) points, starting at the initial set."""
    curve = [(len(log.initial_labeled_ids), log.initial_checkpoint)]
    for record in log.records:
        if record.checkpoint is not None:
            curve.append((record.labeled_size_after, record.checkpoint))
    return curve


def relative_improvement(
    policy_curve: Sequence[tuple[int, float]],
    random_curve: Sequence[tuple[int, float]],
) -> list[tuple[int, float]]:
    """Percent gain of a policy curve over the random curve, per checkpoint."""
    if len(policy_curve) != len(random_curve):
        raise AlignmentError(
            f"curves have {len(policy_curve)} vs {len(random_curve)} checkpoints"
        )
    out: list[tuple[int, float]] = []
    for (size_p, value_p), (size_r, value_r) in zip(policy_curve, random_curve):
        if size_p != size_r:
            raise AlignmentError(f"checkpoint grids differ: {size_p} vs {size_r}")
        if value_r == 0.0:
            raise UndefinedPointError(f"random curve is 0 at labeled size {size_r}")
        out.append((size_p, 100.0 * (value_p - value_r) / value_r))
    return out


def emit_policy_training_examples(log: RunLog, path) -> int:
    """Dump scored iterations as JSON lines for downstream policy training.

    Each line holds the selection inputs (labeled ids, candidate ids, base
    model fingerprint, scores) and the chosen index as the label. Returns
    the number of lines written.
    """
    if log.config.policy.name not in ORACLE_FAMILY:
        raise MissingScoresError(
            f"policy {log.config.policy.name.value} does not produce oracle scores"
        )
    scored = [r for r in log.records if r.scores is not None]
    if not scored:
        raise MissingScoresError("run log holds no scored iterations")
    labeled = set(log.initial_labeled_ids)
    committed: dict[int, list[int]] = {}
    for record in log.records:
        committed[record.iteration] = sorted(labeled)
        labeled.update(record.candidate_ids[record.chosen_index])
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for record in scored:
            line = {
                "iteration": record.iteration,
                "labeled_ids": committed[record.iteration],
                "candidate_ids": [list(ids) for ids in record.candidate_ids],
                "base_model_fingerprint": record.base_model_fingerprint,
                "scores": list(record.scores),
                "chosen_index": record.chosen_index,
                "branch": record.branch,
            }
            handle.write(json.dumps(line, separators=(",", ":")) + "\n")
    return len(scored)


def config_to_json(config: SimulationConfig) -> dict:
    return {
        "iterations": config.iterations,
        "candidate_count": config.candidate_count,
        "set_size": config.set_size,
        "policy": {
            "name": config.policy.name.value,
            "epsilon": config.policy.epsilon,
            "switch_after": config.policy.switch_after,
            "training_mode": config.policy.training_mode.value,
        },
        "learner": spec_to_json(config.learner),
        "selection_metric": config.selection_metric.value,
        "report_metric": config.report_metric.value,
        "master_seed": config.master_seed,
        "partition_sizes": list(config.partition_sizes),
        "checkpoint_every": config.checkpoint_every,
        "log_oracle_scores": config.log_oracle_scores,
    }


def config_from_json(data: dict) -> SimulationConfig:
    policy = data["policy"]
    return SimulationConfig(
        iterations=int(data["iterations"]),
        candidate_count=int(data["candidate_count"]),
        set_size=int(data["set_size"]),
        policy=PolicySpec(
            name=PolicyName(policy["name"]),
            epsilon=float(policy.get("epsilon", 0.0)),
            switch_after=int(policy.get("switch_after", 0)),
            training_mode=TrainingMode(policy.get("training_mode", "fine_tune_union")),
        ),
        learner=spec_from_json(data["learner"]),
        selection_metric=MetricKind(data["selection_metric"]),
        report_metric=MetricKind(data["report_metric"]),
        master_seed=int(data["master_seed"]),
        partition_sizes=tuple(int(s) for s in data["partition_sizes"]),
        checkpoint_every=int(data.get("checkpoint_every", 10)),
        log_oracle_scores=bool(data.get("log_oracle_scores", False)),
    )


def run_log_to_json(log: RunLog) -> dict:
    return {
        "config": config_to_json(log.config),
        "initial_labeled_ids": list(log.initial_labeled_ids),
        "initial_checkpoint": log.initial_checkpoint,
        "records": [
            {
                "iteration": r.iteration,
                "candidate_ids": [list(ids) for ids in r.candidate_ids],
                "scores": None if r.scores is None else list(r.scores),
                "chosen_index": r.chosen_index,
                "branch": r.branch,
                "labeled_size_after": r.labeled_size_after,
                "checkpoint": r.checkpoint,
                "base_model_fingerprint": r.base_model_fingerprint,
            }
            for r in log.records
        ],
        "final_model_fingerprint": log.final_model_fingerprint,
        "truncated": log.truncated,
    }


def run_log_from_json(data: dict) -> RunLog:
    records = tuple(
        IterationRecord(
            iteration=int(r["iteration"]),
            candidate_ids=tuple(tuple(int(i) for i in ids) for ids in r["candidate_ids"]),
            scores=None if r["scores"] is None else tuple(float(s) for s in r["scores"]),
            chosen_index=int(r["chosen_index"]),
            branch=r["branch"],
            labeled_size_after=int(r["labeled_size_after"]),
            checkpoint=None if r["checkpoint"] is None else float(r["checkpoint"]),
            base_model_fingerprint=r["base_model_fingerprint"],
        )
        for r in data["records"]
    )
    return RunLog(
        config=config_from_json(data["config"]),
        initial_labeled_ids=tuple(int(i) for i in data["initial_labeled_ids"]),
        initial_checkpoint=float(data["initial_checkpoint"]),
        records=records,
        final_model_fingerprint=data["final_model_fingerprint"],
        truncated=bool(data["truncated"]),
    )
