"""Optimization-consistency probe for the candidate-scoring loop.

The probe replays each iteration's candidate scoring twice, under two
master seeds that differ only in the fine-tuning randomness (the base
model and the candidate sets are shared). The reference run's choice
advances the pool exactly like a normal oracle simulation; the second
run only re-ranks. Mean reciprocal rank of the reference choice under the
second run's scores measures how much the selection depends on optimizer
noise: a convex learner should pin it near 1, a non-convex one should
drift toward the uniform-rank baseline H_K/K.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .errors import PoolExhaustedError, SpecMismatchError
from .learners import LearnerSpec, ModelState, spec_to_json, train
from .metrics import MetricKind
from .policies import TrainingMode, lowest_argmax, oracle_candidate_scores
from .pool import CandidateSet, Dataset, commit_selection, sample_candidates, split_dataset
from .rng import derive_seed


@dataclass(frozen=True)
class MrrConfig:
    iterations: int
    candidate_count: int
    set_size: int
    learner: LearnerSpec
    selection_metric: MetricKind
    seed_pair: tuple[int, int]
    partition_sizes: tuple[int, int, int, int]
    window: int = 10
    training_mode: TrainingMode = TrainingMode.FINE_TUNE_UNION

    def __post_init__(self) -> None:
        if self.iterations < 1 or self.candidate_count < 1 or self.set_size < 1:
            raise SpecMismatchError("iterations, candidate_count, set_size must be >= 1")
        if self.window < 1:
            raise SpecMismatchError(f"window={self.window} must be >= 1")
        pair = tuple(int(s) for s in self.seed_pair)
        if len(pair) != 2:
            raise SpecMismatchError(f"seed_pair needs exactly 2 seeds, got {pair}")
        object.__setattr__(self, "seed_pair", pair)
        sizes = tuple(int(s) for s in self.partition_sizes)
        if len(sizes) != 4 or any(s < 0 for s in sizes):
            raise SpecMismatchError(f"partition_sizes must be 4 non-negative counts, got {sizes}")
        object.__setattr__(self, "partition_sizes", sizes)


@dataclass(frozen=True)
class WindowMrr:
    start: int
    end: int
    mrr: float


@dataclass(frozen=True)
class MrrReport:
    windows: tuple[WindowMrr, ...]
    overall_mrr: float
    ranks: tuple[int, ...]
    baseline: float
    truncated: bool


def rank_of(reference_index: int, second_run_scores: Sequence[float]) -> int:
    """Rank of the reference candidate under the second run, ties favor it."""
    if not 0 <= reference_index < len(second_run_scores):
        raise SpecMismatchError(
            f"reference index {reference_index} outside 0..{len(second_run_scores) - 1}"
        )
    ref = second_run_scores[reference_index]
    return 1 + sum(1 for s in second_run_scores if s > ref)


def random_mrr_baseline(candidate_count: int) -> float:
    """Expected reciprocal rank under a uniform second-run ranking: H_K/K."""
    if candidate_count < 1:
        raise SpecMismatchError(f"candidate_count={candidate_count} must be >= 1")
    harmonic = sum(Fraction(1, r) for r in range(1, candidate_count + 1))
    return float(harmonic / candidate_count)


def run_mrr_probe(
    config: MrrConfig,
    dataset: Dataset,
    *,
    jobs: int = 1,
    scorer_factory: Callable[[int, int], Callable[[CandidateSet], float]] | None = None,
) -> MrrReport:
    """Score every iteration's candidates under both seeds and rank.

    ``scorer_factory(run, iteration)`` can inject a synthetic scorer per
    pass (run 0 = reference, run 1 = second) in place of model building,
    for statistical checks of the ranking machinery.
    """
    if config.learner.input_dim != dataset.feature_dim:
        raise SpecMismatchError(
            f"learner expects dim {config.learner.input_dim}, dataset has {dataset.feature_dim}"
        )
    seed_ref, seed_alt = config.seed_pair
    pool = split_dataset(dataset, config.partition_sizes, seed_ref)
    eval_examples = dataset.subset(pool.eval)
    if not eval_examples:
        raise SpecMismatchError("eval partition must be non-empty")
    independent = config.training_mode is TrainingMode.INDEPENDENT_FROM_SCRATCH

    ranks: list[int] = []
    truncated = False
    for i in range(1, config.iterations + 1):
        scope_ref = derive_seed(seed_ref, iteration=i)
        scope_alt = derive_seed(seed_alt, iteration=i)
        try:
            candidates = sample_candidates(
                pool, config.candidate_count, config.set_size, scope_ref
            )
        except PoolExhaustedError:
            truncated = True
            break
        labeled_examples = dataset.subset(pool.labeled)
        base: ModelState | None = None
        if scorer_factory is None and not independent:
            # Shared between both passes: only the fine-tuning seeds differ.
            base = train(
                config.learner,
                labeled_examples,
                eval_examples,
                scope_ref,
                metric=config.selection_metric,
            )

        def pass_scores(run: int, scope: int) -> tuple[float, ...]:
            scorer = None if scorer_factory is None else scorer_factory(run, i)
            return oracle_candidate_scores(
                base,
                pool,
                candidates,
                dataset,
                labeled_examples,
                eval_examples,
                config.training_mode,
                config.selection_metric,
                scope,
                jobs=jobs,
                scorer=scorer,
                spec=config.learner,
            )

        reference_scores = pass_scores(0, scope_ref)
        second_scores = pass_scores(1, scope_alt)
        chosen_index = lowest_argmax(reference_scores)
        ranks.append(rank_of(chosen_index, second_scores))
        pool = commit_selection(pool, candidates[chosen_index])

    if not ranks:
        raise PoolExhaustedError("pool exhausted before the first probe iteration")
    reciprocal = [1.0 / r for r in ranks]
    windows: list[WindowMrr] = []
    for start in range(0, len(ranks), config.window):
        chunk = reciprocal[start : start + config.window]
        windows.append(
            WindowMrr(
                start=start + 1,
                end=start + len(chunk),
                mrr=sum(chunk) / len(chunk),
            )
        )
    return MrrReport(
        windows=tuple(windows),
        overall_mrr=sum(reciprocal) / len(reciprocal),
        ranks=tuple(ranks),
        baseline=random_mrr_baseline(config.candidate_count),
        truncated=truncated,
    )


def mrr_config_to_json(config: MrrConfig) -> dict:
    return {
        "iterations": config.iterations,
        "candidate_count": config.candidate_count,
        "set_size": config.set_size,
        "learner": spec_to_json(config.learner),
        "selection_metric": config.selection_metric.value,
        "seed_pair": list(config.seed_pair),
        "partition_sizes": list(config.partition_sizes),
        "window": config.window,
        "training_mode": config.training_mode.value,
    }
