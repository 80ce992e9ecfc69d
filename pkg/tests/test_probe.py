import pytest

from alol.datagen import GenKind, GenSpec, generate
from alol.errors import PoolExhaustedError, SpecMismatchError
from alol.learners import LearnerFamily, LearnerSpec
from alol.metrics import MetricKind
from alol.policies import TrainingMode
from alol.probe import (
    MrrConfig,
    mrr_config_to_json,
    random_mrr_baseline,
    rank_of,
    run_mrr_probe,
)
from alol.rng import SplitMix64


def cluster_dataset(n=64, seed=21, noise=0.2):
    spec = GenSpec(
        kind=GenKind.GAUSSIAN_CLUSTERS,
        n=n,
        input_dim=4,
        class_count=2,
        cluster_separation=4.0,
        noise_fraction=noise,
        seed=seed,
    )
    dataset, _ = generate(spec)
    return dataset


def linear_learner(**overrides):
    base = dict(
        family=LearnerFamily.LINEAR_SOFTMAX,
        input_dim=4,
        class_count=2,
        learning_rate=0.5,
        max_epochs=20,
    )
    base.update(overrides)
    return LearnerSpec(**base)


def make_config(**overrides):
    base = dict(
        iterations=5,
        candidate_count=4,
        set_size=1,
        learner=linear_learner(),
        selection_metric=MetricKind.ACCURACY,
        seed_pair=(31, 32),
        partition_sizes=(6, 44, 8, 6),
    )
    base.update(overrides)
    return MrrConfig(**base)


def test_rank_of_counts_strictly_greater():
    assert rank_of(0, [0.5, 0.7, 0.6]) == 3
    assert rank_of(1, [0.5, 0.7, 0.6]) == 1
    assert rank_of(2, [0.5, 0.7, 0.6]) == 2


def test_rank_of_ties_favor_reference():
    assert rank_of(0, [0.5, 0.5]) == 1
    assert rank_of(1, [0.5, 0.5]) == 1
    assert rank_of(2, [0.9, 0.4, 0.4, 0.4]) == 2


def test_rank_of_rejects_bad_index():
    with pytest.raises(SpecMismatchError):
        rank_of(3, [0.1, 0.2, 0.3])
    with pytest.raises(SpecMismatchError):
        rank_of(-1, [0.1])


def test_random_baseline_closed_forms():
    assert random_mrr_baseline(1) == 1.0
    assert random_mrr_baseline(2) == 0.75
    assert random_mrr_baseline(5) == 137 / 300
    with pytest.raises(SpecMismatchError):
        random_mrr_baseline(0)


def test_random_baseline_matches_uniform_rank_simulation():
    stream = SplitMix64(515)
    trials = 100_000
    total = sum(1.0 / (stream.next_below(5) + 1) for _ in range(trials))
    assert total / trials == pytest.approx(137 / 300, abs=0.005)


@pytest.mark.parametrize(
    "learner",
    [
        linear_learner(),
        linear_learner(family=LearnerFamily.MLP, hidden_dim=6),
    ],
)
def test_identical_seeds_give_perfect_mrr(learner):
    config = make_config(learner=learner, seed_pair=(31, 31))
    report = run_mrr_probe(config, cluster_dataset())
    assert report.overall_mrr == 1.0
    assert report.ranks == (1,) * 5


def test_identical_seeds_perfect_under_independent_mode():
    config = make_config(
        seed_pair=(31, 31),
        training_mode=TrainingMode.INDEPENDENT_FROM_SCRATCH,
    )
    report = run_mrr_probe(config, cluster_dataset())
    assert report.overall_mrr == 1.0


def test_probe_is_deterministic():
    config = make_config()
    dataset = cluster_dataset()
    assert run_mrr_probe(config, dataset) == run_mrr_probe(config, dataset)


def test_injected_scores_control_ranks():
    # Iteration 1: both passes agree on candidate 2 -> rank 1.
    # Iteration 2: reference picks 0, second pass puts two above it -> rank 3.
    tables = {
        (0, 1): [0.1, 0.2, 0.9, 0.3],
        (1, 1): [0.4, 0.1, 0.8, 0.2],
        (0, 2): [0.9, 0.1, 0.2, 0.3],
        (1, 2): [0.5, 0.9, 0.7, 0.1],
    }

    def factory(run, iteration):
        return lambda candidate: tables[(run, iteration)][candidate.candidate_index]

    config = make_config(iterations=2)
    report = run_mrr_probe(config, cluster_dataset(), scorer_factory=factory)
    assert report.ranks == (1, 3)
    assert report.overall_mrr == pytest.approx((1.0 + 1 / 3) / 2)


def test_uniform_second_pass_approaches_harmonic_baseline():
    streams = {}

    def factory(run, iteration):
        stream = streams.setdefault(run, SplitMix64(900 + run))
        return lambda candidate: stream.next_float()

    config = make_config(
        iterations=2000,
        candidate_count=5,
        partition_sizes=(0, 2050, 4, 0),
    )
    report = run_mrr_probe(config, cluster_dataset(n=2054), scorer_factory=factory)
    assert report.baseline == pytest.approx(137 / 300)
    assert report.overall_mrr == pytest.approx(137 / 300, abs=0.02)


def test_windows_partition_the_ranks():
    tables = {}

    def factory(run, iteration):
        return lambda candidate: float(-candidate.candidate_index * (run + 1))

    config = make_config(iterations=25, window=10, partition_sizes=(2, 48, 4, 2))
    report = run_mrr_probe(config, cluster_dataset(n=56), scorer_factory=factory)
    spans = [(w.start, w.end) for w in report.windows]
    assert spans == [(1, 10), (11, 20), (21, 25)]
    weighted = sum(w.mrr * (w.end - w.start + 1) for w in report.windows)
    assert weighted / 25 == pytest.approx(report.overall_mrr)


def test_rank_order_invariant_under_monotone_transform():
    def base_factory(run, iteration):
        stream = SplitMix64(run * 1000 + iteration)
        return lambda candidate: stream.next_float() + candidate.candidate_index

    def scaled_factory(run, iteration):
        inner = base_factory(run, iteration)
        return lambda candidate: 2.0 * inner(candidate) + 1.0

    config = make_config(iterations=8)
    dataset = cluster_dataset()
    plain = run_mrr_probe(config, dataset, scorer_factory=base_factory)
    scaled = run_mrr_probe(config, dataset, scorer_factory=scaled_factory)
    assert plain.ranks == scaled.ranks


def test_probe_truncates_when_pool_runs_dry():
    config = make_config(iterations=10, partition_sizes=(4, 3, 6, 3))
    report = run_mrr_probe(config, cluster_dataset(n=16))
    assert report.truncated
    assert len(report.ranks) == 3


def test_probe_raises_when_no_iteration_possible():
    config = make_config(iterations=4, partition_sizes=(4, 0, 6, 6))
    with pytest.raises(PoolExhaustedError):
        run_mrr_probe(config, cluster_dataset(n=16))


def test_config_validation_and_json():
    with pytest.raises(SpecMismatchError):
        make_config(iterations=0)
    with pytest.raises(SpecMismatchError):
        make_config(window=0)
    with pytest.raises(SpecMismatchError):
        make_config(seed_pair=(1, 2, 3))
    data = mrr_config_to_json(make_config())
    assert data["seed_pair"] == [31, 32]
    assert data["training_mode"] == "fine_tune_union"
    assert data["selection_metric"] == "accuracy"
