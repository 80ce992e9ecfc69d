"""Trainable models with deterministic mini-batch SGD.

Two families: a convex linear softmax classifier and a non-convex
one-hidden-layer tanh perceptron. Sequence payloads are classified per
token with shared parameters, which keeps the linear family genuinely
convex.

All randomness (parameter init, per-epoch shuffles) comes from streams
derived off the caller's seed; the derived seeds are recorded in
``ModelState.seed_lineage`` so a training run can be audited draw by draw.
Identical (spec, data, seed) inputs give bit-identical parameters.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyEvalError, EmptyFineTuneError, SpecMismatchError
from .metrics import MetricKind, score
from .pool import Example
from .rng import PURPOSE_INIT, PURPOSE_SHUFFLE, SplitMix64, derive_seed

BATCH_SIZE = 8


class LearnerFamily(enum.Enum):
    LINEAR_SOFTMAX = "linear_softmax"
    MLP = "mlp"


@dataclass(frozen=True)
class LearnerSpec:
    family: LearnerFamily
    input_dim: int
    class_count: int
    hidden_dim: int = 0
    learning_rate: float = 0.1
    max_epochs: int = 200
    patience: int = 5
    stop_epsilon: float = 1e-4
    init_scale: float = 0.1

    def __post_init__(self) -> None:
        if self.input_dim < 1 or self.class_count < 1:
            raise SpecMismatchError(
                f"input_dim={self.input_dim}, class_count={self.class_count} must be >= 1"
            )
        if self.family is LearnerFamily.MLP and self.hidden_dim < 1:
            raise SpecMismatchError("mlp needs hidden_dim >= 1")
        if self.learning_rate <= 0 or self.init_scale <= 0 or self.stop_epsilon <= 0:
            raise SpecMismatchError("learning_rate, init_scale, stop_epsilon must be > 0")
        if self.max_epochs < 1 or self.patience < 1:
            raise SpecMismatchError("max_epochs and patience must be >= 1")


def parameter_count(spec: LearnerSpec) -> int:
    d, c, h = spec.input_dim, spec.class_count, spec.hidden_dim
    if spec.family is LearnerFamily.LINEAR_SOFTMAX:
        return c * d + c
    return h * d + h + c * h + c


def spec_to_json(spec: LearnerSpec) -> dict:
    return {
        "family": spec.family.value,
        "input_dim": spec.input_dim,
        "class_count": spec.class_count,
        "hidden_dim": spec.hidden_dim,
        "learning_rate": spec.learning_rate,
        "max_epochs": spec.max_epochs,
        "patience": spec.patience,
        "stop_epsilon": spec.stop_epsilon,
        "init_scale": spec.init_scale,
    }


def spec_from_json(data: dict) -> LearnerSpec:
    return LearnerSpec(
        family=LearnerFamily(data["family"]),
        input_dim=int(data["input_dim"]),
        class_count=int(data["class_count"]),
        hidden_dim=int(data.get("hidden_dim", 0)),
        learning_rate=float(data.get("learning_rate", 0.1)),
        max_epochs=int(data.get("max_epochs", 200)),
        patience=int(data.get("patience", 5)),
        stop_epsilon=float(data.get("stop_epsilon", 1e-4)),
        init_scale=float(data.get("init_scale", 0.1)),
    )


@dataclass(frozen=True, eq=False)
class ModelState:
    """Immutable snapshot: spec, flat parameter vector, seeds consumed."""

    spec: LearnerSpec
    parameters: np.ndarray
    seed_lineage: tuple[int, ...]

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, ModelState)
            and self.spec == other.spec
            and self.seed_lineage == other.seed_lineage
            and np.array_equal(self.parameters, other.parameters)
        )

    def __post_init__(self) -> None:
        params = np.asarray(self.parameters, dtype=np.float64).ravel()
        expected = parameter_count(self.spec)
        if params.size != expected:
            raise SpecMismatchError(
                f"{self.spec.family.value} wants {expected} parameters, got {params.size}"
            )
        params = params.copy()
        params.setflags(write=False)
        object.__setattr__(self, "parameters", params)
        object.__setattr__(self, "seed_lineage", tuple(int(s) for s in self.seed_lineage))

    def fingerprint(self) -> str:
        """SHA-256 of the little-endian float64 parameter bytes."""
        return hashlib.sha256(self.parameters.astype("<f8").tobytes()).hexdigest()

    def save_parameters(self, path) -> None:
        self.parameters.astype("<f8").tofile(path)


def _check_examples(spec: LearnerSpec, examples: Sequence[Example]) -> None:
    for ex in examples:
        if ex.features.shape[1] != spec.input_dim:
            raise SpecMismatchError(
                f"example {ex.id}: feature dim {ex.features.shape[1]}, spec wants {spec.input_dim}"
            )
        if int(ex.labels.max(initial=0)) >= spec.class_count:
            raise SpecMismatchError(
                f"example {ex.id}: label {int(ex.labels.max())} >= class_count {spec.class_count}"
            )


def _unpack(spec: LearnerSpec, params: np.ndarray):
    d, c, h = spec.input_dim, spec.class_count, spec.hidden_dim
    if spec.family is LearnerFamily.LINEAR_SOFTMAX:
        w = params[: c * d].reshape(c, d)
        b = params[c * d :]
        return w, b
    w1 = params[: h * d].reshape(h, d)
    b1 = params[h * d : h * d + h]
    w2 = params[h * d + h : h * d + h + c * h].reshape(c, h)
    b2 = params[h * d + h + c * h :]
    return w1, b1, w2, b2


def _logits(spec: LearnerSpec, params: np.ndarray, x: np.ndarray):
    """Logits for a (tokens, dim) matrix; also the hidden activations for mlp."""
    if spec.family is LearnerFamily.LINEAR_SOFTMAX:
        w, b = _unpack(spec, params)
        return x @ w.T + b, None
    w1, b1, w2, b2 = _unpack(spec, params)
    hidden = np.tanh(x @ w1.T + b1)
    return hidden @ w2.T + b2, hidden


def _log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def _pool_tokens(examples: Sequence[Example]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x = np.concatenate([ex.features for ex in examples], axis=0)
    y = np.concatenate([ex.labels for ex in examples])
    bounds = np.cumsum([ex.token_count for ex in examples])
    return x, y, bounds


def _flat_gradient(
    spec: LearnerSpec, params: np.ndarray, x: np.ndarray, y: np.ndarray
) -> np.ndarray:
    """Gradient of the mean token cross-entropy at ``params``."""
    n = x.shape[0]
    z, hidden = _logits(spec, params, x)
    probs = np.exp(_log_softmax(z))
    delta = probs
    delta[np.arange(n), y] -= 1.0
    delta /= n
    if spec.family is LearnerFamily.LINEAR_SOFTMAX:
        return np.concatenate([(delta.T @ x).ravel(), delta.sum(axis=0)])
    _, _, w2, _ = _unpack(spec, params)
    g_w2 = delta.T @ hidden
    g_b2 = delta.sum(axis=0)
    d_act = (delta @ w2) * (1.0 - hidden * hidden)
    g_w1 = d_act.T @ x
    g_b1 = d_act.sum(axis=0)
    return np.concatenate([g_w1.ravel(), g_b1, g_w2.ravel(), g_b2])


def _flat_score(
    spec: LearnerSpec,
    params: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    bounds: np.ndarray,
    metric: MetricKind,
) -> float:
    z, _ = _logits(spec, params, x)
    preds = z.argmax(axis=1)
    if metric is MetricKind.ACCURACY:
        return float(np.mean(preds == y))
    cuts = bounds[:-1]
    return score(
        np.split(preds, cuts), np.split(y, cuts), metric, class_count=spec.class_count
    )


def _init_params(spec: LearnerSpec, init_seed: int) -> np.ndarray:
    stream = SplitMix64(init_seed)
    total = parameter_count(spec)
    return np.array(
        [(2.0 * stream.next_float() - 1.0) * spec.init_scale for _ in range(total)]
    )


def _sgd(
    spec: LearnerSpec,
    params: np.ndarray,
    examples: list[Example],
    eval_examples: list[Example],
    seed: int,
    lineage: list[int],
    metric: MetricKind,
) -> np.ndarray:
    if not eval_examples:
        raise EmptyEvalError("early stopping needs a non-empty eval set")
    feats = [ex.features for ex in examples]
    labels = [ex.labels for ex in examples]
    eval_x, eval_y, eval_bounds = _pool_tokens(eval_examples)
    best = _flat_score(spec, params, eval_x, eval_y, eval_bounds, metric)
    plateau = 0
    for epoch in range(spec.max_epochs):
        shuffle_seed = derive_seed(seed, iteration=epoch, purpose=PURPOSE_SHUFFLE)
        lineage.append(shuffle_seed)
        order = list(range(len(examples)))
        SplitMix64(shuffle_seed).shuffle(order)
        for start in range(0, len(order), BATCH_SIZE):
            batch = order[start : start + BATCH_SIZE]
            x = np.concatenate([feats[i] for i in batch], axis=0)
            y = np.concatenate([labels[i] for i in batch])
            params = params - spec.learning_rate * _flat_gradient(spec, params, x, y)
        current = _flat_score(spec, params, eval_x, eval_y, eval_bounds, metric)
        # Significant improvement means beating the best score so far by
        # at least stop_epsilon; patience counts consecutive misses.
        if current - best >= spec.stop_epsilon:
            plateau = 0
        else:
            plateau += 1
        if current > best:
            best = current
        if plateau >= spec.patience:
            break
    return params


def initialize(spec: LearnerSpec, seed: int) -> ModelState:
    """Seeded uniform init in [-init_scale, init_scale], no training."""
    init_seed = derive_seed(seed, purpose=PURPOSE_INIT)
    return ModelState(
        spec=spec, parameters=_init_params(spec, init_seed), seed_lineage=(init_seed,)
    )


def train(
    spec: LearnerSpec,
    labeled: Sequence[Example],
    eval_examples: Sequence[Example],
    seed: int,
    *,
    metric: MetricKind = MetricKind.ACCURACY,
) -> ModelState:
    """Init from seed, then SGD with early stopping on the eval metric.

    An empty labeled set returns the initialized, untrained model.
    """
    _check_examples(spec, labeled)
    _check_examples(spec, eval_examples)
    init_seed = derive_seed(seed, purpose=PURPOSE_INIT)
    params = _init_params(spec, init_seed)
    lineage = [init_seed]
    if len(labeled) > 0:
        params = _sgd(spec, params, list(labeled), list(eval_examples), seed, lineage, metric)
    return ModelState(spec=spec, parameters=params, seed_lineage=tuple(lineage))


def fine_tune(
    base: ModelState,
    examples: Sequence[Example],
    eval_examples: Sequence[Example],
    seed: int,
    *,
    metric: MetricKind = MetricKind.ACCURACY,
) -> ModelState:
    """Continue SGD from ``base.parameters`` on ``examples``; base unchanged."""
    if len(examples) == 0:
        raise EmptyFineTuneError("fine_tune needs at least one example")
    _check_examples(base.spec, examples)
    _check_examples(base.spec, eval_examples)
    lineage = list(base.seed_lineage)
    params = _sgd(
        base.spec,
        base.parameters.copy(),
        list(examples),
        list(eval_examples),
        seed,
        lineage,
        metric,
    )
    return ModelState(spec=base.spec, parameters=params, seed_lineage=tuple(lineage))


def predict_distribution(model: ModelState, example: Example) -> np.ndarray:
    """Per-token softmax distributions, shape (token_count, class_count)."""
    _check_examples(model.spec, [example])
    z, _ = _logits(model.spec, model.parameters, example.features)
    return np.exp(_log_softmax(z))


def evaluate(
    model: ModelState, examples: Sequence[Example], metric: MetricKind
) -> float:
    """Score argmax predictions on ``examples`` with the named metric."""
    if len(examples) == 0:
        raise EmptyEvalError("evaluate needs at least one example")
    _check_examples(model.spec, examples)
    x, y, bounds = _pool_tokens(examples)
    return _flat_score(model.spec, model.parameters, x, y, bounds, metric)


def loss(model: ModelState, examples: Sequence[Example]) -> float:
    """Mean token cross-entropy of the gold labels."""
    if len(examples) == 0:
        raise EmptyEvalError("loss needs at least one example")
    _check_examples(model.spec, examples)
    x, y, _ = _pool_tokens(examples)
    logp = _log_softmax(_logits(model.spec, model.parameters, x)[0])
    return float(-logp[np.arange(x.shape[0]), y].mean())


def gradient(model: ModelState, examples: Sequence[Example]) -> np.ndarray:
    """Analytic gradient of ``loss`` at the model's parameters."""
    if len(examples) == 0:
        raise EmptyEvalError("gradient needs at least one example")
    _check_examples(model.spec, examples)
    x, y, _ = _pool_tokens(examples)
    return _flat_gradient(model.spec, model.parameters, x, y)
