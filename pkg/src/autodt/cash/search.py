"""Budgeted sequential model-based search over a CASH space, and its random control."""

from __future__ import annotations

import csv
import io
import logging
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ..dataset import Dataset, meta_split, stratified_kfold
from ..dtree import EvaluationTimeout
from ..evolution import BudgetClock
from ..metrics import MetricSet, score_predictions
from ..search_space import CashConfig, ComponentSpace, Genome, decode, random_genome
from .learners import train_learner
from .surrogate import SurrogateModel, surrogate_update

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SmboParams:
    epsilon: float = 0.1
    n_sample: int = 500
    valid_fraction: float = 0.25
    internal_k: int | None = None  # k-fold mean instead of a single holdout
    eval_timeout: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must be in [0, 1]")
        if self.n_sample < 1:
            raise ValueError("n_sample must be at least 1")
        if self.internal_k is not None and self.internal_k < 2:
            raise ValueError("internal_k must be at least 2")


class Evaluation(NamedTuple):
    loss: float
    metrics: MetricSet | None
    timed_out: bool = False


class HistoryEntry(NamedTuple):
    iteration: int
    genome: Genome
    config: CashConfig
    loss: float
    elapsed_s: float
    metrics: MetricSet | None = None
    timed_out: bool = False


@dataclass
class SearchHistory:
    """Append-only record of evaluated configurations and their losses."""

    space: ComponentSpace
    entries: list[HistoryEntry] = field(default_factory=list)

    def append(self, entry: HistoryEntry) -> None:
        if entry.genome.space != self.space:
            raise ValueError("configuration is not from this space")
        self.entries.append(entry)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i) -> HistoryEntry:
        return self.entries[i]

    def best_index(self) -> int:
        if not self.entries:
            raise ValueError("empty history")
        return int(np.argmin([e.loss for e in self.entries]))  # earliest on ties

    def best(self) -> HistoryEntry:
        return self.entries[self.best_index()]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", *self.space.names, "loss", "elapsed_s"])
        for e in self.entries:
            mask = self.space.active_mask(np.asarray(e.genome.values))[0]
            genes = [g.values[v] if m else "" for g, v, m
                     in zip(self.space.genes, e.genome.values, mask)]
            w.writerow([e.iteration, *genes, f"{e.loss:.6f}", f"{e.elapsed_s:.3f}"])
        return buf.getvalue()


def _mean_metrics(sets: list[MetricSet]) -> MetricSet:
    return MetricSet(*(float(np.mean(col)) for col in zip(*(m.as_tuple() for m in sets))))


def loss(config: CashConfig, d_train: Dataset, d_valid: Dataset, seed=0,
         timeout: float | None = None) -> Evaluation:
    """Error rate on ``d_valid`` of ``config`` trained on ``d_train``; 1.0 on timeout."""
    if len(d_valid) == 0:
        raise ValueError("empty validation set")
    deadline = None if timeout is None else time.monotonic() + timeout
    try:
        model = train_learner(config, d_train, seed, deadline)
    except EvaluationTimeout:
        return Evaluation(1.0, None, True)
    m = score_predictions(d_valid.y, model.predict(d_valid.X), d_valid.n_classes)
    return Evaluation(1.0 - m.accuracy, m)


def propose_candidate(model: SurrogateModel, space: ComponentSpace, rng: np.random.Generator,
                      n_sample: int = 500, epsilon: float = 0.1) -> Genome:
    """With probability ``epsilon`` a uniform draw, else the best of ``n_sample`` draws."""
    if n_sample < 1:
        raise ValueError("n_sample must be at least 1")
    if rng.random() < epsilon:
        return random_genome(space, rng)
    pool = [random_genome(space, rng) for _ in range(n_sample)]
    return pool[int(np.argmin(model.predict(pool)))]


def _evaluator(train: Dataset, params: SmboParams, seed: int):
    if params.internal_k is None:
        parts = [meta_split(train, params.valid_fraction, (int(seed), 4))]
    else:
        folds = stratified_kfold(train, min(params.internal_k, len(train)), (int(seed), 4))
        parts = [(train.subset(folds.train_indices(f)), train.subset(folds.test_indices(f)))
                 for f in range(folds.k)]

    def evaluate(genome: Genome) -> Evaluation:
        config = decode(genome)
        ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(5, *genome.key))
        results = []
        for tr, va in parts:
            r = loss(config, tr, va, ss, params.eval_timeout)
            if r.timed_out:
                return r
            results.append(r)
        return Evaluation(float(np.mean([r.loss for r in results])),
                          _mean_metrics([r.metrics for r in results]))

    return evaluate


def smbo_search(space: ComponentSpace, train: Dataset, budget: BudgetClock | None = None,
                params: SmboParams | None = None, seed: int = 0):
    """Propose, evaluate, record and refit until the budget expires.

    Returns ``(best_genome, history)`` where the best genome is the earliest
    entry of minimal loss. If the budget has already expired, exactly one
    random configuration is evaluated.
    """
    if space.kind != "cash":
        raise ValueError("smbo_search needs a CASH space")
    if np.count_nonzero(train.class_counts()) < 2:
        raise ValueError("training data needs at least two classes")
    params = params or SmboParams()
    budget = budget or BudgetClock(max_evaluations=100)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 3]))
    evaluate = _evaluator(train, params, seed)
    history = SearchHistory(space)
    model = SurrogateModel(space)
    start = time.monotonic()
    refit = params.epsilon < 1.0
    while True:
        if budget.expired():
            if history.entries:
                break
            genome = random_genome(space, rng)
        else:
            genome = propose_candidate(model, space, rng, params.n_sample, params.epsilon)
        result = evaluate(genome)
        budget.tick()
        history.append(HistoryEntry(len(history), genome, decode(genome), result.loss,
                                    time.monotonic() - start, result.metrics, result.timed_out))
        if refit:
            model = surrogate_update(model, history)
    log.debug("smbo: %d evaluations, best loss %.4f", len(history), history.best().loss)
    return history.best().genome, history


def random_search(space: ComponentSpace, train: Dataset, budget: BudgetClock | None = None,
                  seed: int = 0, params: SmboParams | None = None):
    """Uniform random proposals; the SMBO loop with ``epsilon = 1``."""
    base = params or SmboParams()
    p = SmboParams(1.0, base.n_sample, base.valid_fraction, base.internal_k, base.eval_timeout)
    return smbo_search(space, train, budget, p, seed)
