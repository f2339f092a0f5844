"""Hyper-heuristic evolution of decision-tree induction algorithms.

Each individual is a genome over a :class:`ComponentSpace`; its fitness is the
weighted F-measure on a meta-validation set of the tree that the decoded
algorithm induces from the meta-training set. The meta-split is redrawn every
``resample_every_s`` generations, and the best individual of each window is
archived. The final answer is the archived individual with the best mean
F-measure over a shared inner cross-validation of the whole training set.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .dataset import Dataset, FoldPlan, meta_split, stratified_kfold
from .dtree import EvaluationTimeout, induce, tree_predict
from .metrics import confusion_codes, fmeasure
from .search_space import ComponentSpace, Genome, crossover, decode, mutate, random_genome

log = logging.getLogger(__name__)

_SELECTION_WINDOW = 1_000_000  # seed-stream offset for inner-CV evaluations


@dataclass(frozen=True)
class EvolutionParams:
    population: int = 100
    generations_g: int = 100
    resample_every_s: int = 5
    tournament_k: int = 2
    elitism_rate: float = 0.05
    crossover_rate: float = 0.95
    mutation_rate: float = 0.05
    valid_fraction: float = 0.25
    inner_cv_k: int = 5
    per_individual_timeout: float | None = None

    def __post_init__(self):
        for name in ("elitism_rate", "crossover_rate", "mutation_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.population < 1 or self.generations_g < 1 or self.resample_every_s < 1:
            raise ValueError("population, generations and resampling period must be positive")
        if self.tournament_k < 1:
            raise ValueError("tournament size must be at least 1")

    @property
    def n_elite(self) -> int:
        # at least one elite, so small populations keep the monotone-best guarantee
        return min(self.population, max(1, int(round(self.elitism_rate * self.population))))


class BudgetClock:
    """Wall-clock deadline, optionally combined with an evaluation-count cap.

    Once :meth:`expired` has returned True it keeps doing so.
    """

    def __init__(self, seconds: float | None = None, max_evaluations: int | None = None):
        self.seconds = seconds
        self.max_evaluations = max_evaluations
        self.start = time.monotonic()
        self.deadline = None if seconds is None else self.start + seconds
        self.evaluations = 0
        self._expired = False

    def tick(self) -> None:
        self.evaluations += 1

    def expired(self) -> bool:
        if not self._expired:
            if self.deadline is not None and time.monotonic() >= self.deadline:
                self._expired = True
            elif self.max_evaluations is not None and self.evaluations >= self.max_evaluations:
                self._expired = True
        return self._expired

    def elapsed(self) -> float:
        return time.monotonic() - self.start


class Fitness(NamedTuple):
    value: float
    timed_out: bool = False


class ArchiveEntry(NamedTuple):
    genome: Genome
    fitness: float
    generation: int


class GenerationStats(NamedTuple):
    generation: int
    best_f: float
    mean_f: float
    elapsed_s: float


@dataclass
class EvolutionResult:
    best_genome: Genome
    bestset: list[ArchiveEntry]
    trace: list[GenerationStats]
    completed_generations: int
    evaluations: int
    selection_scores: list[float]
    selection_folds: FoldPlan | None
    meta_train: Dataset = field(repr=False)
    meta_valid: Dataset = field(repr=False)
    timed_out: int = 0

    def trace_csv(self) -> str:
        lines = ["generation,best_f,mean_f,elapsed_s"]
        lines += [f"{t.generation},{t.best_f:.6f},{t.mean_f:.6f},{t.elapsed_s:.3f}"
                  for t in self.trace]
        return "\n".join(lines) + "\n"


def evaluation_seed(master_seed: int, window: int, genome: Genome) -> np.random.SeedSequence:
    """Seed for one fitness evaluation, a pure function of the genome's decoded content."""
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(window), *genome.key))


def _weighted_f(tree, data: Dataset) -> float:
    return fmeasure(confusion_codes(data.y, tree_predict(tree, data), data.n_classes))


def fitness(genome: Genome, meta_train: Dataset, meta_valid: Dataset,
            timeout: float | None = None, seed=0) -> Fitness:
    """Weighted F-measure on ``meta_valid`` of the tree induced on ``meta_train``.

    A timed-out evaluation scores 0 and is flagged.
    """
    deadline = None if timeout is None else time.monotonic() + timeout
    try:
        tree = induce(decode(genome), meta_train, seed, deadline)
    except EvaluationTimeout:
        return Fitness(0.0, True)
    return Fitness(_weighted_f(tree, meta_valid))


def tournament_select(population_with_fitness, k: int, rng: np.random.Generator):
    """Draw ``k`` entrants with replacement and return the fittest genome.

    ``population_with_fitness`` is a sequence of ``(genome, fitness)``; equal
    fitness goes to the entrant with the lowest population index.
    """
    n = len(population_with_fitness)
    if n == 0:
        raise ValueError("empty population")
    draws = rng.integers(0, n, size=k)
    best = min(draws, key=lambda i: (-population_with_fitness[i][1], i))
    return population_with_fitness[best][0]


def select_from_bestset(bestset, train: Dataset, inner_cv_k: int, seed,
                        timeout: float | None = None):
    """Pick the archived genome with the best mean inner-CV weighted F-measure.

    All candidates are scored on the same fold plan. Returns
    ``(genome, scores, folds)``; ``folds`` is None when the training set is
    too small to cross-validate and the first archived genome is returned.
    """
    genomes = [e.genome if isinstance(e, ArchiveEntry) else e for e in bestset]
    if not genomes:
        raise ValueError("empty BestSet")
    if len(genomes) == 1:
        return genomes[0], [math.nan], None
    k = min(inner_cv_k, len(train))
    if k < 2:
        return genomes[0], [math.nan] * len(genomes), None
    folds = stratified_kfold(train, k, seed)
    parts = [(train.subset(folds.train_indices(f)), train.subset(folds.test_indices(f)))
             for f in range(k)]
    scores = []
    for g in genomes:
        per_fold = [fitness(g, tr, te, timeout,
                            evaluation_seed(seed, _SELECTION_WINDOW + f, g)).value
                    for f, (tr, te) in enumerate(parts)]
        scores.append(float(np.mean(per_fold)))
    best = int(np.argmax(scores))  # first maximum = earliest archived
    return genomes[best], scores, folds


def _best_index(fits) -> int:
    return int(np.argmax(fits))


def evolve(space: ComponentSpace, train: Dataset, params: EvolutionParams,
           budget: BudgetClock | None = None, seed: int = 0) -> EvolutionResult:
    if np.count_nonzero(train.class_counts()) < 2:
        raise ValueError("training data needs at least two classes")
    budget = budget or BudgetClock()
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0]))
    window = 0
    meta_tr, meta_va = meta_split(train, params.valid_fraction, (int(seed), 1, window))
    cache: dict[tuple, float] = {}
    timed_out = 0

    def evaluate(genome: Genome) -> float:
        nonlocal timed_out
        key = genome.key
        if key not in cache:
            result = fitness(genome, meta_tr, meta_va, params.per_individual_timeout,
                             evaluation_seed(seed, window, genome))
            budget.tick()
            timed_out += result.timed_out
            cache[key] = result.value
        return cache[key]

    population = [random_genome(space, rng) for _ in range(params.population)]
    bestset: list[ArchiveEntry] = []
    trace: list[GenerationStats] = []

    if budget.expired():
        fits = [evaluate(g) for g in population]
        b = _best_index(fits)
        bestset.append(ArchiveEntry(population[b], fits[b], 0))
        trace.append(GenerationStats(0, max(fits), float(np.mean(fits)), budget.elapsed()))
        return EvolutionResult(population[b], bestset, trace, 0, budget.evaluations,
                               [math.nan], None, meta_tr, meta_va, timed_out)

    completed = 0
    last_full: tuple[list[Genome], list[float]] | None = None
    partial: tuple[list[Genome], list[float]] = ([], [])
    while completed < params.generations_g:
        fits = []
        for g in population:
            if g.key not in cache and budget.expired():
                break
            fits.append(evaluate(g))
        if len(fits) < len(population):
            partial = (population[:len(fits)], fits)
            break
        completed += 1
        last_full = (population, fits)
        trace.append(GenerationStats(completed, max(fits), float(np.mean(fits)),
                                     budget.elapsed()))
        ranked = sorted(range(len(population)), key=lambda i: (-fits[i], i))
        if completed % params.resample_every_s == 0:
            b = ranked[0]
            bestset.append(ArchiveEntry(population[b], fits[b], completed))
            window += 1
            meta_tr, meta_va = meta_split(train, params.valid_fraction, (int(seed), 1, window))
            cache = {}
        if completed >= params.generations_g:
            break
        population = _next_generation(population, fits, ranked, params, rng)

    if completed == 0:
        genomes, fits = partial
        b = _best_index(fits)
        bestset.append(ArchiveEntry(genomes[b], fits[b], 0))
    elif completed % params.resample_every_s != 0:
        genomes, fits = last_full
        b = _best_index(fits)
        bestset.append(ArchiveEntry(genomes[b], fits[b], completed))

    best, scores, folds = select_from_bestset(bestset, train, params.inner_cv_k, int(seed),
                                              params.per_individual_timeout)
    log.debug("evolve: %d generations, %d evaluations, archive %d", completed,
              budget.evaluations, len(bestset))
    return EvolutionResult(best, bestset, trace, completed, budget.evaluations, scores, folds,
                           meta_tr, meta_va, timed_out)


def _next_generation(population, fits, ranked, params: EvolutionParams, rng):
    pool = list(zip(population, fits))
    nxt = [population[i] for i in ranked[:params.n_elite]]
    while len(nxt) < params.population:
        a = tournament_select(pool, params.tournament_k, rng)
        b = tournament_select(pool, params.tournament_k, rng)
        if rng.random() < params.crossover_rate:
            a, b = crossover(a, b, rng)
        for child in (a, b):
            if len(nxt) < params.population:
                nxt.append(mutate(child, params.mutation_rate, rng))
    return nxt
