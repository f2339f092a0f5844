"""Experiment orchestration: outer cross-validation x seeds x budgets x methods.

Each cell searches on the outer-training portion under a fresh
:class:`BudgetClock`, retrains the returned configuration on the whole
training portion and scores it once on the held-out fold. Cells are
aggregated as the mean over folds, then over seeds.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import stats as sps

from .cash import MajorityModel, SmboParams, TreeModel, random_search, smbo_search, train_learner
from .dataset import Dataset, FoldPlan, load_dataset, stratified_kfold
from .dtree import induce, save_model
from .evolution import BudgetClock, EvolutionParams, evolve
from .kvconfig import ConfigError, parse_kv, split_list
from .metrics import METRIC_NAMES, MetricSet, score_predictions
from .search_space import decode, default_cash_space, default_dt_space
from .stats import (ResultMatrix, count_wins, rank_report, wilcoxon)

log = logging.getLogger(__name__)

METHODS = ("evolve_dt", "smbo_cash", "random_cash", "majority")
DEFAULT_BUDGETS = tuple(float(b) for b in range(1000, 10001, 1000))
WORKERS_ENV = "AUTODT_WORKERS"


def _opt_float(v: str) -> float | None:
    return None if v.lower() in ("", "none") else float(v)


def _opt_int(v: str) -> int | None:
    return None if v.lower() in ("", "none") else int(v)


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: tuple[str, ...]
    methods: tuple[str, ...] = ("evolve_dt", "smbo_cash")
    budgets: tuple[float, ...] = DEFAULT_BUDGETS
    budget_scale: float = 1.0
    outer_k: int = 10
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5)
    metrics: tuple[str, ...] = ("accuracy", "gmean")
    population: int = 100
    generations: int = 100
    resample_every: int = 5
    inner_cv_k: int = 5
    valid_fraction: float = 0.25
    epsilon: float = 0.1
    n_sample: int = 500
    internal_k: int | None = None
    cash_timeout_fraction: float | None = None
    max_evaluations: int | None = None
    alpha: float = 0.05
    output: str = "results"
    save_models: bool = False

    def __post_init__(self):
        if not self.datasets:
            raise ConfigError("no datasets given")
        unknown = set(self.methods) - set(METHODS)
        if unknown or not self.methods:
            raise ConfigError(f"methods must be a non-empty subset of {METHODS}")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError("duplicate method")
        if not self.budgets or any(b <= 0 for b in self.budgets):
            raise ConfigError("budgets must be positive")
        if list(self.budgets) != sorted(set(self.budgets)):
            raise ConfigError("budgets must be strictly increasing")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if self.budget_scale <= 0:
            raise ConfigError("budget_scale must be positive")
        if self.outer_k < 2:
            raise ConfigError("outer_k must be at least 2")
        bad = set(self.metrics) - set(METRIC_NAMES)
        if bad or not self.metrics:
            raise ConfigError(f"metrics must be a non-empty subset of {METRIC_NAMES}")

    def seconds(self, budget: float) -> float:
        return budget * self.budget_scale

    def evolution_params(self) -> EvolutionParams:
        return EvolutionParams(population=self.population, generations_g=self.generations,
                               resample_every_s=self.resample_every,
                               valid_fraction=self.valid_fraction, inner_cv_k=self.inner_cv_k)

    def smbo_params(self, seconds: float) -> SmboParams:
        timeout = None if self.cash_timeout_fraction is None else seconds * self.cash_timeout_fraction
        return SmboParams(self.epsilon, self.n_sample, self.valid_fraction, self.internal_k, timeout)


_CONFIG_PARSERS: dict[str, Callable[[str], object]] = {
    "datasets": lambda v: tuple(split_list(v)),
    "methods": lambda v: tuple(split_list(v)),
    "budgets": lambda v: tuple(float(x) for x in split_list(v)),
    "budget_scale": float,
    "outer_k": int,
    "seeds": lambda v: tuple(int(x) for x in split_list(v)),
    "metrics": lambda v: tuple(split_list(v)),
    "population": int,
    "generations": int,
    "resample_every": int,
    "inner_cv_k": int,
    "valid_fraction": float,
    "epsilon": float,
    "n_sample": int,
    "internal_k": _opt_int,
    "cash_timeout_fraction": _opt_float,
    "max_evaluations": _opt_int,
    "alpha": float,
    "output": str,
    "save_models": lambda v: v.lower() in ("1", "true", "yes"),
}


def parse_config(text: str, base_dir: str | os.PathLike | None = None) -> ExperimentConfig:
    """Read the ``key = value`` experiment format; relative paths resolve against ``base_dir``."""
    raw = parse_kv(text)
    unknown = set(raw) - set(_CONFIG_PARSERS)
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(sorted(unknown))}")
    if "datasets" not in raw:
        raise ConfigError("missing required key 'datasets'")
    kwargs = {}
    for key, value in raw.items():
        try:
            kwargs[key] = _CONFIG_PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from None
    if base_dir is not None:
        base = Path(base_dir)
        kwargs["datasets"] = tuple(str(p if Path(p).is_absolute() else base / p)
                                   for p in kwargs["datasets"])
        if not Path(kwargs.get("output", "results")).is_absolute():
            kwargs["output"] = str(base / kwargs.get("output", "results"))
    return ExperimentConfig(**kwargs)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), path.parent)


# --------------------------------------------------------------------------- methods

class SearchOutcome(NamedTuple):
    fit: Callable[[Dataset], object]  # retrains the chosen configuration
    description: str
    search_metrics: MetricSet | None
    evaluations: int
    tree_config: object = None


def _search_evolve(train, clock, seed, cfg: ExperimentConfig, seconds) -> SearchOutcome:
    res = evolve(default_dt_space(), train, cfg.evolution_params(), clock, seed)
    dt = decode(res.best_genome)
    tree = induce(dt, res.meta_train, seed)
    va = res.meta_valid
    val = score_predictions(va.y, TreeModel(tree).predict(va.X), va.n_classes)
    return SearchOutcome(lambda d: TreeModel(induce(dt, d, seed)), dt.describe(), val,
                         res.evaluations, dt)


def _search_cash(search):
    def run(train, clock, seed, cfg: ExperimentConfig, seconds) -> SearchOutcome:
        params = cfg.smbo_params(seconds)
        if search is random_search:
            best, hist = random_search(default_cash_space(), train, clock, seed, params)
        else:
            best, hist = smbo_search(default_cash_space(), train, clock, params, seed)
        config = decode(best)
        tree_cfg = config.params if config.family == "component_tree" else None
        return SearchOutcome(lambda d: train_learner(config, d, seed), config.describe(),
                             hist.best().metrics, len(hist), tree_cfg)
    return run


def _search_majority(train, clock, seed, cfg, seconds) -> SearchOutcome:
    return SearchOutcome(MajorityModel, "majority", None, 0)


SEARCHERS: dict[str, Callable[..., SearchOutcome]] = {
    "evolve_dt": _search_evolve,
    "smbo_cash": _search_cash(smbo_search),
    "random_cash": _search_cash(random_search),
    "majority": _search_majority,
}


# --------------------------------------------------------------------------- records

@dataclass(frozen=True)
class RunRecord:
    dataset: str
    method: str
    budget: float
    seed: int
    fold: int
    search_metrics: MetricSet | None
    test_metrics: MetricSet
    elapsed_s: float
    evaluations: int
    configuration: str


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list[RunRecord]
    fold_plans: dict[tuple[str, int], FoldPlan] = field(default_factory=dict)

    def matrix(self, metric: str, budget: float) -> "Aggregate":
        return aggregate(self.records, metric, budget)


class _Cell(NamedTuple):
    dataset_name: str
    train: Dataset
    test: Dataset
    method: str
    budget: float
    seed: int
    fold: int
    config: ExperimentConfig


def _run_cell(cell: _Cell) -> RunRecord:
    cfg = cell.config
    seconds = cfg.seconds(cell.budget)
    assert not np.intersect1d(cell.train.row_ids, cell.test.row_ids).size, "test rows leaked"
    clock = BudgetClock(seconds, cfg.max_evaluations)
    outcome = SEARCHERS[cell.method](cell.train, clock, cell.seed, cfg, seconds)
    elapsed = clock.elapsed()
    model = outcome.fit(cell.train)
    # The held-out fold is touched only here, after the search has returned.
    test = score_predictions(cell.test.y, model.predict(cell.test.X), cell.test.n_classes)
    if cfg.save_models and isinstance(model, TreeModel):
        out = Path(cfg.output) / "models"
        out.mkdir(parents=True, exist_ok=True)
        save_model(model.tree, out / (f"{cell.dataset_name}_{cell.method}_{cell.budget:g}"
                                      f"_s{cell.seed}_f{cell.fold}.json"))
    log.info("%s %s budget=%g seed=%d fold=%d acc=%.4f (%s)", cell.dataset_name, cell.method,
             cell.budget, cell.seed, cell.fold, test.accuracy, outcome.description)
    return RunRecord(cell.dataset_name, cell.method, cell.budget, cell.seed, cell.fold,
                     outcome.search_metrics, test, elapsed, outcome.evaluations,
                     outcome.description)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def run_experiment(config: ExperimentConfig, workers: int | None = None) -> ExperimentResult:
    """Run every (dataset, seed, fold, budget, method) cell of ``config``.

    All datasets are parsed before any search starts. Every method sees the
    same fold plan for a given (dataset, seed).
    """
    datasets = {}
    for path in config.datasets:
        name = Path(path).stem
        if name in datasets:
            raise ConfigError(f"duplicate dataset name {name!r}")
        datasets[name] = load_dataset(path)
    plans: dict[tuple[str, int], FoldPlan] = {}
    cells = []
    for name, ds in datasets.items():
        for seed in config.seeds:
            plan = plans[name, seed] = stratified_kfold(ds, config.outer_k, seed)
            for fold in range(config.outer_k):
                train, test = ds.subset(plan.train_indices(fold)), ds.subset(plan.test_indices(fold))
                for budget in config.budgets:
                    for method in config.methods:
                        cells.append(_Cell(name, train, test, method, budget, seed, fold, config))
    workers = workers or _workers()
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            records = list(pool.map(_run_cell, cells))
    else:
        records = [_run_cell(c) for c in cells]
    return ExperimentResult(config, records, plans)


# --------------------------------------------------------------------------- aggregation

@dataclass(frozen=True)
class Aggregate:
    metric: str
    budget: float
    methods: tuple[str, ...]
    datasets: tuple[str, ...]
    values: np.ndarray

    def result_matrix(self) -> ResultMatrix:
        return ResultMatrix(self.methods, self.datasets, self.values)


def _ordered(seq):
    return list(dict.fromkeys(seq))


def _folds_then_seeds(values_by_seed: dict[int, list[float]]) -> float:
    return float(np.mean([np.mean(v) for _, v in sorted(values_by_seed.items())]))


def aggregate(records: Sequence[RunRecord], metric: str, budget: float,
              methods: Sequence[str] | None = None) -> Aggregate:
    """Dataset x method table of test ``metric``: mean over folds, then over seeds."""
    recs = [r for r in records if r.budget == budget]
    methods = tuple(methods) if methods is not None else tuple(_ordered(r.method for r in recs))
    if not methods:
        raise ValueError("no methods to aggregate")
    datasets = tuple(_ordered(r.dataset for r in recs))
    values = np.full((len(datasets), len(methods)), np.nan)
    for i, d in enumerate(datasets):
        for j, m in enumerate(methods):
            by_seed: dict[int, list[float]] = {}
            for r in recs:
                if r.dataset == d and r.method == m:
                    by_seed.setdefault(r.seed, []).append(r.test_metrics.get(metric))
            if by_seed:
                values[i, j] = _folds_then_seeds(by_seed)
    return Aggregate(metric, budget, methods, datasets, values)


class OverfitGap(NamedTuple):
    mean_search: float
    mean_test: float
    gap: float


def meta_overfit_gap(records: Sequence[RunRecord], metric: str = "gmean") -> OverfitGap:
    """Search-time minus test performance, averaged folds, then seeds, then datasets.

    A positive gap signals overfitting at the search level.
    """
    recs = [r for r in records if r.search_metrics is not None]
    if not recs:
        raise ValueError("records carry no search-time metrics")
    means = []
    for attr in ("search_metrics", "test_metrics"):
        per_dataset = []
        for d in _ordered(r.dataset for r in recs):
            by_seed: dict[int, list[float]] = {}
            for r in recs:
                if r.dataset == d:
                    by_seed.setdefault(r.seed, []).append(getattr(r, attr).get(metric))
            per_dataset.append(_folds_then_seeds(by_seed))
        means.append(float(np.mean(per_dataset)))
    return OverfitGap(means[0], means[1], means[0] - means[1])


# --------------------------------------------------------------------------- report

def _fmt(v: float) -> str:
    return "nan" if math.isnan(v) else f"{v:.3f}"


def matrix_csv(methods, datasets, values, higher_better: bool = True) -> str:
    """Result table with ``Average`` and ``Average Rank`` footer rows."""
    values = np.asarray(values, dtype=float)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dataset", *methods])
    for d, row in zip(datasets, values):
        w.writerow([d, *(_fmt(v) for v in row)])
    w.writerow(["Average", *(_fmt(v) for v in values.mean(axis=0))])
    if np.all(np.isfinite(values)):
        ranks = sps.rankdata(-values if higher_better else values, axis=1).mean(axis=0)
        w.writerow(["Average Rank", *(_fmt(v) for v in ranks)])
    return buf.getvalue()


def records_csv(records: Sequence[RunRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dataset", "method", "budget", "seed", "fold",
                *(f"search_{m}" for m in METRIC_NAMES), *(f"test_{m}" for m in METRIC_NAMES),
                "elapsed_s", "evaluations", "configuration"])
    for r in records:
        search = [f"{v:.6f}" for v in r.search_metrics.as_tuple()] if r.search_metrics else [""] * 5
        w.writerow([r.dataset, r.method, f"{r.budget:g}", r.seed, r.fold, *search,
                    *(f"{v:.6f}" for v in r.test_metrics.as_tuple()), f"{r.elapsed_s:.3f}",
                    r.evaluations, r.configuration])
    return buf.getvalue()


def read_records_csv(text: str) -> list[RunRecord]:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        search = [row[f"search_{m}"] for m in METRIC_NAMES]
        out.append(RunRecord(
            row["dataset"], row["method"], float(row["budget"]), int(row["seed"]), int(row["fold"]),
            MetricSet(*map(float, search)) if all(search) else None,
            MetricSet(*(float(row[f"test_{m}"]) for m in METRIC_NAMES)),
            float(row["elapsed_s"]), int(row["evaluations"]), row["configuration"]))
    return out


def emit_report(records: Sequence[RunRecord], out_dir, metrics: Sequence[str] = ("accuracy", "gmean"),
                methods: Sequence[str] | None = None, alpha: float = 0.05,
                plots: bool = True) -> list[Path]:
    """Write matrices, rank statistics, CD data/diagrams, win counts and gap tables.

    Output depends only on the records, so replaying stored records
    reproduces the files byte for byte.
    """
    if not records:
        raise ValueError("no records to report")
    if methods is not None:
        if not methods:
            raise ValueError("empty method filter")
        records = [r for r in records if r.method in set(methods)]
        if not records:
            raise ValueError(f"no records for methods {list(methods)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def write(name: str, text: str) -> None:
        path = out / name
        try:
            path.write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        written.append(path)

    write("records.csv", records_csv(records))
    method_order = tuple(methods) if methods else tuple(_ordered(r.method for r in records))
    method_order = tuple(m for m in method_order if any(r.method == m for r in records))
    for budget in sorted(set(r.budget for r in records)):
        for metric in metrics:
            agg = aggregate(records, metric, budget, method_order)
            tag = f"{metric}_{budget:g}"
            write(f"matrix_{tag}.csv", matrix_csv(agg.methods, agg.datasets, agg.values))
            if not np.all(np.isfinite(agg.values)):
                continue
            if len(agg.datasets) >= 2 and 2 <= len(agg.methods) <= 10:
                rep = rank_report(agg.result_matrix(), alpha)
                write(f"ranks_{tag}.csv", rep.ranks_csv())
                write(f"stats_{tag}.csv", rep.stats_csv())
                write(f"cd_{tag}.dat", rep.cd_data())
                if plots:
                    from .plotting import save_cd_diagram
                    path = out / f"cd_{tag}.png"
                    save_cd_diagram(rep, path, title=f"{metric} @ {budget:g}s")
                    written.append(path)
            if len(agg.methods) >= 2:
                write(f"pairs_{tag}.csv", _pairs_csv(agg, alpha))
    write("overfit.csv", _overfit_csv(records, metrics))
    return written


def _pairs_csv(agg: Aggregate, alpha: float) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method_a", "method_b", "wins_a", "wins_b", "ties", "wilcoxon_w", "p_value",
                "reject"])
    for i in range(len(agg.methods)):
        for j in range(i + 1, len(agg.methods)):
            a, b = agg.values[:, i], agg.values[:, j]
            wins = count_wins(a, b)
            try:
                t = wilcoxon(a, b, alpha)
                stat = [f"{t.statistic:g}", f"{t.p_value:.6g}",
                        "no_decision" if t.no_decision else str(t.reject).lower()]
            except ValueError:
                stat = ["", "", "too_few_pairs"]
            w.writerow([agg.methods[i], agg.methods[j], *wins, *stat])
    return buf.getvalue()


def _overfit_csv(records, metrics) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "budget", "metric", "mean_search", "mean_test", "gap"])
    for m in _ordered(r.method for r in records):
        for budget in sorted(set(r.budget for r in records)):
            subset = [r for r in records if r.method == m and r.budget == budget]
            if not any(r.search_metrics is not None for r in subset):
                continue
            for metric in metrics:
                g = meta_overfit_gap(subset, metric)
                w.writerow([m, f"{budget:g}", metric, f"{g.mean_search:.4f}",
                            f"{g.mean_test:.4f}", f"{g.gap:+.4f}"])
    return buf.getvalue()


def with_overrides(config: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(config, **kw)
