"""Linear genome encoding of induction algorithms and the hierarchical CASH space.

A :class:`ComponentSpace` is an ordered list of genes, each with a finite
domain. A gene may be *conditional*: it only matters when an earlier gene
takes one of a listed values (e.g. ``min_instances`` only matters when
``stop_rule`` is ``min_instances``). Genes that do not matter are *inert*:
they are ignored by decoding, by genome equality and by surrogate features.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dtree.config import (ARITIES, CRITERIA, MISSING_TEST, MISSING_TRAIN, PRUNERS,
                           STOP_RULES, Choice, DTConfig)
from .kvconfig import ConfigError, parse_kv, split_list

FAMILIES = ("component_tree", "naive_bayes", "knn", "majority")
KNN_DISTANCES = ("standardized_overlap",)
PRUNE_PARAM_GENE = {
    "reduced_error": "rep_fraction",
    "pessimistic": "pessimistic_cf",
    "max_depth_cut": "cut_depth",
}


@dataclass(frozen=True)
class Gene:
    name: str
    values: tuple
    parent: str | None = None
    when: tuple = ()

    def __post_init__(self):
        if not self.values:
            raise ValueError(f"gene {self.name!r} has an empty domain")


@dataclass(frozen=True)
class ComponentSpace:
    kind: str  # "dt" or "cash"
    genes: tuple[Gene, ...]
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.kind not in ("dt", "cash"):
            raise ValueError(f"unknown space kind {self.kind!r}")
        index = {}
        for i, g in enumerate(self.genes):
            if g.name in index:
                raise ValueError(f"duplicate gene {g.name!r}")
            if g.parent is not None and g.parent not in index:
                raise ValueError(f"gene {g.name!r} must follow its parent {g.parent!r}")
            index[g.name] = i
        object.__setattr__(self, "_index", index)

    def __len__(self):
        return len(self.genes)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(g.name for g in self.genes)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(g.values) for g in self.genes)

    def index(self, name: str) -> int:
        return self._index[name]

    def gene(self, name: str) -> Gene:
        return self.genes[self._index[name]]

    def active_mask(self, values: np.ndarray) -> np.ndarray:
        """Which genes matter, for one genome ``(G,)`` or a stack ``(m, G)``."""
        values = np.atleast_2d(values)
        active = np.ones(values.shape, dtype=bool)
        for i, g in enumerate(self.genes):
            if g.parent is None:
                continue
            p = self._index[g.parent]
            parent_vals = self.genes[p].values
            allowed = [k for k, v in enumerate(parent_vals) if v in g.when]
            active[:, i] = active[:, p] & np.isin(values[:, p], allowed)
        return active

    def canonical(self, values: Sequence[int]) -> tuple[int, ...]:
        arr = np.asarray(values, dtype=np.int64)
        mask = self.active_mask(arr)[0]
        return tuple(int(v) if m else 0 for v, m in zip(arr, mask))

    def subspace(self, names: Sequence[str]) -> "ComponentSpace":
        keep = set(names)
        genes = []
        for g in self.genes:
            if g.name in keep:
                genes.append(g if g.parent in keep else Gene(g.name, g.values))
        return ComponentSpace(self.kind, tuple(genes))

    def with_values(self, name: str, values: Sequence) -> "ComponentSpace":
        genes = tuple(Gene(g.name, tuple(values), g.parent, g.when) if g.name == name else g
                      for g in self.genes)
        return ComponentSpace(self.kind, genes)

    def features(self, genomes: Sequence["Genome"]) -> np.ndarray:
        """One-hot rows per genome; inert genes contribute all-zero blocks."""
        values = np.array([g.values for g in genomes], dtype=np.int64).reshape(-1, len(self))
        active = self.active_mask(values)
        blocks = []
        for i, size in enumerate(self.sizes):
            onehot = np.zeros((len(values), size))
            rows = np.flatnonzero(active[:, i])
            onehot[rows, values[rows, i]] = 1.0
            blocks.append(onehot)
        return np.hstack(blocks)


@dataclass(frozen=True, eq=False)
class Genome:
    space: ComponentSpace = field(repr=False)
    values: tuple[int, ...]

    def __post_init__(self):
        values = tuple(int(v) for v in self.values)
        if len(values) != len(self.space):
            raise ValueError("genome length does not match its space")
        for v, size in zip(values, self.space.sizes):
            if not 0 <= v < size:
                raise ValueError("gene value out of range")
        object.__setattr__(self, "values", values)

    @property
    def key(self) -> tuple[int, ...]:
        return self.space.canonical(self.values)

    def __eq__(self, other):
        if not isinstance(other, Genome):
            return NotImplemented
        return self.space == other.space and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def value(self, name: str):
        i = self.space.index(name)
        return self.space.genes[i].values[self.values[i]]

    def describe(self) -> str:
        mask = self.space.active_mask(np.asarray(self.values))[0]
        return " ".join(f"{g.name}={g.values[v]}" for g, v, m
                        in zip(self.space.genes, self.values, mask) if m)


# --------------------------------------------------------------------------- configurations

@dataclass(frozen=True)
class NaiveBayesParams:
    alpha: float = 0.1


@dataclass(frozen=True)
class KnnParams:
    k: int = 1
    distance: str = "standardized_overlap"


@dataclass(frozen=True)
class CashConfig:
    family: str
    params: DTConfig | NaiveBayesParams | KnnParams | None = None

    def describe(self) -> str:
        if self.params is None:
            return self.family
        if isinstance(self.params, DTConfig):
            return f"{self.family}: {self.params.describe()}"
        inner = " ".join(f"{k}={v}" for k, v in vars(self.params).items())
        return f"{self.family}: {inner}"


# --------------------------------------------------------------------------- default spaces

def _dt_genes(parent: str | None = None, when: tuple = ()) -> list[Gene]:
    top = dict(parent=parent, when=when)
    return [
        Gene("criterion", CRITERIA, **top),
        Gene("split_arity", ARITIES, **top),
        Gene("stop_rule", STOP_RULES, **top),
        Gene("min_instances", (1, 2, 4, 8, 16, 32, 64), "stop_rule", ("min_instances",)),
        Gene("max_depth", (2, 3, 4, 6, 8, 12, 16), "stop_rule", ("max_depth",)),
        Gene("purity_threshold", (0.80, 0.85, 0.90, 0.95, 0.99), "stop_rule",
             ("purity_threshold",)),
        Gene("chi_sq_threshold", (0.01, 0.05, 0.10, 0.25), "stop_rule", ("chi_sq_threshold",)),
        Gene("missing_train", MISSING_TRAIN, **top),
        Gene("missing_test", MISSING_TEST, **top),
        Gene("pruning", PRUNERS, **top),
        Gene("rep_fraction", (0.10, 0.20, 0.25, 0.33, 0.50), "pruning", ("reduced_error",)),
        Gene("pessimistic_cf", (0.05, 0.10, 0.25, 0.50), "pruning", ("pessimistic",)),
        Gene("cut_depth", (0, 1, 2, 3, 4, 6), "pruning", ("max_depth_cut",)),
    ]


DT_COMPONENT_GENES = ("criterion", "split_arity", "stop_rule", "missing_train",
                      "missing_test", "pruning")


def default_dt_space() -> ComponentSpace:
    return ComponentSpace("dt", tuple(_dt_genes()))


def default_cash_space() -> ComponentSpace:
    genes = [Gene("family", FAMILIES)]
    genes += _dt_genes("family", ("component_tree",))
    genes += [
        Gene("nb_alpha", (0.1, 0.2, 0.3, 0.4, 0.5), "family", ("naive_bayes",)),
        Gene("knn_k", (1, 3, 5, 7, 11), "family", ("knn",)),
        Gene("knn_distance", KNN_DISTANCES, "family", ("knn",)),
    ]
    return ComponentSpace("cash", tuple(genes))


# --------------------------------------------------------------------------- operators

def random_genome(space: ComponentSpace, rng: np.random.Generator) -> Genome:
    return Genome(space, tuple(rng.integers(0, np.array(space.sizes))))


def crossover(a: Genome, b: Genome, rng: np.random.Generator) -> tuple[Genome, Genome]:
    """Uniform crossover: each gene swapped independently with probability 0.5."""
    if a.space != b.space:
        raise ValueError("cannot cross genomes from different spaces")
    swap = rng.random(len(a.values)) < 0.5
    va, vb = np.array(a.values), np.array(b.values)
    return (Genome(a.space, tuple(np.where(swap, vb, va))),
            Genome(a.space, tuple(np.where(swap, va, vb))))


def mutate(g: Genome, rate: float, rng: np.random.Generator) -> Genome:
    """Resample each gene uniformly from its domain with probability ``rate``."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError("mutation rate must be in [0, 1]")
    hit = rng.random(len(g.values)) < rate
    fresh = rng.integers(0, np.array(g.space.sizes))
    return Genome(g.space, tuple(np.where(hit, fresh, np.array(g.values))))


def cardinality(space: ComponentSpace) -> int:
    return math.prod(space.sizes)


def distinct_configurations(space: ComponentSpace) -> int:
    """Number of distinct decoded configurations (inert genes collapsed)."""
    children: dict[str | None, list[Gene]] = {}
    for g in space.genes:
        children.setdefault(g.parent, []).append(g)

    def count(gene: Gene) -> int:
        total = 0
        for v in gene.values:
            sub = 1
            for child in children.get(gene.name, []):
                if v in child.when:
                    sub *= count(child)
            total += sub
        return total

    return math.prod(count(g) for g in children.get(None, []))


# --------------------------------------------------------------------------- decoding

def _decode_dt(genome: Genome) -> DTConfig:
    stop = genome.value("stop_rule")
    prune_kind = genome.value("pruning")
    prune_gene = PRUNE_PARAM_GENE.get(prune_kind)
    return DTConfig(
        split_criterion=genome.value("criterion"),
        split_arity=genome.value("split_arity"),
        stop_rule=Choice(stop, genome.value(stop)),
        missing_train=genome.value("missing_train"),
        missing_test=genome.value("missing_test"),
        pruning=Choice(prune_kind, genome.value(prune_gene) if prune_gene else None),
    )


def decode(genome: Genome, space: ComponentSpace | None = None) -> DTConfig | CashConfig:
    space = space or genome.space
    if genome.space != space:
        raise ValueError("genome does not belong to this space")
    if space.kind == "dt":
        return _decode_dt(genome)
    family = genome.value("family")
    if family == "component_tree":
        return CashConfig(family, _decode_dt(genome))
    if family == "naive_bayes":
        return CashConfig(family, NaiveBayesParams(genome.value("nb_alpha")))
    if family == "knn":
        return CashConfig(family, KnnParams(genome.value("knn_k"), genome.value("knn_distance")))
    return CashConfig(family)


def _lookup(space, values, name, value):
    gene = space.gene(name)
    try:
        values[space.index(name)] = gene.values.index(value)
    except ValueError:
        raise ValueError(f"{value!r} is not in the grid of gene {name!r}") from None


def _encode_dt(cfg: DTConfig, space, values):
    for name, value in (("criterion", cfg.split_criterion), ("split_arity", cfg.split_arity),
                        ("stop_rule", cfg.stop_rule.kind), ("missing_train", cfg.missing_train),
                        ("missing_test", cfg.missing_test), ("pruning", cfg.pruning.kind)):
        _lookup(space, values, name, value)
    _lookup(space, values, cfg.stop_rule.kind, cfg.stop_rule.param)
    prune_gene = PRUNE_PARAM_GENE.get(cfg.pruning.kind)
    if prune_gene:
        _lookup(space, values, prune_gene, cfg.pruning.param)


def encode(config: DTConfig | CashConfig, space: ComponentSpace) -> Genome:
    values = [0] * len(space)
    if space.kind == "dt":
        if not isinstance(config, DTConfig):
            raise ValueError("dt spaces encode DTConfig values")
        _encode_dt(config, space, values)
        return Genome(space, tuple(values))
    if not isinstance(config, CashConfig):
        raise ValueError("cash spaces encode CashConfig values")
    _lookup(space, values, "family", config.family)
    p = config.params
    if config.family == "component_tree":
        _encode_dt(p, space, values)
    elif config.family == "naive_bayes":
        _lookup(space, values, "nb_alpha", p.alpha)
    elif config.family == "knn":
        _lookup(space, values, "knn_k", p.k)
        _lookup(space, values, "knn_distance", p.distance)
    return Genome(space, tuple(values))


# --------------------------------------------------------------------------- space files

def _grid_check(name: str, v) -> bool:
    checks = {
        "min_instances": lambda x: x >= 1,
        "max_depth": lambda x: x >= 1,
        "purity_threshold": lambda x: 0 < x <= 1,
        "chi_sq_threshold": lambda x: 0 < x < 1,
        "rep_fraction": lambda x: 0 < x < 1,
        "pessimistic_cf": lambda x: 0 < x < 1,
        "cut_depth": lambda x: x >= 0,
        "nb_alpha": lambda x: x > 0,
        "knn_k": lambda x: x >= 1,
    }
    return checks.get(name, lambda x: True)(v)


def load_space(text: str) -> ComponentSpace:
    """Build a space from ``key = v1, v2, ...`` lines overriding default grids.

    ``space = dt`` (default) or ``space = cash`` selects the base space. Every
    other key names a gene; its values replace that gene's grid. Categorical
    genes accept a subset of their built-in components; numeric grids are
    parsed with the type of the default grid.
    """
    entries = parse_kv(text)
    kind = entries.pop("space", "dt")
    if kind == "dt":
        space = default_dt_space()
    elif kind == "cash":
        space = default_cash_space()
    else:
        raise ConfigError(f"unknown space {kind!r}")
    for name, raw in entries.items():
        if name not in space.names:
            raise ConfigError(f"unknown gene {name!r}")
        default = space.gene(name).values
        items = split_list(raw)
        if not items:
            raise ConfigError(f"gene {name!r} needs at least one value")
        if isinstance(default[0], str):
            bad = [v for v in items if v not in default]
            if bad:
                raise ConfigError(f"gene {name!r}: unknown components {bad}")
            values = tuple(items)
        else:
            caster = int if isinstance(default[0], int) else float
            try:
                values = tuple(caster(v) for v in items)
            except ValueError:
                raise ConfigError(f"gene {name!r}: expected {caster.__name__} values") from None
            if not all(_grid_check(name, v) for v in values):
                raise ConfigError(f"gene {name!r}: value out of range")
        if len(set(values)) != len(values):
            raise ConfigError(f"gene {name!r}: duplicate values")
        space = space.with_values(name, values)
    return space
