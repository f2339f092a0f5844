"""Greedy top-down tree induction driven by a :class:`DTConfig`."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ..dataset import Attribute, Dataset
from .config import DTConfig
from .criteria import score_tables

_TIE_EPS = 1e-12


class EvaluationTimeout(Exception):
    """Raised by the builder when a cooperative deadline passes."""


@dataclass(eq=False)
class Node:
    counts: np.ndarray
    label: int
    depth: int
    attribute: int | None = None
    threshold: float | None = None  # numeric test: x <= threshold -> child 0
    value: int | None = None  # binary nominal test: x == value -> child 0
    children: tuple["Node", ...] = ()
    branch_weights: np.ndarray | None = None
    fill_value: float | None = None

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def majority_branch(self) -> int:
        return int(np.argmax(self.branch_weights))

    def as_leaf(self) -> "Node":
        return Node(self.counts, self.label, self.depth)

    def __eq__(self, other):
        if not isinstance(other, Node):
            return NotImplemented
        if (self.label, self.depth, self.attribute, self.threshold, self.value) != (
                other.label, other.depth, other.attribute, other.threshold, other.value):
            return False
        if not np.allclose(self.counts, other.counts, rtol=0, atol=1e-9):
            return False
        return len(self.children) == len(other.children) and all(
            a == b for a, b in zip(self.children, other.children))

    __hash__ = None


@dataclass(eq=False)
class DecisionTree:
    root: Node
    features: tuple[Attribute, ...]
    classes: tuple[str, ...]
    config: DTConfig = field(default_factory=DTConfig)

    def __eq__(self, other):
        if not isinstance(other, DecisionTree):
            return NotImplemented
        return (self.features == other.features and self.classes == other.classes
                and self.root == other.root)

    __hash__ = None

    def nodes(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    @property
    def n_nodes(self) -> int:
        return sum(1 for _ in self.nodes())

    @property
    def n_leaves(self) -> int:
        return sum(1 for n in self.nodes() if n.is_leaf)

    @property
    def depth(self) -> int:
        return max(n.depth for n in self.nodes())


def _majority(counts: np.ndarray, fallback: int) -> int:
    # argmax returns the lowest index among ties
    return int(np.argmax(counts)) if counts.sum() > 0 else fallback


def route_values(node: Node, col: np.ndarray, features) -> np.ndarray:
    """Branch index per value; -1 where the value is missing."""
    out = np.full(col.shape, -1, dtype=np.int64)
    known = ~np.isnan(col)
    if node.threshold is not None:
        out[known] = np.where(col[known] <= node.threshold, 0, 1)
    elif node.value is not None:
        out[known] = np.where(col[known] == node.value, 0, 1)
    else:
        out[known] = col[known].astype(np.int64)
    return out


class _Builder:
    def __init__(self, cfg: DTConfig, data: Dataset, deadline: float | None):
        self.cfg = cfg
        self.X = data.X
        self.y = data.y
        self.features = data.features
        self.n_classes = data.n_classes
        self.deadline = deadline

    def grow(self, rows, w, depth, used, parent_label) -> Node:
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise EvaluationTimeout
        counts = np.bincount(self.y[rows], weights=w, minlength=self.n_classes)
        label = _majority(counts, parent_label)
        node = Node(counts, label, depth)
        total = counts.sum()
        if total <= 0 or np.count_nonzero(counts > 0) <= 1 or self._stop_before(counts, depth):
            return node
        split = self._best_split(rows, w, used)
        if split is None:
            return node
        _, j, threshold, value, table = split
        if self.cfg.stop_rule.kind == "chi_sq_threshold" and not self._significant(table):
            return node
        node.attribute, node.threshold, node.value = j, threshold, value
        col = self.X[rows, j]
        branch = route_values(node, col, self.features)
        n_branches = table.shape[0]
        known_w = np.bincount(branch[branch >= 0], weights=w[branch >= 0], minlength=n_branches)
        node.branch_weights = known_w
        known = branch >= 0
        if self.features[j].is_nominal:
            per_value = np.bincount(col[known].astype(np.int64), weights=w[known],
                                    minlength=len(self.features[j].values))
            node.fill_value = float(np.argmax(per_value))
        else:
            node.fill_value = float(np.average(col[known], weights=w[known]))
        missing = ~known
        policy = self.cfg.missing_train
        child_used = used | {j} if self.features[j].is_nominal else used
        children = []
        for b in range(n_branches):
            sel = branch == b
            b_rows, b_w = rows[sel], w[sel]
            if missing.any() and known_w[b] > 0:
                if policy == "majority_branch" and b == node.majority_branch:
                    b_rows = np.concatenate([b_rows, rows[missing]])
                    b_w = np.concatenate([b_w, w[missing]])
                elif policy == "fractional_weight":
                    b_rows = np.concatenate([b_rows, rows[missing]])
                    b_w = np.concatenate([b_w, w[missing] * known_w[b] / known_w.sum()])
            children.append(self.grow(b_rows, b_w, depth + 1, child_used, label))
        node.children = tuple(children)
        return node

    def _stop_before(self, counts, depth) -> bool:
        rule = self.cfg.stop_rule
        total = counts.sum()
        if rule.kind == "min_instances":
            return total < rule.param
        if rule.kind == "max_depth":
            return depth >= rule.param
        if rule.kind == "purity_threshold":
            return counts.max() / total >= rule.param
        return False

    def _significant(self, table) -> bool:
        rows = table[table.sum(1) > 0]
        cols = rows[:, rows.sum(0) > 0]
        dof = (cols.shape[0] - 1) * (cols.shape[1] - 1)
        if dof <= 0:
            return False
        statistic = float(score_tables("chi_squared", cols))
        return stats.chi2.sf(statistic, dof) <= self.cfg.stop_rule.param

    def _best_split(self, rows, w, used):
        crit = self.cfg.split_criterion
        multiway = self.cfg.split_arity == "multiway"
        W = np.zeros((len(rows), self.n_classes))
        W[np.arange(len(rows)), self.y[rows]] = w
        total_w = w.sum()
        best = None
        for j, att in enumerate(self.features):
            if att.is_nominal and j in used:
                continue
            col = self.X[rows, j]
            known = ~np.isnan(col)
            kw = W[known]
            known_total = kw.sum()
            if known_total <= 0:
                continue
            frac = known_total / total_w
            if not att.is_nominal:
                cand = self._numeric_split(col[known], kw, crit)
            elif multiway:
                cand = self._multiway_split(col[known], kw, len(att.values), crit)
            else:
                cand = self._binary_nominal_split(col[known], kw, len(att.values), crit)
            if cand is None:
                continue
            score, threshold, value, table = cand
            score *= frac
            if best is None or score > best[0] + _TIE_EPS:
                best = (score, j, threshold, value, table)
        return best

    @staticmethod
    def _numeric_split(values, kw, crit):
        order = np.argsort(values, kind="stable")
        vs = values[order]
        cuts = np.flatnonzero(vs[1:] > vs[:-1])
        if cuts.size == 0:
            return None
        cum = np.cumsum(kw[order], axis=0)
        left = cum[cuts]
        tables = np.stack([left, cum[-1] - left], axis=1)
        scores = score_tables(crit, tables)
        b = int(np.argmax(scores))
        lo, hi = vs[cuts[b]], vs[cuts[b] + 1]
        threshold = (lo + hi) / 2.0
        if not lo <= threshold < hi:
            threshold = lo
        return float(scores[b]), float(threshold), None, tables[b]

    @staticmethod
    def _value_table(codes, kw, n_values):
        table = np.zeros((n_values, kw.shape[1]))
        np.add.at(table, codes.astype(np.int64), kw)
        return table

    def _multiway_split(self, codes, kw, n_values, crit):
        table = self._value_table(codes, kw, n_values)
        if np.count_nonzero(table.sum(1) > 0) < 2:
            return None
        return float(score_tables(crit, table)), None, None, table

    def _binary_nominal_split(self, codes, kw, n_values, crit):
        table = self._value_table(codes, kw, n_values)
        sizes = table.sum(1)
        total = sizes.sum()
        valid = np.flatnonzero((sizes > 0) & (sizes < total))
        if valid.size == 0:
            return None
        tot = table.sum(0)
        tables = np.stack([table[valid], tot - table[valid]], axis=1)
        scores = score_tables(crit, tables)
        b = int(np.argmax(scores))
        return float(scores[b]), None, int(valid[b]), tables[b]


def build_tree(cfg: DTConfig, train: Dataset, deadline: float | None = None) -> DecisionTree:
    """Grow an unpruned tree. Deterministic: ties go to the lowest attribute
    index, then the lowest threshold or value index.

    ``deadline`` is a :func:`time.monotonic` timestamp; passing it makes the
    builder raise :class:`EvaluationTimeout` once exceeded.
    """
    if len(train) == 0:
        raise ValueError("cannot induce a tree from an empty dataset")
    builder = _Builder(cfg, train, deadline)
    prior = int(np.argmax(train.class_counts()))
    root = builder.grow(np.arange(len(train)), np.ones(len(train)), 0, frozenset(), prior)
    return DecisionTree(root, train.features, train.classes, cfg)


def predict(tree: DecisionTree, instance, missing_test_policy: str | None = None) -> int:
    """Class index for one instance given as feature values (NaN = missing)."""
    policy = missing_test_policy or tree.config.missing_test
    x = np.asarray(instance, dtype=float)
    node = tree.root
    while node.children:
        v = x[node.attribute]
        if np.isnan(v):
            if policy == "halt_and_use_node_distribution":
                return node.label
            if policy == "majority_branch":
                node = node.children[node.majority_branch]
                continue
            v = node.fill_value
        b = int(route_values(node, np.array([v]), tree.features)[0])
        node = node.children[b]
    return node.label


def _descend(node, X, idx, out, policy, features):
    if not node.children:
        out[idx] = node.label
        return
    branch = route_values(node, X[idx, node.attribute], features)
    miss = branch < 0
    if miss.any():
        if policy == "halt_and_use_node_distribution":
            out[idx[miss]] = node.label
        elif policy == "majority_branch":
            branch[miss] = node.majority_branch
        else:
            branch[miss] = route_values(node, np.array([node.fill_value]), features)[0]
    for b, child in enumerate(node.children):
        sel = idx[branch == b]
        if sel.size:
            _descend(child, X, sel, out, policy, features)


def predict_batch(tree: DecisionTree, X: np.ndarray,
                  missing_test_policy: str | None = None) -> np.ndarray:
    policy = missing_test_policy or tree.config.missing_test
    X = np.asarray(X, dtype=float)
    out = np.empty(len(X), dtype=np.int64)
    if len(X):
        _descend(tree.root, X, np.arange(len(X)), out, policy, tree.features)
    return out
