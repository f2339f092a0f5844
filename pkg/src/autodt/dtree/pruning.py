"""Post-pruning. Every method returns a new tree; the input is left untouched."""

from __future__ import annotations

from dataclasses import replace

import numpy as np
from scipy import stats

from ..dataset import Dataset
from .config import DTConfig
from .tree import DecisionTree, Node, route_values


def prune(tree: DecisionTree, cfg: DTConfig, prune_set: Dataset | None = None) -> DecisionTree:
    kind, param = cfg.pruning
    if kind == "none":
        return tree
    if kind == "reduced_error":
        if prune_set is None or len(prune_set) == 0:
            raise ValueError("reduced-error pruning needs a non-empty pruning set")
        policy = cfg.missing_test
        idx = np.arange(len(prune_set))
        root, _ = _rep(tree.root, prune_set.X, prune_set.y, idx, policy, tree.features)
    elif kind == "pessimistic":
        root, _ = _pessimistic(tree.root, float(param))
    elif kind == "min_error":
        root, _ = _min_error(tree.root, len(tree.classes))
    elif kind == "max_depth_cut":
        root = _cut(tree.root, int(param))
    else:
        raise ValueError(f"unknown pruning method {kind!r}")
    return replace(tree, root=root)


def _with_children(node: Node, children) -> Node:
    return replace(node, children=tuple(children))


def _rep(node, X, y, idx, policy, features):
    """Returns (pruned node, prune-set errors of the pruned subtree on ``idx``)."""
    leaf_errors = int(np.count_nonzero(y[idx] != node.label))
    if node.is_leaf:
        return node, leaf_errors
    branch = route_values(node, X[idx, node.attribute], features)
    miss = branch < 0
    halted_errors = 0
    if miss.any():
        if policy == "halt_and_use_node_distribution":
            halted_errors = int(np.count_nonzero(y[idx[miss]] != node.label))
        elif policy == "majority_branch":
            branch[miss] = node.majority_branch
        else:
            branch[miss] = route_values(node, np.array([node.fill_value]), features)[0]
    children, sub_errors = [], halted_errors
    for b, child in enumerate(node.children):
        new_child, err = _rep(child, X, y, idx[branch == b], policy, features)
        children.append(new_child)
        sub_errors += err
    if leaf_errors <= sub_errors:
        return node.as_leaf(), leaf_errors
    return _with_children(node, children), sub_errors


def added_errors(n: float, e: float, cf: float) -> float:
    """Upper-confidence extra errors for ``e`` errors in ``n`` cases (C4.5)."""
    if n <= 0:
        return 0.0
    if e < 1:
        base = n * (1 - cf ** (1.0 / n))
        if e == 0:
            return base
        return base + e * (added_errors(n, 1.0, cf) - base)
    if e + 0.5 >= n:
        return max(n - e, 0.0)
    z = stats.norm.ppf(1 - cf)
    f = (e + 0.5) / n
    r = (f + z * z / (2 * n) + z * np.sqrt(f / n - f * f / n + z * z / (4 * n * n))) / (1 + z * z / n)
    return r * n - e


def _leaf_estimate(node, cf):
    n = float(node.counts.sum())
    e = n - float(node.counts.max()) if n > 0 else 0.0
    return e + added_errors(n, e, cf)


def _pessimistic(node, cf):
    leaf_est = _leaf_estimate(node, cf)
    if node.is_leaf:
        return node, leaf_est
    children, sub_est = [], 0.0
    for child in node.children:
        new_child, est = _pessimistic(child, cf)
        children.append(new_child)
        sub_est += est
    if leaf_est <= sub_est + 0.1:
        return node.as_leaf(), leaf_est
    return _with_children(node, children), sub_est


def _laplace_error(node, n_classes):
    n = float(node.counts.sum())
    return (n - float(node.counts.max()) + n_classes - 1) / (n + n_classes)


def _min_error(node, n_classes):
    """Niblett-Bratko pruning on Laplace-corrected expected error rates."""
    static = _laplace_error(node, n_classes)
    if node.is_leaf:
        return node, static
    n = float(node.counts.sum())
    children, backed_up = [], 0.0
    sizes = np.array([c.counts.sum() for c in node.children], dtype=float)
    weights = sizes / sizes.sum() if sizes.sum() > 0 else np.full(len(sizes), 1 / len(sizes))
    for child, wt in zip(node.children, weights):
        new_child, err = _min_error(child, n_classes)
        children.append(new_child)
        backed_up += wt * err
    if n <= 0 or static <= backed_up:
        return node.as_leaf(), static
    return _with_children(node, children), backed_up


def _cut(node, depth):
    if node.is_leaf:
        return node
    if node.depth >= depth:
        return node.as_leaf()
    return _with_children(node, [_cut(c, depth) for c in node.children])
