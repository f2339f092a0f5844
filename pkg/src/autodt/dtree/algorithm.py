from __future__ import annotations

import numpy as np

from ..dataset import Dataset, meta_split
from .config import DTConfig
from .pruning import prune
from .tree import DecisionTree, build_tree, predict_batch


def induce(cfg: DTConfig, train: Dataset, seed=0, deadline: float | None = None) -> DecisionTree:
    """Run the full induction algorithm ``cfg`` on ``train``: grow, then prune.

    Reduced-error pruning holds out ``cfg.pruning.param`` of ``train`` as its
    pruning set; when the data is too small for that split the tree is grown
    on everything and left unpruned.
    """
    if cfg.pruning.kind != "reduced_error":
        return prune(build_tree(cfg, train, deadline), cfg)
    try:
        grow, hold = meta_split(train, float(cfg.pruning.param), seed)
    except ValueError:
        return build_tree(cfg, train, deadline)
    if np.count_nonzero(grow.class_counts()) == 0:
        return build_tree(cfg, train, deadline)
    return prune(build_tree(cfg, grow, deadline), cfg, hold)


def tree_predict(tree: DecisionTree, data: Dataset) -> np.ndarray:
    return predict_batch(tree, data.X, tree.config.missing_test)
