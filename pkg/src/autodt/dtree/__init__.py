"""Decision-tree induction components."""

from .algorithm import induce, tree_predict
from .config import (ARITIES, CRITERIA, MISSING_TEST, MISSING_TRAIN, PRUNERS, STOP_RULES,
                     Choice, DTConfig)
from .criteria import criterion_score, score_tables
from .pruning import prune
from .serialize import load_model, save_model, to_text, tree_from_dict, tree_to_dict
from .tree import DecisionTree, EvaluationTimeout, Node, build_tree, predict, predict_batch

__all__ = [
    "ARITIES", "CRITERIA", "MISSING_TEST", "MISSING_TRAIN", "PRUNERS", "STOP_RULES",
    "Choice", "DTConfig", "DecisionTree", "EvaluationTimeout", "Node",
    "build_tree", "criterion_score", "induce", "load_model", "predict", "predict_batch",
    "prune", "save_model", "score_tables", "to_text", "tree_from_dict", "tree_predict",
    "tree_to_dict",
]
