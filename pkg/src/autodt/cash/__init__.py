"""CASH search: learner families, surrogate model and the budgeted search loops."""

from .learners import KnnModel, MajorityModel, NaiveBayesModel, TreeModel, train_learner
from .search import (Evaluation, HistoryEntry, SearchHistory, SmboParams, loss,
                     propose_candidate, random_search, smbo_search)
from .surrogate import PRIOR_LOSS, RegressionTree, SurrogateModel, surrogate_update

__all__ = [
    "Evaluation", "HistoryEntry", "KnnModel", "MajorityModel", "NaiveBayesModel", "PRIOR_LOSS",
    "RegressionTree", "SearchHistory", "SmboParams", "SurrogateModel", "TreeModel", "loss",
    "propose_candidate", "random_search", "smbo_search", "surrogate_update", "train_learner",
]
