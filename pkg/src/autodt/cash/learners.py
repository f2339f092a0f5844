"""Non-tree learner families for the CASH space, plus a uniform training entry point.

Every model exposes ``predict(X) -> class codes`` over the feature matrix
layout of :class:`~autodt.dataset.Dataset` (nominal codes as floats, NaN for
missing).
"""

from __future__ import annotations

import time

import numpy as np

from ..dataset import Dataset
from ..dtree import DTConfig, EvaluationTimeout, induce, predict_batch
from ..search_space import CashConfig, KnnParams, NaiveBayesParams


class MajorityModel:
    def __init__(self, data: Dataset):
        self.label = int(np.argmax(data.class_counts()))  # lowest code wins ties

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.full(len(X), self.label, dtype=np.int64)


class NaiveBayesModel:
    """Laplace-smoothed nominal likelihoods and Gaussian numeric likelihoods.

    Missing cells are skipped both when counting and when scoring.
    """

    def __init__(self, data: Dataset, alpha: float = 1.0):
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        self.n_classes = C = data.n_classes
        self.features = data.features
        counts = data.class_counts().astype(float)
        self.log_prior = np.log((counts + alpha) / (counts.sum() + alpha * C))
        self.tables: list[np.ndarray | tuple[np.ndarray, np.ndarray]] = []
        X, y = data.X, data.y
        for j, att in enumerate(self.features):
            col = X[:, j]
            known = ~np.isnan(col)
            if att.is_nominal:
                V = len(att.values)
                tab = np.zeros((C, V))
                np.add.at(tab, (y[known], col[known].astype(np.int64)), 1.0)
                self.tables.append(np.log((tab + alpha) / (tab.sum(1, keepdims=True) + alpha * V)))
                continue
            pooled = col[known]
            p_mean = pooled.mean() if pooled.size else 0.0
            p_var = pooled.var() if pooled.size > 1 else 1.0
            floor = 1e-9 * max(p_var, 1.0)
            mean = np.full(C, p_mean)
            var = np.full(C, max(p_var, floor))
            for c in range(C):
                vals = col[known & (y == c)]
                if vals.size:
                    mean[c] = vals.mean()
                    var[c] = max(vals.var(), floor) if vals.size > 1 else max(p_var, floor)
            self.tables.append((mean, var))

    def log_posterior(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.tile(self.log_prior, (len(X), 1))
        for j, table in enumerate(self.tables):
            col = X[:, j]
            known = ~np.isnan(col)
            if not known.any():
                continue
            if isinstance(table, tuple):
                mean, var = table
                v = col[known, None]
                out[known] += -0.5 * (np.log(2 * np.pi * var) + (v - mean) ** 2 / var)
            else:
                out[known] += table[:, col[known].astype(np.int64)].T
        return out

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.log_posterior(X), axis=1).astype(np.int64)


class KnnModel:
    """k nearest neighbours under a standardized-overlap distance.

    Numeric attributes are z-scored with training statistics; nominal
    attributes contribute 0 on a match and 1 otherwise; a missing cell on
    either side contributes 1. Votes are unweighted; ties go to the lowest
    class code, and equidistant neighbours to the lowest training row.
    """

    chunk = 512

    def __init__(self, data: Dataset, k: int = 1, distance: str = "standardized_overlap"):
        if k < 1:
            raise ValueError("k must be at least 1")
        if distance != "standardized_overlap":
            raise ValueError(f"unknown distance {distance!r}")
        self.k = min(k, len(data))
        self.n_classes = data.n_classes
        self.nominal = np.array([a.is_nominal for a in data.features], dtype=bool)
        X = np.asarray(data.X, dtype=float)
        with np.errstate(all="ignore"):
            mean = np.where(self.nominal, 0.0, np.nanmean(X, axis=0) if len(X) else 0.0)
            std = np.where(self.nominal, 1.0, np.nanstd(X, axis=0) if len(X) else 1.0)
        mean = np.nan_to_num(mean)
        std = np.where(~np.isfinite(std) | (std == 0), 1.0, std)
        self.mean, self.std = mean, std
        self.train = self._scale(X)
        self.y = data.y.copy()

    def _scale(self, X):
        return (np.asarray(X, dtype=float) - self.mean) / self.std

    def distances(self, X: np.ndarray) -> np.ndarray:
        Q = self._scale(X)
        D = np.zeros((len(Q), len(self.train)))
        for j in range(Q.shape[1]):
            a, b = Q[:, j, None], self.train[None, :, j]
            if self.nominal[j]:
                d = (a != b).astype(float)
            else:
                d = (a - b) ** 2
            d[np.isnan(a) | np.isnan(b)] = 1.0
            D += d
        return D

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.empty(len(X), dtype=np.int64)
        for start in range(0, len(X), self.chunk):
            D = self.distances(X[start:start + self.chunk])
            nn = np.argsort(D, axis=1, kind="stable")[:, :self.k]
            votes = np.zeros((len(D), self.n_classes))
            np.add.at(votes, (np.repeat(np.arange(len(D)), self.k), self.y[nn].ravel()), 1.0)
            out[start:start + len(D)] = np.argmax(votes, axis=1)
        return out


class TreeModel:
    def __init__(self, tree):
        self.tree = tree

    def predict(self, X: np.ndarray) -> np.ndarray:
        return predict_batch(self.tree, np.asarray(X, dtype=float), self.tree.config.missing_test)


def train_learner(config: CashConfig, data: Dataset, seed=0, deadline: float | None = None):
    """Fit the learner described by ``config``.

    Raises :class:`EvaluationTimeout` if ``deadline`` (a ``time.monotonic``
    timestamp) has already passed, or passes during tree growth.
    """
    if deadline is not None and time.monotonic() > deadline:
        raise EvaluationTimeout
    family, params = config.family, config.params
    if family == "component_tree":
        return TreeModel(induce(params if isinstance(params, DTConfig) else DTConfig(),
                                data, seed, deadline))
    if family == "naive_bayes":
        return NaiveBayesModel(data, (params or NaiveBayesParams()).alpha)
    if family == "knn":
        p = params or KnnParams()
        return KnnModel(data, p.k, p.distance)
    if family == "majority":
        return MajorityModel(data)
    raise ValueError(f"unknown learner family {family!r}")
