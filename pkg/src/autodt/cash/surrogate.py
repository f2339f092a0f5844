"""Regression-tree surrogate of configuration loss.

The tree splits on single one-hot feature columns by variance reduction and
predicts the median loss of each leaf. Median leaves keep the training MAE
at or below that of any constant predictor, the training mean included.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PRIOR_LOSS = 0.5


@dataclass
class _RNode:
    value: float
    feature: int = -1
    left: "_RNode | None" = None  # rows with feature value <= threshold
    right: "_RNode | None" = None
    threshold: float = 0.5


class RegressionTree:
    def __init__(self, min_split: int = 2, max_depth: int | None = None):
        self.min_split = min_split
        self.max_depth = max_depth
        self.root: _RNode | None = None

    def fit(self, F: np.ndarray, y: np.ndarray) -> "RegressionTree":
        F = np.asarray(F, dtype=float)
        y = np.asarray(y, dtype=float)
        if len(y) == 0:
            raise ValueError("cannot fit a surrogate on no observations")
        self.root = self._grow(F, y, np.arange(len(y)), 0)
        return self

    def _grow(self, F, y, rows, depth) -> _RNode:
        ys = y[rows]
        node = _RNode(float(np.median(ys)))
        if (len(rows) < self.min_split or np.ptp(ys) == 0
                or (self.max_depth is not None and depth >= self.max_depth)):
            return node
        split = _best_split(F[rows], ys)
        if split is None:
            return node
        j, t = split
        go_left = F[rows, j] <= t
        node.feature, node.threshold = j, t
        node.left = self._grow(F, y, rows[go_left], depth + 1)
        node.right = self._grow(F, y, rows[~go_left], depth + 1)
        return node

    def predict(self, F: np.ndarray) -> np.ndarray:
        if self.root is None:
            raise ValueError("surrogate is not fitted")
        F = np.asarray(F, dtype=float)
        out = np.empty(len(F))
        stack = [(self.root, np.arange(len(F)))]
        while stack:
            node, rows = stack.pop()
            if node.left is None:
                out[rows] = node.value
                continue
            go_left = F[rows, node.feature] <= node.threshold
            stack.append((node.left, rows[go_left]))
            stack.append((node.right, rows[~go_left]))
        return out

    @property
    def n_leaves(self) -> int:
        def count(n):
            return 1 if n.left is None else count(n.left) + count(n.right)
        return 0 if self.root is None else count(self.root)


def _best_split(F: np.ndarray, y: np.ndarray):
    """Column and threshold with the largest SSE reduction; None if nothing helps.

    Thresholds are midpoints between consecutive distinct column values, so
    one-hot columns split at 0.5. Ties go to the lowest column.
    """
    n = len(y)
    total_sse = float(((y - y.mean()) ** 2).sum())
    best, best_gain = None, 1e-12 * max(total_sse, 1.0)
    for j in range(F.shape[1]):
        col = F[:, j]
        order = np.argsort(col, kind="stable")
        c, v = col[order], y[order]
        cut = np.flatnonzero(np.diff(c) > 0)
        if cut.size == 0:
            continue
        s1 = np.cumsum(v)[cut]
        q1 = np.cumsum(v * v)[cut]
        n1 = cut + 1.0
        s, q = v.sum(), (v * v).sum()
        sse = (q1 - s1 ** 2 / n1) + ((q - q1) - (s - s1) ** 2 / (n - n1))
        i = int(np.argmin(sse))
        gain = total_sse - sse[i]
        if gain > best_gain:
            best, best_gain = (j, float((c[cut[i]] + c[cut[i] + 1]) / 2)), gain
    return best


class SurrogateModel:
    """Loss model over a :class:`ComponentSpace`; predicts the prior until updated."""

    def __init__(self, space, prior: float = PRIOR_LOSS):
        self.space = space
        self.prior = prior
        self.tree: RegressionTree | None = None
        self.n_observations = 0

    def predict(self, genomes) -> np.ndarray:
        genomes = list(genomes)
        if self.tree is None:
            return np.full(len(genomes), self.prior)
        return self.tree.predict(self.space.features(genomes))


def surrogate_update(model: SurrogateModel, history) -> SurrogateModel:
    """Refit on every (genome, loss) pair in ``history``; returns a new model."""
    entries = list(history)
    if not entries:
        raise ValueError("surrogate update needs a non-empty history")
    genomes = [e.genome for e in entries]
    losses = np.array([e.loss for e in entries], dtype=float)
    out = SurrogateModel(model.space, model.prior)
    out.tree = RegressionTree().fit(model.space.features(genomes), losses)
    out.n_observations = len(entries)
    return out
