"""Split evaluation functions.

All criteria take a table of per-branch class counts shaped ``(..., B, C)``
and return a score where larger means a better split. The leading axes let
the tree builder score every candidate threshold of an attribute in one call.
"""

from __future__ import annotations

import numpy as np

from .config import CRITERIA

LN2 = np.log(2.0)


def _xlogx(p):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)


def _proportions(counts):
    tot = counts.sum(-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(tot > 0, counts / np.where(tot > 0, tot, 1.0), 0.0)


def entropy(counts):
    return -_xlogx(_proportions(counts)).sum(-1)


def gini(counts):
    p = _proportions(counts)
    tot = counts.sum(-1)
    return np.where(tot > 0, 1.0 - (p * p).sum(-1), 0.0)


def dkm(counts):
    p = _proportions(counts).max(-1)
    return 2.0 * np.sqrt(p * (1.0 - p))


def error_rate(counts):
    tot = counts.sum(-1)
    return np.where(tot > 0, 1.0 - _proportions(counts).max(-1), 0.0)


def _impurity_drop(children, impurity):
    parent = children.sum(-2)
    n = parent.sum(-1)
    sizes = children.sum(-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(n[..., None] > 0, sizes / np.where(n > 0, n, 1.0)[..., None], 0.0)
    return impurity(parent) - (w * impurity(children)).sum(-1)


def _split_info(children):
    return entropy(children.sum(-1))


def _expected(children):
    parent = children.sum(-2)
    n = parent.sum(-1)
    sizes = children.sum(-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return sizes[..., :, None] * parent[..., None, :] / np.where(n > 0, n, 1.0)[..., None, None]


def chi_squared(children):
    e = _expected(children)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(e > 0, (children - e) ** 2 / np.where(e > 0, e, 1.0), 0.0)
    return terms.sum((-1, -2))


def g_statistic(children):
    e = _expected(children)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where((children > 0) & (e > 0), children / np.where(e > 0, e, 1.0), 1.0)
        terms = np.where(children > 0, children * np.log(ratio), 0.0)
    return 2.0 * terms.sum((-1, -2))


def info_gain(children):
    return _impurity_drop(children, entropy)


def gain_ratio(children):
    ig = info_gain(children)
    si = _split_info(children)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(si > 0, ig / np.where(si > 0, si, 1.0), 0.0)


def normalized_gain(children):
    ig = info_gain(children)
    nonempty = (children.sum(-1) > 0).sum(-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(nonempty > 1, ig / np.log2(np.maximum(nonempty, 2)), 0.0)


_SCORERS = {
    "info_gain": info_gain,
    "gain_ratio": gain_ratio,
    "gini_gain": lambda ch: _impurity_drop(ch, gini),
    "chi_squared": chi_squared,
    "g_statistic": g_statistic,
    "dkm": lambda ch: _impurity_drop(ch, dkm),
    "normalized_gain": normalized_gain,
    "error_reduction": lambda ch: _impurity_drop(ch, error_rate),
}
assert tuple(_SCORERS) == CRITERIA


def score_tables(criterion: str, children: np.ndarray) -> np.ndarray:
    """Vectorised scores for a stack of ``(B, C)`` count tables."""
    try:
        scorer = _SCORERS[criterion]
    except KeyError:
        raise ValueError(f"unknown split criterion {criterion!r}") from None
    return scorer(np.asarray(children, dtype=float))


def criterion_score(criterion: str, parent_counts, children_counts) -> float:
    parent = np.asarray(parent_counts, dtype=float)
    children = np.asarray(children_counts, dtype=float)
    if children.ndim != 2 or children.shape[1] != parent.shape[0]:
        raise ValueError("children must be a (branches, classes) table")
    if parent.sum() <= 0:
        raise ValueError("empty parent distribution")
    if not np.allclose(children.sum(0), parent):
        raise ValueError("children counts do not partition the parent counts")
    return float(score_tables(criterion, children))
