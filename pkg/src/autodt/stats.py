"""Nonparametric comparison of methods over datasets.

Average ranks, the Friedman test with the Iman-Davenport F statistic, the
Nemenyi critical difference, the Wilcoxon signed-rank test and win counts.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple, Sequence

import numpy as np
from scipy import stats as sps

HIGHER_BETTER = "higher_better"
LOWER_BETTER = "lower_better"
FOOTER_ROWS = ("Average", "Average Rank")

# Studentized range quantiles for infinite df divided by sqrt(2), k = 2..10.
Q_TABLE = {
    0.05: (1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164),
    0.10: (1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920),
}
EXACT_MAX_N = 20


@dataclass(frozen=True)
class ResultMatrix:
    """Scores of ``k`` methods (columns) on ``N`` datasets (rows)."""

    methods: tuple[str, ...]
    datasets: tuple[str, ...]
    values: np.ndarray
    direction: str = HIGHER_BETTER

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "datasets", tuple(self.datasets))
        if values.shape != (len(self.datasets), len(self.methods)):
            raise ValueError(f"values shape {values.shape} does not match "
                             f"{len(self.datasets)} datasets x {len(self.methods)} methods")
        if len(self.methods) < 2 or len(self.datasets) < 2:
            raise ValueError("need at least two methods and two datasets")
        if not np.all(np.isfinite(values)):
            raise ValueError("result matrix has missing or non-finite cells")
        if self.direction not in (HIGHER_BETTER, LOWER_BETTER):
            raise ValueError(f"unknown direction {self.direction!r}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def k(self) -> int:
        return len(self.methods)

    @property
    def n(self) -> int:
        return len(self.datasets)

    def column(self, method: str) -> np.ndarray:
        try:
            return self.values[:, self.methods.index(method)]
        except ValueError:
            raise KeyError(f"unknown method {method!r}") from None

    def select(self, methods: Sequence[str]) -> "ResultMatrix":
        if not methods:
            raise ValueError("empty method selection")
        cols = [self.methods.index(m) for m in methods]
        return ResultMatrix(tuple(methods), self.datasets, self.values[:, cols], self.direction)

    def means(self) -> np.ndarray:
        return self.values.mean(axis=0)


def read_matrix_csv(text: str, direction: str = HIGHER_BETTER) -> ResultMatrix:
    """Header = (label, method names...), then one row per dataset.

    Footer rows labelled ``Average`` or ``Average Rank`` are skipped.
    """
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValueError("empty matrix file")
    header, body = rows[0], [r for r in rows[1:] if r[0].strip() not in FOOTER_ROWS]
    methods = [h.strip() for h in header[1:]]
    datasets, values = [], []
    for lineno, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise ValueError(f"row {lineno}: expected {len(header)} cells, got {len(r)}")
        datasets.append(r[0].strip())
        try:
            values.append([float(c) for c in r[1:]])
        except ValueError:
            raise ValueError(f"row {lineno}: non-numeric cell") from None
    return ResultMatrix(tuple(methods), tuple(datasets), np.array(values).reshape(-1, len(methods)),
                        direction)


# --------------------------------------------------------------------------- ranks

def rank_rows(matrix: ResultMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Per-row ranks (1 = best, ties averaged) and their column means."""
    v = -matrix.values if matrix.direction == HIGHER_BETTER else matrix.values
    ranks = sps.rankdata(v, method="average", axis=1)
    return ranks, ranks.mean(axis=0)


class FriedmanResult(NamedTuple):
    chi2_f: float
    f_f: float
    df1: int
    df2: int
    p_value: float
    degenerate: bool


def friedman(avg_ranks: Sequence[float] | np.ndarray, n: int, k: int | None = None) -> FriedmanResult:
    """Friedman chi-square and the Iman-Davenport F from average ranks.

    ``avg_ranks`` may also be an ``N x k`` rank table, whose column means are
    used. When chi2_F reaches N(k-1) the F denominator vanishes; F_F is then
    reported as infinite and ``degenerate`` is set.
    """
    r = np.asarray(avg_ranks, dtype=float)
    if r.ndim == 2:
        n = r.shape[0]
        r = r.mean(axis=0)
    k = len(r) if k is None else k
    if len(r) != k:
        raise ValueError("number of average ranks does not match k")
    if n < 2 or k < 2:
        raise ValueError("need N >= 2 and k >= 2")
    chi2 = 12.0 * n / (k * (k + 1)) * (float(np.sum(r ** 2)) - k * (k + 1) ** 2 / 4.0)
    chi2 = max(chi2, 0.0)
    df1, df2 = k - 1, (k - 1) * (n - 1)
    denom = n * (k - 1) - chi2
    if denom <= 1e-12 * n * k:
        return FriedmanResult(chi2, math.inf, df1, df2, 0.0, True)
    ff = (n - 1) * chi2 / denom
    return FriedmanResult(chi2, ff, df1, df2, float(sps.f.sf(ff, df1, df2)), False)


def q_value(k: int, alpha: float = 0.05) -> float:
    table = Q_TABLE.get(round(float(alpha), 10))
    if table is None:
        raise ValueError(f"alpha={alpha} is not tabulated; use one of {sorted(Q_TABLE)}")
    if not 2 <= k <= 10:
        raise ValueError(f"k={k} is outside the tabulated range 2..10")
    return table[k - 2]


def nemenyi_cd(k: int, n: int, alpha: float = 0.05) -> float:
    if n < 1:
        raise ValueError("N must be positive")
    return q_value(k, alpha) * math.sqrt(k * (k + 1) / (6.0 * n))


def significant_pairs(avg_ranks, cd: float) -> np.ndarray:
    """Boolean ``k x k`` matrix: True where the rank gap exceeds the critical difference."""
    r = np.asarray(avg_ranks, dtype=float)
    return np.abs(r[:, None] - r[None, :]) > cd


def cliques(avg_ranks, cd: float) -> list[tuple[int, ...]]:
    """Maximal runs of rank-adjacent methods whose rank spread is within ``cd``.

    Returned as method-index tuples ordered by average rank; singletons are
    omitted.
    """
    r = np.asarray(avg_ranks, dtype=float)
    order = sorted(range(len(r)), key=lambda i: (r[i], i))
    runs = []
    for a in range(len(order)):
        b = a
        while b + 1 < len(order) and r[order[b + 1]] - r[order[a]] <= cd:
            b += 1
        if b > a:
            runs.append(tuple(order[a:b + 1]))
    maximal = []
    for run in runs:
        if not any(set(run) < set(other) for other in runs):
            if run not in maximal:
                maximal.append(run)
    return maximal


# --------------------------------------------------------------------------- two methods

class WilcoxonResult(NamedTuple):
    statistic: float  # min(W+, W-)
    p_value: float
    reject: bool
    n: int  # non-zero differences
    w_plus: float
    w_minus: float
    method: str  # "exact", "normal" or "none"
    no_decision: bool = False


def signed_rank_null_counts(ranks) -> np.ndarray:
    """Number of sign patterns giving each value of 2*W+, for the given ranks.

    Ranks are doubled so that average ranks of ties stay integral.
    """
    doubled = np.rint(2 * np.asarray(ranks, dtype=float)).astype(np.int64)
    counts = np.zeros(int(doubled.sum()) + 1, dtype=np.int64)
    counts[0] = 1
    for r in doubled:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:len(counts) - r]
        counts = counts + shifted
    return counts


def wilcoxon(a, b, alpha: float = 0.05) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired samples.

    Zero differences are dropped. Exact null distribution for up to
    ``EXACT_MAX_N`` non-zero differences, else the normal approximation with
    continuity and tie corrections. All-zero differences give a no-decision
    result.
    """
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be 1-d and of equal length")
    d = a - b
    d = d[d != 0]
    n = len(d)
    if n == 0:
        return WilcoxonResult(0.0, 1.0, False, 0, 0.0, 0.0, "none", True)
    if n < 5:
        raise ValueError(f"need at least 5 non-zero differences, got {n}")
    ranks = sps.rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    stat = min(w_plus, w_minus)
    if n <= EXACT_MAX_N:
        counts = signed_rank_null_counts(ranks)
        t = int(round(2 * w_plus))
        total = float(2 ** n)
        lower = counts[:t + 1].sum() / total
        upper = counts[t:].sum() / total
        p = min(1.0, 2.0 * min(lower, upper))
        method = "exact"
    else:
        mean = n * (n + 1) / 4.0
        _, tie_sizes = np.unique(np.abs(d), return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_sizes ** 3 - tie_sizes) / 48.0
        z = max(abs(w_plus - mean) - 0.5, 0.0) / math.sqrt(var)
        p = min(1.0, float(2.0 * sps.norm.sf(z)))
        method = "normal"
    return WilcoxonResult(stat, p, bool(p < alpha), n, w_plus, w_minus, method)


class WinCount(NamedTuple):
    wins_a: int
    wins_b: int
    ties: int


def count_wins(a, b, decimals: int | None = None, direction: str = HIGHER_BETTER) -> WinCount:
    """Strict per-row comparison, optionally after rounding to ``decimals``."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("columns differ in length")
    if decimals is not None:
        a, b = np.round(a, decimals), np.round(b, decimals)
    if direction == LOWER_BETTER:
        a, b = -a, -b
    return WinCount(int(np.sum(a > b)), int(np.sum(b > a)), int(np.sum(a == b)))


# --------------------------------------------------------------------------- reports

@dataclass
class RankReport:
    methods: tuple[str, ...]
    ranks: np.ndarray
    avg_ranks: np.ndarray
    means: np.ndarray
    friedman: FriedmanResult
    alpha: float
    cd: float
    significant: np.ndarray
    cliques: list[tuple[int, ...]]

    def significant_pairs(self) -> list[tuple[str, str]]:
        return [(self.methods[i], self.methods[j])
                for i, j in combinations(range(len(self.methods)), 2) if self.significant[i, j]]

    def ranks_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "mean", "avg_rank"])
        for m, mean, r in zip(self.methods, self.means, self.avg_ranks):
            w.writerow([m, f"{mean:.3f}", f"{r:.3f}"])
        return buf.getvalue()

    def stats_csv(self) -> str:
        f = self.friedman
        rows = [("N", self.ranks.shape[0]), ("k", len(self.methods)),
                ("chi2_F", f"{f.chi2_f:.6f}"), ("F_F", f"{f.f_f:.6f}"),
                ("df1", f.df1), ("df2", f.df2), ("p_value", f"{f.p_value:.6g}"),
                ("alpha", self.alpha), ("nemenyi_cd", f"{self.cd:.6f}")]
        rows += [(f"significant:{a}|{b}", 1) for a, b in self.significant_pairs()]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        w.writerows(rows)
        return buf.getvalue()

    def cd_data(self) -> str:
        """Whitespace-separated ``method avg_rank groups`` lines for CD diagrams.

        ``groups`` lists the ids of the non-significant cliques containing the
        method, comma separated, or ``-`` if none.
        """
        lines = [f"# cd {self.cd:.6f} alpha {self.alpha:g}", "method avg_rank groups"]
        for i, m in enumerate(self.methods):
            ids = [str(g) for g, members in enumerate(self.cliques) if i in members]
            lines.append(f"{m.replace(' ', '_')} {self.avg_ranks[i]:.3f} {','.join(ids) or '-'}")
        return "\n".join(lines) + "\n"


def rank_report(matrix: ResultMatrix, alpha: float = 0.05) -> RankReport:
    ranks, avg = rank_rows(matrix)
    cd = nemenyi_cd(matrix.k, matrix.n, alpha)
    return RankReport(matrix.methods, ranks, avg, matrix.means(),
                      friedman(avg, matrix.n, matrix.k), alpha, cd,
                      significant_pairs(avg, cd), cliques(avg, cd))
