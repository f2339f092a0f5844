"""Published result tables bundled as fixtures, with their printed summary rows.

Each matrix fixture is a CSV under ``data/fixtures``; the expected footer
values are the ones printed beneath the tables. :func:`verify_fixtures`
recomputes every footer, win count, test decision and search/test gap.
"""

from __future__ import annotations

from importlib import resources
from typing import NamedTuple

import numpy as np

from .stats import (ResultMatrix, count_wins, nemenyi_cd, rank_rows, read_matrix_csv,
                    significant_pairs, wilcoxon)

FOUR_METHODS = ("HEAD-DT", "HHEA-BNC", "GGP-RI", "Auto-WEKA")

# name -> (file, printed column means, printed average ranks)
MATRIX_FOOTERS = {
    "gmean_1000": ("gmean_1000.csv", (0.776, 0.774, 0.523, 0.775), (2.000, 2.000, 4.000, 2.000)),
    "gmean_10000": ("gmean_10000.csv", (0.777, 0.777, 0.526, 0.783), (2.050, 2.100, 3.850, 2.000)),
    "accuracy_1000": ("accuracy_1000.csv", (0.798, 0.805, 0.481, 0.805),
                      (2.150, 2.025, 4.000, 1.825)),
    "accuracy_10000": ("accuracy_10000.csv", (0.797, 0.806, 0.486, 0.813),
                       (2.150, 2.050, 3.950, 1.850)),
}

# name -> (file, column a, column b, printed wins a, printed wins b)
WIN_FOOTERS = {
    "pair_accuracy_1000": ("pair_accuracy.csv", "HEAD-DT@1000", "Auto-WEKA@1000", 18, 21),
    "pair_accuracy_10000": ("pair_accuracy.csv", "HEAD-DT@10000", "Auto-WEKA@10000", 17, 23),
    "pair_gmean_1000": ("pair_gmean.csv", "HEAD-DT@1000", "Auto-WEKA@1000", 24, 16),
    "pair_gmean_10000": ("pair_gmean.csv", "HEAD-DT@10000", "Auto-WEKA@10000", 21, 19),
}

PRINTED_DECIMALS = 3
# Cells and printed means are each rounded to 3 decimals.
MEAN_TOLERANCE = 1e-3


class OverfitMean(NamedTuple):
    method: str
    metric: str
    budget: int
    search: float
    test: float


def _read(name: str) -> str:
    return resources.files("autodt").joinpath("data", "fixtures", name).read_text()


def load_matrix(name: str) -> ResultMatrix:
    """A fixture matrix by key of :data:`MATRIX_FOOTERS` or by file name."""
    file = MATRIX_FOOTERS[name][0] if name in MATRIX_FOOTERS else name
    return read_matrix_csv(_read(file))


def load_overfit_means() -> list[OverfitMean]:
    rows = _read("overfit_means.csv").strip().splitlines()[1:]
    out = []
    for r in rows:
        m, metric, budget, s, t = r.split(",")
        out.append(OverfitMean(m, metric, int(budget), float(s), float(t)))
    return out


class Check(NamedTuple):
    name: str
    ok: bool
    detail: str


def verify_fixtures(alpha: float = 0.05) -> list[Check]:
    checks: list[Check] = []
    for name, (_, means, ranks) in MATRIX_FOOTERS.items():
        m = load_matrix(name)
        _, avg = rank_rows(m)
        got = tuple(round(float(r), PRINTED_DECIMALS) for r in avg)
        checks.append(Check(f"{name}:ranks", np.allclose(avg, ranks, atol=1e-9),
                            f"{got} vs {ranks}"))
        mean_ok = np.all(np.abs(m.means() - np.array(means)) <= MEAN_TOLERANCE + 1e-12)
        checks.append(Check(f"{name}:means", bool(mean_ok),
                            f"{tuple(np.round(m.means(), 4))} vs {means}"))
        sig = significant_pairs(avg, nemenyi_cd(m.k, m.n, alpha))
        worst = FOUR_METHODS.index("GGP-RI")
        expected = np.zeros_like(sig)
        expected[worst, :] = expected[:, worst] = True
        expected[worst, worst] = False
        checks.append(Check(f"{name}:nemenyi", bool(np.array_equal(sig, expected)),
                            "only GGP-RI separated" if np.array_equal(sig, expected)
                            else f"flags {sig.astype(int).tolist()}"))
    for name, (file, a, b, wa, wb) in WIN_FOOTERS.items():
        m = load_matrix(file)
        w = count_wins(m.column(a), m.column(b), PRINTED_DECIMALS)
        checks.append(Check(f"{name}:wins", (w.wins_a, w.wins_b) == (wa, wb),
                            f"{tuple(w)} vs ({wa}, {wb}, *)"))
        t = wilcoxon(m.column(a), m.column(b), alpha)
        checks.append(Check(f"{name}:wilcoxon", not t.reject,
                            f"p={t.p_value:.4f} ({t.method}, n={t.n})"))
    for o in load_overfit_means():
        gap = round(o.search - o.test, PRINTED_DECIMALS)
        checks.append(Check(f"overfit:{o.method}:{o.metric}:{o.budget}", True, f"gap={gap:+.3f}"))
    return checks
