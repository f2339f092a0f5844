"""Acceptance criteria 1-11, one marker per criterion; see the terminal summary."""

import time
from pathlib import Path

import numpy as np
import pytest

from autodt.cash import SmboParams, random_search, smbo_search
from autodt.dtree import CRITERIA, criterion_score
from autodt.evolution import BudgetClock
from autodt.fixtures import (FOUR_METHODS, MATRIX_FOOTERS, WIN_FOOTERS, load_matrix,
                             load_overfit_means)
from autodt.metrics import METRIC_NAMES, MetricSet, accuracy, fmeasure, gmean
from autodt.runner import (RunRecord, aggregate, emit_report, load_config, meta_overfit_gap,
                           run_experiment, with_overrides)
from autodt.search_space import default_cash_space
from autodt.stats import (count_wins, friedman, nemenyi_cd, rank_rows, significant_pairs,
                          wilcoxon)

from conftest import random_dataset
from test_cash import histories_identical, replay_argmin_ok
from test_dtree import oracle, random_tables, rep_never_hurts
from test_evolution import _run, bestset_size_ok, windows_monotone
from test_metrics import _cm, oracle_fmeasure, oracle_gmean
from test_stats import wilcoxon_exact_agrees

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
GGP = FOUR_METHODS.index("GGP-RI")


def criterion(n, title):
    return pytest.mark.criterion(n, title)


# 1 ------------------------------------------------------------------------------------

@criterion(1, "gmean_1000 fixture ranks and means")
def test_c1_table5_replay():
    start = time.perf_counter()
    m = load_matrix("gmean_1000")
    _, avg = rank_rows(m)
    assert m.values.shape == (20, 4)
    assert avg.tolist() == [2.0, 2.0, 4.0, 2.0]
    assert np.all(np.abs(m.means() - np.array(MATRIX_FOOTERS["gmean_1000"][1])) <= 0.0005)
    assert time.perf_counter() - start < 1.0


# 2 ------------------------------------------------------------------------------------

@criterion(2, "remaining matrix fixture rank footers")
@pytest.mark.parametrize("name", ["gmean_10000", "accuracy_1000", "accuracy_10000"])
def test_c2_rank_footers(name):
    _, avg = rank_rows(load_matrix(name))
    expected = MATRIX_FOOTERS[name][2]
    assert tuple(np.round(avg, 3)) == expected
    assert avg == pytest.approx(expected, abs=1e-12)


# 3 ------------------------------------------------------------------------------------

@criterion(3, "Nemenyi separates only GGP-RI")
@pytest.mark.parametrize("name", ["gmean_1000", "accuracy_1000"])
def test_c3_nemenyi(name):
    m = load_matrix(name)
    _, avg = rank_rows(m)
    cd = nemenyi_cd(4, 20, 0.05)
    assert abs(cd - 1.049) <= 0.005
    sig = significant_pairs(avg, cd)
    flagged = {(i, j) for i in range(4) for j in range(i + 1, 4) if sig[i, j]}
    assert flagged == {tuple(sorted((GGP, j))) for j in range(4) if j != GGP}
    assert all(avg[GGP] > avg[j] for j in range(4) if j != GGP)


# 4 ------------------------------------------------------------------------------------

@criterion(4, "Friedman statistics on the gmean_1000 footer")
def test_c4_friedman():
    _, avg = rank_rows(load_matrix("gmean_1000"))
    f = friedman(avg, 20)
    assert abs(f.chi2_f - 36.0) <= 1e-9
    assert abs(f.f_f - 28.5) <= 1e-9
    assert (f.df1, f.df2) == (3, 57)


# 5 ------------------------------------------------------------------------------------

@criterion(5, "paired fixture win counts")
@pytest.mark.parametrize("name", list(WIN_FOOTERS))
def test_c5_win_counts(name):
    file, a, b, wa, wb = WIN_FOOTERS[name]
    m = load_matrix(file)
    w = count_wins(m.column(a), m.column(b), decimals=3)
    assert (w.wins_a, w.wins_b) == (wa, wb)
    assert w.wins_a + w.wins_b + w.ties == 40


# 6 ------------------------------------------------------------------------------------

@criterion(6, "Wilcoxon decisions and exact branch")
@pytest.mark.parametrize("name", list(WIN_FOOTERS))
def test_c6_wilcoxon_no_rejection(name):
    file, a, b, _, _ = WIN_FOOTERS[name]
    m = load_matrix(file)
    t = wilcoxon(m.column(a), m.column(b), 0.05)
    assert m.n == 40
    assert not t.reject and t.p_value >= 0.05


@criterion(6, "Wilcoxon decisions and exact branch")
def test_c6_exact_branch_matches_enumeration():
    assert wilcoxon_exact_agrees(n_max=12, per_n=20, seed=6)


# 7 ------------------------------------------------------------------------------------

def _fixture_records(o):
    ms = lambda v: MetricSet(**{k: (v if k == o.metric else 0.0) for k in METRIC_NAMES})
    return [RunRecord("all", o.method, float(o.budget), 1, 0, ms(o.search), ms(o.test), 0.0, 0,
                      "fixture")]


@criterion(7, "Meta-overfitting gaps")
@pytest.mark.parametrize("method,expected", [("HEAD-DT", -0.014), ("Auto-WEKA", +0.139)])
def test_c7_overfit_gaps(method, expected):
    o = next(x for x in load_overfit_means()
             if x.method == method and x.metric == "gmean" and x.budget == 1000)
    gap = meta_overfit_gap(_fixture_records(o), "gmean").gap
    assert round(gap, 3) == expected
    assert abs(gap - expected) < 1e-9


# 8 ------------------------------------------------------------------------------------

@criterion(8, "EA property suite")
def test_c8_ea_properties():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    failures = []
    for i in range(200):
        ds = random_dataset(rng, n=int(rng.integers(30, 60)), n_classes=int(rng.integers(2, 4)),
                            missing=0.05 if i % 2 else 0.0, signal=bool(i % 3))
        s = int(rng.integers(1, 4))
        g = int(rng.integers(1, 8))
        evals = int(rng.integers(5, 60)) if i % 4 == 0 else 10**6
        pop = int(rng.integers(4, 8))
        res = _run(ds, seed=i, pop=pop, g=g, s=s, evals=evals)
        if not windows_monotone(res, s):
            failures.append((i, "monotone"))
        if not bestset_size_ok(res, s):
            failures.append((i, "bestset"))
        if i % 10 == 0:
            again = _run(ds, seed=i, pop=pop, g=g, s=s, evals=evals)
            if again.best_genome != res.best_genome or \
                    [t.best_f for t in again.trace] != [t.best_f for t in res.trace]:
                failures.append((i, "determinism"))
    assert failures == []
    assert time.perf_counter() - start < 180


# 9 ------------------------------------------------------------------------------------

@criterion(9, "Tree and metric oracles")
def test_c9_split_criteria():
    for k, criterion_name in enumerate(CRITERIA):
        for parent, children in random_tables(900 + k, count=1000):
            got = criterion_score(criterion_name, parent, children)
            want = oracle(criterion_name, parent, children)
            assert abs(got - want) <= 1e-12 * max(1.0, abs(want))


@criterion(9, "Tree and metric oracles")
def test_c9_reduced_error_pruning():
    assert rep_never_hurts(500, seed=9) == 0


@criterion(9, "Tree and metric oracles")
def test_c9_metric_oracles():
    rng = np.random.default_rng(909)
    for _ in range(1000):
        k = int(rng.integers(2, 6))
        counts = rng.integers(0, 12, size=(k, k))
        counts[rng.random((k, k)) < 0.2] = 0
        counts[0, 0] += counts.sum() == 0
        cm = _cm(counts)
        assert abs(gmean(cm) - oracle_gmean(counts.tolist())) <= 1e-12
        assert abs(fmeasure(cm) - oracle_fmeasure(counts.tolist())) <= 1e-12
        assert accuracy(cm) == np.trace(counts) / counts.sum()


# 10 -----------------------------------------------------------------------------------

@criterion(10, "End-to-end smoke run")
@pytest.mark.slow
def test_c10_smoke(tmp_path):
    cfg = with_overrides(load_config(CONFIGS / "smoke.cfg"), output=str(tmp_path))
    assert cfg.outer_k == 5 and cfg.seeds == (1, 2) and cfg.budgets == (5.0,)
    start = time.perf_counter()
    result = run_experiment(cfg)
    elapsed = time.perf_counter() - start
    agg = aggregate(result.records, "accuracy", 5.0)
    acc = dict(zip(agg.methods, agg.values[0]))
    print(f"smoke accuracy {acc} in {elapsed:.1f}s")
    assert len(result.records) == 5 * 2 * 3
    for method in ("evolve_dt", "smbo_cash"):
        assert acc[method] >= 0.9
        assert acc[method] > acc["majority"]
    written = emit_report(result.records, tmp_path, cfg.metrics, alpha=cfg.alpha)
    assert (tmp_path / "matrix_accuracy_5.csv") in written
    assert elapsed < 300


# 11 -----------------------------------------------------------------------------------

@criterion(11, "SMBO contract")
def test_c11_argmin_replay(separable):
    space = default_cash_space()
    for seed in range(5):
        best, hist = smbo_search(space, separable, BudgetClock(max_evaluations=10),
                                 SmboParams(n_sample=50), seed)
        assert replay_argmin_ok(hist)
        assert best == hist.best().genome
        losses = [e.loss for e in hist]
        assert hist.best_index() == int(np.argmin(losses))


@criterion(11, "SMBO contract")
def test_c11_epsilon_one_is_random_search(separable):
    space = default_cash_space()
    for seed in range(5):
        _, a = smbo_search(space, separable, BudgetClock(max_evaluations=8),
                           SmboParams(epsilon=1.0, n_sample=50), seed)
        _, b = random_search(space, separable, BudgetClock(max_evaluations=8), seed,
                             SmboParams(n_sample=50))
        assert len(a) == len(b) == 8
        assert histories_identical(a, b)
