import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from autodt.dtree import (CRITERIA, MISSING_TEST, MISSING_TRAIN, Choice, DTConfig, build_tree,
                          criterion_score, induce, load_model, predict, predict_batch, prune,
                          save_model, to_text, tree_from_dict, tree_to_dict)

from conftest import make_dataset, random_dataset


# Textbook formulas, one table at a time, in plain Python.
def _h(counts):
    n = sum(counts)
    return -sum(c / n * math.log2(c / n) for c in counts if c > 0) if n else 0.0


def _gini(counts):
    n = sum(counts)
    return 1.0 - sum((c / n) ** 2 for c in counts) if n else 0.0


def _dkm(counts):
    n = sum(counts)
    if not n:
        return 0.0
    p = max(counts) / n
    return 2.0 * math.sqrt(p * (1.0 - p))


def _err(counts):
    n = sum(counts)
    return 1.0 - max(counts) / n if n else 0.0


def _drop(parent, children, imp):
    n = sum(parent)
    return imp(parent) - sum(sum(ch) / n * imp(ch) for ch in children)


def _chi2(parent, children):
    n = sum(parent)
    s = 0.0
    for ch in children:
        for j, o in enumerate(ch):
            e = sum(ch) * parent[j] / n
            if e > 0:
                s += (o - e) ** 2 / e
    return s


def _g(parent, children):
    n = sum(parent)
    s = 0.0
    for ch in children:
        for j, o in enumerate(ch):
            if o > 0:
                s += o * math.log(o / (sum(ch) * parent[j] / n))
    return 2.0 * s


def oracle(criterion, parent, children):
    ig = _drop(parent, children, _h)
    if criterion == "info_gain":
        return ig
    if criterion == "gain_ratio":
        si = _h([sum(ch) for ch in children])
        return ig / si if si > 0 else 0.0
    if criterion == "gini_gain":
        return _drop(parent, children, _gini)
    if criterion == "chi_squared":
        return _chi2(parent, children)
    if criterion == "g_statistic":
        return _g(parent, children)
    if criterion == "dkm":
        return _drop(parent, children, _dkm)
    if criterion == "normalized_gain":
        b = sum(1 for ch in children if sum(ch) > 0)
        return ig / math.log2(b) if b > 1 else 0.0
    if criterion == "error_reduction":
        return _drop(parent, children, _err)
    raise AssertionError(criterion)


def random_tables(seed, count=1000, n_classes=3):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        b = int(rng.integers(2, 5))
        children = rng.integers(0, 15, size=(b, n_classes))
        children[rng.random(children.shape) < 0.2] = 0
        if children.sum() == 0:
            children[0, 0] = 1
        yield children.sum(0).tolist(), children.tolist()


@pytest.mark.parametrize("criterion", CRITERIA)
def test_criterion_matches_oracle(criterion):
    for parent, children in random_tables(CRITERIA.index(criterion)):
        got = criterion_score(criterion, parent, children)
        assert got == pytest.approx(oracle(criterion, parent, children), abs=1e-12, rel=1e-12)


def test_info_gain_pure_split_is_one_bit():
    assert criterion_score("info_gain", [4, 4], [[4, 0], [0, 4]]) == pytest.approx(1.0)


@pytest.mark.parametrize("criterion", CRITERIA)
def test_degenerate_split_scores_lowest(criterion):
    degenerate = criterion_score(criterion, [4, 4], [[4, 4], [0, 0]])
    for a in range(5):
        for b in range(5):
            children = [[a, b], [4 - a, 4 - b]]
            if min(a + b, 8 - a - b) == 0:
                continue
            assert degenerate <= criterion_score(criterion, [4, 4], children) + 1e-12


def test_criterion_errors():
    with pytest.raises(ValueError):
        criterion_score("info_gain", [0, 0], [[0, 0], [0, 0]])
    with pytest.raises(ValueError):
        criterion_score("info_gain", [3, 3], [[1, 1], [1, 1]])
    with pytest.raises(ValueError):
        criterion_score("bogus", [2, 2], [[2, 0], [0, 2]])


def test_info_gain_and_g_statistic_share_argmax():
    # all binary-class two-way splits of every parent up to 6+6 instances
    for n0, n1 in itertools.product(range(1, 7), repeat=2):
        splits = [[[a, b], [n0 - a, n1 - b]] for a in range(n0 + 1) for b in range(n1 + 1)
                  if 0 < a + b < n0 + n1]
        ig = np.array([criterion_score("info_gain", [n0, n1], s) for s in splits])
        g = np.array([criterion_score("g_statistic", [n0, n1], s) for s in splits])
        assert np.allclose(g, 2 * (n0 + n1) * math.log(2) * ig, atol=1e-9)
        best_ig = set(np.flatnonzero(ig >= ig.max() - 1e-12))
        best_g = set(np.flatnonzero(g >= g.max() - 1e-9))
        assert best_ig == best_g


def _xor():
    X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=float)
    return make_dataset(X, np.array([0, 1, 1, 0]), nominal={0, 1})


def test_xor_multiway():
    ds = _xor()
    tree = build_tree(DTConfig(split_arity="multiway"), ds)
    assert tree.depth == 2
    assert np.array_equal(predict_batch(tree, ds.X), ds.y)


@pytest.mark.parametrize("criterion", CRITERIA)
def test_single_instance_is_a_leaf(criterion):
    ds = make_dataset(np.array([[1.0]]), np.array([1]), n_classes=2)
    tree = build_tree(DTConfig(split_criterion=criterion), ds)
    assert tree.root.is_leaf and tree.root.label == 1


def test_pure_data_single_leaf():
    rng = np.random.default_rng(0)
    ds = make_dataset(rng.normal(size=(30, 3)), np.zeros(30, dtype=int), n_classes=2)
    for crit in CRITERIA:
        for arity in ("binary", "multiway"):
            tree = build_tree(DTConfig(split_criterion=crit, split_arity=arity), ds)
            assert tree.n_nodes == 1


def test_empty_training_set_rejected():
    ds = make_dataset(np.zeros((0, 1)), np.zeros(0, dtype=int), n_classes=2)
    with pytest.raises(ValueError):
        build_tree(DTConfig(), ds)


def _all_configs(rng, count):
    stops = [Choice("min_instances", 2), Choice("max_depth", 3),
             Choice("purity_threshold", 0.9), Choice("chi_sq_threshold", 0.1)]
    for _ in range(count):
        yield DTConfig(
            split_criterion=str(rng.choice(CRITERIA)),
            split_arity=str(rng.choice(["binary", "multiway"])),
            stop_rule=stops[int(rng.integers(len(stops)))],
            missing_train=str(rng.choice(MISSING_TRAIN)),
            missing_test=str(rng.choice(MISSING_TEST)),
        )


def _walk(tree, x, policy):
    """Independent recursive traversal used as a prediction oracle."""
    node = tree.root
    while node.children:
        v = x[node.attribute]
        if v != v:
            if policy == "halt_and_use_node_distribution":
                return node.label
            if policy == "majority_branch":
                node = node.children[int(np.argmax(node.branch_weights))]
                continue
            v = node.fill_value
        if node.threshold is not None:
            node = node.children[0 if v <= node.threshold else 1]
        elif node.value is not None:
            node = node.children[0 if v == node.value else 1]
        else:
            node = node.children[int(v)]
    return node.label


def test_predict_batch_matches_walk_oracle():
    rng = np.random.default_rng(1)
    for cfg in _all_configs(rng, 60):
        ds = random_dataset(rng, n=80, n_num=2, n_nom=2, n_classes=3, missing=0.1)
        tree = build_tree(cfg, ds)
        for policy in MISSING_TEST:
            batch = predict_batch(tree, ds.X, policy)
            for i in range(len(ds)):
                assert batch[i] == _walk(tree, ds.X[i], policy)
                assert predict(tree, ds.X[i], policy) == batch[i]


def test_tree_structure_invariants():
    rng = np.random.default_rng(2)
    for cfg in _all_configs(rng, 60):
        ds = random_dataset(rng, n=70, n_num=2, n_nom=2, n_classes=3, missing=0.1)
        tree = build_tree(cfg, ds)

        def check(node, nominal_used):
            if node.children:
                assert len(node.children) >= 2
                att = tree.features[node.attribute]
                if att.is_nominal:
                    assert node.attribute not in nominal_used
                    nominal_used = nominal_used | {node.attribute}
                for child in node.children:
                    check(child, nominal_used)

        check(tree.root, frozenset())
        if cfg.missing_train != "ignore_row":
            assert tree.root.counts.sum() == pytest.approx(len(ds))


def test_complete_instances_reach_one_leaf():
    rng = np.random.default_rng(3)
    ds = random_dataset(rng, n=100, n_num=3, n_nom=1, n_classes=2)
    tree = build_tree(DTConfig(), ds)
    leaves = [n for n in tree.nodes() if n.is_leaf]
    for x in ds.X:
        reached = 0
        for leaf in leaves:
            # a leaf is reached iff every test on its path is satisfied
            reached += _reaches(tree.root, leaf, x)
        assert reached == 1


def _reaches(node, target, x):
    if node is target:
        return 1
    total = 0
    for b, child in enumerate(node.children):
        v = x[node.attribute]
        if node.threshold is not None:
            ok = (v <= node.threshold) == (b == 0)
        elif node.value is not None:
            ok = (v == node.value) == (b == 0)
        else:
            ok = int(v) == b
        if ok:
            total += _reaches(child, target, x)
    return total


def test_all_missing_halt_uses_root_majority():
    rng = np.random.default_rng(4)
    ds = random_dataset(rng, n=60)
    tree = build_tree(DTConfig(missing_test="halt_and_use_node_distribution"), ds)
    x = np.full(ds.X.shape[1], np.nan)
    assert predict(tree, x) == int(np.argmax(ds.class_counts()))


def test_min_instances_monotone():
    rng = np.random.default_rng(5)
    for _ in range(20):
        ds = random_dataset(rng, n=120, n_num=3, n_nom=1, n_classes=3, missing=0.05)
        crit = str(rng.choice(CRITERIA))
        sizes = [build_tree(DTConfig(split_criterion=crit, stop_rule=Choice("min_instances", m)),
                            ds).n_nodes for m in (1, 2, 4, 8, 16, 32, 64)]
        assert all(a >= b for a, b in zip(sizes, sizes[1:]))


def test_build_is_deterministic():
    rng = np.random.default_rng(6)
    ds = random_dataset(rng, n=90, missing=0.1)
    cfg = DTConfig(split_criterion="gain_ratio", missing_train="fractional_weight",
                   pruning=Choice("reduced_error", 0.3))
    assert induce(cfg, ds, seed=3) == induce(cfg, ds, seed=3)


def test_pruning_none_is_identity():
    ds = random_dataset(np.random.default_rng(7), n=80)
    tree = build_tree(DTConfig(), ds)
    assert prune(tree, DTConfig()) == tree


def test_max_depth_cut_zero_is_root_leaf():
    ds = random_dataset(np.random.default_rng(8), n=80)
    tree = build_tree(DTConfig(), ds)
    cut = prune(tree, DTConfig(pruning=Choice("max_depth_cut", 0)))
    assert cut.n_nodes == 1
    assert np.array_equal(cut.root.counts, tree.root.counts)
    assert cut.depth == 0


@pytest.mark.parametrize("d", [1, 2, 3])
def test_max_depth_cut_bounds_depth(d):
    ds = random_dataset(np.random.default_rng(9), n=120, n_classes=3)
    tree = build_tree(DTConfig(), ds)
    assert prune(tree, DTConfig(pruning=Choice("max_depth_cut", d))).depth <= d


def test_reduced_error_needs_prune_set():
    ds = random_dataset(np.random.default_rng(10), n=40)
    tree = build_tree(DTConfig(), ds)
    with pytest.raises(ValueError):
        prune(tree, DTConfig(pruning=Choice("reduced_error", 0.25)), None)


def rep_never_hurts(n_pairs=500, seed=11):
    """Count of (tree, prune set) pairs where REP increased prune-set errors."""
    rng = np.random.default_rng(seed)
    configs = list(_all_configs(rng, n_pairs))
    violations = 0
    for cfg in configs:
        n_classes = int(rng.integers(2, 4))
        grow = random_dataset(rng, n=int(rng.integers(20, 60)), n_classes=n_classes,
                              missing=0.1, signal=bool(rng.random() < 0.5))
        hold = random_dataset(rng, n=int(rng.integers(5, 30)), n_classes=n_classes,
                              missing=0.1, signal=bool(rng.random() < 0.5))
        tree = build_tree(cfg, grow)
        before = int(np.sum(predict_batch(tree, hold.X, cfg.missing_test) != hold.y))
        rep_cfg = DTConfig(cfg.split_criterion, cfg.split_arity, cfg.stop_rule,
                           cfg.missing_train, cfg.missing_test, Choice("reduced_error", 0.25))
        pruned = prune(tree, rep_cfg, hold)
        after = int(np.sum(predict_batch(pruned, hold.X, cfg.missing_test) != hold.y))
        violations += after > before
        assert pruned.n_nodes <= tree.n_nodes
    return violations


def test_reduced_error_never_increases_prune_error():
    assert rep_never_hurts(200, seed=12) == 0


@pytest.mark.parametrize("pruning", [Choice("pessimistic", 0.25), Choice("pessimistic", 0.05),
                                     Choice("min_error"), Choice("reduced_error", 0.3)])
def test_pruners_shrink_trees(pruning):
    rng = np.random.default_rng(13)
    for _ in range(10):
        ds = random_dataset(rng, n=100, n_classes=3, missing=0.05)
        full = build_tree(DTConfig(), ds)
        pruned = induce(DTConfig(pruning=pruning), ds, seed=1)
        if pruning.kind != "reduced_error":
            assert pruned.n_nodes <= full.n_nodes


def test_pessimistic_prunes_noise():
    rng = np.random.default_rng(14)
    ds = random_dataset(rng, n=200, signal=False)
    full = build_tree(DTConfig(), ds)
    pruned = induce(DTConfig(pruning=Choice("pessimistic", 0.25)), ds)
    assert pruned.n_nodes < full.n_nodes


def test_separable_bundle_is_learnable(separable):
    tree = induce(DTConfig(), separable)
    assert np.mean(predict_batch(tree, separable.X) == separable.y) > 0.97


def test_timeout_raises():
    from autodt.dtree import EvaluationTimeout
    ds = random_dataset(np.random.default_rng(15), n=50)
    with pytest.raises(EvaluationTimeout):
        build_tree(DTConfig(), ds, deadline=0.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from(CRITERIA), st.sampled_from(["binary", "multiway"]))
def test_serialization_round_trip(seed, criterion, arity):
    rng = np.random.default_rng(seed)
    ds = random_dataset(rng, n=50, n_nom=2, missing=0.1)
    cfg = DTConfig(split_criterion=criterion, split_arity=arity,
                   missing_train="fractional_weight", pruning=Choice("pessimistic", 0.25))
    tree = induce(cfg, ds)
    back = tree_from_dict(tree_to_dict(tree))
    assert back == tree and back.config == tree.config
    assert np.array_equal(predict_batch(back, ds.X), predict_batch(tree, ds.X))


def test_model_file_and_text(tmp_path):
    ds = random_dataset(np.random.default_rng(16), n=60, n_nom=1)
    tree = induce(DTConfig(split_arity="multiway"), ds)
    save_model(tree, tmp_path / "m.json")
    assert load_model(tmp_path / "m.json") == tree
    text = to_text(tree)
    lines = text.splitlines()
    assert lines[0].startswith("root [n=60 |")
    assert len(lines) == tree.n_nodes
    assert all(line.count("->") == 1 for line in lines)
