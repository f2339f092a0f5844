import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from autodt.dataset import (ArffError, ColumnSpec, SchemaError, load_dataset, meta_split,
                            parse_arff, parse_csv, parse_schema, serialize_arff,
                            stratified_kfold, summarize)

from conftest import make_dataset

SMALL = """% comment
@relation toy
@attribute temp numeric
@attribute windy {yes,no}
@attribute play {yes,no}
@data
1.5,yes,no
?,no,yes
3,yes,yes
"""


def test_arff_small_example():
    ds = parse_arff(SMALL)
    assert len(ds) == 3
    assert int(np.isnan(ds.X).sum()) == 1
    assert ds.classes == ("yes", "no")
    assert ds.class_attribute.name == "play"
    assert ds.rows()[1] == [None, "no", "yes"]


def test_arff_undeclared_value_reports_line():
    bad = SMALL.replace("3,yes,yes", "3,maybe,yes")
    with pytest.raises(ArffError) as exc:
        parse_arff(bad)
    assert exc.value.line == 9
    assert "maybe" in str(exc.value)


@pytest.mark.parametrize("text", [
    "@relation r\n@attribute a numeric\n@attribute c {x,y}\n",  # no @data
    "@relation r\n@attribute a numeric\n@attribute c {x,y}\n@data\n1,x,3\n2,y\n",
    "@relation r\n@attribute a string\n@attribute c {x,y}\n@data\n",
    "@relation r\n@attribute a numeric\n@attribute c {x,y}\n@data\n{0 1, 1 x}\n",
    "@relation r\n@attribute a numeric\n@attribute c {x,y}\n@data\n1,'x\n",
    "@relation r\n@attribute a numeric\n@attribute c {x,y}\n@data\n1,?\n2,y\n",
    "@relation r\n@attribute a numeric\n@attribute c {x,x}\n@data\n1,x\n",
    "@relation r\n@attribute a numeric\n@attribute c {x,y}\n@data\nnan,x\n2,y\n",
    "@relation r\nbogus line\n@data\n",
])
def test_arff_malformed_inputs(text):
    with pytest.raises(ValueError):
        parse_arff(text)


def test_arff_single_class_rejected():
    with pytest.raises(SchemaError):
        parse_arff("@relation r\n@attribute a numeric\n@attribute c {x,y}\n@data\n1,x\n2,x\n")


def test_arff_class_override():
    text = SMALL
    ds = parse_arff(text, class_attribute="windy")
    assert ds.class_attribute.name == "windy"
    with pytest.raises(SchemaError):
        parse_arff(text, class_attribute="temp")
    with pytest.raises(SchemaError):
        parse_arff(text, class_attribute="nope")


def test_arff_quoted_values():
    text = ("@relation 'my rel'\n@attribute 'a b' {'x y','?'}\n@attribute c {p,q}\n@data\n"
            "'x y',p\n'?',q\n?,p\n")
    ds = parse_arff(text)
    assert ds.relation == "my rel"
    assert [r[0] for r in ds.rows()] == ["x y", "?", None]


# Generated small ARFF files for the round-trip and corruption properties.
values = st.lists(st.sampled_from(["lo", "hi", "a b", "q,r", "x'y", "?", "mid"]),
                  min_size=2, max_size=4, unique=True)


@st.composite
def arff_tables(draw):
    n_num = draw(st.integers(0, 3))
    nom_values = draw(st.lists(values, min_size=0, max_size=2))
    classes = draw(st.lists(st.sampled_from(["yes", "no", "maybe"]), min_size=2, max_size=3,
                            unique=True))
    n = draw(st.integers(2, 12))
    cols = []
    for _ in range(n_num):
        cols.append(("num", None, draw(st.lists(
            st.one_of(st.none(), st.floats(-1e6, 1e6, allow_nan=False, width=32)),
            min_size=n, max_size=n))))
    for vals in nom_values:
        cols.append(("nom", vals, draw(st.lists(st.one_of(st.none(), st.sampled_from(vals)),
                                                min_size=n, max_size=n))))
    y = draw(st.lists(st.sampled_from(classes), min_size=n, max_size=n))
    y[0], y[1] = classes[0], classes[1]
    return cols, classes, y


def _render(cols, classes, y):
    from autodt.dataset import _quote
    lines = ["@relation gen"]
    for j, (kind, vals, _) in enumerate(cols):
        spec = "numeric" if kind == "num" else "{" + ",".join(_quote(v) for v in vals) + "}"
        lines.append(f"@attribute c{j} {spec}")
    lines.append("@attribute cls {" + ",".join(classes) + "}")
    lines.append("@data")
    for i in range(len(y)):
        cells = []
        for kind, _, data in cols:
            v = data[i]
            cells.append("?" if v is None else (repr(float(v)) if kind == "num" else _quote(v)))
        lines.append(",".join(cells + [y[i]]))
    return "\n".join(lines) + "\n"


@settings(max_examples=150, deadline=None)
@given(arff_tables())
def test_arff_round_trip(table):
    ds = parse_arff(_render(*table))
    again = parse_arff(serialize_arff(ds))
    assert again == ds
    assert again.relation == ds.relation


@settings(max_examples=150, deadline=None)
@given(arff_tables(), st.data())
def test_arff_single_token_corruption_is_an_error(table, data):
    cols, classes, y = table
    assume(cols)  # a class-only row emptied out is a blank line, which is legal
    text = _render(cols, classes, y)
    lines = text.splitlines()
    first = lines.index("@data") + 1
    row = data.draw(st.integers(first, len(lines) - 1))
    # the class token is always the last, unquoted cell
    head, sep, _ = lines[row].rpartition(",")
    lines[row] = head + sep + data.draw(st.sampled_from(["abc", "", "?", "zz"]))
    with pytest.raises(ValueError):
        parse_arff("\n".join(lines) + "\n")


def test_arff_numeric_corruption_is_an_error():
    bad = SMALL.replace("3,yes,yes", "3x,yes,yes")
    with pytest.raises(ArffError, match="temp"):
        parse_arff(bad)


SCHEMA = [ColumnSpec("a", "numeric"), ColumnSpec("b", "nominal"), ColumnSpec("cls", "class")]


def test_csv_example():
    ds = parse_csv("a,b,cls\n1,x,yes\n2,y,no", SCHEMA)
    assert len(ds) == 2
    assert ds.features[1].values == ("x", "y")
    assert ds.classes == ("yes", "no")


def test_csv_non_numeric_names_column_and_row():
    with pytest.raises(ArffError) as exc:
        parse_csv("a,b,cls\n1,x,yes\nabc,y,no", SCHEMA)
    msg = str(exc.value)
    assert "'a'" in msg and "row 2" in msg


def test_csv_missing_markers():
    ds = parse_csv("a,b,cls\n,x,yes\n2,?,no\n3,y,no", SCHEMA)
    assert int(np.isnan(ds.X).sum()) == 2


def test_csv_and_arff_agree():
    arff = ("@relation data\n@attribute a numeric\n@attribute b {x,y}\n"
            "@attribute cls {yes,no}\n@data\n1,x,yes\n2,y,no\n?,x,no\n")
    csv_text = "a,b,cls\n1,x,yes\n2,y,no\n?,x,no\n"
    schema = parse_schema("a,numeric\nb,nominal,x,y\ncls,class,yes,no\n")
    assert parse_csv(csv_text, schema) == parse_arff(arff)


@pytest.mark.parametrize("schema", [
    "a,numeric\n",
    "a,numeric\nb,class\nc,class\n",
    "a,weird\nb,class\n",
    "a,numeric,1,2\nb,class\n",
])
def test_schema_errors(schema):
    with pytest.raises(ValueError):
        parse_schema(schema)


def test_csv_header_mismatch():
    with pytest.raises(ArffError):
        parse_csv("a,z,cls\n1,x,yes\n", SCHEMA)


def test_load_csv_with_sidecar(tmp_path):
    (tmp_path / "t.csv").write_text("a,b,cls\n1,x,yes\n2,y,no\n")
    (tmp_path / "t.schema").write_text("a,numeric\nb,nominal\ncls,class\n")
    ds = load_dataset(tmp_path / "t.csv")
    assert ds.relation == "t" and len(ds) == 2


def test_dataset_arrays_read_only():
    ds = parse_arff(SMALL)
    with pytest.raises(ValueError):
        ds.X[0, 0] = 1.0


def test_summarize_balanced_pair():
    # 49 rows, majority 25 and minority 24 -> ratio 0.96 at two decimals
    y = np.array([0] * 25 + [1] * 24)
    ds = make_dataset(np.zeros((49, 1)), y)
    s = summarize(ds)
    assert s.n_inst == 49
    assert round(s.class_bal, 2) == 0.96


def test_summarize_equal_counts():
    ds = make_dataset(np.zeros((18, 1)), np.array([0] * 9 + [1] * 9))
    assert summarize(ds).class_bal == 1.0


def test_summarize_matches_counting_oracle():
    rng = np.random.default_rng(4)
    for _ in range(20):
        X = np.column_stack([rng.normal(size=50), rng.integers(0, 3, 50), rng.normal(size=50)])
        X[rng.random(X.shape) < 0.1] = np.nan
        y = rng.integers(0, 3, 50)
        y[:3] = [0, 1, 2]
        ds = make_dataset(X, y, nominal={1}, values={1: 3})
        s = summarize(ds)
        missing = sum(1 for row in X for v in row if v != v)
        counts = [sum(1 for v in y if v == c) for c in range(3)]
        assert s.n_num == 2 and s.n_nom == 1 and s.n_classes == 3
        assert s.pct_missing == pytest.approx(100 * missing / 150)
        assert s.class_bal == pytest.approx(min(counts) / max(counts))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 30), min_size=2, max_size=5))
def test_class_bal_range_and_equality(counts):
    y = np.repeat(np.arange(len(counts)), counts)
    ds = make_dataset(np.zeros((len(y), 1)), y)
    bal = summarize(ds).class_bal
    assert 0.0 <= bal <= 1.0
    assert (bal == 1.0) == (len(set(counts)) == 1)


def test_kfold_balanced_exact():
    ds = make_dataset(np.zeros((100, 1)), np.array([0, 1] * 50))
    plan = stratified_kfold(ds, 10, 7)
    for f in range(10):
        test = plan.test_indices(f)
        assert np.bincount(ds.y[test], minlength=2).tolist() == [5, 5]


def test_kfold_deterministic():
    ds = make_dataset(np.zeros((40, 1)), np.arange(40) % 3)
    assert stratified_kfold(ds, 5, 11) == stratified_kfold(ds, 5, 11)


def test_kfold_uneven_classes_enumerated():
    y = np.array([0] * 50 + [1] * 30 + [2] * 17)
    ds = make_dataset(np.zeros((97, 1)), y)
    plan = stratified_kfold(ds, 10, 3)
    for c in range(3):
        per_fold = [int(np.sum(ds.y[plan.test_indices(f)] == c)) for f in range(10)]
        assert max(per_fold) - min(per_fold) <= 1
        assert sum(per_fold) == int(np.sum(y == c))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 25), min_size=2, max_size=4), st.integers(2, 10),
       st.integers(0, 2**31))
def test_kfold_partition_properties(counts, k, seed):
    y = np.repeat(np.arange(len(counts)), counts)
    if k > len(y):
        k = len(y)
    ds = make_dataset(np.zeros((len(y), 1)), y)
    plan = stratified_kfold(ds, k, seed)
    tests = [set(plan.test_indices(f).tolist()) for f in range(k)]
    assert set().union(*tests) == set(range(len(y)))
    assert sum(len(t) for t in tests) == len(y)
    assert all(tests)
    for c in range(len(counts)):
        per = [int(np.sum(y[list(t)] == c)) for t in tests]
        assert max(per) - min(per) <= 1
    for f in range(k):
        assert set(plan.train_indices(f).tolist()) == set(range(len(y))) - tests[f]


def test_kfold_argument_errors():
    ds = make_dataset(np.zeros((4, 1)), np.array([0, 1, 0, 1]))
    with pytest.raises(ValueError):
        stratified_kfold(ds, 1, 0)
    with pytest.raises(ValueError):
        stratified_kfold(ds, 5, 0)


def test_meta_split_sizes_and_proportions():
    y = np.array([0] * 60 + [1] * 40)
    ds = make_dataset(np.arange(100, dtype=float)[:, None], y)
    tr, va = meta_split(ds, 0.3, 1)
    assert (len(tr), len(va)) == (70, 30)
    assert np.bincount(va.y).tolist() == [18, 12]
    assert set(tr.row_ids) | set(va.row_ids) == set(range(100))
    assert not set(tr.row_ids) & set(va.row_ids)


def test_meta_split_seeds_differ():
    ds = make_dataset(np.arange(100, dtype=float)[:, None], np.arange(100) % 2)
    views = {tuple(sorted(meta_split(ds, 0.3, s)[1].row_ids)) for s in range(20)}
    assert len(views) == 20


@pytest.mark.parametrize("fraction", [0.0, 1.0, -0.1])
def test_meta_split_bad_fraction(fraction):
    ds = make_dataset(np.zeros((10, 1)), np.arange(10) % 2)
    with pytest.raises(ValueError):
        meta_split(ds, fraction, 0)


def test_bundled_data(separable, gaussian):
    assert len(separable) == 300 and separable.n_classes == 3
    assert len(gaussian) == 200 and gaussian.n_classes == 2
    assert summarize(separable).pct_missing > 0
