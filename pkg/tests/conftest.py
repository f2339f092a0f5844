"""Shared fixtures and the per-criterion pass/fail summary."""

from __future__ import annotations

from importlib import resources

import numpy as np
import pytest

from autodt.dataset import Attribute, Dataset, load_dataset

_CRITERIA: dict[int, list] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        number, title = marker.args
        entry = _CRITERIA.setdefault(number, [title, []])
        entry[1].append((item.name, rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, results = _CRITERIA[number]
        ok = all(o == "passed" for _, o in results)
        passed = sum(o == "passed" for _, o in results)
        terminalreporter.write_line(
            f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title}  ({passed}/{len(results)} checks)")
        for name, o in results:
            if o != "passed":
                terminalreporter.write_line(f"    {o}: {name}")


def bundled(name: str) -> Dataset:
    with resources.as_file(resources.files("autodt").joinpath("data", name)) as p:
        return load_dataset(p)


@pytest.fixture(scope="session")
def separable() -> Dataset:
    return bundled("separable300.arff")


@pytest.fixture(scope="session")
def gaussian() -> Dataset:
    return bundled("gaussian200.arff")


def make_dataset(X, y, nominal=(), n_classes=None, values=None) -> Dataset:
    """Dataset from a float matrix; columns listed in ``nominal`` hold integer codes."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    n_classes = n_classes or int(y.max()) + 1
    atts = []
    for j in range(X.shape[1]):
        if j in nominal:
            k = (values or {}).get(j) or max(2, int(np.nanmax(X[:, j])) + 1 if len(X) else 2)
            atts.append(Attribute(f"f{j}", tuple(f"v{i}" for i in range(k))))
        else:
            atts.append(Attribute(f"f{j}"))
    atts.append(Attribute("class", tuple(f"c{i}" for i in range(n_classes))))
    return Dataset(atts, len(atts) - 1, X, y)


def random_dataset(rng: np.random.Generator, n=60, n_num=2, n_nom=1, n_classes=2,
                   missing=0.0, signal=True) -> Dataset:
    """Mixed-type synthetic data; with ``signal`` the class depends on the first column."""
    cols = [rng.normal(size=n) for _ in range(n_num)]
    cols += [rng.integers(0, 3, size=n).astype(float) for _ in range(n_nom)]
    X = np.column_stack(cols) if cols else np.zeros((n, 0))
    if signal and n_num:
        y = np.digitize(X[:, 0], np.quantile(X[:, 0], np.linspace(0, 1, n_classes + 1)[1:-1]))
        flip = rng.random(n) < 0.1
        y = np.where(flip, rng.integers(0, n_classes, size=n), y)
    else:
        y = rng.integers(0, n_classes, size=n)
    y[:n_classes] = np.arange(n_classes)  # every class present
    if missing:
        mask = rng.random(X.shape) < missing
        X = np.where(mask, np.nan, X)
    nominal = set(range(n_num, n_num + n_nom))
    return make_dataset(X, y, nominal, n_classes, {j: 3 for j in nominal})
