"""Regenerate the bundled ARFF datasets under src/autodt/data."""

from pathlib import Path

import numpy as np

from autodt.dataset import Attribute, Dataset, serialize_arff

OUT = Path(__file__).resolve().parents[1] / "src" / "autodt" / "data"


def separable(n=300, seed=7) -> Dataset:
    """Three classes cut by axis-aligned thresholds with a clear margin, plus noise columns."""
    rng = np.random.default_rng(seed)
    rows, labels = [], []
    while len(rows) < n:
        x = rng.uniform(0, 1, size=4)
        if abs(x[0] - 0.4) < 0.05 or (x[0] > 0.4 and abs(x[1] - 0.5) < 0.05):
            continue
        label = 0 if x[0] < 0.4 else (1 if x[1] < 0.5 else 2)
        colour = rng.integers(0, 3)
        rows.append([*np.round(x, 4), colour])
        labels.append(label)
    X = np.array(rows, dtype=float)
    X[rng.random(n) < 0.03, 2] = np.nan  # a few missing cells in a noise column
    atts = [Attribute("x0"), Attribute("x1"), Attribute("noise0"), Attribute("noise1"),
            Attribute("colour", ("red", "green", "blue")), Attribute("class", ("a", "b", "c"))]
    return Dataset(atts, 5, X, np.array(labels), relation="separable300")


def gaussian(n=200, seed=11) -> Dataset:
    """Two well-separated isotropic Gaussian blobs."""
    rng = np.random.default_rng(seed)
    y = np.repeat([0, 1], n // 2)
    X = rng.normal(0, 1, size=(n, 2)) + np.where(y[:, None] == 0, -2.0, 2.0)
    atts = [Attribute("u"), Attribute("v"), Attribute("class", ("neg", "pos"))]
    return Dataset(atts, 2, np.round(X, 4), y, relation="gaussian200")


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "separable300.arff").write_text(serialize_arff(separable()))
    (OUT / "gaussian200.arff").write_text(serialize_arff(gaussian()))
