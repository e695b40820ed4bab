from pathlib import Path

import numpy as np
import pytest

from clustbench.data import Dataset, euclidean_distances, validate_partition

DATA_DIR = Path(__file__).parent / "data"

# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def four_points():
    """1-D points 0, 1, 10, 11 split as {0, 1} and {10, 11}."""
    x = np.array([[0.0], [1.0], [10.0], [11.0]])
    d = Dataset(x, ["x"])
    return d, euclidean_distances(d), validate_partition([1, 1, 2, 2])


@pytest.fixture
def iris_path():
    return DATA_DIR / "iris.csv"


def two_blobs(n=200, p=2, sep=10.0, seed=0):
    """Two spherical unit-variance Gaussian blobs ``sep`` sd apart."""
    rng = np.random.default_rng(seed)
    half = n // 2
    X = rng.normal(size=(n, p))
    X[half:, 0] += sep
    truth = np.repeat([1, 2], [half, n - half])
    return X, truth


def random_partition(rng, n, K):
    """Random labels with all K clusters nonempty."""
    labels = np.concatenate([np.arange(K), rng.integers(0, K, n - K)])
    rng.shuffle(labels)
    return labels


def write_dataset(path, X, truth=None):
    """Write ``X`` (and a leading ``class`` column) as a CSV with header."""
    X = np.asarray(X, dtype=float)
    cols = [f"x{j}" for j in range(X.shape[1])]
    lines = [",".join((["class"] if truth is not None else []) + cols)]
    for i, row in enumerate(X):
        cells = [repr(float(v)) for v in row]
        if truth is not None:
            cells = [str(truth[i])] + cells
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")
    return Path(path)
