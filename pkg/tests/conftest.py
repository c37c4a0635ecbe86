import numpy as np
import pytest

from fitness.data import EncodedDataset

DATA = __import__("pathlib").Path(__file__).parent / "data"


def make_eds(t, y, z=None, extra=None, feature="a", include=True):
    """Encoded dataset built straight from arrays: one protected feature ``feature``."""
    t = np.asarray(t, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    n = len(t)
    z = np.zeros(n, dtype=np.int64) if z is None else np.asarray(z, dtype=np.int64)
    blocks, names = [], []
    if include:
        blocks.append(t[:, None].astype(float))
        names.append(feature)
    if extra is not None:
        extra = np.asarray(extra, dtype=float).reshape(n, -1)
        blocks.append(extra)
        names += [f"x{i}" for i in range(extra.shape[1])]
    features = np.hstack(blocks) if blocks else np.zeros((n, 0))
    levels = tuple(str(v) for v in range(int(z.max()) + 1)) if n else ("",)
    return EncodedDataset(
        features=features,
        feature_names=tuple(names),
        label=y.copy(),
        sensitive={feature: t.copy()},
        sensitive_columns={feature: 0 if include else None},
        strata_key=z.copy(),
        strata_levels=levels,
    )


def from_counts(counts, seed=None):
    """Single-stratum rows from {(t, y): count}; optionally shuffled."""
    t, y = [], []
    for (tv, yv), c in sorted(counts.items()):
        t += [tv] * c
        y += [yv] * c
    t, y = np.array(t), np.array(y)
    if seed is not None:
        p = np.random.default_rng(seed).permutation(len(t))
        t, y = t[p], y[p]
    return make_eds(t, y)


@pytest.fixture
def data_dir():
    return DATA


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for line in results:
            terminalreporter.write_line(line)
