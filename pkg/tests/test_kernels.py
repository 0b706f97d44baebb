import os
import subprocess
import sys

import numpy as np
import pytest

from scaff import kernels
from scaff.kernels import get_backend

py = get_backend("python")
try:
    cy = get_backend("cython")
except ImportError:  # extension not built
    cy = None

needs_ext = pytest.mark.skipif(cy is None, reason="compiled kernels not built")
KINDS = range(5)


def random_node(rng, n, bins, n_groups):
    codes = rng.integers(0, bins, n).astype(np.int32)
    y = rng.integers(0, 2, n).astype(np.uint8)
    groups = rng.integers(0, 2, (n_groups, n)).astype(np.uint8)
    return codes, y, groups


def same_bits(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return a.shape == b.shape and np.array_equal(np.isnan(a), np.isnan(b)) and \
        np.array_equal(a[~np.isnan(a)].view(np.int64), b[~np.isnan(b)].view(np.int64))


@needs_ext
@pytest.mark.parametrize("kind", KINDS)
def test_feature_gains_bit_identical(kind):
    rng = np.random.default_rng(kind)
    for _ in range(60):
        n = int(rng.integers(1, 80))
        bins = int(rng.integers(2, 12))
        n_groups = 1 if kind >= 2 else int(rng.integers(0 if kind == 1 else 1, 4))
        codes, y, groups = random_node(rng, n, bins, n_groups)
        theta = float(rng.choice([0.0, 0.5, 1.0, rng.random()]))
        if kind != 0:
            theta = 0.0
        min_leaf = int(rng.integers(1, 4))
        a = py.feature_gains(codes, y, groups, bins, kind, theta, min_leaf)
        b = cy.feature_gains(codes, y, groups, bins, kind, theta, min_leaf)
        assert same_bits(a, b)


@needs_ext
@pytest.mark.parametrize("kind", KINDS)
def test_best_split_identical(kind):
    rng = np.random.default_rng(50 + kind)
    for _ in range(30):
        n, m, bins = 120, 6, 8
        X = rng.integers(0, bins, (n, m)).astype(np.int32)
        y = rng.integers(0, 2, n).astype(np.uint8)
        groups = rng.integers(0, 2, (1 if kind != 1 else 0, n)).astype(np.uint8)
        idx = rng.integers(0, n, n).astype(np.intp)
        feats = np.sort(rng.choice(m, 3, replace=False)).astype(np.intp)
        n_bins = np.full(m, bins, dtype=np.intp)
        theta = 0.35 if kind == 0 else 0.0
        a = py.best_split(X, idx, feats, n_bins, y, groups, kind, theta, 2)
        b = cy.best_split(X, idx, feats, n_bins, y, groups, kind, theta, 2)
        assert a[:2] == b[:2]
        assert a[2] == b[2]


@needs_ext
def test_read_only_inputs():
    rng = np.random.default_rng(0)
    X = rng.integers(0, 4, (20, 2)).astype(np.int32)
    y = rng.integers(0, 2, 20).astype(np.uint8)
    groups = rng.integers(0, 2, (1, 20)).astype(np.uint8)
    for arr in (X, y, groups):
        arr.setflags(write=False)
    out = cy.best_split(X, np.arange(20), np.array([0, 1]), np.array([4, 4]), y, groups, 0, 0.5, 1)
    assert out == py.best_split(X, np.arange(20), np.array([0, 1]), np.array([4, 4]), y, groups, 0, 0.5, 1)


def test_no_candidate():
    X = np.zeros((5, 1), dtype=np.int32)
    y = np.array([1, 0, 1, 0, 1], dtype=np.uint8)
    groups = np.array([[1, 0, 0, 1, 0]], dtype=np.uint8)
    f, t, gain = kernels.best_split(X, np.arange(5), np.array([0]), np.array([3]), y, groups, 0, 0.5, 1)
    assert (f, t, gain) == (-1, -1, -np.inf)


def test_tie_break_lowest_feature_then_threshold():
    # two identical features: the lower index wins
    col = np.array([0, 0, 1, 1, 2, 2], dtype=np.int32)
    X = np.column_stack([col, col])
    y = np.array([1, 1, 0, 0, 0, 0], dtype=np.uint8)
    groups = np.zeros((0, 6), dtype=np.uint8)
    f, t, _ = kernels.best_split(X, np.arange(6), np.array([0, 1]), np.array([3, 3]), y, groups, 1, 0.0, 1)
    assert (f, t) == (0, 0)
    # thresholds 0 and 1 give the same partition quality when bin 1 is pure negative like bin 2
    y2 = np.array([1, 0, 0, 0, 0, 0], dtype=np.uint8)
    col2 = np.array([0, 1, 1, 2, 2, 3], dtype=np.int32)[:, None]
    g = kernels.feature_gains(col2[:, 0], y2, groups, 4, 1, 0.0, 1)
    f, t, gain = kernels.best_split(col2, np.arange(6), np.array([0]), np.array([4]), y2, groups, 1, 0.0, 1)
    assert t == int(np.nanargmax(g)) and gain == np.nanmax(g)


@needs_ext
def test_invalid_kind():
    codes = np.array([0, 1], dtype=np.int32)
    y = np.array([0, 1], dtype=np.uint8)
    groups = np.array([[0, 1]], dtype=np.uint8)
    with pytest.raises(ValueError):
        cy.feature_gains(codes, y, groups, 2, 9, 0.0, 1)
    with pytest.raises(ValueError):
        cy.feature_gains(codes, y, np.zeros((0, 2), dtype=np.uint8), 2, 2, 0.0, 1)


def test_env_var_selects_fallback():
    env = dict(os.environ, SCAFF_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import scaff; print(scaff.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_unknown_backend():
    with pytest.raises(ValueError):
        get_backend("fortran")
