import numpy as np
import pytest

from scaff.dataset import Dataset, view_from_masks


def make_dataset(features, labels, masks: dict, n_bins=None) -> Dataset:
    """Dataset straight from binned codes, labels and named group masks."""
    X = np.asarray(features, dtype=np.int32)
    if X.ndim == 1:
        X = X[:, None]
    if n_bins is None:
        n_bins = X.max(axis=0) + 1 if X.size else np.zeros(X.shape[1], dtype=int)
    names = tuple(f"f{j}" for j in range(X.shape[1]))
    return Dataset(X, np.asarray(labels), view_from_masks(masks), names, n_bins)


def pairwise_auc(z, y) -> float:
    """O(n^2) mean of sigma over all (positive, negative) pairs."""
    z = np.asarray(z, dtype=float)
    y = np.asarray(y).astype(bool)
    pos, neg = z[y], z[~y]
    if pos.size == 0 or neg.size == 0:
        return 0.5
    total = 0.0
    for a in pos:
        for b in neg:
            total += 1.0 if a > b else 0.5 if a == b else 0.0
    return total / (pos.size * neg.size)


# Illustrative root node: 10 samples, one binary feature splitting them 5/5.
# Left child P(Y+) = 0.2, right child P(Y+) = 0.8.
WORKED_SPLIT = np.array([0] * 5 + [1] * 5)
WORKED_LABELS = np.array([1, 0, 0, 0, 0, 1, 1, 1, 1, 0])
WORKED_GENDER = np.array([1, 1, 0, 0, 0, 1, 1, 1, 0, 0])  # 2 left, 3 right
WORKED_RACE = np.array([1, 1, 1, 1, 0, 0, 0, 0, 0, 0])    # 4 left, 0 right


@pytest.fixture
def worked_split():
    return {
        "split": WORKED_SPLIT,
        "labels": WORKED_LABELS,
        "gender": WORKED_GENDER,
        "race": WORKED_RACE,
        "z_parent": np.full(10, 0.5),
        "z_child": np.where(WORKED_SPLIT == 0, 0.2, 0.8),
    }


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
