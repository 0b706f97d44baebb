"""Bagged forests of criterion-driven trees."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from joblib import Parallel, delayed

from .dataset import Dataset, DiscretizationSpec, bootstrap_sample
from .errors import ConfigError, DataError, TrainingError
from .tree import FlatTree, TreeConfig, TreeNode, grow, node_from_dict, node_to_dict

FORMAT = "scaff-forest"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 500
    tree: TreeConfig = field(default_factory=TreeConfig)
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        if self.n_trees < 1:
            raise ConfigError(f"n_trees must be >= 1, got {self.n_trees}")

    def to_dict(self) -> dict:
        return {"n_trees": self.n_trees, "seed": self.seed, "tree": self.tree.to_dict()}

    @classmethod
    def from_dict(cls, data: Mapping) -> "ForestConfig":
        return cls(n_trees=int(data.get("n_trees", 500)), seed=int(data.get("seed", 0)),
                   tree=TreeConfig.from_dict(data.get("tree", {})), n_jobs=int(data.get("n_jobs", 1)))


def tree_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for tree ``index``; independent of execution order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def _fit_one(dataset: Dataset, config: ForestConfig, index: int) -> tuple[TreeNode, np.ndarray]:
    rng = tree_rng(config.seed, index)
    rows = bootstrap_sample(dataset.n, rng)
    return grow(dataset, rows, config.tree, rng), rows


@dataclass
class ForestModel:
    trees: list[TreeNode]
    config: ForestConfig
    feature_names: tuple[str, ...]
    n_bins: np.ndarray
    encoding: DiscretizationSpec | None = None
    # bootstrap rows of each tree; kept in memory only
    bootstraps: list[np.ndarray] | None = field(default=None, repr=False)
    _flat: list[FlatTree] | None = field(default=None, init=False, repr=False)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def flat_trees(self) -> list[FlatTree]:
        if self._flat is None:
            self._flat = [FlatTree.from_node(t) for t in self.trees]
        return self._flat

    def tree_scores(self, codes: np.ndarray) -> np.ndarray:
        """Per-tree scores, shape (n_trees, n_rows)."""
        codes = self._check(codes)
        return np.stack([t.predict(codes) for t in self.flat_trees()])

    def predict_codes(self, codes: np.ndarray) -> np.ndarray:
        codes = self._check(codes)
        total = np.zeros(codes.shape[0])
        for t in self.flat_trees():
            total += t.predict(codes)
        return total / len(self.trees)

    def predict(self, table: Mapping[str, Sequence]) -> np.ndarray:
        """Scores for raw columns (name -> values); discretized with the training encoding."""
        if self.encoding is None:
            raise DataError("model has no stored encoding; use predict_codes on binned rows")
        return self.predict_codes(self.encoding.transform(table))

    def _check(self, codes: np.ndarray) -> np.ndarray:
        codes = np.asarray(codes)
        if codes.ndim != 2 or codes.shape[1] != self.n_features:
            raise DataError(f"rows must have {self.n_features} features, got shape {codes.shape}")
        return codes

    def to_dict(self) -> dict:
        return {
            "format": FORMAT,
            "version": FORMAT_VERSION,
            "config": self.config.to_dict(),
            "feature_names": list(self.feature_names),
            "n_bins": [int(b) for b in self.n_bins],
            "discretization": self.encoding.to_dict() if self.encoding else None,
            "trees": [node_to_dict(t) for t in self.trees],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ForestModel":
        if data.get("format") != FORMAT:
            raise DataError("not a scaff forest document")
        if data.get("version") != FORMAT_VERSION:
            raise DataError(f"unsupported model version {data.get('version')!r}")
        enc = data.get("discretization")
        return cls(
            trees=[node_from_dict(t) for t in data["trees"]],
            config=ForestConfig.from_dict(data["config"]),
            feature_names=tuple(data["feature_names"]),
            n_bins=np.asarray(data["n_bins"], dtype=np.intp),
            encoding=DiscretizationSpec.from_dict(enc) if enc else None,
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ForestModel":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise DataError(f"model file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise DataError(f"model file {path} is not valid JSON") from exc
        return cls.from_dict(data)


def fit(dataset: Dataset, config: ForestConfig) -> ForestModel:
    """Fit ``config.n_trees`` trees, each on its own bootstrap sample."""
    n_pos = int(dataset.labels.sum())
    if n_pos == 0 or n_pos == dataset.n:
        raise TrainingError("training data contains a single class")
    if config.n_jobs == 1:
        results = [_fit_one(dataset, config, i) for i in range(config.n_trees)]
    else:
        results = Parallel(n_jobs=config.n_jobs)(
            delayed(_fit_one)(dataset, config, i) for i in range(config.n_trees)
        )
    return ForestModel(
        trees=[t for t, _ in results],
        config=config,
        feature_names=dataset.feature_names,
        n_bins=np.asarray(dataset.n_bins),
        encoding=dataset.encoding,
        bootstraps=[rows for _, rows in results],
    )


def predict(model: ForestModel, rows) -> np.ndarray:
    """Forest scores for binned rows (2-D array) or raw columns (mapping)."""
    if isinstance(rows, Mapping):
        return model.predict(rows)
    return model.predict_codes(rows)
