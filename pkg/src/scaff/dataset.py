"""Tabular data loading, binning, sensitive-group views and resampling."""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, DataError

logger = logging.getLogger(__name__)

MISSING_TOKENS = frozenset({"", "na", "nan", "null", "none", "?"})
SENSITIVE_MODES = ("per-attribute", "intersectional")
COLUMN_KINDS = ("numeric", "categorical")


def is_missing(value: str) -> bool:
    return value.strip().lower() in MISSING_TOKENS


@dataclass
class DataConfig:
    """How to turn a CSV table into a :class:`Dataset`."""

    label_column: str
    positive_label: str
    sensitive_columns: list[str]
    sensitive_mode: str = "per-attribute"
    column_kinds: dict[str, str] = field(default_factory=dict)
    bins: int = 32
    include_sensitive: bool = False

    def __post_init__(self):
        self.positive_label = str(self.positive_label)
        self.sensitive_columns = list(self.sensitive_columns)
        if not self.sensitive_columns:
            raise ConfigError("sensitive_columns must name at least one column")
        if self.sensitive_mode not in SENSITIVE_MODES:
            raise ConfigError(f"sensitive_mode must be one of {SENSITIVE_MODES}, got {self.sensitive_mode!r}")
        for col, kind in self.column_kinds.items():
            if kind not in COLUMN_KINDS:
                raise ConfigError(f"column {col!r}: kind must be one of {COLUMN_KINDS}, got {kind!r}")
        if not isinstance(self.bins, int) or self.bins < 2:
            raise ConfigError(f"bins must be an integer >= 2, got {self.bins!r}")
        if self.label_column in self.sensitive_columns:
            raise ConfigError("the label column cannot also be a sensitive column")

    @classmethod
    def from_dict(cls, data: Mapping) -> "DataConfig":
        known = {"label_column", "positive_label", "sensitive_columns", "sensitive_mode",
                 "column_kinds", "bins", "include_sensitive"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown data config keys: {sorted(unknown)}")
        for key in ("label_column", "positive_label", "sensitive_columns"):
            if key not in data:
                raise ConfigError(f"data config is missing required key {key!r}")
        return cls(**dict(data))

    @classmethod
    def from_json(cls, path: str | Path) -> "DataConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"data config not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"data config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {
            "label_column": self.label_column,
            "positive_label": self.positive_label,
            "sensitive_columns": list(self.sensitive_columns),
            "sensitive_mode": self.sensitive_mode,
            "column_kinds": dict(self.column_kinds),
            "bins": self.bins,
            "include_sensitive": self.include_sensitive,
        }


# --------------------------------------------------------------------------
# sensitive groups

@dataclass(frozen=True)
class SensitiveGroup:
    attribute: str
    category: str
    mask: np.ndarray

    @property
    def name(self) -> str:
        return f"{self.attribute}={self.category}"

    @property
    def s_plus(self) -> int:
        return int(self.mask.sum())

    @property
    def s_minus(self) -> int:
        return int(self.mask.size - self.mask.sum())


@dataclass(frozen=True)
class SensitiveView:
    """One-vs-rest binary memberships over every sensitive attribute/category."""

    groups: tuple[SensitiveGroup, ...]

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(self.groups))
        sizes = {g.mask.size for g in self.groups}
        if len(sizes) > 1:
            raise DataError("sensitive group masks have inconsistent lengths")

    def __len__(self) -> int:
        return len(self.groups)

    @property
    def n(self) -> int:
        return self.groups[0].mask.size if self.groups else 0

    @property
    def names(self) -> list[str]:
        return [g.name for g in self.groups]

    def masks(self) -> np.ndarray:
        """Membership matrix of shape (n_groups, n) as uint8."""
        if not self.groups:
            return np.zeros((0, 0), dtype=np.uint8)
        return np.ascontiguousarray(np.stack([g.mask for g in self.groups]).astype(np.uint8))

    def subset(self, indices: np.ndarray) -> "SensitiveView":
        # degenerate groups are kept here: metrics resolve them to the neutral value
        return SensitiveView(tuple(
            SensitiveGroup(g.attribute, g.category, _frozen(g.mask[indices])) for g in self.groups
        ))

    @classmethod
    def from_columns(
        cls,
        columns: Mapping[str, Sequence[str]],
        attributes: Sequence[str],
        mode: str = "per-attribute",
    ) -> tuple["SensitiveView", list[str]]:
        """Build the OvR view; returns the view and warnings about dropped groups.

        A binary attribute contributes a single group (its first level in sorted
        order); its complement would carry the same sensitive AUC.
        """
        warnings: list[str] = []
        candidates: list[tuple[str, str, np.ndarray]] = []
        if mode == "per-attribute":
            for attr in attributes:
                values = np.asarray([str(v).strip() for v in columns[attr]], dtype=object)
                levels = sorted(set(values))
                if len(levels) == 2:
                    levels = levels[:1]
                for level in levels:
                    candidates.append((attr, level, values == level))
        elif mode == "intersectional":
            stacked = [np.asarray([str(v).strip() for v in columns[a]], dtype=object) for a in attributes]
            combos = sorted(set(zip(*stacked)))
            for combo in combos:
                mask = np.ones(len(stacked[0]), dtype=bool)
                for values, level in zip(stacked, combo):
                    mask &= values == level
                candidates.append(("&".join(attributes), "&".join(combo), mask))
        else:
            raise ConfigError(f"unknown sensitive mode {mode!r}")

        groups = []
        for attr, level, mask in candidates:
            s_plus = int(mask.sum())
            if s_plus == 0 or s_plus == mask.size:
                warnings.append(f"sensitive group {attr}={level} is degenerate ({s_plus} of {mask.size}); dropped")
                continue
            groups.append(SensitiveGroup(attr, level, _frozen(mask.astype(bool))))
        if not groups:
            raise DataError("no non-degenerate sensitive group remains")
        return cls(tuple(groups)), warnings


# --------------------------------------------------------------------------
# discretization / encoding

def discretize(values: Sequence[float], q: int) -> tuple[np.ndarray, np.ndarray]:
    """Quantile-bin ``values`` into at most ``q`` ordinals.

    Cut points are the distinct empirical quantiles at ``i / q``; a value's
    ordinal is the number of cut points strictly below it.
    """
    if q < 2:
        raise ConfigError(f"bin count must be >= 2, got {q}")
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return np.zeros(0, dtype=np.int32), np.zeros(0)
    if not np.all(np.isfinite(values)):
        raise DataError("discretize requires finite values")
    cuts = np.unique(np.quantile(values, np.arange(1, q) / q))
    # a cut at the maximum only opens an empty top bin
    cuts = cuts[cuts < values.max()]
    return apply_boundaries(values, cuts), cuts


def apply_boundaries(values: np.ndarray, boundaries: np.ndarray) -> np.ndarray:
    return np.searchsorted(boundaries, values, side="left").astype(np.int32)


@dataclass
class ColumnEncoding:
    """Encoding of one raw column into one (numeric) or several (one-hot) features."""

    name: str
    kind: str
    boundaries: np.ndarray | None = None
    levels: list[str] | None = None

    @property
    def feature_names(self) -> list[str]:
        if self.kind == "numeric":
            return [self.name]
        return [f"{self.name}={level}" for level in self.levels]

    @property
    def n_bins(self) -> list[int]:
        if self.kind == "numeric":
            # last ordinal is reserved for missing values
            return [len(self.boundaries) + 2]
        return [2] * len(self.levels)

    @classmethod
    def fit(cls, name: str, values: Sequence[str], kind: str, bins: int) -> "ColumnEncoding":
        if kind == "numeric":
            parsed = _parse_numeric(name, values)
            finite = parsed[~np.isnan(parsed)]
            if finite.size:
                _, cuts = discretize(finite, bins)
            else:
                cuts = np.zeros(0)
            return cls(name, kind, boundaries=cuts)
        levels = sorted({_category(v) for v in values})
        return cls(name, kind, levels=levels)

    def transform(self, values: Sequence[str]) -> np.ndarray:
        if self.kind == "numeric":
            parsed = _parse_numeric(self.name, values)
            codes = np.full(parsed.shape, len(self.boundaries) + 1, dtype=np.int32)
            ok = ~np.isnan(parsed)
            codes[ok] = apply_boundaries(parsed[ok], self.boundaries)
            return codes[:, None]
        cats = np.asarray([_category(v) for v in values], dtype=object)
        out = np.zeros((len(cats), len(self.levels)), dtype=np.int32)
        for j, level in enumerate(self.levels):
            out[:, j] = cats == level
        return out

    def to_dict(self) -> dict:
        if self.kind == "numeric":
            return {"name": self.name, "kind": self.kind, "boundaries": [float(b) for b in self.boundaries]}
        return {"name": self.name, "kind": self.kind, "levels": list(self.levels)}

    @classmethod
    def from_dict(cls, data: Mapping) -> "ColumnEncoding":
        if data["kind"] == "numeric":
            return cls(data["name"], "numeric", boundaries=np.asarray(data["boundaries"], dtype=np.float64))
        return cls(data["name"], "categorical", levels=list(data["levels"]))


def _category(value) -> str:
    value = str(value).strip()
    return "<missing>" if is_missing(value) else value


def _parse_numeric(name: str, values: Sequence) -> np.ndarray:
    out = np.empty(len(values), dtype=np.float64)
    for i, v in enumerate(values):
        if isinstance(v, (int, float, np.number)):
            out[i] = float(v)
            continue
        if is_missing(v):
            out[i] = np.nan
            continue
        try:
            out[i] = float(v)
        except ValueError as exc:
            raise DataError(f"column {name!r}: {v!r} is not numeric") from exc
    if np.isinf(out).any():
        raise DataError(f"column {name!r} contains infinite values")
    return out


@dataclass
class DiscretizationSpec:
    """Everything needed to map raw columns onto the trained feature schema."""

    bins_per_feature: int
    columns: list[ColumnEncoding]

    @property
    def feature_names(self) -> list[str]:
        return [f for c in self.columns for f in c.feature_names]

    @property
    def n_bins(self) -> np.ndarray:
        return np.asarray([b for c in self.columns for b in c.n_bins], dtype=np.intp)

    @property
    def boundaries(self) -> dict[str, np.ndarray]:
        return {c.name: c.boundaries for c in self.columns if c.kind == "numeric"}

    @classmethod
    def fit(cls, columns: Mapping[str, Sequence[str]], kinds: Mapping[str, str], bins: int) -> "DiscretizationSpec":
        return cls(bins, [ColumnEncoding.fit(name, columns[name], kinds[name], bins) for name in kinds])

    def transform(self, columns: Mapping[str, Sequence]) -> np.ndarray:
        missing = [c.name for c in self.columns if c.name not in columns]
        if missing:
            raise DataError(f"input lacks columns required by the model: {missing}")
        if not self.columns:
            return np.zeros((0, 0), dtype=np.int32)
        blocks = [c.transform(columns[c.name]) for c in self.columns]
        return np.ascontiguousarray(np.hstack(blocks), dtype=np.int32)

    def to_dict(self) -> dict:
        return {"bins_per_feature": self.bins_per_feature, "columns": [c.to_dict() for c in self.columns]}

    @classmethod
    def from_dict(cls, data: Mapping) -> "DiscretizationSpec":
        return cls(int(data["bins_per_feature"]), [ColumnEncoding.from_dict(c) for c in data["columns"]])


# --------------------------------------------------------------------------
# dataset

@dataclass(frozen=True)
class Dataset:
    """Binned features, binary labels and the sensitive view. Read-only."""

    features: np.ndarray
    labels: np.ndarray
    sensitive: SensitiveView
    feature_names: tuple[str, ...]
    n_bins: np.ndarray
    encoding: DiscretizationSpec | None = None
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        features = np.ascontiguousarray(self.features, dtype=np.int32)
        labels = np.ascontiguousarray(self.labels, dtype=np.uint8)
        n_bins = np.asarray(self.n_bins, dtype=np.intp)
        if features.ndim != 2:
            raise DataError("features must be a 2-D matrix")
        n, m = features.shape
        if n < 1:
            raise DataError("dataset has no rows")
        if labels.shape != (n,):
            raise DataError(f"labels have shape {labels.shape}, expected ({n},)")
        if not np.isin(self.labels, (0, 1)).all():
            raise DataError("labels must be 0 or 1")
        if len(self.feature_names) != m or n_bins.shape != (m,):
            raise DataError("feature names / bin counts do not match the feature matrix")
        if m and (features.min(initial=0) < 0 or (features >= n_bins).any()):
            raise DataError("feature ordinal out of range")
        if self.sensitive.n != n:
            raise DataError("sensitive view length does not match the dataset")
        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "n_bins", _frozen(n_bins))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "warnings", tuple(self.warnings))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def m(self) -> int:
        return self.features.shape[1]

    def subset(self, indices: Sequence[int]) -> "Dataset":
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(self.features[idx], self.labels[idx], self.sensitive.subset(idx),
                       self.feature_names, self.n_bins, self.encoding, self.warnings)

    @classmethod
    def from_columns(cls, columns: Mapping[str, Sequence[str]], config: DataConfig) -> "Dataset":
        """Encode a column table (name -> raw string values) with ``config``."""
        names = list(columns)
        required = [config.label_column, *config.sensitive_columns, *config.column_kinds]
        absent = [c for c in required if c not in columns]
        if absent:
            raise ConfigError(f"columns not found in data: {sorted(set(absent))}")
        n_raw = len(columns[config.label_column])
        if n_raw == 0:
            raise DataError("data has no rows")

        warnings: list[str] = []
        keep = np.ones(n_raw, dtype=bool)
        for col in (config.label_column, *config.sensitive_columns):
            miss = np.fromiter((is_missing(str(v)) for v in columns[col]), dtype=bool, count=n_raw)
            if miss.any():
                warnings.append(f"dropped {int(miss.sum())} rows with missing {col!r}")
                keep &= ~miss
        if not keep.any():
            raise DataError("no rows left after dropping missing labels/sensitive values")
        rows = np.flatnonzero(keep)
        cols = {name: [columns[name][i] for i in rows] for name in names}

        raw_labels = [str(v).strip() for v in cols[config.label_column]]
        distinct = set(raw_labels)
        if len(distinct) > 2 or (len(distinct) == 2 and config.positive_label not in distinct):
            raise DataError(
                f"label column {config.label_column!r} is not binary with positive value "
                f"{config.positive_label!r}: found {sorted(distinct)[:5]}"
            )
        labels = np.asarray([v == config.positive_label for v in raw_labels], dtype=np.uint8)

        sensitive, view_warnings = SensitiveView.from_columns(cols, config.sensitive_columns, config.sensitive_mode)
        warnings.extend(view_warnings)

        excluded = {config.label_column}
        if not config.include_sensitive:
            excluded.update(config.sensitive_columns)
        kinds = {}
        for name in names:
            if name in excluded:
                continue
            kinds[name] = config.column_kinds.get(name) or _infer_kind(cols[name])
        encoding = DiscretizationSpec.fit(cols, kinds, config.bins)
        features = encoding.transform(cols) if kinds else np.zeros((len(rows), 0), dtype=np.int32)
        for w in warnings:
            logger.warning(w)
        return cls(features, labels, sensitive, encoding.feature_names, encoding.n_bins, encoding, tuple(warnings))


def _infer_kind(values: Sequence[str]) -> str:
    for v in values:
        if is_missing(str(v)):
            continue
        try:
            float(v)
        except ValueError:
            return "categorical"
    return "numeric"


def read_csv_columns(path: str | Path) -> dict[str, list[str]]:
    """Read a headed CSV into a name -> values mapping, preserving row order."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except FileNotFoundError as exc:
        raise DataError(f"data file not found: {path}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            raise DataError(f"{path}: duplicate column names in header")
        columns: dict[str, list[str]] = {h: [] for h in header}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            for h, v in zip(header, row):
                columns[h].append(v)
    if not columns or not next(iter(columns.values())):
        raise DataError(f"{path} has a header but no rows")
    return columns


def load_csv(path: str | Path, config: DataConfig) -> Dataset:
    """Load and encode a CSV file according to ``config``."""
    return Dataset.from_columns(read_csv_columns(path), config)


def write_csv_columns(path: str | Path, columns: Mapping[str, Sequence]) -> None:
    names = list(columns)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        writer.writerows(zip(*(columns[c] for c in names)))


# --------------------------------------------------------------------------
# resampling

def as_generator(seed: int | np.random.Generator | None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def stratified_kfold(
    data: Dataset | np.ndarray, k: int, seed: int
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Class-stratified k-fold split; returns ``(train, test)`` index pairs.

    Each class is shuffled and dealt round-robin onto the folds, continuing
    the deal across classes so fold sizes also differ by at most one.
    """
    labels = data.labels if isinstance(data, Dataset) else np.asarray(data)
    if k < 2:
        raise ConfigError(f"k must be >= 2, got {k}")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(labels.size, dtype=np.intp)
    offset = 0
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if members.size < k:
            raise ConfigError(f"class {cls!r} has {members.size} members, fewer than k={k}")
        members = rng.permutation(members)
        fold_of[members] = (np.arange(members.size) + offset) % k
        offset = (offset + members.size) % k
    folds = []
    for f in range(k):
        test = np.flatnonzero(fold_of == f)
        train = np.flatnonzero(fold_of != f)
        folds.append((train, test))
    return folds


def bootstrap_sample(n: int, seed: int | np.random.Generator | None) -> np.ndarray:
    """``n`` indices drawn uniformly with replacement from ``range(n)``."""
    if n < 1:
        raise ConfigError(f"bootstrap size must be >= 1, got {n}")
    return as_generator(seed).integers(0, n, size=n, dtype=np.intp)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.flags.writeable:
        arr = arr.copy()
        arr.setflags(write=False)
    return arr


def ceil_sqrt(m: int) -> int:
    return max(1, math.ceil(math.sqrt(m)))


# kept for callers that build views from raw masks (tests, synthetic data)
def view_from_masks(masks: Mapping[str, np.ndarray]) -> SensitiveView:
    groups = []
    for name, mask in masks.items():
        attr, _, cat = name.partition("=")
        groups.append(SensitiveGroup(attr, cat or "1", _frozen(np.asarray(mask, dtype=bool))))
    return SensitiveView(tuple(groups))


__all__ = [
    "ColumnEncoding",
    "DataConfig",
    "Dataset",
    "DiscretizationSpec",
    "SensitiveGroup",
    "SensitiveView",
    "bootstrap_sample",
    "discretize",
    "load_csv",
    "read_csv_columns",
    "stratified_kfold",
    "view_from_masks",
    "write_csv_columns",
]
