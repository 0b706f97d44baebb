"""Cross-validated theta sweeps, threshold analyses and a biased-data generator."""
from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .criteria import Kind, SplitCriterion, parse_criterion
from .dataset import DataConfig, Dataset, SensitiveView, load_csv, stratified_kfold
from .ensemble import ForestConfig, fit
from .errors import ConfigError, DataError, ScaffError, UndefinedCorrelationError
from .metrics import auc, demographic_parity, ovr_sensitive_auc, pearson, quantile_thresholds
from .tree import TreeConfig

logger = logging.getLogger(__name__)

DEFAULT_THETAS = tuple(round(i / 10, 10) for i in range(11))
DEFAULT_QUANTILES = tuple(round(i / 10, 10) for i in range(1, 10))
_SYNTH_ALIASES = {"bias": "bias_strength", "signal": "signal_strength", "groups": "n_groups"}


# --------------------------------------------------------------------------
# synthetic data

def synthetic_table(
    n: int,
    bias_strength: float,
    signal_strength: float,
    n_groups: int = 2,
    seed: int = 0,
) -> tuple[dict[str, list[str]], DataConfig]:
    """Raw columns and data config of a planted-bias classification problem.

    A latent merit ``u ~ N(0, 1)`` and a group effect ``e_g`` evenly spaced
    in [-1, 1] drive the label through
    ``logit P(y=1) = signal * (3 u + 2 bias e_g)``. Features are three noisy
    copies of ``u``, two noisy proxies of ``e_g`` and three pure-noise columns;
    the group itself is only exposed as the sensitive column.
    """
    if n < 20:
        raise ConfigError(f"n must be >= 20, got {n}")
    for name, v in (("bias_strength", bias_strength), ("signal_strength", signal_strength)):
        if not 0.0 <= v <= 1.0:
            raise ConfigError(f"{name} must lie in [0, 1], got {v}")
    if n_groups < 2:
        raise ConfigError(f"n_groups must be >= 2, got {n_groups}")
    rng = np.random.default_rng(seed)
    group = rng.integers(0, n_groups, size=n)
    effect = np.linspace(-1.0, 1.0, n_groups)[group]
    merit = rng.normal(size=n)
    logit = signal_strength * (3.0 * merit + 2.0 * bias_strength * effect)
    y = (rng.random(n) < 1.0 / (1.0 + np.exp(-logit))).astype(int)

    columns: dict[str, list[str]] = {}
    for i in range(3):
        columns[f"merit_{i}"] = _fmt(merit + rng.normal(scale=0.5, size=n))
    for i in range(2):
        columns[f"proxy_{i}"] = _fmt(effect + rng.normal(scale=0.7, size=n))
    for i in range(3):
        columns[f"noise_{i}"] = _fmt(rng.normal(size=n))
    columns["group"] = [f"g{g}" for g in group]
    columns["y"] = [str(v) for v in y]
    config = DataConfig(
        label_column="y",
        positive_label="1",
        sensitive_columns=["group"],
        column_kinds={c: "numeric" for c in columns if c not in ("group", "y")},
    )
    return columns, config


def _fmt(values: np.ndarray) -> list[str]:
    return [f"{v:.6f}" for v in values]


def generate_synthetic(
    n: int,
    bias_strength: float,
    signal_strength: float,
    n_groups: int = 2,
    seed: int = 0,
) -> Dataset:
    columns, config = synthetic_table(n, bias_strength, signal_strength, n_groups, seed)
    return Dataset.from_columns(columns, config)


# --------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class Cell:
    """One (criterion, theta) point of the sweep grid."""

    label: str
    criterion: SplitCriterion

    @property
    def theta(self) -> float | None:
        return self.criterion.theta if self.criterion.kind is Kind.SCAFF else None


@dataclass
class ExperimentConfig:
    data: str | None = None
    data_config: str | None = None
    synthetic: dict | None = None
    criteria: list[str] = field(default_factory=lambda: ["scaff"])
    theta_grid: list[float] = field(default_factory=lambda: list(DEFAULT_THETAS))
    k_folds: int = 10
    forest: ForestConfig = field(default_factory=ForestConfig)
    dp_quantiles: list[float] = field(default_factory=lambda: list(DEFAULT_QUANTILES))
    seed: int = 0

    def __post_init__(self):
        if self.k_folds < 2:
            raise ConfigError(f"k_folds must be >= 2, got {self.k_folds}")
        if any(not 0.0 <= t <= 1.0 for t in self.theta_grid):
            raise ConfigError("theta_grid values must lie in [0, 1]")
        if any(not 0.0 < q < 1.0 for q in self.dp_quantiles) or list(self.dp_quantiles) != sorted(self.dp_quantiles):
            raise ConfigError("dp_quantiles must be sorted and lie in (0, 1)")
        if (self.data is None) == (self.synthetic is None):
            raise ConfigError("exactly one of 'data' or 'synthetic' must be given")
        if self.data is not None and self.data_config is None:
            raise ConfigError("'data' requires 'data_config'")
        self.cells()  # validates criterion strings

    def cells(self) -> list[Cell]:
        out = []
        for spec in self.criteria:
            if str(spec).strip().lower() == "scaff":
                out.extend(Cell("scaff", SplitCriterion.scaff(t)) for t in self.theta_grid)
            else:
                crit = parse_criterion(spec)
                out.append(Cell(crit.name, crit))
        return out

    @classmethod
    def from_dict(cls, data: Mapping, base_dir: str | Path = ".") -> "ExperimentConfig":
        known = {"data", "data_config", "synthetic", "criteria", "theta_grid", "k_folds",
                 "forest", "dp_quantiles", "seed"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown experiment config keys: {sorted(unknown)}")
        base = Path(base_dir)
        kw = dict(data)
        for key in ("data", "data_config"):
            if kw.get(key) is not None:
                kw[key] = str(base / kw[key])
        forest = dict(kw.pop("forest", {}) or {})
        tree = dict(forest.pop("tree", {}) or {})
        for key in ("max_depth", "min_samples_leaf", "features_per_split"):
            if key in forest:
                tree[key] = forest.pop(key)
        try:
            kw["forest"] = ForestConfig(
                n_trees=int(forest.pop("n_trees", 500)),
                seed=int(forest.pop("seed", 0)),
                n_jobs=int(forest.pop("n_jobs", 1)),
                tree=TreeConfig(**tree),
            )
        except TypeError as exc:
            raise ConfigError(f"bad forest config: {exc}") from None
        if forest:
            raise ConfigError(f"unknown forest config keys: {sorted(forest)}")
        return cls(**kw)

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise ConfigError(f"experiment config not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"experiment config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data, base_dir=path.parent)

    def load_dataset(self) -> Dataset:
        if self.synthetic is not None:
            params = {_SYNTH_ALIASES.get(k, k): v for k, v in self.synthetic.items()}
            unknown = set(params) - {"n", "bias_strength", "signal_strength", "n_groups", "seed"}
            if unknown:
                raise ConfigError(f"unknown synthetic config keys: {sorted(unknown)}")
            if "n" not in params:
                raise ConfigError("synthetic config needs 'n'")
            return generate_synthetic(
                n=int(params["n"]),
                bias_strength=float(params.get("bias_strength", 0.8)),
                signal_strength=float(params.get("signal_strength", 0.8)),
                n_groups=int(params.get("n_groups", 2)),
                seed=int(params.get("seed", 0)),
            )
        return load_csv(self.data, DataConfig.from_json(self.data_config))

    def to_dict(self) -> dict:
        return {
            "data": self.data,
            "data_config": self.data_config,
            "synthetic": self.synthetic,
            "criteria": list(self.criteria),
            "theta_grid": list(self.theta_grid),
            "k_folds": self.k_folds,
            "forest": self.forest.to_dict(),
            "dp_quantiles": list(self.dp_quantiles),
            "seed": self.seed,
        }


# --------------------------------------------------------------------------
# threshold analysis

def dp_at_quantiles(z: np.ndarray, view: SensitiveView, quantiles: Sequence[float]) -> tuple[list[float], list[float]]:
    """Thresholds at the score quantiles and the worst-group DP at each."""
    thresholds = quantile_thresholds(z, quantiles)
    dp = [max(demographic_parity(z, g.mask, t) for g in view.groups) for t in thresholds]
    return thresholds, dp


def dp_threshold_analysis(
    fold_scores: Mapping[float, Sequence[tuple[np.ndarray, SensitiveView]]],
    quantiles: Sequence[float] = DEFAULT_QUANTILES,
) -> tuple[np.ndarray, np.ndarray]:
    """Fold-averaged DP per (theta, quantile) and its spread across quantiles.

    ``fold_scores`` maps theta to the ``(test scores, test view)`` of every
    fold. Thresholds are taken per fold from that fold's scores and averaged
    by quantile index. The spread is the population std over quantiles.
    """
    thetas = list(fold_scores)
    matrix = np.zeros((len(thetas), len(quantiles)))
    for i, theta in enumerate(thetas):
        per_fold = [dp_at_quantiles(np.asarray(z), view, quantiles)[1] for z, view in fold_scores[theta]]
        if not per_fold:
            raise DataError(f"no fold scores for theta={theta}")
        matrix[i] = np.mean(per_fold, axis=0)
    return matrix, matrix.std(axis=1)


def correlation_table(auc_s_per_theta: Sequence[float], dp_matrix: np.ndarray) -> list[tuple[float, float] | None]:
    """Pearson ``(r, p)`` between AUC_S and each DP column along theta; ``None`` if undefined."""
    dp_matrix = np.asarray(dp_matrix)
    x = np.asarray(auc_s_per_theta, dtype=np.float64)
    if x.size < 3:
        raise ConfigError("correlation along theta needs at least 3 theta values")
    if dp_matrix.shape[0] != x.size:
        raise DataError("dp matrix rows do not match the theta values")
    out = []
    for j in range(dp_matrix.shape[1]):
        try:
            out.append(pearson(x, dp_matrix[:, j]))
        except UndefinedCorrelationError:
            out.append(None)
    return out


# --------------------------------------------------------------------------
# sweep

@dataclass
class FoldRecord:
    criterion: str
    theta: float | None
    fold: int
    auc_y: float
    auc_s: dict[str, float]
    auc_s_max: float
    thresholds: list[float]
    dp: list[float]

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "theta": self.theta,
            "fold": self.fold,
            "auc_y": self.auc_y,
            "auc_s": dict(self.auc_s),
            "auc_s_max": self.auc_s_max,
            "thresholds": list(self.thresholds),
            "dp": list(self.dp),
        }


@dataclass
class ExperimentReport:
    config: dict
    groups: list[str]
    quantiles: list[float]
    records: list[FoldRecord]
    dp_thetas: list[float] = field(default_factory=list)
    dp_matrix: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    dp_spread: np.ndarray = field(default_factory=lambda: np.zeros(0))
    pearson: list[tuple[float, float] | None] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def keys(self) -> list[tuple[str, float | None]]:
        seen = []
        for r in self.records:
            key = (r.criterion, r.theta)
            if key not in seen:
                seen.append(key)
        return seen

    def select(self, criterion: str, theta: float | None = None) -> list[FoldRecord]:
        return [r for r in self.records if r.criterion == criterion and r.theta == theta]

    def aggregates(self) -> list[dict]:
        """Mean and population std over folds for every (criterion, theta)."""
        out = []
        for crit, theta in self.keys():
            recs = self.select(crit, theta)
            row = {"criterion": crit, "theta": theta, "folds": len(recs)}
            row.update(_mean_std("auc_y", [r.auc_y for r in recs]))
            row.update(_mean_std("auc_s_max", [r.auc_s_max for r in recs]))
            for g in self.groups:
                row.update(_mean_std(f"auc_s[{g}]", [r.auc_s[g] for r in recs]))
            out.append(row)
        return out

    def mean(self, field_name: str, criterion: str, theta: float | None = None) -> float:
        recs = self.select(criterion, theta)
        if not recs:
            raise KeyError((criterion, theta))
        return float(np.mean([getattr(r, field_name) for r in recs]))

    def mean_group(self, group: str, criterion: str, theta: float | None = None) -> float:
        return float(np.mean([r.auc_s[group] for r in self.select(criterion, theta)]))

    def to_dict(self) -> dict:
        return {
            "meta": dict(self.meta),
            "config": self.config,
            "groups": list(self.groups),
            "quantiles": list(self.quantiles),
            "records": [r.to_dict() for r in self.records],
            "aggregates": self.aggregates(),
            "dp": {
                "thetas": list(self.dp_thetas),
                "matrix": self.dp_matrix.tolist(),
                "spread": self.dp_spread.tolist(),
            },
            "pearson": [
                {"quantile": q, "r": None if e is None else e[0], "p": None if e is None else e[1]}
                for q, e in zip(self.quantiles, self.pearson)
            ],
        }

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {name: out / name for name in ("report.json", "tradeoff.csv", "dp_matrix.csv", "pearson.csv")}
        paths["report.json"].write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")

        aggs = self.aggregates()
        header = ["criterion", "theta", "folds"] + [k for k in aggs[0] if k not in ("criterion", "theta", "folds")] \
            if aggs else ["criterion", "theta", "folds"]
        _write_csv(paths["tradeoff.csv"], header, [[a[h] for h in header] for a in aggs])

        q_cols = [f"dp@q{q:g}" for q in self.quantiles]
        _write_csv(paths["dp_matrix.csv"], ["theta", *q_cols, "spread"], [
            [t, *row, s] for t, row, s in zip(self.dp_thetas, self.dp_matrix.tolist(), self.dp_spread.tolist())
        ])
        _write_csv(paths["pearson.csv"], ["quantile", "r", "p"], [
            [q, *(("", "") if e is None else e)] for q, e in zip(self.quantiles, self.pearson)
        ])
        return paths


def _mean_std(name: str, values: Sequence[float]) -> dict:
    arr = np.asarray(values, dtype=np.float64)
    return {f"{name}_mean": float(arr.mean()), f"{name}_std": float(arr.std())}


def _cell_text(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell_text(v) for v in row])


def evaluate_scores(z: np.ndarray, labels: np.ndarray, view: SensitiveView, quantiles: Sequence[float]) -> dict:
    auc_s_max, per_group = ovr_sensitive_auc(z, view)
    thresholds, dp = dp_at_quantiles(z, view, quantiles)
    return {"auc_y": auc(z, labels), "auc_s": per_group, "auc_s_max": auc_s_max, "thresholds": thresholds, "dp": dp}


def run_sweep(config: ExperimentConfig, dataset: Dataset | None = None) -> ExperimentReport:
    """Fit and score a forest for every (criterion, theta, fold) of the grid.

    All cells share one stratified fold assignment; metrics use the held-out
    fold only.
    """
    if dataset is None:
        dataset = config.load_dataset()
    cells = config.cells()
    folds = stratified_kfold(dataset, config.k_folds, config.seed)
    started = time.time()
    records: list[FoldRecord] = []
    scaff_scores: dict[float, list] = {}
    for fold, (train, test) in enumerate(folds):
        train_set = dataset.subset(train)
        test_view = dataset.sensitive.subset(test)
        test_y = dataset.labels[test]
        for cell in cells:
            forest_cfg = replace(config.forest, tree=replace(config.forest.tree, criterion=cell.criterion))
            try:
                model = fit(train_set, forest_cfg)
            except ScaffError as exc:
                raise type(exc)(f"fold {fold}, {cell.criterion}: {exc}") from exc
            z = model.predict_codes(dataset.features[test])
            m = evaluate_scores(z, test_y, test_view, config.dp_quantiles)
            records.append(FoldRecord(cell.label, cell.theta, fold, m["auc_y"], m["auc_s"], m["auc_s_max"],
                                      m["thresholds"], m["dp"]))
            if cell.label == "scaff":
                scaff_scores.setdefault(cell.theta, []).append((z, test_view))
            logger.info("fold %d/%d %s: auc_y=%.4f auc_s_max=%.4f", fold + 1, len(folds), cell.criterion,
                        m["auc_y"], m["auc_s_max"])

    report = ExperimentReport(
        config=config.to_dict(),
        groups=dataset.sensitive.names,
        quantiles=list(config.dp_quantiles),
        records=records,
        meta={"created": time.strftime("%Y-%m-%dT%H:%M:%S"), "elapsed_s": round(time.time() - started, 3),
              "n": dataset.n, "m": dataset.m},
    )
    if scaff_scores:
        thetas = sorted(scaff_scores)
        matrix, spread = dp_threshold_analysis({t: scaff_scores[t] for t in thetas}, config.dp_quantiles)
        report.dp_thetas = thetas
        report.dp_matrix = matrix
        report.dp_spread = spread
        if len(thetas) >= 3:
            auc_s = [report.mean("auc_s_max", "scaff", t) for t in thetas]
            report.pearson = correlation_table(auc_s, matrix)
    return report
