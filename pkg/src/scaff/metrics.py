"""Performance and fairness measures over classification scores."""
from __future__ import annotations

import logging
import math
from typing import Sequence

import numpy as np
from scipy import special

from .dataset import SensitiveView
from .errors import ConfigError, DataError, UndefinedCorrelationError

logger = logging.getLogger(__name__)

NEUTRAL_AUC = 0.5


def _average_ranks(z: np.ndarray) -> np.ndarray:
    """1-based ranks with tied values sharing their mean rank."""
    order = np.argsort(z, kind="mergesort")
    sorted_z = z[order]
    boundaries = np.flatnonzero(np.diff(sorted_z)) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [z.size]))
    mean_rank = (starts + ends + 1) / 2.0
    ranks = np.empty(z.size, dtype=np.float64)
    ranks[order] = np.repeat(mean_rank, ends - starts)
    return ranks


def auc(z: Sequence[float], labels: Sequence[int]) -> float:
    """ROC-AUC with ties counted one half (Mann-Whitney U / (n+ n-)).

    Returns the neutral 0.5 when only one class is present.
    """
    z = np.asarray(z, dtype=np.float64)
    pos = np.asarray(labels).astype(bool)
    if z.shape != pos.shape:
        raise DataError(f"scores and labels differ in length ({z.size} vs {pos.size})")
    n_pos = int(pos.sum())
    n_neg = pos.size - n_pos
    if n_pos == 0 or n_neg == 0:
        logger.debug("auc on single-class input; returning neutral value")
        return NEUTRAL_AUC
    ranks = _average_ranks(z)
    # rank sums are multiples of 1/2, so U is exact for any realistic n
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def sensitive_auc(z: Sequence[float], mask: Sequence[int]) -> float:
    """Group-ordering AUC folded onto [0.5, 1]; 0.5 means strong demographic parity."""
    u = auc(z, mask)
    return max(u, 1.0 - u)


def ovr_sensitive_auc(z: Sequence[float], view: SensitiveView) -> tuple[float, dict[str, float]]:
    """Sensitive AUC for every one-vs-rest group and their maximum."""
    if len(view) == 0:
        raise ConfigError("sensitive view has no groups")
    per_group = {g.name: sensitive_auc(z, g.mask) for g in view.groups}
    return max(per_group.values()), per_group


def _positive_rate(pred: np.ndarray, cell: np.ndarray) -> float | None:
    count = int(cell.sum())
    if count == 0:
        return None
    return float(pred[cell].sum()) / count


def demographic_parity(z: Sequence[float], mask: Sequence[int], t: float) -> float:
    """``|P(z >= t | S+) - P(z >= t | S-)|``; 0 when a group is empty."""
    z = np.asarray(z, dtype=np.float64)
    mask = np.asarray(mask).astype(bool)
    pred = z >= t
    a = _positive_rate(pred, mask)
    b = _positive_rate(pred, ~mask)
    if a is None or b is None:
        logger.debug("demographic parity with an empty group; returning 0")
        return 0.0
    return abs(a - b)


def equal_opportunity(z, mask, labels, t: float) -> float | None:
    """True-positive-rate gap between groups, or ``None`` if a cell is empty."""
    z = np.asarray(z, dtype=np.float64)
    mask = np.asarray(mask).astype(bool)
    y = np.asarray(labels).astype(bool)
    pred = z >= t
    a = _positive_rate(pred, mask & y)
    b = _positive_rate(pred, ~mask & y)
    if a is None or b is None:
        return None
    return abs(a - b)


def equalized_odds(z, mask, labels, t: float) -> tuple[float | None, float | None]:
    """``(tpr_gap, fpr_gap)``; a component is ``None`` when its cell is empty."""
    z = np.asarray(z, dtype=np.float64)
    mask = np.asarray(mask).astype(bool)
    y = np.asarray(labels).astype(bool)
    pred = z >= t
    fa = _positive_rate(pred, mask & ~y)
    fb = _positive_rate(pred, ~mask & ~y)
    fpr_gap = None if fa is None or fb is None else abs(fa - fb)
    return equal_opportunity(z, mask, labels, t), fpr_gap


def quantile_thresholds(z: Sequence[float], quantiles: Sequence[float]) -> list[float]:
    z = np.asarray(z, dtype=np.float64)
    if z.size == 0:
        raise DataError("cannot take quantiles of an empty score vector")
    q = np.asarray(quantiles, dtype=np.float64)
    if np.any((q <= 0) | (q >= 1)) or np.any(np.diff(q) < 0):
        raise ConfigError("quantiles must be sorted and lie in (0, 1)")
    return [float(v) for v in np.quantile(z, q)]


def pearson(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Pearson r and its two-sided p-value under the Student-t null."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DataError("pearson inputs differ in length")
    n = x.size
    if n < 3:
        raise DataError("pearson needs at least 3 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("correlation undefined for a zero-variance input")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = min(1.0, max(-1.0, r))
    return r, t_test_p_value(r, n)


def t_test_p_value(r: float, n: int) -> float:
    df = n - 2
    if abs(r) >= 1.0:
        return 0.0
    t2 = r * r * df / (1.0 - r * r)
    # P(|T| > t) = I_{df/(df+t^2)}(df/2, 1/2)
    return float(special.betainc(df / 2.0, 0.5, df / (df + t2)))
