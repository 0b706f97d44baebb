"""Split criteria: SCAFF and the information-gain based fair baselines.

The functions here work on explicit label / group / score vectors and are
the reference definitions. The tree grower evaluates the same quantities
from per-bin counts (see :mod:`scaff.kernels`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Sequence

import numpy as np

from .dataset import SensitiveView
from .errors import ConfigError, DataError
from .metrics import auc, ovr_sensitive_auc

KAMIRAN_DIV_EPS = 1e-6


class Kind(IntEnum):
    # values are shared with the compiled kernel
    SCAFF = 0
    AUC = 1
    KAMIRAN_SUB = 2
    KAMIRAN_DIV = 3
    FAHT = 4


_NAMES = {
    Kind.SCAFF: "scaff",
    Kind.AUC: "auc",
    Kind.KAMIRAN_SUB: "kamiran-sub",
    Kind.KAMIRAN_DIV: "kamiran-div",
    Kind.FAHT: "faht",
}
_BY_NAME = {v: k for k, v in _NAMES.items()}


@dataclass(frozen=True)
class SplitCriterion:
    kind: Kind
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        theta = float(self.theta)
        if not (0.0 <= theta <= 1.0) or math.isnan(theta):
            raise ConfigError(f"theta must lie in [0, 1], got {self.theta!r}")
        if self.kind is not Kind.SCAFF and theta != 0.0:
            raise ConfigError(f"{_NAMES[self.kind]} takes no theta")
        object.__setattr__(self, "theta", theta)

    @property
    def name(self) -> str:
        return _NAMES[self.kind]

    def __str__(self) -> str:
        if self.kind is Kind.SCAFF:
            return f"scaff:{self.theta:g}"
        return self.name

    @classmethod
    def scaff(cls, theta: float) -> "SplitCriterion":
        return cls(Kind.SCAFF, theta)


def parse_criterion(spec: str) -> SplitCriterion:
    """Parse ``scaff:<theta>``, ``auc``, ``kamiran-sub``, ``kamiran-div`` or ``faht``."""
    name, _, arg = str(spec).strip().lower().partition(":")
    if name not in _BY_NAME:
        raise ConfigError(f"unknown criterion {spec!r}; expected one of {sorted(_BY_NAME)}")
    kind = _BY_NAME[name]
    if kind is Kind.SCAFF:
        if not arg:
            raise ConfigError("scaff needs a theta, e.g. scaff:0.5")
        try:
            theta = float(arg)
        except ValueError:
            raise ConfigError(f"bad theta in {spec!r}") from None
        return SplitCriterion(kind, theta)
    if arg:
        raise ConfigError(f"{name} takes no argument")
    return SplitCriterion(kind)


# --------------------------------------------------------------------------
# information-gain family

def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -(p * math.log2(p) + (1.0 - p) * math.log2(1.0 - p))


def entropy(values: Sequence[int]) -> float:
    """Shannon entropy (bits) of a binary vector."""
    values = np.asarray(values)
    if values.size == 0:
        raise DataError("entropy of an empty vector")
    return binary_entropy(float(values.astype(bool).sum()) / values.size)


def info_gain(parent: Sequence[int], children: Sequence[Sequence[int]]) -> float:
    parent = np.asarray(parent)
    children = [np.asarray(c) for c in children]
    if sum(c.size for c in children) != parent.size:
        raise DataError("children do not partition the parent")
    if parent.size and sum(int(c.astype(bool).sum()) for c in children) != int(parent.astype(bool).sum()):
        raise DataError("children do not partition the parent")
    n = parent.size
    weighted = sum(c.size / n * entropy(c) for c in children if c.size)
    return entropy(parent) - weighted


def kamiran_sub(ig_y: float, ig_s: float) -> float:
    return ig_y - ig_s


def kamiran_div(ig_y: float, ig_s: float) -> float:
    return ig_y / max(ig_s, KAMIRAN_DIV_EPS)


def discrimination(labels: Sequence[int], mask: Sequence[int]) -> float:
    """``|P(Y+ | S+) - P(Y+ | S-)|`` on the label vector; 0 if a group is absent."""
    y = np.asarray(labels).astype(bool)
    s = np.asarray(mask).astype(bool)
    n_in = int(s.sum())
    n_out = s.size - n_in
    if n_in == 0 or n_out == 0:
        return 0.0
    return abs(int((y & s).sum()) / n_in - int((y & ~s).sum()) / n_out)


def fairness_gain(parent_mask, children_masks, parent_labels, children_labels) -> float:
    parent_mask = np.asarray(parent_mask)
    children_masks = [np.asarray(c) for c in children_masks]
    children_labels = [np.asarray(c) for c in children_labels]
    n = parent_mask.size
    if np.asarray(parent_labels).size != n or sum(c.size for c in children_masks) != n:
        raise DataError("children do not partition the parent")
    if any(m.size != y.size for m, y in zip(children_masks, children_labels)):
        raise DataError("child mask and label lengths differ")
    weighted = sum(m.size / n * discrimination(y, m) for m, y in zip(children_masks, children_labels) if m.size)
    return discrimination(parent_labels, parent_mask) - weighted


def faht(ig_y: float, fg: float) -> float:
    if fg == 0.0:
        return ig_y
    return ig_y * fg


# --------------------------------------------------------------------------
# SCAFF

def scaff_score(z, labels, view: SensitiveView, theta: float) -> float:
    """``(1 - theta) * AUC_Y - theta * max_g AUC_S`` for scores ``z``."""
    if not 0.0 <= theta <= 1.0:
        raise ConfigError(f"theta must lie in [0, 1], got {theta}")
    auc_s_max, _ = ovr_sensitive_auc(z, view)
    return (1.0 - theta) * auc(z, labels) - theta * auc_s_max


def scaff_gain(z_parent, z_child, labels, view: SensitiveView, theta: float) -> float:
    """Improvement in SCAFF score going from parent scores to child scores."""
    z_parent = np.asarray(z_parent, dtype=np.float64)
    z_child = np.asarray(z_child, dtype=np.float64)
    if z_parent.shape != z_child.shape:
        raise DataError("parent and child score vectors cover different samples")
    return scaff_score(z_child, labels, view, theta) - scaff_score(z_parent, labels, view, theta)
