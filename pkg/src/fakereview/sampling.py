"""Class rebalancing by random under-sampling or replication over-sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import FeatureMatrix

STRATEGIES = ("none", "under", "over")


class SamplingError(ValueError):
    pass


@dataclass(frozen=True)
class SamplingPlan:
    strategy: str = "none"
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise SamplingError(f"sampling strategy must be one of {STRATEGIES}, got {self.strategy!r}")


def _classes(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y)
    pos = np.flatnonzero(y == 1)
    neg = np.flatnonzero(y != 1)
    if len(pos) == 0 or len(neg) == 0:
        raise SamplingError("sampling needs both classes present")
    return pos, neg


def undersample_indices(y: np.ndarray, seed: int = 0) -> np.ndarray:
    """Row indices keeping all minority rows and a random majority subset of equal size."""
    pos, neg = _classes(y)
    minority, majority = (pos, neg) if len(pos) <= len(neg) else (neg, pos)
    rng = np.random.default_rng(seed)
    keep = rng.choice(majority, size=len(minority), replace=False)
    return np.sort(np.concatenate([minority, keep]))


def oversample_indices(y: np.ndarray, seed: int = 0) -> np.ndarray:
    """All rows plus minority rows drawn with replacement up to the majority count."""
    pos, neg = _classes(y)
    minority, majority = (pos, neg) if len(pos) <= len(neg) else (neg, pos)
    rng = np.random.default_rng(seed)
    extra = rng.choice(minority, size=len(majority) - len(minority), replace=True)
    return np.concatenate([np.arange(len(y)), extra])


def sample_indices(y: np.ndarray, plan: SamplingPlan) -> np.ndarray:
    if plan.strategy == "under":
        return undersample_indices(y, plan.seed)
    if plan.strategy == "over":
        return oversample_indices(y, plan.seed)
    return np.arange(len(y))


def undersample(matrix: FeatureMatrix, plan: SamplingPlan) -> FeatureMatrix:
    return matrix.take(undersample_indices(matrix.y, plan.seed))


def oversample(matrix: FeatureMatrix, plan: SamplingPlan) -> FeatureMatrix:
    return matrix.take(oversample_indices(matrix.y, plan.seed))


def apply_sampling(matrix: FeatureMatrix, plan: SamplingPlan) -> FeatureMatrix:
    if plan.strategy == "none":
        return matrix
    return matrix.take(sample_indices(matrix.y, plan))
