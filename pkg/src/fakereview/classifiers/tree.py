"""Gini-purity decision tree.

Purity of a two-class node is ``p**2 + q**2`` (1 for a pure node, 0.5 for a
50/50 node); splits maximize the size-weighted purity of the two children.
The tree is stored as flat node arrays; the split search and the builder are
numba kernels.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Sequence

import numba
import numpy as np

FAKE_CODE = 1
NON_FAKE_CODE = 0


class TrainingError(ValueError):
    pass


class NoValidSplit(TrainingError):
    pass


def gini_node(labels: Sequence[int]) -> float:
    """Purity ``p**2 + q**2`` of a non-empty two-class node."""
    labels = np.asarray(labels)
    n = labels.size
    if n == 0:
        raise TrainingError("gini of an empty node")
    p = np.count_nonzero(labels == FAKE_CODE) / n
    q = 1.0 - p
    return p * p + q * q


@numba.njit(cache=True)
def _midpoint(a, b):
    m = a + (b - a) / 2.0
    if m >= b:
        m = a
    return m


@numba.njit(cache=True)
def _best_split(X, y, rows, start, end, cand, min_leaf):
    n = end - start
    vals = np.empty(n, dtype=np.float64)
    labs = np.empty(n, dtype=np.int64)
    best_score = -1.0
    best_f = -1
    best_thr = 0.0
    for c in range(cand.shape[0]):
        f = cand[c]
        total = 0
        for i in range(n):
            r = rows[start + i]
            vals[i] = X[r, f]
            labs[i] = y[r]
            total += labs[i]
        order = np.argsort(vals, kind="mergesort")
        fl = 0
        for i in range(1, n):
            fl += labs[order[i - 1]]
            if i < min_leaf or n - i < min_leaf:
                continue
            a = vals[order[i - 1]]
            b = vals[order[i]]
            if a == b:
                continue
            gl = i - fl
            fr = total - fl
            gr = (n - i) - fr
            score = (fl * fl + gl * gl) / i + (fr * fr + gr * gr) / (n - i)
            if score > best_score:
                best_score = score
                best_f = f
                best_thr = _midpoint(a, b)
    if best_f < 0:
        return -1, 0.0, 0.0
    return best_f, best_thr, best_score / n


@numba.njit(cache=True)
def _build(X, y, rows, max_depth, min_leaf, n_cand, keys):
    n = rows.shape[0]
    d = X.shape[1]
    cap = max(2 * n, 1)
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    n_node = np.zeros(cap, dtype=np.int64)
    n_fake = np.zeros(cap, dtype=np.int64)
    gain = np.zeros(cap, dtype=np.float64)

    work = rows.copy()
    buf = np.empty(n, dtype=np.int64)
    st_node = np.empty(cap, dtype=np.int64)
    st_start = np.empty(cap, dtype=np.int64)
    st_end = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)
    sp = 0
    st_node[0] = 0
    st_start[0] = 0
    st_end[0] = n
    st_depth[0] = 0
    sp = 1
    count = 1
    all_feats = np.arange(d)

    while sp > 0:
        sp -= 1
        node = st_node[sp]
        start = st_start[sp]
        end = st_end[sp]
        depth = st_depth[sp]
        m = end - start
        fk = 0
        for i in range(start, end):
            fk += y[work[i]]
        n_node[node] = m
        n_fake[node] = fk
        if depth >= max_depth or m < 2 * min_leaf or fk == 0 or fk == m:
            continue
        if n_cand >= d:
            cand = all_feats
        else:
            cand = np.sort(np.argsort(keys[node])[:n_cand])
        f, thr, wp = _best_split(X, y, work, start, end, cand, min_leaf)
        if f < 0:
            continue
        # stable partition: x <= thr to the left
        nl = 0
        nr = 0
        for i in range(start, end):
            r = work[i]
            if X[r, f] <= thr:
                work[start + nl] = r
                nl += 1
            else:
                buf[nr] = r
                nr += 1
        for i in range(nr):
            work[start + nl + i] = buf[i]
        purity = (fk * fk + (m - fk) * (m - fk)) / (m * m)
        gain[node] = m * (wp - purity)
        feature[node] = f
        threshold[node] = thr
        left[node] = count
        right[node] = count + 1
        st_node[sp] = count + 1
        st_start[sp] = start + nl
        st_end[sp] = end
        st_depth[sp] = depth + 1
        sp += 1
        st_node[sp] = count
        st_start[sp] = start
        st_end[sp] = start + nl
        st_depth[sp] = depth + 1
        sp += 1
        count += 2

    return (
        feature[:count],
        threshold[:count],
        left[:count],
        right[:count],
        n_node[:count],
        n_fake[:count],
        gain[:count],
    )


def best_split(
    rows: np.ndarray,
    labels: Sequence[int],
    candidates: Sequence[int] | None = None,
    min_leaf: int = 1,
) -> tuple[int, float, float]:
    """Best ``(feature, threshold, weighted purity)`` over candidate features.

    Thresholds are midpoints between consecutive distinct values; ties go to
    the lowest feature index, then the lowest threshold.
    """
    X = np.ascontiguousarray(rows, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(labels, dtype=np.int64)
    if X.shape[0] < 2:
        raise NoValidSplit("need at least two rows")
    if np.all(y == y[0]):
        raise NoValidSplit("node is already pure")
    cand = np.arange(X.shape[1]) if candidates is None else np.sort(np.asarray(candidates, dtype=np.int64))
    f, thr, wp = _best_split(X, y, np.arange(X.shape[0]), 0, X.shape[0], cand, int(min_leaf))
    if f < 0:
        raise NoValidSplit("no candidate feature separates the rows")
    return int(f), float(thr), float(wp)


@dataclass(frozen=True)
class TreeParams:
    max_depth: int = 16
    min_leaf: int = 2
    n_candidate_features: int | None = None

    def __post_init__(self):
        if self.max_depth < 0:
            raise ValueError("max_depth must be non-negative")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be positive")
        if self.n_candidate_features is not None and self.n_candidate_features < 1:
            raise ValueError("n_candidate_features must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


class DecisionTree:
    """Flat-array binary tree; ``x[feature] <= threshold`` routes left.

    Leaves have ``feature == -1``.  ``gain`` holds, per internal node, the
    node size times its purity gain (for impurity importance).
    """

    def __init__(self, feature, threshold, left, right, n_node, n_fake, gain, n_features: int):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.n_node = np.asarray(n_node, dtype=np.int64)
        self.n_fake = np.asarray(n_fake, dtype=np.int64)
        self.gain = np.asarray(gain, dtype=np.float64)
        self.n_features = int(n_features)

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def leaf_label(self) -> np.ndarray:
        # ties resolve to non_fake
        return (2 * self.n_fake > self.n_node).astype(np.int8)

    def importance(self) -> np.ndarray:
        """Per-feature sum of (node weight x purity gain)."""
        out = np.zeros(self.n_features, dtype=np.float64)
        internal = self.feature >= 0
        root = max(int(self.n_node[0]), 1)
        np.add.at(out, self.feature[internal], self.gain[internal] / root)
        return out

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[self.feature[node[active]] >= 0]
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = _check_dims(X, self.n_features)
        return self.leaf_label[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "n_features": self.n_features,
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "n_node": self.n_node.tolist(),
            "n_fake": self.n_fake.tolist(),
            "gain": self.gain.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DecisionTree":
        return cls(
            data["feature"], data["threshold"], data["left"], data["right"],
            data["n_node"], data["n_fake"], data["gain"], data["n_features"],
        )


def _check_dims(X, n_features: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != n_features:
        raise ValueError(f"expected {n_features} feature columns, got shape {X.shape}")
    return X


def _check_training(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise TrainingError("empty training data")
    if y.shape != (X.shape[0],):
        raise TrainingError(f"label vector of shape {y.shape} does not match {X.shape[0]} rows")
    if not np.isin(y, (0, 1)).all():
        raise TrainingError("labels must be encoded 0 (non_fake) / 1 (fake)")
    return X, y


_NO_KEYS = np.zeros((1, 1), dtype=np.float64)


def _grow(X, y, rows, params: TreeParams, n_cand: int, rng: np.random.Generator | None) -> DecisionTree:
    d = X.shape[1]
    if n_cand < d:
        if rng is None:
            raise TrainingError("feature subsampling needs a random generator")
        keys = rng.random((max(2 * len(rows), 1), d))
    else:
        keys = _NO_KEYS
    arrays = _build(X, y, rows, params.max_depth, params.min_leaf, n_cand, keys)
    return DecisionTree(*arrays, n_features=d)


def train_tree(
    X: np.ndarray,
    y: np.ndarray,
    params: TreeParams = TreeParams(),
    feature_sampler: np.random.Generator | None = None,
    rows: np.ndarray | None = None,
) -> DecisionTree:
    """Grow a tree on ``X[rows]`` (all rows by default).

    With ``params.n_candidate_features`` below the column count, each node
    draws that many candidate features without replacement from
    ``feature_sampler``.
    """
    X, y = _check_training(X, y)
    d = X.shape[1]
    n_cand = d if params.n_candidate_features is None else min(params.n_candidate_features, d)
    rows = np.arange(X.shape[0], dtype=np.int64) if rows is None else np.asarray(rows, dtype=np.int64)
    return _grow(X, y, rows, params, n_cand, feature_sampler)
