"""Primal linear SVM trained by stochastic subgradient descent on the hinge loss.

Decision value is ``w . x - b``; fake is +1.  Training minimizes

    0.5 * ||w||^2 + C * sum_i max(0, 1 - y_i (w . x_i - b))

with Pegasos-style steps (``lambda = 1 / (C n)``, rate ``1 / (lambda t)``),
keeps the best epoch checkpoint, and finishes with an exact line
minimization over ``b`` for the kept ``w``.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Sequence

import numba
import numpy as np

from .tree import TrainingError, _check_dims, _check_training

SCHEDULES = ("pegasos", "constant")


@dataclass(frozen=True)
class SvmParams:
    C: float = 1.0
    epochs: int = 200
    schedule: str = "pegasos"
    eta0: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("C must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}")

    def to_dict(self) -> dict:
        return asdict(self)


@numba.njit(cache=True)
def _epoch(X, ys, w, b, order, lam, t, constant, eta0, radius):
    d = X.shape[1]
    for k in range(order.shape[0]):
        i = order[k]
        t += 1
        eta = eta0 if constant else 1.0 / (lam * t)
        s = 0.0
        for j in range(d):
            s += w[j] * X[i, j]
        margin = ys[i] * (s - b)
        shrink = 1.0 - eta * lam
        for j in range(d):
            w[j] *= shrink
        if margin < 1.0:
            for j in range(d):
                w[j] += eta * ys[i] * X[i, j]
            b -= eta * ys[i]
        nrm = 0.0
        for j in range(d):
            nrm += w[j] * w[j]
        nrm = np.sqrt(nrm)
        if nrm > radius:
            scale = radius / nrm
            for j in range(d):
                w[j] *= scale
    return b, t


def svm_objective(w: np.ndarray, b: float, X: np.ndarray, ys: np.ndarray, C: float) -> float:
    hinge = np.maximum(0.0, 1.0 - ys * (X @ w - b))
    return float(0.5 * w @ w + C * hinge.sum())


def optimal_bias(w: np.ndarray, X: np.ndarray, ys: np.ndarray) -> float:
    """Midpoint of the interval of ``b`` minimizing the summed hinge loss for fixed ``w``."""
    s = X @ w
    pos = np.sort(s[ys > 0] - 1.0)  # hinge active when b > s - 1
    neg = np.sort(s[ys < 0] + 1.0)  # hinge active when b < s + 1
    cands = np.unique(np.concatenate([pos, neg]))
    cpos = np.concatenate([[0.0], np.cumsum(pos)])
    cneg = np.concatenate([[0.0], np.cumsum(neg)])
    kp = np.searchsorted(pos, cands, side="left")
    kn = np.searchsorted(neg, cands, side="right")
    loss = (kp * cands - cpos[kp]) + ((cneg[-1] - cneg[kn]) - (len(neg) - kn) * cands)
    best = loss.min()
    tol = 1e-12 * max(1.0, abs(best))
    hits = cands[loss <= best + tol]
    return float((hits[0] + hits[-1]) / 2.0)


class LinearSvmModel:
    def __init__(self, w, b: float, params: SvmParams, columns: Sequence[str] | None = None,
                 history: Sequence[float] = ()):
        self.w = np.asarray(w, dtype=np.float64)
        self.b = float(b)
        self.params = params
        self.columns = list(columns) if columns is not None else [f"x{i}" for i in range(len(self.w))]
        self.history = list(history)

    @property
    def n_features(self) -> int:
        return len(self.w)

    def decision(self, X: np.ndarray) -> np.ndarray:
        X = _check_dims(X, self.n_features)
        return X @ self.w - self.b

    def predict(self, X: np.ndarray) -> np.ndarray:
        # zero resolves to non_fake
        return (self.decision(X) > 0).astype(np.int8)


def train_svm(
    X: np.ndarray,
    y: np.ndarray,
    params: SvmParams = SvmParams(),
    columns: Sequence[str] | None = None,
) -> LinearSvmModel:
    """Fit on 0/1 labels (1 = fake, mapped to +1)."""
    X, y = _check_training(X, y)
    if np.all(y == y[0]):
        raise TrainingError("SVM training needs both classes")
    n, d = X.shape
    ys = np.where(y == 1, 1.0, -1.0)
    lam = 1.0 / (params.C * n)
    radius = 1.0 / np.sqrt(lam)
    rng = np.random.default_rng(params.seed)

    w = np.zeros(d)
    b = 0.0
    t = 0
    best_w, best_b = w.copy(), b
    best_obj = svm_objective(w, b, X, ys, params.C)
    history = []
    for _ in range(params.epochs):
        order = rng.permutation(n)
        b, t = _epoch(X, ys, w, b, order, lam, t, params.schedule == "constant", params.eta0, radius)
        obj = svm_objective(w, b, X, ys, params.C)
        if obj < best_obj:
            best_obj, best_w, best_b = obj, w.copy(), b
        history.append(best_obj)

    b_ref = optimal_bias(best_w, X, ys)
    obj = svm_objective(best_w, b_ref, X, ys, params.C)
    if obj <= best_obj:
        best_b, best_obj = b_ref, obj
    history.append(best_obj)
    return LinearSvmModel(best_w, best_b, params, columns, history)
