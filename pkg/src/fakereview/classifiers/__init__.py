"""From-scratch classifiers: Gini decision tree, random forest, linear SVM."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .forest import ForestModel, ForestParams, default_candidates, forest_importance, train_forest
from .svm import LinearSvmModel, SvmParams, optimal_bias, svm_objective, train_svm
from .tree import (
    FAKE_CODE,
    NON_FAKE_CODE,
    DecisionTree,
    NoValidSplit,
    TrainingError,
    TreeParams,
    best_split,
    gini_node,
    train_tree,
)

CLASSIFIERS = ("rf", "svm", "tree")
MODEL_FORMAT = "fakereview.model/1"

__all__ = [
    "CLASSIFIERS",
    "DecisionTree",
    "FAKE_CODE",
    "ForestModel",
    "ForestParams",
    "LinearSvmModel",
    "ModelSpec",
    "NON_FAKE_CODE",
    "NoValidSplit",
    "SvmParams",
    "TrainingError",
    "TreeParams",
    "best_split",
    "default_candidates",
    "forest_importance",
    "gini_node",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "optimal_bias",
    "predict",
    "save_model",
    "svm_objective",
    "train_forest",
    "train_svm",
    "train_tree",
]


class TreeModel:
    """A single tree with column names, so it can be persisted like the others."""

    def __init__(self, tree: DecisionTree, params: TreeParams, columns: Sequence[str] | None = None):
        self.tree = tree
        self.params = params
        self.columns = list(columns) if columns is not None else [f"x{i}" for i in range(tree.n_features)]

    @property
    def n_features(self) -> int:
        return self.tree.n_features

    def predict(self, X):
        return self.tree.predict(X)


def predict(model, X) -> np.ndarray:
    """0/1 predictions (1 = fake) from any trained model."""
    return model.predict(X)


@dataclass(frozen=True)
class ModelSpec:
    """Which learner to train and with what hyperparameters."""

    kind: str = "rf"
    tree: TreeParams = field(default_factory=TreeParams)
    forest: ForestParams = field(default_factory=ForestParams)
    svm: SvmParams = field(default_factory=SvmParams)

    def __post_init__(self):
        if self.kind not in CLASSIFIERS:
            raise ValueError(f"classifier must be one of {CLASSIFIERS}, got {self.kind!r}")

    def train(self, X, y, columns: Sequence[str] | None = None):
        if self.kind == "rf":
            return train_forest(X, y, self.forest, columns)
        if self.kind == "svm":
            return train_svm(X, y, self.svm, columns)
        return TreeModel(train_tree(X, y, self.tree), self.tree, columns)

    def to_dict(self) -> dict:
        if self.kind == "rf":
            return {"kind": "rf", **self.forest.to_dict()}
        if self.kind == "svm":
            return {"kind": "svm", **self.svm.to_dict()}
        return {"kind": "tree", **self.tree.to_dict()}


def model_to_dict(model, normalizer=None) -> dict:
    out: dict = {"format": MODEL_FORMAT, "columns": list(model.columns)}
    if isinstance(model, ForestModel):
        out.update(kind="rf", params=model.params.to_dict(), trees=[t.to_dict() for t in model.trees])
    elif isinstance(model, LinearSvmModel):
        out.update(kind="svm", params=model.params.to_dict(), w=model.w.tolist(), b=model.b,
                   objective_history=model.history)
    elif isinstance(model, TreeModel):
        out.update(kind="tree", params=model.params.to_dict(), tree=model.tree.to_dict())
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    if normalizer is not None:
        out["normalizer"] = normalizer.to_dict()
    return out


def model_from_dict(data: dict):
    if data.get("format") != MODEL_FORMAT:
        raise ValueError(f"unsupported model format {data.get('format')!r}")
    kind = data["kind"]
    columns = data["columns"]
    if kind == "rf":
        p = dict(data["params"])
        p["tree"] = TreeParams(**p["tree"])
        return ForestModel([DecisionTree.from_dict(t) for t in data["trees"]], ForestParams(**p), columns)
    if kind == "svm":
        return LinearSvmModel(data["w"], data["b"], SvmParams(**data["params"]), columns,
                              data.get("objective_history", ()))
    if kind == "tree":
        return TreeModel(DecisionTree.from_dict(data["tree"]), TreeParams(**data["params"]), columns)
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model, path: str | Path, normalizer=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model, normalizer), fh, indent=1)
        fh.write("\n")


def load_model(path: str | Path):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
