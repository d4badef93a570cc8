"""K-fold cross-validation with plain and caseweight-aware scoring."""

import itertools
from dataclasses import dataclass

import numpy as np

from ._utils import as_matrix, as_vector, check_same_rows
from .errors import DataError, DimRedError

SCORINGS = ("mse", "mae", "robust")


@dataclass(frozen=True)
class CVPlan:
    """Fold layout: ``k`` folds over ``n`` cases, optionally shuffled by ``seed``."""

    n: int
    k: int = 5
    seed: int | None = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.k < 2:
            raise DataError(f"k must be at least 2, got {self.k}")
        if self.k > self.n:
            raise DataError(f"k={self.k} exceeds the number of cases n={self.n}")


def kfold(plan):
    """List of ``(train, test)`` index arrays.

    Test folds partition ``range(n)``; their sizes differ by at most one.
    Without shuffling the folds are contiguous blocks in case order.
    """
    order = np.arange(plan.n)
    if plan.shuffle:
        order = np.random.default_rng(plan.seed).permutation(plan.n)
    folds = []
    for test in np.array_split(order, plan.k):
        mask = np.ones(plan.n, dtype=bool)
        mask[test] = False
        folds.append((np.flatnonzero(mask), np.sort(test)))
    return folds


def robust_loss(y, yhat, caseweights):
    """Caseweighted mean squared error ``sum w r^2 / sum w``."""
    y = as_vector(y)
    yhat = as_vector(yhat, "yhat")
    w = as_vector(caseweights, "caseweights")
    if not y.size == yhat.size == w.size:
        raise DataError("y, yhat and caseweights must have equal length")
    if np.any((w < 0) | (w > 1)):
        raise DataError("caseweights must lie in [0, 1]")
    total = w.sum()
    if total <= 0:
        raise DataError("caseweights sum to zero")
    return float(np.sum(w * (y - yhat) ** 2) / total)


def fold_score(model, X, y, scoring="mse"):
    """Score ``model`` on held-out data.

    ``robust`` weights the test residuals with the model's own rule
    (training residual scale and weight function).
    """
    yhat = model.predict(X)
    if scoring == "mse":
        return float(np.mean((y - yhat) ** 2))
    if scoring == "mae":
        return float(np.mean(np.abs(y - yhat)))
    if scoring == "robust":
        return robust_loss(y, yhat, model.residual_weights(y, yhat))
    raise DataError(f"unknown scoring {scoring!r}; choose from {SCORINGS}")


def expand_grid(grid):
    """Parameter cells in evaluation order.

    A dict of lists expands to its Cartesian product (first key varies
    slowest); a list of dicts is taken as is.
    """
    if isinstance(grid, dict):
        if not grid:
            raise DataError("parameter grid is empty")
        keys = list(grid)
        for key in keys:
            if isinstance(grid[key], (str, bytes)) or not hasattr(grid[key], "__iter__"):
                raise DataError(f"grid entry {key!r} must be a list of values")
        cells = [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]
    else:
        cells = [dict(c) for c in grid]
    if not cells:
        raise DataError("parameter grid is empty")
    return cells


@dataclass(frozen=True)
class CellResult:
    params: dict
    fold_scores: tuple
    errors: tuple
    mean_score: float | None

    @property
    def failed(self):
        return self.mean_score is None


@dataclass(frozen=True)
class SearchResult:
    scoring: str
    cells: tuple
    best_index: int

    @property
    def best(self):
        return self.cells[self.best_index]

    @property
    def best_params(self):
        return self.best.params

    @property
    def best_score(self):
        return self.best.mean_score

    def to_dict(self):
        return {
            "scoring": self.scoring,
            "best_index": self.best_index,
            "best_params": self.best_params,
            "best_score": self.best_score,
            "cells": [
                {
                    "params": c.params,
                    "fold_scores": list(c.fold_scores),
                    "errors": list(c.errors),
                    "mean_score": c.mean_score,
                    "failed": c.failed,
                }
                for c in self.cells
            ],
        }


def grid_search(fit, grid, X, y, plan=None, scoring="mse"):
    """Exhaustive cross-validated search.

    ``fit(X_train, y_train, **params)`` must return a model with
    ``predict``; robust scoring also needs ``residual_weights``.  A fold
    whose fit or scoring raises a package error is recorded with its
    message and left out of the cell mean; a cell where every fold failed
    is kept in the report but cannot be selected.  The best cell has the
    lowest mean score, ties going to the earlier cell.
    """
    if scoring not in SCORINGS:
        raise DataError(f"unknown scoring {scoring!r}; choose from {SCORINGS}")
    X = as_matrix(X)
    y = as_vector(y)
    check_same_rows(X, y)
    plan = plan or CVPlan(X.shape[0])
    if plan.n != X.shape[0]:
        raise DataError(f"plan is for n={plan.n} cases but the data has {X.shape[0]}")
    folds = kfold(plan)
    cells = []
    for params in expand_grid(grid):
        scores, errors = [], []
        for train, test in folds:
            try:
                model = fit(X[train], y[train], **params)
                scores.append(fold_score(model, X[test], y[test], scoring))
                errors.append(None)
            except (DimRedError, np.linalg.LinAlgError) as exc:
                scores.append(None)
                errors.append(f"{type(exc).__name__}: {exc}")
        ok = [s for s in scores if s is not None]
        cells.append(CellResult(params, tuple(scores), tuple(errors), float(np.mean(ok)) if ok else None))
    usable = [i for i, c in enumerate(cells) if not c.failed]
    if not usable:
        raise DataError("every grid cell failed on every fold")
    best = min(usable, key=lambda i: cells[i].mean_score)
    return SearchResult(scoring, tuple(cells), best)
