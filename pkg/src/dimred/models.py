"""Fitted projection model shared by ppdire, snipls and sprm."""

from dataclasses import dataclass, field

import numpy as np

from ._utils import as_matrix
from .errors import DataError
from .preprocess import FittedScaler


def _frozen(a):
    if a is None:
        return None
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ProjectionModel:
    """Latent-variable model ``y ~ T gamma + c`` with ``T = Z R``.

    ``Z`` is the data standardized by ``scaler``.  ``W`` holds the unit-norm
    weights found on successively deflated data, ``P`` the loadings and
    ``R = W (P^T W)^{-1}`` the rotations that map undeflated standardized
    data to scores.  ``beta``/``intercept`` express the same predictor in
    original units; ``score_intercept`` is the intercept in score space.

    Robust fits fill ``caseweights``, ``residual_scale`` and ``rho``; sparse
    fits fill ``active`` (sorted variable indices with nonzero weight).
    """

    kind: str
    W: np.ndarray
    P: np.ndarray
    R: np.ndarray
    T: np.ndarray
    scaler: FittedScaler
    gamma: np.ndarray | None = None
    score_intercept: float = 0.0
    beta: np.ndarray | None = None
    intercept: float = 0.0
    index_values: np.ndarray | None = None
    caseweights: np.ndarray | None = None
    residual_scale: float | None = None
    rho: object = None
    active: np.ndarray | None = None
    score_center: np.ndarray | None = None
    score_scale: float | None = None
    truncated: bool = False
    converged: bool = True
    n_iter: int = 0
    y: np.ndarray | None = None
    fitted: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("W", "P", "R", "T", "gamma", "beta", "index_values", "caseweights",
                     "score_center", "y", "fitted"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if self.active is not None:
            active = np.ascontiguousarray(self.active, dtype=int)
            active.flags.writeable = False
            object.__setattr__(self, "active", active)

    @property
    def n_components(self):
        return self.W.shape[1]

    @property
    def n_features(self):
        return self.W.shape[0]

    @property
    def has_regression(self):
        return self.gamma is not None

    @property
    def is_robust(self):
        return self.caseweights is not None

    def _check(self, X):
        X = as_matrix(X, "Xnew")
        if X.shape[1] != self.n_features:
            raise DataError(f"model expects {self.n_features} columns, got {X.shape[1]}")
        return X

    def transform(self, X):
        """Scores of new data."""
        return self.scaler.transform(self._check(X)) @ self.R

    def predict(self, X):
        if not self.has_regression:
            raise DataError(f"{self.kind} model was fit without a response; nothing to predict")
        return self.transform(X) @ self.gamma + self.score_intercept

    def predict_original(self, X):
        """Prediction through ``beta`` and ``intercept`` (original units)."""
        return self._check(X) @ self.beta + self.intercept

    def residual_weights(self, y, yhat):
        """Caseweights for residuals, standardized by the training residual scale."""
        if self.rho is None or self.residual_scale is None:
            raise DataError(f"{self.kind} model has no caseweight rule")
        from .sprm import weight

        r = np.asarray(y, dtype=float) - np.asarray(yhat, dtype=float)
        return weight(r / self.residual_scale, self.rho)

    def score_weights(self, X):
        if self.rho is None or self.score_center is None or self.score_scale is None:
            raise DataError(f"{self.kind} model has no score-space weight rule")
        from .sprm import weight

        d = np.linalg.norm(self.transform(X) - self.score_center, axis=1)
        return weight(d / self.score_scale, self.rho)

    def caseweights_for(self, X, y):
        """Caseweights of new cases: residual weights times score weights if available."""
        w = self.residual_weights(y, self.predict(X))
        if self.score_center is not None:
            w = w * self.score_weights(X)
        return w


def original_coefficients(scaler, R, gamma, score_intercept):
    """Map score-space regression to (beta, intercept) in data units."""
    beta = (R @ gamma) / scaler.sigma
    intercept = float(score_intercept - scaler.mu @ beta)
    return beta, intercept
