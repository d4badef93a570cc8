"""Robust M regression, sparse NIPALS and sparse partial robust M regression.

* ``rm_fit``: M regression with Fair, Huber or Hampel weights, solved by
  iteratively reweighted least squares with a MAD residual scale.
* ``snipls_fit``: univariate sparse PLS.  Each weight vector is the exact
  soft-thresholded covariance vector ``s = X^T y`` with threshold
  ``lambda * max|s|``, so ``lambda`` in [0, 1) is free of data scale.
* ``sprm_fit``: SNIPLS iteratively reweighted by caseweights that combine
  residual and score-space outlyingness.  ``lambda = 0`` gives PRM.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm, spearmanr

from ._regression import quantile_fit, wls
from ._utils import MAD_CONSTANT, as_matrix, as_vector, check_same_rows, mad
from .errors import DataError, RankError
from .models import ProjectionModel, original_coefficients
from .preprocess import FittedScaler, ScalerSpec, fit_scaler

FAMILIES = ("fair", "huber", "hampel", "ls")

# Hampel cutoffs: 0.95 / 0.975 / 0.999 quantiles of |Z|, Z standard normal
HAMPEL_DEFAULT = tuple(float(norm.ppf((1 + q) / 2)) for q in (0.95, 0.975, 0.999))
FAIR_DEFAULT = 4.0
HUBER_DEFAULT = 1.345


@dataclass(frozen=True)
class RhoSpec:
    """Weight family and tuning constants.

    ``fair`` and ``huber`` use ``c``; ``hampel`` uses ``a < b < c``; ``ls``
    takes none.
    """

    family: str = "hampel"
    a: float | None = None
    b: float | None = None
    c: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DataError(f"unknown weight family {self.family!r}; choose from {FAMILIES}")
        if self.family == "hampel":
            a, b, c = (v if v is not None else d for v, d in zip((self.a, self.b, self.c), HAMPEL_DEFAULT))
            if not 0 < a < b < c:
                raise DataError("hampel needs 0 < a < b < c")
            object.__setattr__(self, "a", float(a))
            object.__setattr__(self, "b", float(b))
            object.__setattr__(self, "c", float(c))
        elif self.family in ("fair", "huber"):
            c = self.c if self.c is not None else (FAIR_DEFAULT if self.family == "fair" else HUBER_DEFAULT)
            if not c > 0:
                raise DataError(f"{self.family} needs c > 0")
            object.__setattr__(self, "c", float(c))

    def to_dict(self):
        return {"family": self.family, "a": self.a, "b": self.b, "c": self.c}


def weight(u, rho=None):
    """Caseweight in [0, 1] for standardized residuals or distances ``u``.

    ls: 1; fair: 1/(1 + |u|/c)^2; huber: min(1, c/|u|); hampel: 1 on [0, a],
    a/|u| on (a, b], a (c - |u|) / ((c - b) |u|) on (b, c], 0 beyond c.
    """
    rho = rho or RhoSpec()
    u = np.abs(np.asarray(u, dtype=float))
    if rho.family == "ls":
        out = np.ones_like(u)
    elif rho.family == "fair":
        out = 1.0 / (1.0 + u / rho.c) ** 2
    elif rho.family == "huber":
        out = rho.c / np.maximum(u, rho.c)
    else:
        a, b, c = rho.a, rho.b, rho.c
        um = np.maximum(u, a)
        out = np.select(
            [u <= a, u <= b, u <= c],
            [1.0, a / um, a * (c - u) / ((c - b) * um)],
            0.0,
        )
    return out if out.ndim else float(out)


def rho_function(u, rho=None):
    """Objective function rho with rho'(u) = u * weight(u)."""
    rho = rho or RhoSpec()
    u = np.abs(np.asarray(u, dtype=float))
    if rho.family == "ls":
        return 0.5 * u**2
    if rho.family == "fair":
        c = rho.c
        return c**2 * (np.log1p(u / c) + 1.0 / (1.0 + u / c) - 1.0)
    if rho.family == "huber":
        c = rho.c
        return np.where(u <= c, 0.5 * u**2, c * u - 0.5 * c**2)
    a, b, c = rho.a, rho.b, rho.c
    r2 = a * b - 0.5 * a**2
    r3 = r2 + 0.5 * a * (c - b)
    return np.select(
        [u <= a, u <= b, u <= c],
        [0.5 * u**2, a * u - 0.5 * a**2, r3 - 0.5 * a * (c - u) ** 2 / (c - b)],
        r3,
    )


@dataclass(frozen=True)
class RMModel:
    beta: np.ndarray
    intercept: float
    sigma_hat: float
    caseweights: np.ndarray
    n_iter: int
    converged: bool
    rho: RhoSpec = field(default_factory=RhoSpec)

    def predict(self, X):
        X = as_matrix(X, "Xnew")
        if X.shape[1] != self.beta.size:
            raise DataError(f"model expects {self.beta.size} columns, got {X.shape[1]}")
        return X @ self.beta + self.intercept

    def residual_weights(self, y, yhat):
        r = np.asarray(y, dtype=float) - np.asarray(yhat, dtype=float)
        return weight(r / self.sigma_hat, self.rho)

    def caseweights_for(self, X, y):
        return self.residual_weights(y, self.predict(X))


def _scale_floor(y):
    # residual scales below this count as an exact fit; relative to y so it is equivariant
    s = mad(y) or float(np.std(y))
    return (s if s > 0 else 1.0) * 1e-12


def rm_fit(X, y, rho=None, tol=1e-6, max_iter=100, freeze_scale_after=None, callback=None):
    """Robust M regression by IRLS.

    Starts from a least absolute deviation fit (least squares for ``ls``).
    Each iteration re-estimates the residual scale by the MAD, computes
    caseweights ``weight(r_i / sigma)`` and solves the weighted normal
    equations.  Stops when the relative change of the coefficients (with
    intercept) is below ``tol``.  A zero residual scale means an exact fit:
    all caseweights are 1.

    ``freeze_scale_after`` keeps sigma fixed after that many iterations;
    ``callback(iteration, coef, sigma)`` is called after each update, with
    ``coef = [intercept, beta...]``.
    """
    rho = rho or RhoSpec()
    X = as_matrix(X)
    y = as_vector(y)
    check_same_rows(X, y)
    n, p = X.shape
    if n <= p:
        raise DataError(f"M regression needs n > p (n={n}, p={p})")
    A = np.column_stack([np.ones(n), X])
    floor = _scale_floor(y)

    if rho.family == "ls":
        g, c0 = wls(X, y)
        coef = np.r_[c0, g]
        r = y - A @ coef
        sigma = max(mad(r), floor)
        return RMModel(coef[1:], float(coef[0]), float(sigma), np.ones(n), 0, True, rho)

    g, c0 = quantile_fit(X, y, 0.5, eps=1e-6 * max(mad(y), floor))
    coef = np.r_[c0, g]
    sigma = None
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        r = y - A @ coef
        if sigma is None or freeze_scale_after is None or it <= freeze_scale_after:
            sigma = mad(r)
        if sigma <= floor:
            sigma = floor
            w = np.ones(n)
        else:
            w = weight(r / sigma, rho)
        if np.count_nonzero(w) <= p:
            raise RankError("too few cases with nonzero weight for the weighted design")
        g, c0 = wls(X, y, w)
        new = np.r_[c0, g]
        change = np.linalg.norm(new - coef)
        coef = new
        if callback is not None:
            callback(it, coef.copy(), sigma)
        if change <= tol * max(np.linalg.norm(coef), floor):
            converged = True
            break
    r = y - A @ coef
    w = np.ones(n) if sigma <= floor else weight(r / sigma, rho)
    return RMModel(coef[1:], float(coef[0]), float(sigma), w, it, converged, rho)


# ---------------------------------------------------------------------------
# SNIPLS
# ---------------------------------------------------------------------------

def _snipls_core(Xc, yc, h, lam):
    """SNIPLS on centered data.  Returns (W, P, R, gamma, truncated)."""
    n, p = Xc.shape
    Xd, yd = Xc.copy(), yc.copy()
    W, P = [], []
    truncated = False
    for _ in range(h):
        s = Xd.T @ yd
        smax = np.max(np.abs(s))
        wt = np.sign(s) * np.maximum(np.abs(s) - lam * smax, 0.0)
        if smax == 0 or not np.any(wt):
            truncated = True
            break
        w = wt / np.linalg.norm(wt)
        if w[np.argmax(np.abs(w))] < 0:
            w = -w
        t = Xd @ w
        tt = t @ t
        if tt <= 0:
            truncated = True
            break
        pk = Xd.T @ t / tt
        Xd -= np.outer(t, pk)
        yd = yd - (yd @ t / tt) * t
        W.append(w)
        P.append(pk)
    k = len(W)
    if k == 0:
        return np.zeros((p, 0)), np.zeros((p, 0)), np.zeros((p, 0)), np.zeros(0), True
    W = np.column_stack(W)
    P = np.column_stack(P)
    R = W @ np.linalg.inv(P.T @ W)
    T = Xc @ R
    gamma = np.linalg.solve(T.T @ T, T.T @ yc)
    return W, P, R, gamma, truncated


def snipls_fit(X, y, h=1, lam=0.0, scaler=None):
    """Sparse NIPALS PLS with soft-thresholding parameter ``lam`` in [0, 1].

    Data are centered (and optionally scaled) by ``scaler``; ``y`` is mean
    centered.  If every coefficient is thresholded away at some component,
    the model keeps only the earlier components and ``truncated`` is set.
    """
    X = as_matrix(X)
    y = as_vector(y)
    check_same_rows(X, y)
    n, p = X.shape
    if h < 1 or h > min(n, p):
        raise DataError(f"h={h} must lie in [1, min(n, p)={min(n, p)}]")
    if lam < 0:
        raise DataError("lambda must be >= 0")
    fs = fit_scaler(X, scaler or ScalerSpec("mean", "none"))
    Z = fs.transform(X)
    ybar = float(np.mean(y))
    W, P, R, gamma, truncated = _snipls_core(Z, y - ybar, h, lam)
    T = Z @ R
    beta, intercept = original_coefficients(fs, R, gamma, ybar)
    active = np.flatnonzero(np.any(W != 0, axis=1))
    return ProjectionModel(
        kind="snipls", W=W, P=P, R=R, T=T, scaler=fs, gamma=gamma, score_intercept=ybar,
        beta=beta, intercept=intercept, active=active, truncated=truncated,
        y=y, fitted=T @ gamma + ybar, info={"lambda": float(lam)},
    )


# ---------------------------------------------------------------------------
# SPRM
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SprmSpec:
    h: int = 1
    lam: float = 0.0
    rho: RhoSpec = field(default_factory=RhoSpec)
    scaler: ScalerSpec = field(default_factory=lambda: ScalerSpec("colmedian", "mad"))
    max_iter: int = 100
    tol: float = 1e-6

    def __post_init__(self):
        if self.h < 1:
            raise DataError("h must be >= 1")
        if self.lam < 0:
            raise DataError("lambda must be >= 0")


def _distance_weights(D, rho):
    """Weights from nonnegative distances, standardized by their MAD about zero."""
    s = MAD_CONSTANT * np.median(D)
    if not s > 0:
        return np.ones_like(D), 1.0
    return weight(D / s, rho), float(s)


def _residual_weights(r, rho, floor):
    s = mad(r)
    if s <= floor:
        return np.ones_like(r), floor
    return weight(r / s, rho), float(s)


def _start_weights(Z, y, rho, floor):
    # residuals of a robust univariate fit on the variable most rank-correlated with y
    corr = np.array([abs(spearmanr(Z[:, j], y)[0]) if np.ptp(Z[:, j]) > 0 else 0.0
                     for j in range(Z.shape[1])])
    corr = np.nan_to_num(corr)
    j = int(np.argmax(corr))
    rm = rm_fit(Z[:, [j]], y, rho)
    wr, _ = _residual_weights(y - rm.predict(Z[:, [j]]), rho, floor)
    D = np.linalg.norm(Z - np.median(Z, axis=0), axis=1)
    wt, _ = _distance_weights(D, rho)
    return wr * wt


def sprm_fit(X, y, spec=None):
    """Sparse partial robust M regression.

    Caseweights start from a robust univariate regression (residual side)
    and distances of the robustly standardized rows to their median (score
    side).  Each iteration centers ``X`` and ``y`` at their caseweighted
    means, runs SNIPLS on the rows multiplied by ``sqrt(w)``, sets the
    intercept to the caseweighted mean of ``y - T gamma`` and recomputes
    ``w`` as the product of residual weights (residuals over their MAD) and
    score weights (distance of each score row to the columnwise score
    median, over the MAD of those distances).
    """
    spec = spec or SprmSpec()
    X = as_matrix(X)
    y = as_vector(y)
    check_same_rows(X, y)
    n, p = X.shape
    if spec.h > min(n, p):
        raise DataError(f"h={spec.h} exceeds min(n, p)={min(n, p)}")
    rho = spec.rho
    fs = fit_scaler(X, spec.scaler)
    Z = fs.transform(X)
    floor = _scale_floor(y)

    w = _start_weights(Z, y, rho, floor)
    coef_old = None
    converged = False
    it = 0
    for it in range(1, spec.max_iter + 1):
        if np.count_nonzero(w) <= spec.h:
            raise RankError("too few cases with nonzero caseweight")
        fit_w = w
        # caseweighted means make the constant orthogonal to the weighted
        # scores, so a full-rank fit of noiseless data is exact
        cx = w @ Z / w.sum()
        cy = float(w @ y / w.sum())
        Zc = Z - cx
        sw = np.sqrt(w)
        W, P, R, gamma, truncated = _snipls_core(Zc * sw[:, None], (y - cy) * sw, spec.h, spec.lam)
        T = Zc @ R
        c0 = float(np.sum(w * (y - T @ gamma)) / np.sum(w))
        r = y - c0 - T @ gamma
        wr, sigma = _residual_weights(r, rho, floor)
        if T.shape[1]:
            score_center = np.median(T, axis=0)
            wt, score_scale = _distance_weights(np.linalg.norm(T - score_center, axis=1), rho)
        else:
            score_center, wt, score_scale = np.zeros(0), np.ones(n), 1.0
        w = wr * wt
        coef = np.r_[c0, R @ gamma]
        if coef_old is not None:
            change = np.linalg.norm(coef - coef_old)
            if change <= spec.tol * max(np.linalg.norm(coef_old), floor):
                converged = True
                break
        coef_old = coef

    scaler = FittedScaler(fs.mu + fs.sigma * cx, fs.sigma, fs.spec)
    beta, intercept = original_coefficients(scaler, R, gamma, c0)
    active = np.flatnonzero(np.any(W != 0, axis=1))
    return ProjectionModel(
        kind="sprm", W=W, P=P, R=R, T=T, scaler=scaler, gamma=gamma, score_intercept=c0,
        beta=beta, intercept=intercept, caseweights=w, residual_scale=sigma, rho=rho,
        active=active, score_center=score_center, score_scale=score_scale,
        truncated=truncated, converged=converged, n_iter=it, y=y, fitted=T @ gamma + c0,
        info={"lambda": float(spec.lam), "fit_weights": fit_w.tolist()},
    )


CLASS_LABELS = ("regular", "moderate", "harsh")


def caseweight_classes(weights, cut_moderate=0.7, cut_harsh=0.3):
    """Label caseweights as regular (w >= cut_moderate), moderate or harsh (w < cut_harsh)."""
    if not 0 <= cut_harsh < cut_moderate <= 1:
        raise DataError("cutoffs must satisfy 0 <= cut_harsh < cut_moderate <= 1")
    w = np.asarray(weights, dtype=float)
    if np.any((w < 0) | (w > 1)):
        raise DataError("caseweights must lie in [0, 1]")
    return np.where(w >= cut_moderate, "regular", np.where(w >= cut_harsh, "moderate", "harsh"))
