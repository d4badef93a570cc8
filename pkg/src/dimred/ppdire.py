"""Projection pursuit dimension reduction.

Directions are extracted one at a time.  Each ``w_i`` maximizes a
projection index of ``t = X_i w`` (and ``y`` when given) over the unit
sphere, where ``X_i`` is the standardized data deflated by the previous
scores.  The projection deflation ``X <- X - t (t^T t)^{-1} t^T X`` keeps
the scores mutually orthogonal for any index.

Two optimizers are provided: the derivative-free grid algorithm (suitable
for trimmed or rank-based indices) and a sphere-constrained gradient ascent
for smooth indices, warm-started from a coarse grid run.
"""

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from . import dicomo
from ._regression import quantile_fit, wls
from ._utils import angle_between, as_matrix, as_vector, check_same_rows, sign_normalize
from .dicomo import MomentSpec
from .errors import ConvergenceError, DataError, IndexEvaluationError, RankError
from .models import ProjectionModel, original_coefficients
from .preprocess import ScalerSpec, fit_scaler

REGRESSIONS = ("ols", "quantile", "rm")
OPTIMIZERS = ("grid", "nlp")


def make_index(spec):
    """Turn a ``MomentSpec`` into a callable ``index(t, y=None) -> float``.

    Signed statistics (covariance, correlation, skewness, co-moments) are
    squared so that the index is sign invariant.
    """
    if callable(spec):
        def user_index(t, y=None):
            return spec(t) if y is None else spec(t, y)
        return user_index

    kind, center, trim = spec.kind, spec.center, spec.trim_alpha

    if kind == "var":
        return lambda t, y=None: dicomo.moment(t, spec)
    if kind == "kurt":
        return lambda t, y=None: dicomo.moment(t, spec)
    if kind == "skew":
        return lambda t, y=None: dicomo.moment(t, spec) ** 2
    if kind in ("cov", "corr", "coskew", "cokurt"):
        return lambda t, y: dicomo.comoment(t, y, spec) ** 2
    if kind == "continuum":
        a = spec.continuum_alpha
        return lambda t, y: dicomo.continuum(t, y, a, center, trim)
    if kind == "capi":
        weights = spec.capi_weights or (1, 0, 0, 0, 0, 0)
        return lambda t, y: dicomo.capi(t, y, weights, center, trim)
    raise DataError(f"no projection index for kind {kind!r}")


def _index_requires_y(index):
    return isinstance(index, MomentSpec) and index.needs_y


class _Objective:
    """Index evaluated on X @ w, with failures tagged by direction."""

    def __init__(self, index, X, y):
        self.f = index if callable(index) and not isinstance(index, MomentSpec) else make_index(index)
        self.X = X
        self.y = y
        self.evaluations = 0

    def __call__(self, w):
        self.evaluations += 1
        t = self.X @ w
        try:
            v = self.f(t) if self.y is None else self.f(t, self.y)
        except IndexEvaluationError:
            raise
        except Exception as exc:
            raise IndexEvaluationError(f"projection index failed: {exc}", direction=w.copy()) from exc
        v = float(v)
        if not np.isfinite(v):
            raise IndexEvaluationError("projection index is not finite", direction=w.copy())
        return v


def _grid_search(obj, p, n_grid=26, resolution=1e-4, max_cycles=50, tol=1e-5, start=None):
    if start is None:
        axes = np.eye(p)
        vals = [obj(axes[j]) for j in range(p)]
        j0 = int(np.argmax(vals))
        w, best = axes[j0].copy(), vals[j0]
    else:
        w = np.asarray(start, dtype=float) / np.linalg.norm(start)
        best = obj(w)
    for _ in range(max_cycles):
        w_prev = w.copy()
        for j in range(p):
            u = -w[j] * w
            u[j] += 1.0
            nu = np.linalg.norm(u)
            if nu < 1e-12:
                continue
            u /= nu
            theta, lo, hi = 0.0, -np.pi / 2, np.pi / 2
            while True:
                grid = np.linspace(lo, hi, n_grid)
                for th in grid:
                    v = obj(np.cos(th) * w + np.sin(th) * u)
                    if v > best:
                        best, theta = v, th
                if (hi - lo) / (n_grid - 1) < resolution:
                    break
                half = (hi - lo) / 4
                lo, hi = theta - half, theta + half
            if theta != 0.0:
                w = np.cos(theta) * w + np.sin(theta) * u
                w /= np.linalg.norm(w)
        if angle_between(w, w_prev) < tol:
            break
    return w, best


def grid_maximize(index, X, y=None, n_grid=26, resolution=1e-4, max_cycles=50, tol=1e-5, start=None):
    """Maximize a projection index over unit vectors with the grid algorithm.

    Cycles over the coordinate axes; for axis ``j`` the search runs over the
    great circle through the current direction and ``e_j``, evaluating
    ``n_grid`` angles on [-90, 90] degrees, then halving the interval around
    the best angle until the grid spacing is below ``resolution`` (radians).
    Cycles repeat until the direction moves less than ``tol`` radians or
    ``max_cycles`` is reached.  The current direction is only replaced by a
    strictly better one, so the result is the best direction visited.

    Parameters
    ----------
    index : MomentSpec or callable
        Projection index; callables receive ``t`` (and ``y`` if given).
    X : array (n, p)
    y : array (n,), optional

    Returns
    -------
    w : array (p,)
        Unit vector whose largest-magnitude entry is positive.
    """
    X = as_matrix(X)
    p = X.shape[1]
    if y is not None:
        y = as_vector(y)
        check_same_rows(X, y)
    if p == 1:
        return np.ones(1)
    obj = _Objective(index, X, y)
    w, _ = _grid_search(obj, p, n_grid, resolution, max_cycles, tol, start)
    return sign_normalize(w[:, None])[:, 0]


def _sphere_gradient(F, w, h):
    g = np.empty_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = h
        g[i] = (F(w + e) - F(w - e)) / (2 * h)
    return g - (g @ w) * w


def nlp_maximize(index, X, y=None, start=None, tol=1e-8, max_iter=5000, step=1e-6,
                 warm_resolution=1e-2, accept_tol=1e-6):
    """Maximize a smooth projection index by gradient ascent on the sphere.

    The index is extended to ``F(v) = index(X v / ||v||)`` so that its
    central-difference gradient (step ``step``) is tangent to the sphere.
    Iterates are retracted by normalization; step lengths come from a
    Barzilai-Borwein guess followed by Armijo backtracking.  Converged when
    the projected gradient norm is at most ``tol * max(1, |F|)``, or when
    progress stalls at working precision with the gradient norm at most
    ``accept_tol * max(1, |F|)``.

    Raises ``ConvergenceError`` (carrying the best iterate) otherwise.
    """
    X = as_matrix(X)
    p = X.shape[1]
    if y is not None:
        y = as_vector(y)
        check_same_rows(X, y)
    if p == 1:
        return np.ones(1)
    obj = _Objective(index, X, y)

    def F(v):
        return obj(v / np.linalg.norm(v))

    def done(w):
        return sign_normalize(w[:, None])[:, 0]

    if start is None:
        w, fw = _grid_search(obj, p, resolution=warm_resolution, max_cycles=5)
    else:
        w = np.asarray(start, dtype=float) / np.linalg.norm(start)
        fw = F(w)
    g = _sphere_gradient(F, w, step)
    alpha = 1.0 / max(np.linalg.norm(g), 1e-12)
    w_old = g_old = None
    stalled = 0
    for _ in range(max_iter):
        gnorm = np.linalg.norm(g)
        scale = max(1.0, abs(fw))
        if gnorm <= tol * scale:
            return done(w)
        if stalled >= 5 and gnorm <= accept_tol * scale:
            return done(w)
        if w_old is not None:
            s, d = w - w_old, g - g_old
            sd = abs(s @ d)
            if sd > 0:
                alpha = (s @ s) / sd
        a = alpha
        for _ in range(60):
            cand = w + a * g
            cand /= np.linalg.norm(cand)
            fc = obj(cand)
            if fc >= fw + 1e-4 * a * gnorm**2:
                break
            a *= 0.5
        else:
            if gnorm <= accept_tol * scale:
                return done(w)
            break
        stalled = stalled + 1 if fc - fw <= 1e-14 * scale else 0
        w_old, g_old = w, g
        w, fw = cand, fc
        g = _sphere_gradient(F, w, step)
    raise ConvergenceError(f"sphere gradient ascent did not converge (gradient norm {gnorm:.3g})",
                           best=done(w), value=fw)


@dataclass(frozen=True)
class PPSpec:
    index: Union[MomentSpec, Callable] = field(default_factory=MomentSpec)
    n_components: int = 1
    optimizer: str = "grid"
    regression: str = "ols"
    quantile: float = 0.5
    rho: object = None
    scaler: ScalerSpec = field(default_factory=ScalerSpec)
    n_grid: int = 26
    resolution: float = 1e-4
    max_cycles: int = 50

    def __post_init__(self):
        if self.n_components < 1:
            raise DataError("n_components must be >= 1")
        if self.optimizer not in OPTIMIZERS:
            raise DataError(f"unknown optimizer {self.optimizer!r}; choose from {OPTIMIZERS}")
        if self.regression not in REGRESSIONS:
            raise DataError(f"unknown regression {self.regression!r}; choose from {REGRESSIONS}")
        if self.regression == "quantile" and not 0 < self.quantile < 1:
            raise DataError("quantile must lie in (0, 1)")


def _fit_regression(T, y, method="ols", tau=0.5, rho=None):
    if method == "ols":
        return (*wls(T, y), None)
    if method == "quantile":
        return (*quantile_fit(T, y, tau), None)
    if method == "rm":
        from .sprm import RhoSpec, rm_fit

        rm = rm_fit(T, y, rho or RhoSpec())
        return rm.beta, rm.intercept, rm
    raise DataError(f"unknown regression method {method!r}")


def regress_scores(T, y, method="ols", tau=0.5, rho=None):
    """Regress ``y`` on scores ``T`` (with intercept).

    ``method`` is ``"ols"``, ``"quantile"`` (pinball loss at ``tau``) or
    ``"rm"`` (robust M regression with ``rho``).  Returns ``(gamma,
    intercept)`` such that ``yhat = T @ gamma + intercept``.
    """
    T = as_matrix(T, "T")
    y = as_vector(y)
    check_same_rows(T, y, ("T", "y"))
    gamma, intercept, _ = _fit_regression(T, y, method, tau, rho)
    return gamma, intercept


def fit_pp(X, y=None, spec=None):
    """Fit a projection pursuit model.

    Returns a :class:`~dimred.models.ProjectionModel`; the regression step is
    only run when ``y`` is supplied.  Raises ``RankError`` naming the
    component when the deflated data are exhausted.
    """
    spec = spec or PPSpec()
    X = as_matrix(X)
    n, p = X.shape
    h = spec.n_components
    if h > min(n, p):
        raise DataError(f"n_components={h} exceeds min(n, p)={min(n, p)}")
    if y is not None:
        y = as_vector(y)
        check_same_rows(X, y)
    elif _index_requires_y(spec.index):
        raise DataError(f"index {spec.index.kind!r} needs a response y")

    scaler = fit_scaler(X, spec.scaler)
    Z = scaler.transform(X)
    Xd = Z.copy()
    scale = np.linalg.norm(Z)
    W = np.zeros((p, h))
    P = np.zeros((p, h))
    values = np.zeros(h)
    for k in range(h):
        if np.linalg.norm(Xd) <= 1e-10 * scale:
            raise RankError(f"deflated data exhausted at component {k + 1}", component=k + 1)
        if spec.optimizer == "grid":
            w = grid_maximize(spec.index, Xd, y, spec.n_grid, spec.resolution, spec.max_cycles)
        else:
            w = nlp_maximize(spec.index, Xd, y)
        t = Xd @ w
        tt = t @ t
        if tt <= 1e-20 * scale**2:
            raise RankError(f"zero score vector at component {k + 1}", component=k + 1)
        values[k] = _Objective(spec.index, Xd, y)(w)
        P[:, k] = Xd.T @ t / tt
        Xd = Xd - np.outer(t, P[:, k])
        W[:, k] = w

    R = W @ np.linalg.inv(P.T @ W)
    T = Z @ R
    gamma = beta = fitted = caseweights = sigma = None
    intercept = score_intercept = 0.0
    rho = None
    if y is not None:
        gamma, score_intercept, rm = _fit_regression(T, y, spec.regression, spec.quantile, spec.rho)
        beta, intercept = original_coefficients(scaler, R, gamma, score_intercept)
        fitted = T @ gamma + score_intercept
        if rm is not None:
            caseweights, sigma, rho = rm.caseweights, rm.sigma_hat, rm.rho
    return ProjectionModel(
        kind="ppdire", W=W, P=P, R=R, T=T, scaler=scaler, gamma=gamma,
        score_intercept=score_intercept, beta=beta, intercept=intercept,
        index_values=values, caseweights=caseweights, residual_scale=sigma, rho=rho,
        y=y, fitted=fitted,
    )


def predict(model, Xnew):
    return model.predict(Xnew)


def transform(model, Xnew):
    return model.transform(Xnew)
