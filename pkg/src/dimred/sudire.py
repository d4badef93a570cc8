"""Sufficient dimension reduction.

All methods work on whitened predictors ``Z = (X - xbar) S`` with
``S = Sigma^{-1/2}`` (population covariance).  A basis ``eta`` found in
whitened coordinates maps back to ``B = S eta``, so ``B^T Sigma B = I``
whenever ``eta`` is orthonormal.

Slicing and directional methods (SIR, SAVE, DR, PHD) take the leading
eigenvectors of a candidate matrix; IHT orthonormalizes a Krylov sequence;
``dcov_sdr``/``mdd_sdr`` maximize a dependence measure between ``Z Q`` and
``y`` over orthonormal ``Q``, warm-started from the best of SIR, SAVE and
DR under that measure.
"""

from dataclasses import dataclass, field
from typing import Callable, Union
import warnings

import numpy as np
from scipy.spatial.distance import cdist

from ._regression import wls
from ._utils import as_matrix, as_vector, check_same_rows
from .dicomo import double_center
from .errors import DataError, NumericalError

SLICING = ("sir", "save", "dr", "phd")
METHODS = SLICING + ("iht", "dcov_sdr", "mdd_sdr", "custom")
WARM_STARTS = ("sir", "save", "dr")


@dataclass(frozen=True)
class SDRSpec:
    """Settings for :func:`fit_sdr`.

    ``measure`` is the dependence function ``f(projected, y) -> float`` used
    when ``method == "custom"``; it should be invariant to row permutations.
    """

    method: str = "sir"
    h: int = 1
    n_slices: int = 10
    max_iter: int = 500
    tol: float = 1e-5
    measure: Union[Callable, None] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise DataError(f"unknown SDR method {self.method!r}; choose from {METHODS}")
        if self.h < 1:
            raise DataError("h must be >= 1")
        if self.n_slices < 2:
            raise DataError("n_slices must be >= 2")
        if self.method == "custom" and not callable(self.measure):
            raise DataError("method 'custom' needs a callable measure")


@dataclass(frozen=True)
class Whitening:
    mean: np.ndarray
    cov: np.ndarray
    root_inv: np.ndarray

    def apply(self, X):
        return (X - self.mean) @ self.root_inv


def whiten(X):
    """Center and whiten ``X``; raises on ``p >= n`` or singular covariance."""
    X = as_matrix(X)
    n, p = X.shape
    if p >= n:
        raise DataError(f"whitening needs n > p (n={n}, p={p})")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / n
    vals, vecs = np.linalg.eigh(cov)
    if vals[0] <= 1e-12 * max(vals[-1], 1e-300):
        raise NumericalError("sample covariance is singular; whitening failed")
    root_inv = (vecs / np.sqrt(vals)) @ vecs.T
    root_inv = 0.5 * (root_inv + root_inv.T)
    return Whitening(mean, cov, root_inv)


def _slices(y, n_slices):
    n = y.size
    if n_slices > n:
        raise DataError(f"n_slices={n_slices} exceeds n={n}")
    groups = np.array_split(np.argsort(y, kind="stable"), n_slices)
    if min(g.size for g in groups) < 2:
        raise DataError("a slice has fewer than 2 observations; use fewer slices")
    return groups


def _slice_moments(Z, y, n_slices):
    n = Z.shape[0]
    out = []
    for g in _slices(y, n_slices):
        Zs = Z[g]
        m = Zs.mean(axis=0)
        C = Zs - m
        out.append((g.size / n, m, C.T @ C / g.size))
    return out


def _kernel_whitened(Z, y, method, n_slices=10):
    n, p = Z.shape
    I = np.eye(p)
    if method == "phd":
        M = (Z * (y - y.mean())[:, None]).T @ Z / n
    else:
        moments = _slice_moments(Z, y, n_slices)
        if method == "sir":
            M = sum(f * np.outer(m, m) for f, m, _ in moments)
        elif method == "save":
            M = sum(f * (I - V) @ (I - V) for f, _, V in moments)
        elif method == "dr":
            sir = sum(f * np.outer(m, m) for f, m, _ in moments)
            first = sum(f * (V + np.outer(m, m) - I) @ (V + np.outer(m, m) - I) for f, m, V in moments)
            trace = sum(f * (m @ m) for f, m, _ in moments)
            M = 2 * first + 2 * sir @ sir + 2 * trace * sir
        else:
            raise DataError(f"{method!r} has no slicing kernel")
    return 0.5 * (M + M.T)


def slice_kernel(X, y, method="sir", n_slices=10):
    """Candidate matrix of a slicing/directional method, in whitened coordinates.

    SIR: sum_s f_s m_s m_s^T over slice means; SAVE: sum_s f_s (I - V_s)^2;
    DR: 2 E[(V_s + m_s m_s^T - I)^2] + 2 K^2 + 2 E[m_s^T m_s] K with K the SIR
    kernel; PHD: (1/n) sum_i (y_i - ybar) z_i z_i^T.  Slices have equal
    frequency on the stably sorted response.
    """
    X = as_matrix(X)
    y = as_vector(y)
    check_same_rows(X, y)
    Z = whiten(X).apply(X)
    return _kernel_whitened(Z, y, method, n_slices)


def _ranked_eig(M, method):
    vals, vecs = np.linalg.eigh(M)
    key = np.abs(vals) if method == "phd" else vals
    order = np.argsort(-key, kind="stable")
    return vals[order], vecs[:, order]


def iht_krylov(s, M, h, rtol=1e-10):
    """Orthonormal basis of span{s, M s, M^2 s, ...}, at most ``h`` columns.

    Built by Arnoldi with re-orthogonalization.  Returns ``(Q, truncated)``;
    ``truncated`` is True when the Krylov space has dimension below ``h``.
    """
    s = np.asarray(s, dtype=float)
    p = s.size
    ns = np.linalg.norm(s)
    if ns == 0:
        return np.zeros((p, 0)), True
    scale = max(np.linalg.norm(M, 2), 1.0)
    Q = [s / ns]
    while len(Q) < min(h, p):
        v = M @ Q[-1]
        for _ in range(2):
            for q in Q:
                v = v - (q @ v) * q
        nv = np.linalg.norm(v)
        if nv <= rtol * scale:
            break
        Q.append(v / nv)
    Q = np.column_stack(Q)
    return Q, Q.shape[1] < h


def iht_directions(X, y, h):
    """Iterative Hessian transformation directions (whitened coordinates).

    Orthonormalizes ``{s, M s, ..., M^{p-1} s}`` with ``s = cov(Z, y)`` and
    ``M`` the PHD kernel, and keeps the first ``h`` columns.  Returns
    ``(directions, truncated)``; a rank-deficient Krylov block yields fewer
    columns, ``truncated=True`` and a warning.
    """
    X = as_matrix(X)
    y = as_vector(y)
    check_same_rows(X, y)
    Z = whiten(X).apply(X)
    return _iht_whitened(Z, y, h)


def _iht_whitened(Z, y, h):
    n = Z.shape[0]
    s = Z.T @ (y - y.mean()) / n
    M = _kernel_whitened(Z, y, "phd")
    Q, truncated = iht_krylov(s, M, h)
    if truncated:
        warnings.warn(f"IHT Krylov block has rank {Q.shape[1]} < h={h}; directions truncated",
                      RuntimeWarning, stacklevel=3)
    return Q, truncated


# ---------------------------------------------------------------------------
# dependence maximization
# ---------------------------------------------------------------------------

class _Criterion:
    """Dependence between ``Z Q`` and ``y``; the y side is precomputed."""

    def __init__(self, Z, y, measure):
        self.Z = Z
        self.y = y
        self.name = measure if isinstance(measure, str) else "custom"
        n = Z.shape[0]
        yy = y.reshape(n, -1)
        if measure == "dcov":
            self.B = double_center(cdist(yy, yy))
        elif measure == "mdd":
            self.B = double_center(0.5 * cdist(yy, yy, "sqeuclidean"))
        elif callable(measure):
            self.fn = measure
        else:
            raise DataError(f"unknown dependence measure {measure!r}")

    def __call__(self, Q):
        P = self.Z @ Q
        if self.name == "custom":
            v = float(self.fn(P, self.y))
        else:
            # B is double centered, so A need not be
            v = float(np.mean(cdist(P, P) * self.B))
        if not np.isfinite(v):
            raise NumericalError("dependence measure returned a non-finite value")
        return v


@dataclass(frozen=True)
class DependenceResult:
    Q: np.ndarray
    value: float
    converged: bool
    n_iter: int
    gradient_norm: float


def _qr_retract(A):
    Q, R = np.linalg.qr(A)
    d = np.sign(np.diag(R))
    d[d == 0] = 1.0
    return Q * d


def _stiefel_gradient(F, Q, h_step):
    G = np.empty_like(Q)
    for i in range(Q.shape[0]):
        for j in range(Q.shape[1]):
            E = np.zeros_like(Q)
            E[i, j] = h_step
            G[i, j] = (F(Q + E) - F(Q - E)) / (2 * h_step)
    S = Q.T @ G
    return G - Q @ (0.5 * (S + S.T))


def maximize_dependence(Z, y, h, measure="dcov", start=None, max_iter=500, tol=1e-5, step=1e-6,
                        kink_tol=1e-3):
    """Maximize ``measure(Z Q, y)`` over p x h matrices with orthonormal columns.

    Gradient ascent on the Stiefel manifold: central-difference Euclidean
    gradient, projection onto the tangent space, QR retraction and Armijo
    backtracking (initial step 1, factor 0.5, c = 1e-4).

    Distance-based criteria are only piecewise smooth (pairwise distances
    have kinks where two projected cases coincide), so the projected
    gradient need not vanish at the maximum.  The run counts as converged
    when either

    * the projected gradient norm is at most ``tol * max(1, |f|)``, or
    * three consecutive steps move the subspace by less than ``tol`` while
      gaining less than ``tol * max(1, |f|)``, or
    * no Armijo step exists and the gradient norm is at most
      ``kink_tol * max(1, |f|)``.

    Otherwise the best iterate is returned with ``converged=False``.

    ``measure`` is ``"dcov"`` (squared distance covariance), ``"mdd"``
    (squared martingale difference divergence) or a callable
    ``f(projected, y)``.
    """
    Z = as_matrix(Z, "Z")
    y = as_vector(y)
    check_same_rows(Z, y, ("Z", "y"))
    n, p = Z.shape
    if not 1 <= h <= p:
        raise DataError(f"h={h} must lie in [1, p={p}]")
    F = _Criterion(Z, y, measure)
    Q = np.eye(p)[:, :h] if start is None else _qr_retract(np.asarray(start, dtype=float))
    f = F(Q)
    gnorm = np.inf
    small = 0
    for it in range(1, max_iter + 1):
        xi = _stiefel_gradient(F, Q, step)
        gnorm = float(np.linalg.norm(xi))
        scale = max(1.0, abs(f))
        if gnorm <= tol * scale:
            return DependenceResult(Q, f, True, it - 1, gnorm)
        a = 1.0
        for _ in range(50):
            cand = _qr_retract(Q + a * xi)
            fc = F(cand)
            if fc >= f + 1e-4 * a * gnorm**2:
                break
            a *= 0.5
        else:
            return DependenceResult(Q, f, gnorm <= kink_tol * scale, it, gnorm)
        move = np.linalg.norm(cand @ cand.T - Q @ Q.T)
        small = small + 1 if move < tol and fc - f < tol * scale else 0
        Q, f = cand, fc
        if small >= 3:
            return DependenceResult(Q, f, True, it, gnorm)
    return DependenceResult(Q, f, False, max_iter, gnorm)


# ---------------------------------------------------------------------------
# estimator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SDRModel:
    """Estimated central subspace basis ``B`` (original coordinates)."""

    method: str
    B: np.ndarray
    whitening: Whitening
    criterion: float
    eigenvalues: np.ndarray | None = None
    warm_start: str | None = None
    warm_start_criteria: dict = field(default_factory=dict)
    converged: bool = True
    truncated: bool = False
    n_iter: int = 0
    gamma: np.ndarray | None = None
    intercept: float = 0.0
    y: np.ndarray | None = None
    fitted: np.ndarray | None = None
    T: np.ndarray | None = None

    @property
    def h(self):
        return self.B.shape[1]

    @property
    def n_features(self):
        return self.B.shape[0]

    def transform(self, X):
        X = as_matrix(X, "Xnew")
        if X.shape[1] != self.n_features:
            raise DataError(f"model expects {self.n_features} columns, got {X.shape[1]}")
        return (X - self.whitening.mean) @ self.B

    def predict(self, X):
        """Least squares prediction of y from the reduced predictors."""
        return self.transform(X) @ self.gamma + self.intercept

    def constraint_residual(self):
        """Frobenius norm of ``B^T Sigma B - I``."""
        S = self.B.T @ self.whitening.cov @ self.B
        return float(np.linalg.norm(S - np.eye(self.h)))


def _measure_for(spec):
    return {"dcov_sdr": "dcov", "mdd_sdr": "mdd"}.get(spec.method, spec.measure)


def fit_sdr(X, y, spec=None):
    """Estimate a basis of the central subspace of ``y`` given ``X``."""
    spec = spec or SDRSpec()
    X = as_matrix(X)
    y = as_vector(y)
    check_same_rows(X, y)
    n, p = X.shape
    if spec.h > p:
        raise DataError(f"h={spec.h} exceeds p={p}")
    wh = whiten(X)
    Z = wh.apply(X)
    eigenvalues = None
    warm = None
    warm_criteria = {}
    converged, truncated, n_iter = True, False, 0

    if spec.method in SLICING:
        M = _kernel_whitened(Z, y, spec.method, spec.n_slices)
        eigenvalues, vecs = _ranked_eig(M, spec.method)
        eta = vecs[:, : spec.h]
        criterion = float(np.sum(eigenvalues[: spec.h]))
    elif spec.method == "iht":
        eta, truncated = _iht_whitened(Z, y, spec.h)
        criterion = float("nan")
    else:
        F = _Criterion(Z, y, _measure_for(spec))
        starts = {}
        for m in WARM_STARTS:
            _, vecs = _ranked_eig(_kernel_whitened(Z, y, m, spec.n_slices), m)
            starts[m] = vecs[:, : spec.h]
            warm_criteria[m] = F(starts[m])
        warm = max(WARM_STARTS, key=lambda m: warm_criteria[m])
        res = maximize_dependence(Z, y, spec.h, _measure_for(spec), starts[warm],
                                  spec.max_iter, spec.tol)
        eta, criterion = res.Q, res.value
        converged, n_iter = res.converged, res.n_iter

    B = wh.root_inv @ eta
    T = (X - wh.mean) @ B
    gamma, intercept = wls(T, y)
    fitted = T @ gamma + intercept
    return SDRModel(
        method=spec.method, B=B, whitening=wh, criterion=criterion, eigenvalues=eigenvalues,
        warm_start=warm, warm_start_criteria=warm_criteria, converged=converged,
        truncated=truncated, n_iter=n_iter, gamma=gamma, intercept=intercept, y=y, fitted=fitted, T=T,
    )


def estimate_dimension(X, y, method="dr", n_slices=10, penalty=0.5):
    """Structural dimension from the kernel spectrum.

    Maximizes ``G(h) = sum_{i<=h} lambda_i - penalty * h * log(n) / sqrt(n)``
    over ``h = 1..p``, where ``lambda`` is the kernel spectrum in decreasing
    order (absolute values for PHD) divided by its sum.  The normalization
    makes the rule free of the kernel's constant factors, which differ
    between methods.  Ties go to the smaller ``h``; a zero kernel gives 1.
    For pure-noise ``y`` the normalized spectrum is nearly flat, so every
    term with ``1/p > penalty * log(n) / sqrt(n)`` is kept and the answer
    is close to ``p``.
    """
    if method not in SLICING:
        raise DataError(f"dimension estimation needs a slicing/directional method, got {method!r}")
    X = as_matrix(X)
    y = as_vector(y)
    check_same_rows(X, y)
    n = X.shape[0]
    M = slice_kernel(X, y, method, n_slices)
    vals, _ = _ranked_eig(M, method)
    lam = np.abs(vals) if method == "phd" else np.clip(vals, 0.0, None)
    total = lam.sum()
    if not total > 0:
        return 1
    lam = lam / total
    h = np.arange(1, lam.size + 1)
    G = np.cumsum(lam) - penalty * h * np.log(n) / np.sqrt(n)
    return int(np.argmax(G)) + 1
