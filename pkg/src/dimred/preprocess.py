"""Classical and robust standardization, and generalized spatial signs.

Location estimators: column mean, column median, spatial (L1) median and a
k-step least trimmed squares center.  Scale estimators: standard deviation,
consistency-corrected MAD and the tau scale.  ``fit_scaler`` combines one
of each into a reversible columnwise z-score transform.

Spatial sign transforms map each centered row ``x - mu`` to
``(x - mu) * xi(||x - mu||)`` for a radial function ``xi``.
"""

from dataclasses import dataclass, field
from math import ceil

import numpy as np
from scipy.stats import norm

from ._utils import MAD_CONSTANT, as_matrix, as_vector
from .errors import DataError, ZeroScaleError

CENTER_METHODS = ("mean", "colmedian", "spatial_median", "kstep_lts", "none")
SCALE_METHODS = ("std", "mad", "tau", "none")
RADIAL_FUNCTIONS = ("ss", "quadratic_radial", "ball", "shell", "winsor", "lr")
_TWO_CUTOFF = ("shell", "lr")


@dataclass(frozen=True)
class ScalerSpec:
    center_method: str = "mean"
    scale_method: str = "std"
    ddof: int = 0

    def __post_init__(self):
        if self.center_method not in CENTER_METHODS:
            raise DataError(f"unknown center_method {self.center_method!r}; choose from {CENTER_METHODS}")
        if self.scale_method not in SCALE_METHODS:
            raise DataError(f"unknown scale_method {self.scale_method!r}; choose from {SCALE_METHODS}")
        if self.ddof not in (0, 1):
            raise DataError("ddof must be 0 (population) or 1 (sample)")


@dataclass(frozen=True)
class FittedScaler:
    """Learned location ``mu`` and scale ``sigma`` (both in data units)."""

    mu: np.ndarray
    sigma: np.ndarray
    spec: ScalerSpec = field(default_factory=ScalerSpec)

    def __post_init__(self):
        mu = np.ascontiguousarray(self.mu, dtype=float)
        sigma = np.ascontiguousarray(self.sigma, dtype=float)
        if mu.shape != sigma.shape or mu.ndim != 1:
            raise DataError("mu and sigma must be vectors of equal length")
        if np.any(sigma <= 0):
            raise ZeroScaleError("scale must be strictly positive", column=int(np.argmin(sigma)))
        mu.flags.writeable = False
        sigma.flags.writeable = False
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def n_features(self):
        return self.mu.size

    def _check(self, X):
        X = as_matrix(X)
        if X.shape[1] != self.n_features:
            raise DataError(f"expected {self.n_features} columns, got {X.shape[1]}")
        return X

    def transform(self, X):
        X = self._check(X)
        return (X - self.mu) / self.sigma

    def inverse_transform(self, Z):
        Z = self._check(Z)
        return Z * self.sigma + self.mu


# ---------------------------------------------------------------------------
# location
# ---------------------------------------------------------------------------

def spatial_median(X, tol=1e-9, max_iter=1000):
    """Spatial (L1) median by Weiszfeld iterations.

    Uses the Vardi-Zhang modification when the iterate lands on a data point:
    coinciding points are skipped in the Weiszfeld map and the step is
    shrunk by their count, which keeps the objective non-increasing.
    Iteration stops when the step norm drops below ``tol * (1 + ||m||)``.
    """
    X = as_matrix(X)
    m = np.median(X, axis=0)
    for _ in range(max_iter):
        diff = X - m
        d = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        at = d <= 1e-12 * (1.0 + np.linalg.norm(m))
        if np.all(at):
            return m
        inv = 1.0 / d[~at]
        T = (inv @ X[~at]) / inv.sum()
        eta = int(at.sum())
        if eta:
            r = np.linalg.norm(inv @ diff[~at])
            gamma = min(1.0, eta / r) if r > 0 else 1.0
            m_new = (1.0 - gamma) * T + gamma * m
        else:
            m_new = T
        step = np.linalg.norm(m_new - m)
        m = m_new
        if step <= tol * (1.0 + np.linalg.norm(m)):
            break
    return m


def kstep_lts(X, k=3):
    """k-step least trimmed squares center.

    Starts at the column median and recenters ``k`` times on the mean of the
    ``h = ceil((n + p + 1) / 2)`` rows closest (Euclidean) to the current
    center.
    """
    X = as_matrix(X)
    n, p = X.shape
    h = min(n, ceil((n + p + 1) / 2))
    m = np.median(X, axis=0)
    for _ in range(k):
        d = np.sum((X - m) ** 2, axis=1)
        keep = np.argsort(d, kind="stable")[:h]
        m = X[keep].mean(axis=0)
    return m


def locate(X, method="mean"):
    """Location vector of the columns of ``X`` (length p)."""
    X = as_matrix(X)
    if method == "mean":
        return X.mean(axis=0)
    if method == "colmedian":
        return np.median(X, axis=0)
    if method == "spatial_median":
        return spatial_median(X)
    if method == "kstep_lts":
        return kstep_lts(X)
    if method == "none":
        return np.zeros(X.shape[1])
    raise DataError(f"unknown location method {method!r}")


# ---------------------------------------------------------------------------
# scale
# ---------------------------------------------------------------------------

def _truncated_square_mean(c):
    # E[min(Z^2, c^2)] for Z ~ N(0, 1)
    return (2 * norm.cdf(c) - 1) - 2 * c * norm.pdf(c) + 2 * c**2 * norm.sf(c)


def tau_scale(x, c1=4.5, c2=3.0):
    """Two-stage tau scale (Maronna-Zamar form).

    Bisquare weights with constant ``c1`` give a weighted location; the scale
    is the root of the mean truncated square ``min(u**2, c2**2)`` of the
    MAD-standardized deviations about it, divided by its normal expectation.
    """
    x = as_vector(x, "x", min_len=2)
    mu0 = np.median(x)
    s0 = MAD_CONSTANT * np.median(np.abs(x - mu0))
    if s0 <= 0:
        raise ZeroScaleError("tau scale undefined: MAD is zero")
    u = (x - mu0) / s0
    w = (1 - np.clip(u / c1, -1.0, 1.0) ** 2) ** 2
    mu = np.sum(w * x) / np.sum(w)
    v = np.clip((x - mu) / s0, -c2, c2) ** 2
    return float(s0 * np.sqrt(np.mean(v) / _truncated_square_mean(c2)))


def scale_est(x, method="std", ddof=0):
    """Scale of a vector; raises ``ZeroScaleError`` on degenerate input."""
    x = as_vector(x, "x", min_len=2)
    if method == "none":
        return 1.0
    if method == "std":
        s = float(np.std(x, ddof=ddof))
    elif method == "mad":
        s = float(MAD_CONSTANT * np.median(np.abs(x - np.median(x))))
    elif method == "tau":
        s = tau_scale(x)
    else:
        raise DataError(f"unknown scale method {method!r}")
    if not s > 0:
        raise ZeroScaleError(f"zero {method} scale")
    return s


def fit_scaler(X, spec=None):
    """Estimate columnwise location and scale of ``X``.

    Raises ``ZeroScaleError`` with the offending column index if a column
    has zero scale.
    """
    spec = spec or ScalerSpec()
    X = as_matrix(X)
    mu = locate(X, spec.center_method)
    if spec.scale_method == "none":
        sigma = np.ones(X.shape[1])
    else:
        if X.shape[0] < 2:
            raise DataError("scaling needs at least two rows")
        sigma = np.empty(X.shape[1])
        for j in range(X.shape[1]):
            try:
                sigma[j] = scale_est(X[:, j], spec.scale_method, spec.ddof)
            except ZeroScaleError as exc:
                raise ZeroScaleError(f"column {j} has zero {spec.scale_method} scale", column=j) from exc
    return FittedScaler(mu, sigma, spec)


def transform(scaler, X):
    return scaler.transform(X)


def inverse_transform(scaler, Z):
    return scaler.inverse_transform(Z)


# ---------------------------------------------------------------------------
# generalized spatial signs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SignSpec:
    """Radial function choice for the generalized spatial sign.

    ``cutoffs`` are radii in (centered) data units.  ``None`` selects the
    defaults: the 0.95 quantile of the row norms for ``r``/``r1`` and the
    0.99 quantile for ``r2``.
    """

    radial_fn: str = "ss"
    cutoffs: tuple | None = None
    centering: ScalerSpec = field(default_factory=lambda: ScalerSpec("spatial_median", "none"))

    def __post_init__(self):
        if self.radial_fn not in RADIAL_FUNCTIONS:
            raise DataError(f"unknown radial function {self.radial_fn!r}")
        if self.cutoffs is None:
            return
        cut = tuple(float(c) for c in np.atleast_1d(self.cutoffs))
        object.__setattr__(self, "cutoffs", cut)
        if any(c < 0 or not np.isfinite(c) for c in cut):
            raise DataError("cutoffs must be finite and nonnegative")
        if self.radial_fn in _TWO_CUTOFF:
            if len(cut) != 2 or not cut[0] < cut[1]:
                raise DataError(f"{self.radial_fn} needs two cutoffs r1 < r2")
        elif len(cut) > 1:
            raise DataError(f"{self.radial_fn} takes at most one cutoff")


def radial_weight(t, radial_fn, cutoffs=()):
    """Evaluate the radial function xi at norms ``t > 0``."""
    t = np.asarray(t, dtype=float)
    if radial_fn == "ss":
        return 1.0 / t
    r = cutoffs[0]
    if radial_fn == "quadratic_radial":
        return np.minimum(1.0, r**2 / t**2)
    if radial_fn == "ball":
        return np.where(t <= r, 1.0, 0.0)
    if radial_fn == "winsor":
        return np.minimum(1.0, r / t)
    r1, r2 = cutoffs
    if radial_fn == "shell":
        return np.where(t <= r1, 1.0, np.where(t <= r2, r1 / t, 0.0))
    if radial_fn == "lr":
        return np.where(t <= r1, 1.0, np.where(t <= r2, (r2 - t) / (r2 - r1), 0.0))
    raise DataError(f"unknown radial function {radial_fn!r}")


@dataclass(frozen=True)
class FittedSignTransform:
    scaler: FittedScaler
    radial_fn: str
    cutoffs: tuple

    def transform(self, X):
        C = self.scaler.transform(X)
        t = np.linalg.norm(C, axis=1)
        xi = np.zeros_like(t)
        nz = t > 0
        xi[nz] = radial_weight(t[nz], self.radial_fn, self.cutoffs)
        return C * xi[:, None]


def fit_spatial_sign(X, spec=None):
    spec = spec or SignSpec()
    X = as_matrix(X)
    scaler = fit_scaler(X, spec.centering)
    cutoffs = spec.cutoffs
    if cutoffs is None:
        if spec.radial_fn == "ss":
            cutoffs = ()
        else:
            t = np.linalg.norm(scaler.transform(X), axis=1)
            q95, q99 = np.quantile(t, [0.95, 0.99])
            cutoffs = (q95, q99) if spec.radial_fn in _TWO_CUTOFF else (q95,)
            if spec.radial_fn in _TWO_CUTOFF and not q95 < q99:
                raise DataError("default shell/lr cutoffs coincide; pass explicit cutoffs")
    return FittedSignTransform(scaler, spec.radial_fn, tuple(float(c) for c in cutoffs))


def gen_spatial_sign(X, spec=None):
    """Generalized spatial sign transform of the rows of ``X``."""
    return fit_spatial_sign(X, spec).transform(X)
