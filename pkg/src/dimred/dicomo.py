"""(Trimmed) moments, co-moments and energy statistics.

These serve both as stand-alone association measures and as projection
indices for :mod:`dimred.ppdire`.  All moment estimators use the 1/n
denominator.

Trimming
--------
Univariate moments drop the ``floor(alpha * n)`` smallest and largest
centered values.  Co-moments drop the ``floor(alpha * n)`` cases with the
largest absolute centered cross-product (ties: lower index dropped first).
The center is always computed on the full, untrimmed sample.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from ._utils import as_matrix, as_vector, check_same_rows
from .errors import DataError, ZeroScaleError

MOMENT_KINDS = ("var", "skew", "kurt")
COMOMENT_KINDS = ("cov", "corr", "coskew", "cokurt")
KINDS = MOMENT_KINDS + COMOMENT_KINDS + ("continuum", "capi")
CAPI_TERMS = 6

# power placement (p on x, q on y) per co-moment option
_POWERS = {
    "cov": {1: (1, 1)},
    "corr": {1: (1, 1)},
    "coskew": {1: (2, 1), 2: (1, 2)},
    "cokurt": {1: (3, 1), 2: (2, 2), 3: (1, 3)},
}


@dataclass(frozen=True)
class MomentSpec:
    kind: str = "var"
    center: str = "mean"
    trim_alpha: float = 0.0
    option: int = 1
    continuum_alpha: float = 1.0
    capi_weights: tuple | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"unknown moment kind {self.kind!r}; choose from {KINDS}")
        if self.center not in ("mean", "median"):
            raise DataError("center must be 'mean' or 'median'")
        if not 0 <= self.trim_alpha < 0.5:
            raise DataError("trim_alpha must lie in [0, 0.5)")
        if self.continuum_alpha < 1:
            raise DataError("continuum_alpha must be >= 1")
        if self.kind in _POWERS and self.option not in _POWERS[self.kind]:
            raise DataError(f"option {self.option} is not valid for {self.kind}")
        if self.capi_weights is not None:
            object.__setattr__(self, "capi_weights", tuple(float(v) for v in self.capi_weights))
            if len(self.capi_weights) != CAPI_TERMS:
                raise DataError(f"capi weights must have length {CAPI_TERMS}")

    @property
    def needs_y(self):
        return self.kind not in MOMENT_KINDS


def _center(x, how):
    return np.median(x) if how == "median" else np.mean(x)


def _trim_sorted(c, alpha):
    k = int(np.floor(alpha * c.size))
    if k == 0:
        return c
    c = np.sort(c)
    return c[k : c.size - k]


def _central_moment(x, order, center="mean", trim_alpha=0.0):
    c = _trim_sorted(x - _center(x, center), trim_alpha)
    if c.size < 2:
        raise DataError(f"only {c.size} observation(s) left after trimming")
    return np.mean(c**order), c


def moment(x, spec=None):
    """Trimmed central moment, skewness or (non-excess) kurtosis of ``x``."""
    spec = spec or MomentSpec()
    x = as_vector(x, "x", min_len=2)
    if spec.kind == "var":
        return float(_central_moment(x, 2, spec.center, spec.trim_alpha)[0])
    if spec.kind not in ("skew", "kurt"):
        raise DataError(f"{spec.kind} is not a univariate moment")
    m2, c = _central_moment(x, 2, spec.center, spec.trim_alpha)
    if m2 <= 0:
        raise ZeroScaleError("zero variance; standardized moment undefined")
    if spec.kind == "skew":
        return float(np.mean(c**3) / m2**1.5)
    return float(np.mean(c**4) / m2**2)


def _trimmed_cases(cx, cy, alpha):
    n = cx.size
    k = int(np.floor(alpha * n))
    if k == 0:
        return np.arange(n)
    # stable sort on -|prod| drops the largest, lower index first among ties
    order = np.argsort(-np.abs(cx * cy), kind="stable")
    return np.sort(order[k:])


def comoment(x, y, spec=None):
    """Trimmed co-moment of ``x`` and ``y``.

    ``spec.option`` picks the power placement: coskew 1 -> (2, 1),
    2 -> (1, 2); cokurt 1 -> (3, 1), 2 -> (2, 2), 3 -> (1, 3).  ``corr``
    divides the covariance by both (trimmed) standard deviations.
    """
    spec = spec or MomentSpec("cov")
    x = as_vector(x, "x", min_len=2)
    y = as_vector(y, "y", min_len=2)
    if x.size != y.size:
        raise DataError(f"length mismatch: {x.size} vs {y.size}")
    if spec.kind not in _POWERS:
        raise DataError(f"{spec.kind} is not a co-moment")
    cx = x - _center(x, spec.center)
    cy = y - _center(y, spec.center)
    keep = _trimmed_cases(cx, cy, spec.trim_alpha)
    if keep.size < 2:
        raise DataError(f"only {keep.size} observation(s) left after trimming")
    cx, cy = cx[keep], cy[keep]
    a, b = _POWERS[spec.kind][spec.option]
    value = np.mean(cx**a * cy**b)
    if spec.kind == "corr":
        sx, sy = np.sqrt(np.mean(cx**2)), np.sqrt(np.mean(cy**2))
        if sx <= 0 or sy <= 0:
            raise ZeroScaleError("degenerate scale for correlation")
        value = value / (sx * sy)
    return float(value)


def standardized_comoment(x, y, kind, option=1, center="mean", trim_alpha=0.0):
    """Co-moment divided by the matching powers of the marginal scales."""
    spec = MomentSpec(kind, center, trim_alpha, option)
    value = comoment(x, y, spec)
    if kind == "corr":
        return value
    a, b = _POWERS[kind][option]
    sx = np.sqrt(moment(x, MomentSpec("var", center, trim_alpha)))
    sy = np.sqrt(moment(y, MomentSpec("var", center, trim_alpha)))
    if sx <= 0 or sy <= 0:
        raise ZeroScaleError("degenerate scale for standardized co-moment")
    return value / (sx**a * sy**b)


def continuum(t, y, alpha=1.0, center="mean", trim_alpha=0.0):
    """Squared continuum association ``cov(t, y)**2 * var(t)**(alpha - 1)``.

    ``alpha = 1`` gives squared covariance (PLS); large ``alpha`` tends to
    variance maximization (PCA).
    """
    if alpha < 1:
        raise DataError("continuum alpha must be >= 1")
    c = comoment(t, y, MomentSpec("cov", center, trim_alpha))
    if alpha == 1:
        return c**2
    v = moment(t, MomentSpec("var", center, trim_alpha))
    return c**2 * v ** (alpha - 1)


def capi_terms(t, y, center="mean", trim_alpha=0.0):
    """Basis of standardized co-moments used by :func:`capi`.

    Order: corr**2, coskew (2,1), coskew (1,2), cokurt (3,1), (2,2), (1,3).
    """
    t = as_vector(t, "x", min_len=2)
    y = as_vector(y, "y", min_len=2)
    if t.size != y.size:
        raise DataError(f"length mismatch: {t.size} vs {y.size}")
    # one centering and trimming pass shared by all six terms; the index is
    # evaluated thousands of times per direction search
    cx = t - _center(t, center)
    cy = y - _center(y, center)
    keep = _trimmed_cases(cx, cy, trim_alpha)
    if keep.size < 2:
        raise DataError(f"only {keep.size} observation(s) left after trimming")
    kx, ky = cx[keep], cy[keep]
    kx_sd, ky_sd = np.sqrt(np.mean(kx**2)), np.sqrt(np.mean(ky**2))
    sx = np.sqrt(_central_moment(t, 2, center, trim_alpha)[0])
    sy = np.sqrt(_central_moment(y, 2, center, trim_alpha)[0])
    if kx_sd <= 0 or ky_sd <= 0 or sx <= 0 or sy <= 0:
        raise ZeroScaleError("degenerate scale for standardized co-moment")
    terms = [(np.mean(kx * ky) / (kx_sd * ky_sd)) ** 2]
    for a, b in ((2, 1), (1, 2), (3, 1), (2, 2), (1, 3)):
        terms.append(np.mean(kx**a * ky**b) / (sx**a * sy**b))
    return np.array(terms, dtype=float)


def capi(t, y, weights=(1, 0, 0, 0, 0, 0), center="mean", trim_alpha=0.0):
    """Co-moment analysis projection index: weighted sum of ``capi_terms``."""
    weights = np.asarray(weights, dtype=float).ravel()
    if weights.size != CAPI_TERMS:
        raise DataError(f"capi weights must have length {CAPI_TERMS}, got {weights.size}")
    if not np.any(weights):
        return 0.0
    return float(weights @ capi_terms(t, y, center, trim_alpha))


# ---------------------------------------------------------------------------
# energy statistics (V-statistics)
# ---------------------------------------------------------------------------

def _as_sample(X, name):
    return as_matrix(X, name, min_rows=2)


def double_center(D):
    """Double-center a square matrix: a_jk - a_j. - a_.k + a_.."""
    row = D.mean(axis=1, keepdims=True)
    col = D.mean(axis=0, keepdims=True)
    return D - row - col + D.mean()


def _centered_distances(X):
    return double_center(cdist(X, X))


def dcov_sq(X, Y):
    """Squared distance covariance, (1/n^2) sum_jk A_jk B_jk."""
    X = _as_sample(X, "X")
    Y = _as_sample(Y, "Y")
    check_same_rows(X, Y, ("X", "Y"))
    A = _centered_distances(X)
    B = _centered_distances(Y)
    return float(np.mean(A * B))


def dcov(X, Y):
    return float(np.sqrt(max(dcov_sq(X, Y), 0.0)))


def dvar_sq(X):
    X = _as_sample(X, "X")
    A = _centered_distances(X)
    return float(np.mean(A * A))


def dvar(X):
    return float(np.sqrt(dvar_sq(X)))


def dcor(X, Y):
    """Distance correlation in [0, 1]; 0 when either side is constant."""
    X = _as_sample(X, "X")
    Y = _as_sample(Y, "Y")
    check_same_rows(X, Y, ("X", "Y"))
    A = _centered_distances(X)
    B = _centered_distances(Y)
    denom = np.sqrt(np.mean(A * A) * np.mean(B * B))
    if denom <= 0:
        return 0.0
    r2 = np.mean(A * B) / denom
    return float(np.sqrt(min(max(r2, 0.0), 1.0)))


def mdd(y, X):
    """Squared martingale difference divergence of ``y`` given ``X``.

    The y side uses half squared differences, whose double-centered form is
    ``-(y_j - ybar)(y_k - ybar)``.  May be negative at rounding level.
    """
    y = _as_sample(y, "y")
    X = _as_sample(X, "X")
    check_same_rows(y, X, ("y", "X"))
    A = _centered_distances(X)
    B = double_center(0.5 * cdist(y, y, "sqeuclidean"))
    return float(np.mean(A * B))


def mdcorr(y, X):
    """Martingale difference correlation, sqrt(MDD^2 / sqrt(var(y)^2 dvar^2(X)))."""
    y = _as_sample(y, "y")
    X = _as_sample(X, "X")
    check_same_rows(y, X, ("y", "X"))
    vy = np.sum(np.var(y, axis=0))
    denom = np.sqrt(vy**2 * dvar_sq(X))
    if denom <= 0:
        return 0.0
    return float(np.sqrt(max(mdd(y, X), 0.0) / denom))
