import numpy as np

from .errors import DataError

MAD_CONSTANT = 1.4826


def as_matrix(X, name="X", min_rows=1):
    """Return ``X`` as a finite, C-ordered 2-D float array (vectors become one column).

    A fixed memory layout keeps BLAS rounding, and hence predictions,
    identical however the caller sliced its data.
    """
    X = np.ascontiguousarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DataError(f"{name} must be 1-D or 2-D, got {X.ndim} dimensions")
    if X.shape[0] < min_rows or X.shape[1] == 0:
        raise DataError(f"{name} is empty or has fewer than {min_rows} rows")
    if not np.all(np.isfinite(X)):
        i, j = np.argwhere(~np.isfinite(X))[0]
        raise DataError(f"{name} has a non-finite entry at row {i}, column {j}")
    return X


def as_vector(x, name="y", min_len=1):
    x = np.ascontiguousarray(x, dtype=float)
    if x.ndim == 2 and 1 in x.shape:
        x = x.ravel()
    if x.ndim != 1:
        raise DataError(f"{name} must be a vector")
    if x.size < min_len:
        raise DataError(f"{name} needs at least {min_len} entries, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DataError(f"{name} has a non-finite entry at position {int(np.argmax(~np.isfinite(x)))}")
    return x


def check_same_rows(a, b, names=("X", "y")):
    if a.shape[0] != b.shape[0]:
        raise DataError(f"{names[0]} has {a.shape[0]} rows but {names[1]} has {b.shape[0]}")


def mad(x, center=None):
    """Consistency-corrected median absolute deviation (no zero check)."""
    x = np.asarray(x, dtype=float)
    if center is None:
        center = np.median(x)
    return MAD_CONSTANT * np.median(np.abs(x - center))


def sign_normalize(W):
    """Flip columns so each one's largest-magnitude entry is positive."""
    W = np.array(W, dtype=float, copy=True)
    for j in range(W.shape[1]):
        k = np.argmax(np.abs(W[:, j]))
        if W[k, j] < 0:
            W[:, j] = -W[:, j]
    return W


def trace_correlation(A, B):
    """trace(P_A P_B)/h for two p x h bases (columns need not be orthonormal)."""
    qa, _ = np.linalg.qr(np.asarray(A, dtype=float))
    qb, _ = np.linalg.qr(np.asarray(B, dtype=float))
    h = qa.shape[1]
    return float(np.sum((qa.T @ qb) ** 2) / h)


def angle_between(u, v):
    """Angle in [0, pi/2] between the lines spanned by ``u`` and ``v``."""
    u = np.asarray(u, dtype=float) / np.linalg.norm(u)
    v = np.asarray(v, dtype=float) / np.linalg.norm(v)
    c = float(u @ v)
    return float(np.arctan2(np.linalg.norm(u - c * v), abs(c)))
