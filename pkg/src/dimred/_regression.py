"""Least squares and quantile fits with an intercept, used by several modules."""

import numpy as np

from .errors import RankError


def _design(T):
    return np.column_stack([np.ones(T.shape[0]), T])


def _solve(A, b, what="design"):
    coef, _, rank, _ = np.linalg.lstsq(A, b, rcond=None)
    if rank < A.shape[1]:
        raise RankError(f"{what} matrix is rank deficient (rank {rank} < {A.shape[1]})")
    return coef


def wls(T, y, weights=None):
    """Weighted least squares of ``y`` on ``[1, T]``; returns (gamma, intercept)."""
    T = np.asarray(T, dtype=float)
    A = _design(T)
    if weights is None:
        coef = _solve(A, y)
    else:
        sw = np.sqrt(np.asarray(weights, dtype=float))
        coef = _solve(A * sw[:, None], y * sw, "weighted design")
    return coef[1:], float(coef[0])


def pinball_loss(r, tau):
    return np.sum(r * (tau - (r < 0)))


def quantile_fit(T, y, tau=0.5, eps=1e-6, max_iter=200, tol=1e-10):
    """Quantile regression by IRLS on an eps-smoothed pinball loss.

    Starts from least squares; each step solves a weighted least squares
    with weights ``tau_i / max(|r_i|, eps)`` where ``tau_i`` is ``tau`` for
    nonnegative residuals and ``1 - tau`` otherwise.
    """
    T = np.asarray(T, dtype=float)
    A = _design(T)
    coef = _solve(A, y)
    for _ in range(max_iter):
        r = y - A @ coef
        w = np.where(r >= 0, tau, 1 - tau) / np.maximum(np.abs(r), eps)
        sw = np.sqrt(w)
        new = _solve(A * sw[:, None], y * sw, "weighted design")
        done = np.linalg.norm(new - coef) <= tol * (1 + np.linalg.norm(coef))
        coef = new
        if done:
            break
    return coef[1:], float(coef[0])
