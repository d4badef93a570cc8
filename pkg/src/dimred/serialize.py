"""JSON model artifacts.

An artifact is a single JSON object with a fixed key order.  Floats are
written by ``json`` as the shortest decimal string that round-trips, so
loading reproduces every array bit for bit and a loaded model predicts
exactly what the in-memory model predicted.  Non-finite diagnostics (for
example an undefined criterion) are stored as ``null``.
"""

import json
import math

import numpy as np

from .errors import DataError
from .models import ProjectionModel
from .preprocess import FittedScaler, ScalerSpec
from .sprm import RhoSpec, RMModel
from .sudire import SDRModel, Whitening

SCHEMA_VERSION = 1

_PROJECTION_ARRAYS = ("W", "P", "R", "T", "gamma", "beta", "index_values", "caseweights",
                      "score_center", "y", "fitted")
_PROJECTION_SCALARS = ("score_intercept", "intercept", "residual_scale", "score_scale")


def _list(a):
    return None if a is None else np.asarray(a, dtype=float).tolist()


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _array(v, ndim=1):
    if v is None:
        return None
    a = np.array(v, dtype=float)
    if ndim == 2 and a.ndim == 1 and a.size == 0:
        a = a.reshape(0, 0)
    return a


def _scaler_dict(s):
    return {
        "mu": _list(s.mu),
        "sigma": _list(s.sigma),
        "spec": {"center_method": s.spec.center_method, "scale_method": s.spec.scale_method,
                 "ddof": s.spec.ddof},
    }


def _scaler_from(d):
    return FittedScaler(np.array(d["mu"], dtype=float), np.array(d["sigma"], dtype=float),
                        ScalerSpec(**d["spec"]))


def _rho_from(d):
    return None if d is None else RhoSpec(**d)


def model_arrays(model, include_scores=True):
    """Estimator kind, arrays, scalars and diagnostics of a fitted model."""
    if isinstance(model, ProjectionModel):
        arrays = {k: _list(getattr(model, k)) for k in _PROJECTION_ARRAYS}
        if not include_scores:
            arrays["T"] = None
        arrays["active"] = None if model.active is None else model.active.tolist()
        scalars = {k: _num(getattr(model, k)) for k in _PROJECTION_SCALARS}
        extra = {
            "scaler": _scaler_dict(model.scaler),
            "rho": None if model.rho is None else model.rho.to_dict(),
        }
        diagnostics = {
            "n_iter": int(model.n_iter),
            "converged": bool(model.converged),
            "truncated": bool(model.truncated),
            "n_components": int(model.n_components),
            "info": model.info,
        }
        return model.kind, arrays, scalars, extra, diagnostics
    if isinstance(model, RMModel):
        arrays = {"beta": _list(model.beta), "caseweights": _list(model.caseweights)}
        scalars = {"intercept": _num(model.intercept), "sigma_hat": _num(model.sigma_hat)}
        extra = {"rho": model.rho.to_dict()}
        diagnostics = {"n_iter": int(model.n_iter), "converged": bool(model.converged)}
        return "rm", arrays, scalars, extra, diagnostics
    if isinstance(model, SDRModel):
        arrays = {
            "B": _list(model.B),
            "T": _list(model.T) if include_scores else None,
            "gamma": _list(model.gamma),
            "eigenvalues": _list(model.eigenvalues),
            "y": _list(model.y),
            "fitted": _list(model.fitted),
        }
        scalars = {"intercept": _num(model.intercept), "criterion": _num(model.criterion)}
        extra = {
            "method": model.method,
            "whitening": {
                "mean": _list(model.whitening.mean),
                "cov": _list(model.whitening.cov),
                "root_inv": _list(model.whitening.root_inv),
            },
        }
        diagnostics = {
            "n_iter": int(model.n_iter),
            "converged": bool(model.converged),
            "truncated": bool(model.truncated),
            "warm_start": model.warm_start,
            "warm_start_criteria": {k: _num(v) for k, v in model.warm_start_criteria.items()},
        }
        return "sudire", arrays, scalars, extra, diagnostics
    raise DataError(f"cannot serialize object of type {type(model).__name__}")


def to_artifact(model, spec=None, meta=None, include_scores=True):
    """Artifact dictionary for ``model``.

    ``spec`` echoes the estimator settings; ``meta`` holds free-form
    context such as column names.
    """
    kind, arrays, scalars, extra, diagnostics = model_arrays(model, include_scores)
    return {
        "schema_version": SCHEMA_VERSION,
        "estimator": kind,
        "spec": spec or {},
        "meta": meta or {},
        "arrays": arrays,
        "scalars": scalars,
        **extra,
        "diagnostics": diagnostics,
    }


def from_artifact(d):
    """Rebuild the fitted model stored in an artifact dictionary."""
    if not isinstance(d, dict):
        raise DataError("model file does not hold a JSON object")
    version = d.get("schema_version")
    if version != SCHEMA_VERSION:
        raise DataError(f"artifact schema version {version!r} is not supported (expected {SCHEMA_VERSION})")
    try:
        return _rebuild(d)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DataError):
            raise
        raise DataError(f"model file is incomplete or malformed ({type(exc).__name__}: {exc})") from exc


def _rebuild(d):
    kind = d.get("estimator")
    a, s = d["arrays"], d["scalars"]
    if kind in ("ppdire", "snipls", "sprm"):
        return ProjectionModel(
            kind=kind,
            W=_array(a["W"], 2), P=_array(a["P"], 2), R=_array(a["R"], 2),
            T=_array(a["T"], 2), scaler=_scaler_from(d["scaler"]),
            gamma=_array(a["gamma"]), score_intercept=s["score_intercept"] or 0.0,
            beta=_array(a["beta"]), intercept=s["intercept"] or 0.0,
            index_values=_array(a["index_values"]), caseweights=_array(a["caseweights"]),
            residual_scale=s["residual_scale"], rho=_rho_from(d["rho"]),
            active=None if a["active"] is None else np.array(a["active"], dtype=int),
            score_center=_array(a["score_center"]), score_scale=s["score_scale"],
            truncated=d["diagnostics"]["truncated"], converged=d["diagnostics"]["converged"],
            n_iter=d["diagnostics"]["n_iter"], y=_array(a["y"]), fitted=_array(a["fitted"]),
            info=d["diagnostics"]["info"],
        )
    if kind == "rm":
        return RMModel(
            beta=_array(a["beta"]), intercept=s["intercept"], sigma_hat=s["sigma_hat"],
            caseweights=_array(a["caseweights"]), n_iter=d["diagnostics"]["n_iter"],
            converged=d["diagnostics"]["converged"], rho=_rho_from(d["rho"]),
        )
    if kind == "sudire":
        wh = d["whitening"]
        crit = s["criterion"]
        return SDRModel(
            method=d["method"], B=_array(a["B"], 2),
            whitening=Whitening(np.array(wh["mean"]), np.array(wh["cov"]), np.array(wh["root_inv"])),
            criterion=float("nan") if crit is None else crit,
            eigenvalues=_array(a["eigenvalues"]),
            warm_start=d["diagnostics"]["warm_start"],
            warm_start_criteria=d["diagnostics"]["warm_start_criteria"],
            converged=d["diagnostics"]["converged"], truncated=d["diagnostics"]["truncated"],
            n_iter=d["diagnostics"]["n_iter"], gamma=_array(a["gamma"]),
            intercept=s["intercept"], y=_array(a["y"]), fitted=_array(a["fitted"]),
            T=_array(a["T"], 2),
        )
    raise DataError(f"unknown estimator kind {kind!r} in artifact")


def dumps(obj):
    """Deterministic JSON text (insertion key order, no NaN)."""
    return json.dumps(obj, indent=1, allow_nan=False) + "\n"


def save(model, path, spec=None, meta=None, include_scores=True):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(to_artifact(model, spec, meta, include_scores)))


def load_artifact(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not a valid model file ({exc})") from exc


def load(path):
    return from_artifact(load_artifact(path))
