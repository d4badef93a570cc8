"""Command-line front end.

Verbs::

    dimred fit        --data D.csv --config C.json --out model.json
    dimred predict    --model model.json --data D.csv --out predictions.csv
    dimred plot       --model model.json --kind parity [--data D.csv] --out plot.svg
    dimred cv         --data D.csv --config C.json --out report.json [--seed N]
    dimred preprocess --data D.csv --config C.json --out transformed.csv

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure.  Diagnostics go to stderr as a single line.

The configuration is one JSON object::

    {
      "estimator": "sprm",                     # ppdire | snipls | sprm | rm | sudire
      "target": "y",                           # optional for unsupervised ppdire
      "features": ["x1", "x2"],                # default: every other column
      "params": {"h": 2, "lam": 0.3},
      "rows": {"train": [20, 120], "test": [121, 150]},   # 1-based, inclusive
      "classes": {"moderate": 0.7, "harsh": 0.3},
      "store_scores": true,
      "cv": {"grid": {"lam": [0.0, 0.5]}, "folds": 5, "scoring": "robust",
             "shuffle": true, "seed": 0},
      "preprocess": {"scaler": {"center_method": "colmedian", "scale_method": "mad"}}
    }
"""

import argparse
import csv
import json
import sys

import numpy as np

from . import serialize, svgplot
from .dicomo import MomentSpec
from .errors import DataError, NumericalError
from .modelselect import SCORINGS, CVPlan, grid_search
from .models import ProjectionModel
from .ppdire import PPSpec, fit_pp
from .preprocess import ScalerSpec, SignSpec, fit_scaler, fit_spatial_sign
from .sprm import RhoSpec, RMModel, SprmSpec, caseweight_classes, rm_fit, snipls_fit, sprm_fit
from .sudire import SDRModel, SDRSpec, fit_sdr

ESTIMATORS = ("ppdire", "snipls", "sprm", "rm", "sudire")
PLOT_KINDS = ("projection", "parity", "caseweights")


class UsageError(Exception):
    """Bad command line or configuration."""


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------

def read_csv(path):
    """Header and float matrix of a comma-separated file."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise DataError(f"{path}: file is empty")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header) or not all(header):
        raise DataError(f"{path}: header must name every column exactly once")
    data = np.empty((len(rows) - 1, len(header)))
    for i, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i} has {len(row)} fields, header has {len(header)}")
        for j, cell in enumerate(row):
            try:
                data[i - 1, j] = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: row {i}, column {j + 1} ({header[j]!r}): cannot parse {cell!r} as a number"
                ) from None
    if data.shape[0] == 0:
        raise DataError(f"{path}: no data rows")
    if not np.all(np.isfinite(data)):
        i, j = np.argwhere(~np.isfinite(data))[0]
        raise DataError(f"{path}: row {i + 1}, column {j + 1} ({header[j]!r}) is not finite")
    return header, data


def write_csv(path, header, columns):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([repr(float(v)) for v in row])


def write_text(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def read_config(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    return cfg


# ---------------------------------------------------------------------------
# configuration -> estimators
# ---------------------------------------------------------------------------

def _moment_spec(v):
    if v is None:
        return MomentSpec()
    if isinstance(v, str):
        return MomentSpec(kind=v)
    return MomentSpec(**v)


def _scaler_spec(v):
    return None if v is None else ScalerSpec(**v)


def _rho_spec(v):
    return None if v is None else RhoSpec(**v)


def _build(estimator, params):
    """Return ``fit(X, y)`` for an estimator name and parameter dict."""
    p = dict(params)
    if estimator == "ppdire":
        p["index"] = _moment_spec(p.get("index"))
        if "scaler" in p:
            p["scaler"] = _scaler_spec(p["scaler"])
        if "rho" in p:
            p["rho"] = _rho_spec(p["rho"])
        spec = PPSpec(**p)
        return lambda X, y: fit_pp(X, y, spec)
    if estimator == "snipls":
        scaler = _scaler_spec(p.pop("scaler", None))
        h, lam = p.pop("h", 1), p.pop("lam", 0.0)
        if p:
            raise TypeError(f"unexpected parameters {sorted(p)}")
        return lambda X, y: snipls_fit(X, y, h, lam, scaler)
    if estimator == "sprm":
        if "rho" in p:
            p["rho"] = _rho_spec(p["rho"])
        if "scaler" in p:
            p["scaler"] = _scaler_spec(p["scaler"])
        spec = SprmSpec(**p)
        return lambda X, y: sprm_fit(X, y, spec)
    if estimator == "rm":
        rho = _rho_spec(p.pop("rho", None))
        unknown = sorted(set(p) - {"tol", "max_iter"})
        if unknown:
            raise TypeError(f"unexpected parameters {unknown}")
        return lambda X, y: rm_fit(X, y, rho, **p)
    if estimator == "sudire":
        spec = SDRSpec(**p)
        return lambda X, y: fit_sdr(X, y, spec)
    raise UsageError(f"unknown estimator {estimator!r}; choose from {ESTIMATORS}")


def make_fitter(estimator, params):
    try:
        return _build(estimator, params or {})
    except TypeError as exc:
        raise UsageError(f"bad parameters for {estimator}: {exc}") from exc


def _columns(cfg, header, need_target=True):
    target = cfg.get("target")
    if target is not None and target not in header:
        raise DataError(f"target column {target!r} not found in the data header")
    if need_target and target is None:
        raise UsageError("config must name the target column")
    features = cfg.get("features") or [h for h in header if h != target]
    missing = [f for f in features if f not in header]
    if missing:
        raise DataError(f"feature columns not found in the data: {missing}")
    if not features:
        raise DataError("no feature columns")
    return features, target


def _row_range(cfg, key, n):
    rows = (cfg.get("rows") or {}).get(key)
    if rows is None:
        return None
    if not (isinstance(rows, list) and len(rows) == 2 and all(isinstance(r, int) for r in rows)):
        raise UsageError(f"rows.{key} must be [first, last] (1-based, inclusive)")
    first, last = rows
    if not 1 <= first <= last <= n:
        raise DataError(f"rows.{key} = {rows} is outside 1..{n}")
    return np.arange(first - 1, last)


def _select(header, data, names):
    return data[:, [header.index(c) for c in names]]


def _training_data(cfg, header, data, need_target):
    features, target = _columns(cfg, header, need_target)
    rows = _row_range(cfg, "train", data.shape[0])
    rows = np.arange(data.shape[0]) if rows is None else rows
    X = _select(header, data, features)[rows]
    y = data[rows, header.index(target)] if target is not None else None
    return features, target, rows, X, y


def _classes_cfg(cfg):
    c = cfg.get("classes") or {}
    return {"moderate": float(c.get("moderate", 0.7)), "harsh": float(c.get("harsh", 0.3))}


# ---------------------------------------------------------------------------
# verbs
# ---------------------------------------------------------------------------

def cmd_fit(args):
    cfg = read_config(args.config)
    estimator = cfg.get("estimator")
    if estimator not in ESTIMATORS:
        raise UsageError(f"config 'estimator' must be one of {ESTIMATORS}, got {estimator!r}")
    header, data = read_csv(args.data)
    features, target, rows, X, y = _training_data(cfg, header, data, need_target=estimator != "ppdire")
    params = cfg.get("params") or {}
    model = make_fitter(estimator, params)(X, y)
    test = _row_range(cfg, "test", data.shape[0])
    meta = {
        "features": features,
        "target": target,
        "train_rows": [int(rows[0]) + 1, int(rows[-1]) + 1],
        "test_rows": None if test is None else [int(test[0]) + 1, int(test[-1]) + 1],
        "classes": _classes_cfg(cfg),
    }
    artifact = serialize.to_artifact(model, {"estimator": estimator, "params": params}, meta,
                                     include_scores=bool(cfg.get("store_scores", True)))
    write_text(args.out, serialize.dumps(artifact))
    return 0


def _load(path):
    artifact = serialize.load_artifact(path)
    return serialize.from_artifact(artifact), artifact


def _model_features(artifact, header, data):
    names = artifact["meta"].get("features")
    if names is None:
        return data
    missing = [f for f in names if f not in header]
    if missing:
        raise DataError(f"data lacks the model's feature columns {missing}")
    return _select(header, data, names)


def _can_predict(model):
    if isinstance(model, ProjectionModel):
        return model.has_regression
    return isinstance(model, RMModel) or (isinstance(model, SDRModel) and model.gamma is not None)


def cmd_predict(args):
    model, artifact = _load(args.model)
    if not _can_predict(model):
        raise UsageError("model was fit without a response and cannot predict")
    header, data = read_csv(args.data)
    X = _model_features(artifact, header, data)
    write_csv(args.out, ["prediction"], [model.predict(X)])
    return 0


def _classes(weights, cuts):
    if weights is None:
        return None
    return list(caseweight_classes(np.clip(weights, 0.0, 1.0), cuts["moderate"], cuts["harsh"]))


def _test_part(args, artifact):
    """Test features, response (if present) and case numbers from ``--data``."""
    if args.data is None:
        return None, None, None
    header, data = read_csv(args.data)
    test_rows = artifact["meta"].get("test_rows")
    rows = np.arange(data.shape[0]) if test_rows is None else np.arange(test_rows[0] - 1, test_rows[1])
    if rows.size and rows[-1] >= data.shape[0]:
        raise DataError(f"model's test rows {test_rows} exceed the {data.shape[0]} rows of {args.data}")
    X = _model_features(artifact, header, data)[rows]
    target = artifact["meta"].get("target")
    y = data[rows, header.index(target)] if target is not None and target in header else None
    return X, y, rows + 1


def cmd_plot(args):
    if args.kind not in PLOT_KINDS:
        raise UsageError(f"--kind must be one of {PLOT_KINDS}")
    model, artifact = _load(args.model)
    cfg = read_config(args.config)
    cuts = _classes_cfg(cfg) if "classes" in cfg else artifact["meta"].get("classes") or _classes_cfg({})
    robust = getattr(model, "caseweights", None) is not None
    X_test, y_test, test_cases = _test_part(args, artifact)
    train_rows = artifact["meta"].get("train_rows")
    train_cases = None if train_rows is None else np.arange(train_rows[0], train_rows[1] + 1)

    train_w = model.caseweights if robust else None
    test_w = None
    if robust and X_test is not None and y_test is not None:
        test_w = model.caseweights_for(X_test, y_test)
    train_cls, test_cls = _classes(train_w, cuts), _classes(test_w, cuts)

    if args.kind == "caseweights":
        if not robust:
            raise UsageError(f"{artifact['estimator']} model has no caseweights; fit a robust model")
        svg = svgplot.caseweight_plot(train_w, test_w, cuts["moderate"], cuts["harsh"],
                                      train_cls, test_cls, train_cases, test_cases)
    elif args.kind == "parity":
        if not _can_predict(model) or getattr(model, "y", None) is None:
            raise UsageError("parity plot needs a model fit with a response")
        fitted = getattr(model, "fitted", None)
        if fitted is None:
            raise UsageError("model holds no fitted values")
        pred = None if X_test is None or y_test is None else model.predict(X_test)
        svg = svgplot.parity_plot(model.y, fitted, y_test if pred is not None else None, pred,
                                  train_cls, test_cls, train_cases, test_cases)
    else:
        T = getattr(model, "T", None)
        if T is None:
            raise UsageError("model holds no training scores; refit with store_scores enabled")
        T_test = None if X_test is None else model.transform(X_test)
        svg = svgplot.projection_plot(T, T_test, train_cls, test_cls, train_cases, test_cases)
    write_text(args.out, svg)
    return 0


def cmd_cv(args):
    cfg = read_config(args.config)
    estimator = cfg.get("estimator")
    if estimator not in ESTIMATORS:
        raise UsageError(f"config 'estimator' must be one of {ESTIMATORS}, got {estimator!r}")
    cv = cfg.get("cv") or {}
    if "grid" not in cv:
        raise UsageError("config needs cv.grid")
    scoring = cv.get("scoring", "mse")
    if scoring not in SCORINGS:
        raise UsageError(f"cv.scoring must be one of {SCORINGS}")
    header, data = read_csv(args.data)
    features, target, rows, X, y = _training_data(cfg, header, data, need_target=True)
    seed = args.seed if args.seed is not None else cv.get("seed", 0)
    plan = CVPlan(X.shape[0], int(cv.get("folds", 5)), seed, bool(cv.get("shuffle", True)))
    params = cfg.get("params") or {}

    def fit(Xtr, ytr, **cell):
        return make_fitter(estimator, {**params, **cell})(Xtr, ytr)

    result = grid_search(fit, cv["grid"], X, y, plan, scoring)
    report = {
        "estimator": estimator,
        "params": params,
        "features": features,
        "target": target,
        "folds": plan.k,
        "seed": seed,
        "shuffle": plan.shuffle,
        **result.to_dict(),
    }
    write_text(args.out, serialize.dumps(report))
    return 0


def cmd_preprocess(args):
    cfg = read_config(args.config)
    pre = cfg.get("preprocess") or {"scaler": {}}
    header, data = read_csv(args.data)
    features, target = _columns(cfg, header, need_target=False)
    X = _select(header, data, features)
    if "sign" in pre:
        s = dict(pre["sign"])
        if "centering" in s:
            s["centering"] = ScalerSpec(**s["centering"])
        if s.get("cutoffs") is not None:
            s["cutoffs"] = tuple(s["cutoffs"])
        Z = fit_spatial_sign(X, SignSpec(**s)).transform(X)
    else:
        Z = fit_scaler(X, ScalerSpec(**pre.get("scaler", {}))).transform(X)
    names, cols = list(features), list(Z.T)
    if target is not None:
        names.append(target)
        cols.append(data[:, header.index(target)])
    write_csv(args.out, names, cols)
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    parser = _Parser(prog="dimred", description="Projection pursuit, SDR and robust PLS models.")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit a model and write it as JSON")
    p.add_argument("--data", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict new cases with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("plot", help="projection, parity or caseweight plot as SVG")
    p.add_argument("--model", required=True)
    p.add_argument("--kind", required=True, choices=PLOT_KINDS)
    p.add_argument("--data", help="test data, drawn in a different color")
    p.add_argument("--config", help="optional config overriding the class cutoffs")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("cv", help="cross-validated grid search")
    p.add_argument("--data", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("preprocess", help="standardize or spatial-sign transform the features")
    p.add_argument("--data", required=True)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_preprocess)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"dimred: usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"dimred: data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"dimred: numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"dimred: data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
