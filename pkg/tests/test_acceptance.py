"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

The verdict lines are printed in the ``acceptance criteria`` section of the
pytest terminal summary.
"""

import csv
import json

import numpy as np

from dimred import serialize
from dimred.cli import main
from dimred.dicomo import MomentSpec, dcor, dcov, dcov_sq, mdd
from dimred.ppdire import PPSpec, fit_pp
from dimred.preprocess import ScalerSpec
from dimred.sprm import RhoSpec, SprmSpec, caseweight_classes, rm_fit, snipls_fit, sprm_fit
from dimred.sudire import SDRSpec, fit_sdr, slice_kernel

from oracles import dcor_loops, dcov_sq_loops, line_angle, mdd_sq_loops, nipals_pls1, ols, pca_eig

CENTER_ONLY = ScalerSpec("mean", "none")


def _trace_correlation(A, B):
    Qa = np.linalg.qr(A)[0]
    Qb = np.linalg.qr(B)[0]
    return float(np.trace(Qa @ Qa.T @ Qb @ Qb.T) / Qa.shape[1])


def _max_abs_up_to_sign(A, B):
    signs = np.sign(np.sum(A * B, axis=0))
    return float(np.max(np.abs(A - B * signs)))


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])
    return str(path)


# ---------------------------------------------------------------------------
# 1. degenerate cases collapse to PCA and PLS
# ---------------------------------------------------------------------------

def test_criterion_1_pca_and_pls_recovery(acceptance):
    rec = acceptance(1, "variance index = PCA, squared covariance and snipls(0) = NIPALS")
    rng = np.random.default_rng(2024)
    X = rng.normal(size=(50, 6)) @ rng.normal(size=(6, 6))
    y = X @ rng.normal(size=6) + rng.normal(size=50)

    pca = fit_pp(X, spec=PPSpec(MomentSpec("var"), n_components=6, optimizer="nlp", scaler=CENTER_ONLY))
    _, V, _ = pca_eig(X)
    worst = max(line_angle(pca.W[:, k], V[:, k]) for k in range(6))
    rec.check(worst <= 1e-6, f"PCA max angle {worst:.2e} rad (<= 1e-6)")

    W, T, _, coef = nipals_pls1(X, y, 2)
    pls = fit_pp(X, y, PPSpec(MomentSpec("cov"), n_components=2, optimizer="nlp", scaler=CENTER_ONLY))
    dev = max(_max_abs_up_to_sign(pls.W, W), _max_abs_up_to_sign(pls.T, T), float(np.max(np.abs(pls.beta - coef))))
    rec.check(dev <= 1e-6, f"cov^2 vs NIPALS max deviation {dev:.2e} (<= 1e-6)")

    sn = snipls_fit(X, y, h=2, lam=0.0)
    dev = max(_max_abs_up_to_sign(sn.W, W), _max_abs_up_to_sign(sn.T, T), float(np.max(np.abs(sn.beta - coef))))
    rec.check(dev <= 1e-6, f"snipls(0) vs NIPALS max deviation {dev:.2e} (<= 1e-6)")
    assert rec.passed, rec.line()


# ---------------------------------------------------------------------------
# 2. continuum bridge
# ---------------------------------------------------------------------------

def test_criterion_2_continuum_bridge(acceptance):
    rec = acceptance(2, "continuum regression bridges PLS (alpha=1) and PCA (alpha large)")
    rng = np.random.default_rng(0)
    Q = np.linalg.qr(rng.normal(size=(5, 5)))[0]
    X = rng.normal(size=(100, 5)) @ np.diag([3.0, 1.5, 1.0, 0.7, 0.5]) @ Q.T
    y = X @ (Q[:, 0] + Q[:, 1]) + 0.5 * rng.normal(size=100)

    cov_model = fit_pp(X, y, PPSpec(MomentSpec("cov"), n_components=2, scaler=CENTER_ONLY))
    cont_model = fit_pp(X, y, PPSpec(MomentSpec("continuum", continuum_alpha=1.0), n_components=2,
                                     scaler=CENTER_ONLY))
    same = all(np.array_equal(getattr(cov_model, a), getattr(cont_model, a)) for a in ("W", "T", "beta"))
    rec.check(same, f"alpha=1 model identical to the squared-covariance model: {same}")
    nlp = fit_pp(X, y, PPSpec(MomentSpec("continuum", continuum_alpha=1.0), n_components=2, optimizer="nlp",
                              scaler=CENTER_ONLY))
    W, _, _, coef = nipals_pls1(X, y, 2)
    dev = max(_max_abs_up_to_sign(nlp.W, W), float(np.max(np.abs(nlp.beta - coef))))
    rec.check(dev <= 1e-6, f"alpha=1 vs NIPALS {dev:.2e}")

    _, V, _ = pca_eig(X)
    angles = []
    for alpha in (1, 2, 4, 16, 64):
        m = fit_pp(X, y, PPSpec(MomentSpec("continuum", continuum_alpha=float(alpha)), scaler=CENTER_ONLY))
        angles.append(np.degrees(line_angle(m.W[:, 0], V[:, 0])))
    monotone = all(b <= a + 1e-9 for a, b in zip(angles, angles[1:]))
    rec.check(monotone, "angles to PC1 " + ", ".join(f"{a:.3f}" for a in angles) + " deg non-increasing")
    rec.check(angles[-1] <= 1.0, f"alpha=64 angle {angles[-1]:.3f} deg (<= 1)")
    assert rec.passed, rec.line()


# ---------------------------------------------------------------------------
# 3. energy statistics against double sums
# ---------------------------------------------------------------------------

def test_criterion_3_energy_statistics(acceptance):
    rec = acceptance(3, "dcov^2, dcor, mdd^2 equal double-sum oracles; dcor bounds and dcov symmetry")
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(4, 13))
        X = rng.normal(size=(n, int(rng.integers(1, 4))))
        Y = rng.normal(size=(n, int(rng.integers(1, 3))))
        y = rng.normal(size=n)
        worst = max(worst, abs(dcov_sq(X, Y) - dcov_sq_loops(X, Y)), abs(dcor(X, Y) - dcor_loops(X, Y)),
                    abs(mdd(y, X) - mdd_sq_loops(y, X)))
    rec.check(worst <= 1e-12, f"20 instances, max deviation {worst:.1e} (<= 1e-12)")

    violations = 0
    for _ in range(1000):
        n = int(rng.integers(2, 15))
        X = rng.normal(size=(n, int(rng.integers(1, 4))))
        Y = rng.normal(size=(n, int(rng.integers(1, 4))))
        if rng.random() < 0.25:
            Y = X @ rng.normal(size=(X.shape[1], Y.shape[1]))
        r = dcor(X, Y)
        a, b = dcov(X, Y), dcov(Y, X)
        violations += not (-1e-12 <= r <= 1 + 1e-12) or abs(a - b) > 1e-12 * max(1.0, abs(a))
    rec.check(violations == 0, f"1000 property cases, {violations} violations")
    assert rec.passed, rec.line()


# ---------------------------------------------------------------------------
# 4. SDR recovery
# ---------------------------------------------------------------------------

def test_criterion_4_sdr_recovery(acceptance):
    rec = acceptance(4, "SDR recovery: SIR/DR/dcov_sdr on a linear model, SAVE vs SIR on x1^2")
    worst = {"sir": 1.0, "dr": 1.0, "dcov_sdr": 1.0}
    dominated = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(200, 6))
        beta = rng.normal(size=6)
        y = X @ beta + 0.1 * rng.normal(size=200)
        for method in worst:
            model = fit_sdr(X, y, SDRSpec(method))
            worst[method] = min(worst[method], _trace_correlation(model.B, beta[:, None]))
            if method == "dcov_sdr":
                dominated += model.criterion >= max(model.warm_start_criteria.values())
    for method, tc in worst.items():
        rec.check(tc >= 0.8, f"{method} min trace correlation {tc:.4f} (>= 0.8)")
    rec.check(dominated == 20, f"dcov_sdr criterion >= warm start on {dominated}/20 runs")

    save_angles, sir_quiet = [], 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(1000, 6))
        y = X[:, 0] ** 2 + rng.normal(size=1000)
        B = fit_sdr(X, y, SDRSpec("save")).B[:, 0]
        save_angles.append(np.degrees(line_angle(B, np.eye(6)[0])))
        top = np.linalg.eigvalsh(slice_kernel(X, y, "sir")).max()
        null = [np.linalg.eigvalsh(slice_kernel(X, rng.permutation(y), "sir")).max() for _ in range(50)]
        sir_quiet += top <= np.quantile(null, 0.99)
    within = int(np.sum(np.array(save_angles) <= 5.0))
    rec.check(within == 20, f"SAVE within 5 deg of e1 on {within}/20 seeds "
                            f"(median {np.median(save_angles):.2f}, max {np.max(save_angles):.2f} deg)")
    rec.check(sir_quiet == 20, f"SIR top eigenvalue below the 99% permutation null on {sir_quiet}/20 seeds")
    assert rec.passed, rec.line()


# ---------------------------------------------------------------------------
# 5. constraint residuals
# ---------------------------------------------------------------------------

def _orthogonality(T):
    norms = np.linalg.norm(T, axis=0)
    G = np.abs(T.T @ T) / np.outer(norms, norms)
    return float(np.max(G[~np.eye(T.shape[1], dtype=bool)], initial=0.0))


def test_criterion_5_constraint_residuals(acceptance):
    rec = acceptance(5, "SDR whitening constraint and projection-model unit norm / orthogonality")
    worst_sdr = 0.0
    for seed in range(3):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(150, 5)) @ rng.normal(size=(5, 5))
        y = X[:, 0] + np.sin(X[:, 1]) + 0.2 * rng.normal(size=150)
        for method in ("sir", "save", "dr", "phd", "iht", "dcov_sdr", "mdd_sdr"):
            worst_sdr = max(worst_sdr, fit_sdr(X, y, SDRSpec(method, h=2)).constraint_residual())
    rec.check(worst_sdr <= 1e-6, f"max ||B'SB - I||_F {worst_sdr:.1e} over 21 SDR fits (<= 1e-6)")

    worst_norm = worst_orth = 0.0
    count = 0
    for seed in range(3):
        rng = np.random.default_rng(10 + seed)
        X = rng.normal(size=(60, 6)) @ rng.normal(size=(6, 6))
        y = X[:, :2] @ [1.0, -1.0] + rng.normal(size=60)
        y[:5] += 20
        models = [
            fit_pp(X, spec=PPSpec(MomentSpec("var"), n_components=3)),
            fit_pp(X, spec=PPSpec(MomentSpec("kurt", trim_alpha=0.1), n_components=3)),
            fit_pp(X, y, PPSpec(MomentSpec("cov"), n_components=3, optimizer="nlp")),
            # constraints hold at every iterate, so the slowly converging
            # capi grid search is capped to keep the check fast
            fit_pp(X, y, PPSpec(MomentSpec("capi", capi_weights=(1, 1, 1, 0, 0, 0)), n_components=2,
                                regression="rm", max_cycles=10)),
            snipls_fit(X, y, h=3, lam=0.3),
            sprm_fit(X, y, SprmSpec(h=3, lam=0.2)),
        ]
        for m in models:
            worst_norm = max(worst_norm, float(np.max(np.abs(np.linalg.norm(m.W, axis=0) - 1))))
            T = m.T
            if m.kind == "sprm":
                # SPRM scores are orthogonal in the caseweighted metric of the final SNIPLS pass
                T = T * np.sqrt(np.asarray(m.info["fit_weights"]))[:, None]
            worst_orth = max(worst_orth, _orthogonality(T))
            count += 1
    rec.check(worst_norm <= 1e-8, f"max | ||w|| - 1 | {worst_norm:.1e} over {count} models")
    rec.check(worst_orth <= 1e-6, f"max normalized |t_i't_j| {worst_orth:.1e} (<= 1e-6)")
    assert rec.passed, rec.line()


# ---------------------------------------------------------------------------
# 6. robustness
# ---------------------------------------------------------------------------

def test_criterion_6_robustness(acceptance):
    rec = acceptance(6, "rm_fit and sprm_fit resist gross outliers; flags follow caseweight_classes")
    worst_rm, best_ols = 0.0, np.inf
    for seed in range(10):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=100)
        y = 2 * x + 1 + 0.1 * rng.normal(size=100)
        y[np.argsort(x)[:20]] = 50.0
        worst_rm = max(worst_rm, abs(rm_fit(x[:, None], y, RhoSpec("hampel")).beta[0] - 2))
        best_ols = min(best_ols, abs(ols(x[:, None], y)[0][0] - 2))
    rec.check(worst_rm <= 0.1, f"hampel slope error max {worst_rm:.4f} over 10 seeds (<= 0.1)")
    rec.check(best_ols >= 0.5, f"OLS slope error min {best_ols:.2f} (>= 0.5)")

    beta = np.array([1.0, 2.0, 0.0, 0.0, -1.0])
    worst_w, flags_ok = 0.0, True
    for seed in range(10):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(100, 5))
        y = X @ beta + 3.0 + 0.5 * rng.normal(size=100)
        X[:10] += rng.uniform(4, 6, size=(10, 5))
        y[:10] += rng.uniform(20, 30, size=10)
        model = sprm_fit(X, y, SprmSpec(h=3))
        worst_w = max(worst_w, float(model.caseweights[:10].max()))
        labels = caseweight_classes(model.caseweights)
        flags_ok &= bool(np.all(labels[:10] == "harsh"))
        flags_ok &= bool(np.array_equal(labels, caseweight_classes(model.caseweights, 0.7, 0.3)))
    rec.check(worst_w < 0.3, f"largest outlier caseweight {worst_w:.3f} over 10 seeds (< 0.3)")
    rec.check(flags_ok, f"planted outliers flagged harsh under default cutoffs: {flags_ok}")
    assert rec.passed, rec.line()


# ---------------------------------------------------------------------------
# 7. sparsity
# ---------------------------------------------------------------------------

def test_criterion_7_sparsity(acceptance):
    rec = acceptance(7, "snipls support nested in lambda; boundary lambda empties the model")
    lams = np.linspace(0.0, 0.95, 10)
    broken = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        n, p = int(rng.integers(20, 80)), int(rng.integers(3, 15))
        X = rng.normal(size=(n, p))
        y = X[:, : min(3, p)] @ rng.normal(size=min(3, p)) + rng.normal(size=n)
        supports = [set(snipls_fit(X, y, h=1, lam=lam).active) for lam in lams]
        broken += any(not b <= a for a, b in zip(supports, supports[1:]))
    rec.check(broken == 0, f"non-nested supports in {broken}/100 datasets")

    rng = np.random.default_rng(7)
    X = rng.normal(size=(30, 3))
    y = X @ [3.0, 1.0, 0.2] + 0.1 * rng.normal(size=30)
    empty = snipls_fit(X, y, h=1, lam=1.0)
    ok = empty.truncated and empty.n_components == 0 and not np.any(empty.beta)
    rec.check(ok, f"lambda=1 gives no components and truncation flag: {ok}")
    assert rec.passed, rec.line()


# ---------------------------------------------------------------------------
# 8. round trip and determinism
# ---------------------------------------------------------------------------

def test_criterion_8_round_trip_and_determinism(acceptance, tmp_path):
    rec = acceptance(8, "save/load/predict bit-identical; repeated CLI runs byte-identical")
    rng = np.random.default_rng(8)
    X = rng.normal(size=(80, 5))
    y = X @ [1.0, 0.5, 0.0, -1.0, 0.0] + 0.3 * rng.normal(size=80)
    y[:6] += 15
    Xnew = rng.normal(size=(25, 5))
    models = {
        "ppdire": fit_pp(X, y, PPSpec(MomentSpec("cov"), n_components=2)),
        "ppdire-rm": fit_pp(X, y, PPSpec(MomentSpec("corr"), n_components=2, regression="rm")),
        "snipls": snipls_fit(X, y, h=2, lam=0.3),
        "sprm": sprm_fit(X, y, SprmSpec(h=2, lam=0.2)),
        "rm": rm_fit(X, y),
        "sudire": fit_sdr(X, y, SDRSpec("dcov_sdr", h=2)),
    }
    identical = []
    for name, model in models.items():
        path = tmp_path / f"{name}.json"
        serialize.save(model, path)
        identical.append(np.array_equal(serialize.load(path).predict(Xnew), model.predict(Xnew)))
    rec.check(all(identical), f"bit-identical predictions for {sum(identical)}/{len(identical)} estimators")

    data = _write_csv(tmp_path / "d.csv", ["a", "b", "c", "d", "e", "y"], np.column_stack([X, y]))
    (tmp_path / "c.json").write_text(json.dumps({
        "estimator": "sprm", "target": "y", "params": {"h": 2},
        "cv": {"grid": {"lam": [0.0, 0.5]}, "folds": 4, "scoring": "robust"},
    }))
    cfg = str(tmp_path / "c.json")
    outputs = []
    for run in ("1", "2"):
        codes = [
            main(["fit", "--data", data, "--config", cfg, "--out", str(tmp_path / f"m{run}.json")]),
            main(["cv", "--data", data, "--config", cfg, "--seed", "3", "--out", str(tmp_path / f"cv{run}.json")]),
        ]
        for kind in ("projection", "parity", "caseweights"):
            codes.append(main(["plot", "--model", str(tmp_path / "m1.json"), "--kind", kind, "--data", data,
                               "--out", str(tmp_path / f"{kind}{run}.svg")]))
        outputs.append(codes)
    same = all((tmp_path / f"{stem}1{ext}").read_bytes() == (tmp_path / f"{stem}2{ext}").read_bytes()
               for stem, ext in (("m", ".json"), ("cv", ".json"), ("projection", ".svg"), ("parity", ".svg"),
                                 ("caseweights", ".svg")))
    rec.check(all(c == 0 for codes in outputs for c in codes), "all CLI invocations exit 0")
    rec.check(same, f"JSON and SVG outputs byte-identical across runs: {same}")
    assert rec.passed, rec.line()


# ---------------------------------------------------------------------------
# 9. robust model selection through the cv command
# ---------------------------------------------------------------------------

LAMBDAS = [round(0.1 * k, 1) for k in range(10)]


def _contaminated(seed, n=100, p=20):
    rng = np.random.default_rng(seed)
    beta = np.zeros(p)
    beta[:4] = [2.0, -1.5, 1.0, 1.0]
    X = rng.normal(size=(n, p))
    y = X @ beta + 0.5 * rng.normal(size=n)
    bad = rng.permutation(n)
    k = int(0.15 * n)
    y[bad[:k]] += rng.choice([-1, 1], k) * rng.uniform(15, 25, k)
    X[bad[: k // 3]] += 5
    X_hold = rng.normal(size=(1000, p))
    y_hold = X_hold @ beta + 0.5 * rng.normal(size=1000)
    return X, y, X_hold, y_hold


def test_criterion_9_robust_model_selection(acceptance, tmp_path):
    rec = acceptance(9, "cv with robust scoring picks a near-oracle lambda for sprm on contaminated data")
    chosen, oracle, per_seed, mse_chosen = [], [], 0, []
    for seed in range(10):
        X, y, X_hold, y_hold = _contaminated(seed)
        header = [f"x{j + 1}" for j in range(X.shape[1])] + ["y"]
        data = _write_csv(tmp_path / f"d{seed}.csv", header, np.column_stack([X, y]))
        reports = {}
        for scoring in ("robust", "mse"):
            cfg = tmp_path / f"c{seed}{scoring}.json"
            cfg.write_text(json.dumps({
                "estimator": "sprm", "target": "y", "params": {"h": 4},
                "cv": {"grid": {"lam": LAMBDAS}, "folds": 10, "scoring": scoring},
            }))
            out = tmp_path / f"r{seed}{scoring}.json"
            assert main(["cv", "--data", data, "--config", str(cfg), "--seed", str(seed), "--out", str(out)]) == 0
            reports[scoring] = json.loads(out.read_text())
        holdout = [float(np.mean((y_hold - sprm_fit(X, y, SprmSpec(h=4, lam=lam)).predict(X_hold)) ** 2))
                   for lam in LAMBDAS]
        picked = holdout[LAMBDAS.index(reports["robust"]["best_params"]["lam"])]
        chosen.append(picked)
        oracle.append(min(holdout))
        per_seed += picked <= 1.1 * min(holdout)
        mse_chosen.append(holdout[LAMBDAS.index(reports["mse"]["best_params"]["lam"])])
    ratio = float(np.mean(chosen) / np.mean(oracle))
    rec.check(ratio <= 1.1, f"seed-averaged clean MSE ratio {ratio:.3f} (<= 1.10); "
                            f"per seed within 10% on {per_seed}/10; "
                            f"plain-MSE scoring ratio {np.mean(mse_chosen) / np.mean(oracle):.3f}")
    assert rec.passed, rec.line()
