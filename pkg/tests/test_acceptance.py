"""Acceptance suite: one test per criterion, each logging a pass/fail line.

Criteria that the published numbers or the sampling error make unattainable
are implemented at their stated tolerance and left failing.
"""

from __future__ import annotations

import json
import math
import time
import warnings

import numpy as np
import pandas as pd
import pytest
from scipy import stats

from tolerance_index import published
from tolerance_index.composite import alpha_from_covariance, build_composite
from tolerance_index.pipeline import config_from_dict, default_config, run_pipeline
from tolerance_index.registry import INDICATORS, LATENTS
from tolerance_index.sem import SemSpec, ml_discrepancy, ml_gradient
from tolerance_index.studies import (
    coverage,
    intercept_only_probit_error,
    leisure_run,
    parallel_analysis_study,
    recovery_study,
    table_consistency,
    two_arm_run,
)
from tolerance_index.synth import GeneratorSpec, simulate_couple_dataset, write_bundle
from tolerance_index.validate import ols_fit, probit_ame, probit_fit

N_RESPONDENTS = 2 * published.N_COUPLES


def test_criterion_01_loading_variance_consistency(record_criterion):
    t0 = time.perf_counter()
    rows = table_consistency()
    elapsed = time.perf_counter() - t0
    bad_std = [r["indicator"] for r in rows if abs(r["std_diff"]) > 0.0015]
    bad_sq = [r["indicator"] for r in rows if abs(r["unstd_sq_rel_diff"]) > 0.001]
    worst = max(rows, key=lambda r: abs(r["unstd_sq_rel_diff"]))
    ok = not bad_std and not bad_sq and elapsed < 1.0
    record_criterion(
        1,
        "std = unstd/sqrt(fitted), unstd^2 = predicted",
        ok,
        f"std mismatches {bad_std or 'none'}; unstd^2 beyond 0.1%: {bad_sq or 'none'} "
        f"(worst {worst['indicator']} {worst['unstd_sq_rel_diff']:+.3%}); {elapsed * 1e3:.1f} ms",
    )
    assert ok


def test_criterion_02_variance_table_identities(record_criterion):
    t0 = time.perf_counter()
    rows = table_consistency()
    elapsed = time.perf_counter() - t0
    bad_r2 = [r["indicator"] for r in rows if abs(r["r2_diff"]) > 5e-7]
    bad_mc = [r["indicator"] for r in rows if abs(r["mc_diff"]) > 5e-7]
    mc2 = all(r["mc2_equals_r2"] for r in rows)
    ok = not bad_r2 and not bad_mc and mc2 and elapsed < 1.0
    record_criterion(
        2,
        "R2 = predicted/fitted, mc = sqrt(R2) to 6 decimals, mc2 = R2",
        ok,
        f"R2 mismatches {bad_r2 or 'none'}; mc mismatches {bad_mc or 'none'}; mc2 == R2: {mc2}",
    )
    assert ok


@pytest.mark.slow
def test_criterion_03_parameter_recovery(record_criterion):
    t0 = time.perf_counter()
    res = recovery_study(n=100_000, seed=0)
    elapsed = time.perf_counter() - t0
    bad_lam = {k: v for k, v in res.loading_rel_error.items() if abs(v) > 0.02}
    bad_eps = {k: v for k, v in res.residual_rel_error.items() if abs(v) > 0.04}
    mj = res.psi["Justification-Masculinity"]
    mg = res.psi["Masculinity-GenderGapUnpaidWork"]
    ok = (
        not bad_lam
        and not bad_eps
        and abs(mj - published.PSI_MASC_JUST) <= 0.02
        and abs(mg - published.PSI_MASC_GAP) <= 0.03
        and res.srmr < 0.01
        and elapsed < 60
    )
    record_criterion(
        3,
        "recovery at n=100,000 (seed 0)",
        ok,
        "loadings beyond 2%: "
        + (", ".join(f"{k} {v:+.2%}" for k, v in bad_lam.items()) or "none")
        + f"; residuals beyond 4%: {len(bad_eps)}; psi(M,J) {mj:.4f}, psi(M,G) {mg:.4f}; "
        f"SRMR {res.srmr:.4f}; {elapsed:.1f} s",
    )
    assert ok


@pytest.mark.slow
def test_criterion_04_parallel_analysis(record_criterion):
    t0 = time.perf_counter()
    model_counts = parallel_analysis_study(100, N_RESPONDENTS, noise=False)
    noise_counts = parallel_analysis_study(100, N_RESPONDENTS, noise=True)
    elapsed = time.perf_counter() - t0
    hits_model = sum(c == 3 for c in model_counts)
    hits_noise = sum(c == 0 for c in noise_counts)
    ok = hits_model >= 95 and hits_noise >= 95 and elapsed < 120
    record_criterion(
        4,
        "parallel analysis retention at n=1,696",
        ok,
        f"model data: n_retained=3 in {hits_model}/100 (counts {dict(sorted(pd.Series(model_counts).value_counts().items()))}); "
        f"noise: n_retained=0 in {hits_noise}/100; {elapsed:.1f} s",
    )
    assert ok


def _admissible_points(rng, spec, count):
    p = spec.p
    while count:
        lam = rng.uniform(0.3, 1.5, p) * rng.choice([-1, 1], p)
        eps = rng.uniform(0.2, 1.5, p)
        psi = rng.uniform(-0.6, 0.6, len(spec.pairs))
        theta = spec.pack(lam, eps, np.eye(spec.m))
        theta[2 * p :] = psi
        if np.all(np.linalg.eigvalsh(spec.unpack(theta)[2]) > 0.05):
            count -= 1
            yield theta


def test_criterion_05_gradient_check(record_criterion):
    spec = SemSpec.default()
    rng = np.random.default_rng(5)
    A = rng.standard_normal((400, spec.p))
    S = np.cov(A @ rng.standard_normal((spec.p, spec.p)) * 0.3 + A, rowvar=False, ddof=0)
    h = 1e-6
    worst = 0.0
    for theta in _admissible_points(rng, spec, 20):
        g = ml_gradient(spec, theta, S)
        fd = np.empty_like(theta)
        for j in range(theta.size):
            e = np.zeros_like(theta)
            e[j] = h
            fd[j] = (ml_discrepancy(spec, theta + e, S) - ml_discrepancy(spec, theta - e, S)) / (2 * h)
        worst = max(worst, float(np.linalg.norm(g - fd) / np.linalg.norm(fd)))
    ok = worst < 1e-5
    record_criterion(5, "analytic vs central-difference F_ML gradient", ok, f"max relative error {worst:.2e} over 20 points")
    assert ok


def test_criterion_06_composite_properties(record_criterion):
    rng = np.random.default_rng(6)
    cov = np.array([[1.0, 0.6, -0.2], [0.6, 1.0, -0.3], [-0.2, -0.3, 1.0]])
    scores = pd.DataFrame(rng.multivariate_normal(np.zeros(3), cov, 500), columns=list(LATENTS))
    model, index = build_composite(scores)
    unit = abs(float(np.linalg.norm(model.weights)) - 1.0) < 1e-12
    base_rank = np.argsort(index.to_numpy(), kind="stable")
    rank_ok = 0
    for _ in range(200):
        a = rng.uniform(0.01, 100.0, 3)
        b = rng.uniform(-100.0, 100.0, 3)
        _, idx2 = build_composite(scores * a + b)
        if np.array_equal(np.argsort(idx2.to_numpy(), kind="stable"), base_rank):
            rank_ok += 1
    flipped = scores.copy()
    flipped["Masculinity"] = -flipped["Masculinity"]
    _, idx_flip = build_composite(flipped, reverse={"Masculinity": True})
    bit_identical = np.array_equal(idx_flip.to_numpy(), index.to_numpy())
    ok = unit and rank_ok == 200 and bit_identical
    record_criterion(
        6,
        "composite: unit weights, affine rank invariance, reverse toggle",
        ok,
        f"|phi|=1: {unit}; rank preserved in {rank_ok}/200 rescalings; toggle bit-identical: {bit_identical}",
    )
    assert ok


def _alpha_brute(C):
    k = C.shape[0]
    return k / (k - 1) * (1 - np.trace(C) / C.sum())


def test_criterion_07_cronbach_identity(record_criterion):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        k = int(rng.integers(2, 12))
        A = rng.standard_normal((k, k + 3))
        C = A @ A.T + rng.uniform(0, 1) * np.ones((k, k))
        worst = max(worst, abs(alpha_from_covariance(C).alpha - _alpha_brute(C)))
    C3 = np.full((3, 3), 0.5)
    np.fill_diagonal(C3, 1.0)
    closed = alpha_from_covariance(C3).alpha
    ok = worst <= 1e-12 and closed == 0.75
    record_criterion(7, "Cronbach alpha identity", ok, f"max |diff| {worst:.1e} on 100 matrices; k=3, r=0.5 -> {closed!r}")
    assert ok


def _hand_dataset(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(20, 2))
    X = np.column_stack([x, np.ones(20)])
    y = X @ [1.0, -0.5, 2.0] + rng.normal(size=20) * (1 + np.abs(x[:, 0]))
    clusters = np.repeat(np.arange(7), 3)[:20]
    return X, y, clusters


def test_criterion_08_regression_oracles(record_criterion):
    worst_hc = worst_cl = worst_single = 0.0
    for seed in range(5):
        X, y, g = _hand_dataset(seed)
        n, k = X.shape
        beta = np.linalg.lstsq(X, y, rcond=None)[0]
        e = y - X @ beta
        bread = np.linalg.inv(X.T @ X)
        meat = sum(np.outer(X[i], X[i]) * e[i] ** 2 for i in range(n))
        se_hc = np.sqrt(np.diag(bread @ meat @ bread))
        meat_c = np.zeros((k, k))
        for c in np.unique(g):
            s = X[g == c].T @ e[g == c]
            meat_c += np.outer(s, s)
        G = len(np.unique(g))
        se_cl = np.sqrt(np.diag(G / (G - 1) * (n - 1) / (n - k) * bread @ meat_c @ bread))
        worst_hc = max(worst_hc, np.abs(ols_fit(y, X, "robust").se - se_hc).max())
        worst_cl = max(worst_cl, np.abs(ols_fit(y, X, "cluster", g).se - se_cl).max())
        single = ols_fit(y, X, "cluster", np.arange(n)).se
        worst_single = max(worst_single, np.abs(single - se_hc * math.sqrt(n / (n - k))).max())

    rng = np.random.default_rng(8)
    x = rng.normal(size=300)
    X = np.column_stack([x, rng.normal(size=300), np.ones(300)])
    y = (X @ [0.8, -0.4, 0.2] + rng.normal(size=300) > 0).astype(float)
    fit = probit_fit(y, X, ["x", "z", "const"])
    ame = probit_ame(fit, X, "x", "continuous").ame
    eps = 1e-6
    Xp = X.copy()
    Xp[:, 0] += eps
    fd = float(np.mean((stats.norm.cdf(Xp @ fit.coef) - stats.norm.cdf(X @ fit.coef)) / eps))
    ame_err = abs(ame - fd)
    ok = worst_hc <= 1e-10 and worst_cl <= 1e-10 and worst_single <= 1e-10 and ame_err <= 1e-6
    record_criterion(
        8,
        "sandwich SEs, singleton clusters, probit AME",
        ok,
        f"HC {worst_hc:.1e}, cluster {worst_cl:.1e}, singleton vs HC*sqrt(n/(n-k)) {worst_single:.1e}, "
        f"AME vs finite difference {ame_err:.1e}",
    )
    assert ok


@pytest.mark.slow
def test_criterion_09_leisure_replication(record_criterion):
    target = published.LEISURE_REGRESSIONS["leisure_with_partner_children"]["slope"]
    runs = [leisure_run(seed) for seed in range(100)]
    est = [r.slope_estimated_index for r in runs]
    true = [r.slope_true_index for r in runs]
    hits, mc_se = coverage(est, target)
    hits_true, mc_se_true = coverage(true, target)
    ok = hits >= 90
    record_criterion(
        9,
        "leisure-with-partner-and-children slope 1.335, n=1,259",
        ok,
        f"estimated index: {hits}/100 within 2 MC SE (mean {np.mean(est):.3f}, MC SE {mc_se:.3f}); "
        f"generating index: {hits_true}/100 (mean {np.mean(true):.3f}, MC SE {mc_se_true:.3f}); n={runs[0].n}",
    )
    assert ok


@pytest.mark.slow
def test_criterion_10_information_treatment(record_criterion):
    ames = [two_arm_run(seed) for seed in range(100)]
    hits, mc_se = coverage(ames, -0.05)
    err = intercept_only_probit_error()
    ok = hits >= 90 and err <= 1e-8
    record_criterion(
        10,
        "probit AME -0.05 and intercept-only closed form",
        ok,
        f"{hits}/100 within 2 MC SE (mean {np.mean(ames):.4f}, MC SE {mc_se:.4f}); "
        f"|intercept - probit(mean y)| = {err:.1e}",
    )
    assert ok


@pytest.mark.slow
def test_criterion_11_determinism(record_criterion, tmp_path, monkeypatch):
    monkeypatch.delenv("TOLIDX_OUTPUT_DIR", raising=False)
    bundle = simulate_couple_dataset(GeneratorSpec(seed=11))
    write_bundle(bundle, tmp_path, default_config())
    raw = json.loads((tmp_path / "config.json").read_text())
    outputs = []
    for name in ("run_a", "run_b"):
        cfg = config_from_dict({**raw, "output_dir": name}, tmp_path)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = run_pipeline(cfg)
        assert res.exit_code == 0
        outputs.append(tmp_path / name)
    differing = []
    names = sorted(p.name for p in outputs[0].glob("*.json"))
    for fname in names:
        a = (outputs[0] / fname).read_bytes()
        b = (outputs[1] / fname).read_bytes()
        if fname == "manifest.json":
            ja, jb = json.loads(a), json.loads(b)
            ja.pop("created")
            jb.pop("created")
            same = ja == jb
        else:
            same = a == b
        if not same:
            differing.append(fname)
    ok = not differing and len(names) >= 7
    record_criterion(
        11,
        "byte-identical JSON across two runs",
        ok,
        f"{len(names)} JSON files compared, differing: {differing or 'none'}",
    )
    assert ok
