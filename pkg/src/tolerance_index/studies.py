"""Monte Carlo studies shared by the experiment scripts and the acceptance suite."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import stats

from . import published
from .composite import build_composite
from .derive import derive_dataset
from .factor import parallel_analysis
from .ingest import diary_days_from_frame, match_couples, survey_responses_from_frame
from .registry import INDICATORS, default_registry
from .sem import SemSpec, factor_scores, fit_ml, fit_statistics
from .synth import GeneratorSpec, TwoArmSpec, simulate_couple_dataset, simulate_indicators, simulate_two_arm
from .validate import fit_frame, probit_ame, probit_fit


# ------------------------------------------------------------ published tables


def table_consistency() -> list[dict]:
    """Per-indicator checks linking the loading and variance tables."""
    rows = []
    for k in INDICATORS:
        lo, va = published.loading(k), published.variance(k)
        std_implied = lo.unstd / math.sqrt(va.fitted)
        r2 = va.predicted / va.fitted
        rows.append(
            {
                "indicator": k,
                "std_implied": std_implied,
                "std_published": lo.std,
                "std_diff": std_implied - lo.std,
                "unstd_sq": lo.unstd**2,
                "predicted": va.predicted,
                "unstd_sq_rel_diff": (lo.unstd**2 - va.predicted) / va.predicted,
                "r2_implied": r2,
                "r2_published": va.r2,
                "r2_diff": r2 - va.r2,
                "mc_implied": math.sqrt(r2),
                "mc_published": va.mc,
                "mc_diff": math.sqrt(r2) - va.mc,
                "mc2_equals_r2": va.mc2 == va.r2,
            }
        )
    return rows


# ------------------------------------------------------------ parameter recovery


@dataclass
class RecoveryResult:
    n: int
    seed: int
    loading_rel_error: dict[str, float]
    residual_rel_error: dict[str, float]
    psi: dict[str, float]
    srmr: float
    cd: float
    robust_to_ml_se: dict[str, float] = field(default_factory=dict)


def recovery_study(n: int = 100_000, seed: int = 0, spec: GeneratorSpec | None = None) -> RecoveryResult:
    spec = spec or GeneratorSpec(seed=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sample = simulate_indicators(spec, n=n)
    sem_spec = SemSpec.default()
    est = fit_ml(sem_spec, sample.data)
    lam_err = {
        k: float((est.loadings[i] - spec.loadings[k]) / spec.loadings[k]) for i, k in enumerate(sem_spec.indicators)
    }
    eps_err = {
        k: float((est.residual_variances[i] - spec.residual_variances[k]) / spec.residual_variances[k])
        for i, k in enumerate(sem_spec.indicators)
    }
    psi = {f"{sem_spec.latents[a]}-{sem_spec.latents[b]}": float(est.psi[a, b]) for a, b in sem_spec.pairs}
    fs = fit_statistics(est)
    ratio = dict(zip(sem_spec.param_names, (est.se / est.se_ml).tolist()))
    return RecoveryResult(n, spec.seed, lam_err, eps_err, psi, fs.srmr, fs.cd, ratio)


# ------------------------------------------------------------ parallel analysis


def parallel_analysis_study(
    repetitions: int = 100,
    n: int = 2 * published.N_COUPLES,
    noise: bool = False,
    replications: int = 1000,
    percentile: float = 95.0,
    pa_seed: int = 0,
) -> list[int]:
    """Retained-component counts over seeded data sets (seeds 0..repetitions-1).

    The reference distribution uses the same seed in every repetition, so it
    is computed once and cached.
    """
    counts = []
    for seed in range(repetitions):
        if noise:
            data = np.random.default_rng([seed, 99]).standard_normal((n, len(INDICATORS)))
        else:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                data = simulate_indicators(GeneratorSpec(seed=seed), n=n).data.to_numpy()
        counts.append(parallel_analysis(data, replications, percentile, pa_seed).n_retained)
    return counts


def population_pa_check(n: int = 2 * published.N_COUPLES, replications: int = 1000, seed: int = 0) -> dict:
    """Model-implied correlation eigenvalues against the random-data thresholds."""
    spec = GeneratorSpec()
    S = spec.sigma
    d = np.sqrt(np.diag(S))
    eig = np.linalg.eigvalsh(S / np.outer(d, d))[::-1]
    from .factor import _reference_eigenvalues

    thr = np.percentile(_reference_eigenvalues(n, len(INDICATORS), replications, seed), 95, axis=0)
    return {"population_eigenvalues": eig.tolist(), "thresholds": thr.tolist()}


# ------------------------------------------------------------ leisure replication


@dataclass
class LeisureRun:
    seed: int
    n: int
    slope_true_index: float
    slope_estimated_index: float
    se_estimated_index: float


def _couples_from_bundle(bundle):
    surveys = survey_responses_from_frame(bundle.survey, default_registry())
    days = diary_days_from_frame(bundle.diary, bundle.taxonomy)
    couples, _ = match_couples(surveys, days)
    return couples


def leisure_run(seed: int, n_respondents: int = published.LEISURE_REGRESSIONS["leisure_with_partner_children"]["n"]) -> LeisureRun:
    """One end-to-end replication: generate, ingest, derive, fit, score, regress.

    Enough couples are generated to cover ``n_respondents``; the last
    respondent is dropped when ``n_respondents`` is odd.
    """
    n_couples = (n_respondents + 1) // 2
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        bundle = simulate_couple_dataset(GeneratorSpec(n_couples=n_couples, seed=seed))
        frame = derive_dataset(_couples_from_bundle(bundle)).respondents.iloc[:n_respondents].copy()
        frame["true_index"] = bundle.truth["respondents"]["index"][:n_respondents]
        est = fit_ml(SemSpec.default(), frame)
        scores = factor_scores(est, frame).scores
        _, index = build_composite(scores, inputs=list(scores.columns))
    frame["index"] = index.to_numpy()
    outcome = "leisure_with_partner_children"
    true_fit = fit_frame(frame, outcome, ["true_index"], "cluster", "couple_id")
    est_fit = fit_frame(frame, outcome, ["index"], "cluster", "couple_id")
    return LeisureRun(
        seed,
        est_fit.n,
        true_fit.coefficient("true_index"),
        est_fit.coefficient("index"),
        est_fit.std_error("index"),
    )


def coverage(estimates, target: float, k: float = 2.0) -> tuple[int, float]:
    """Count of estimates within ``k`` Monte Carlo SEs of ``target``.

    The Monte Carlo SE is the standard deviation of the estimates across runs.
    """
    x = np.asarray(estimates, dtype=float)
    mc_se = float(x.std(ddof=1))
    return int((np.abs(x - target) <= k * mc_se).sum()), mc_se


# ------------------------------------------------------------ information treatment


def two_arm_run(seed: int, ame: float = -0.05) -> float:
    df = simulate_two_arm(TwoArmSpec(ame=ame, seed=seed))
    X = np.column_stack([df["treated"], df["x"], np.ones(len(df))])
    fit = probit_fit(df["y"].to_numpy(), X, ["treated", "x", "const"])
    return probit_ame(fit, X, "treated").ame


def intercept_only_probit_error(seed: int = 0, n: int = 1000, p: float = 0.7) -> float:
    y = (np.random.default_rng(seed).random(n) < p).astype(float)
    fit = probit_fit(y, np.ones((n, 1)), ["const"])
    return abs(float(fit.coef[0]) - float(stats.norm.ppf(y.mean())))


def summarize(values) -> dict:
    x = np.asarray(values, dtype=float)
    return {"mean": float(x.mean()), "sd": float(x.std(ddof=1)), "min": float(x.min()), "max": float(x.max())}


def runs_frame(runs) -> pd.DataFrame:
    return pd.DataFrame([r.__dict__ for r in runs])
