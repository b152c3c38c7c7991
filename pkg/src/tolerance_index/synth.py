"""Synthetic matched-couple data generated from the published measurement model.

The generator runs the measurement model forwards: latent factors are drawn
from N(0, Psi) and each indicator is ``mean + loading * latent + noise``. The
couple bundle goes further and writes survey and diary files that the ingest
layer accepts, with diaries filled so that the derived weekly hours hit
targets drawn from a regression layer.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Mapping

import numpy as np
import pandas as pd
from scipy import optimize, stats

from . import published
from .errors import InfeasibleTarget, NonPDPsi
from .ingest import DIARY_COLUMNS, SLOTS_PER_DAY, SURVEY_BASE_COLUMNS
from .registry import (
    BARGAINING_ITEM,
    ENGAGEMENT_ITEMS,
    GAP_INDICATORS,
    GENDER_NORM_ITEMS,
    INDICATOR_LATENT,
    INDICATORS,
    LATENTS,
    PARENTHOOD_ITEM,
    Taxonomy,
    default_registry,
    default_taxonomy,
)

SURVEY_INDICATORS = tuple(k for k in INDICATORS if k not in GAP_INDICATORS)
CLIP_WARNING_FRACTION = 0.05
HOURS_PER_WEEK = 168.0


def _default_loadings() -> dict[str, float]:
    return {k: published.loading(k).unstd for k in INDICATORS}


def _default_residuals() -> dict[str, float]:
    return {k: published.variance(k).residual for k in INDICATORS}


def _default_means() -> dict[str, float]:
    # gap means keep (female - male) / male comfortably above -1
    return {**{k: 50.0 for k in SURVEY_INDICATORS}, "gap_chores": 30.0, "gap_childcare": 12.0}


_LP = published.LEISURE_REGRESSIONS["leisure_with_partner"]
_LPC = published.LEISURE_REGRESSIONS["leisure_with_partner_children"]


@dataclass
class LeisureLayer:
    """Weekly leisure with the partner, as a linear function of the true index.

    Leisure with partner and children is ``intercept + slope * index`` plus a
    shared couple effect and an individual error. Leisure with the partner but
    without the children adds ``extra_intercept + extra_slope * index`` on top,
    so its total slope is ``slope + extra_slope``.
    """

    intercept: float = _LPC["constant"]
    slope: float = _LPC["slope"]
    extra_intercept: float = 3.2
    extra_slope: float = _LP["slope"] - _LPC["slope"]
    couple_sd: float = 3.0
    individual_sd: float = 3.0
    extra_sd: float = 1.0
    weekend_ratio: float = 2.0  # weekend-day leisure relative to a weekday


@dataclass
class GeneratorSpec:
    n_couples: int = published.N_COUPLES
    psi_masc_just: float = published.PSI_MASC_JUST
    psi_masc_gap: float = published.PSI_MASC_GAP
    psi_just_gap: float = 0.0
    loadings: dict[str, float] = field(default_factory=_default_loadings)
    residual_variances: dict[str, float] = field(default_factory=_default_residuals)
    means: dict[str, float] = field(default_factory=_default_means)
    clip: bool = True
    male_unpaid_hours: float = 1.5
    male_report_inflation: float = 0.10
    leisure: LeisureLayer = field(default_factory=LeisureLayer)
    reverse: dict[str, bool] = field(
        default_factory=lambda: {"Justification": False, "Masculinity": False, "GenderGapUnpaidWork": True}
    )
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.leisure, Mapping):
            self.leisure = LeisureLayer(**self.leisure)
        for name in ("loadings", "residual_variances", "means"):
            missing = set(INDICATORS) - set(getattr(self, name))
            if missing:
                raise ValueError(f"{name} lacks {sorted(missing)}")
        bad = [k for k in INDICATORS if not self.residual_variances[k] > 0]
        if bad:
            raise ValueError(f"residual variances must be positive: {bad}")
        if self.n_couples < 0:
            raise ValueError("n_couples must be non-negative")
        if not self.male_unpaid_hours > 0:
            raise ValueError("male_unpaid_hours must be positive")
        psi = self.psi
        if not np.all(np.linalg.eigvalsh(psi) > 0):
            raise NonPDPsi(f"latent covariance is not positive definite: {psi.tolist()}")

    @property
    def psi(self) -> np.ndarray:
        j, m, g = (LATENTS.index(x) for x in LATENTS)
        P = np.eye(3)
        P[j, m] = P[m, j] = self.psi_masc_just
        P[m, g] = P[g, m] = self.psi_masc_gap
        P[j, g] = P[g, j] = self.psi_just_gap
        return P

    @property
    def loading_matrix(self) -> np.ndarray:
        L = np.zeros((len(INDICATORS), len(LATENTS)))
        for i, k in enumerate(INDICATORS):
            L[i, LATENTS.index(INDICATOR_LATENT[k])] = self.loadings[k]
        return L

    @property
    def mean_vector(self) -> np.ndarray:
        return np.array([self.means[k] for k in INDICATORS])

    @property
    def residual_vector(self) -> np.ndarray:
        return np.array([self.residual_variances[k] for k in INDICATORS])

    @property
    def sigma(self) -> np.ndarray:
        L = self.loading_matrix
        return L @ self.psi @ L.T + np.diag(self.residual_vector)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping) -> "GeneratorSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown generator fields: {sorted(unknown)}")
        base = cls()
        kwargs = dict(data)
        for name in ("loadings", "residual_variances", "means"):
            if name in kwargs:
                kwargs[name] = {**getattr(base, name), **kwargs[name]}
        if "leisure" in kwargs:
            kwargs["leisure"] = LeisureLayer(**{**asdict(base.leisure), **kwargs["leisure"]})
        return cls(**kwargs)


@dataclass
class IndicatorSample:
    data: pd.DataFrame  # columns INDICATORS
    latents: pd.DataFrame  # columns LATENTS
    clip_fraction: float


def _clip_survey(X: np.ndarray, clip: bool) -> tuple[np.ndarray, float]:
    cols = [INDICATORS.index(k) for k in SURVEY_INDICATORS]
    block = X[:, cols]
    outside = (block < 0) | (block > 100)
    frac = float(outside.mean()) if block.size else 0.0
    if clip:
        X = X.copy()
        X[:, cols] = np.clip(block, 0.0, 100.0)
    return X, frac


def _indicators_from_latents(spec: GeneratorSpec, eta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    noise = rng.standard_normal((eta.shape[0], len(INDICATORS))) * np.sqrt(spec.residual_vector)
    return spec.mean_vector + eta @ spec.loading_matrix.T + noise


def simulate_indicators(spec: GeneratorSpec, n: int | None = None, clip: bool = False) -> IndicatorSample:
    """Independent respondents drawn from the measurement model.

    ``n`` defaults to two respondents per couple. The clip fraction is the
    share of survey-item cells outside [0, 100] before any clipping.
    """
    n = 2 * spec.n_couples if n is None else int(n)
    rng = np.random.default_rng([spec.seed, 1])
    eta = rng.multivariate_normal(np.zeros(3), spec.psi, size=n, method="cholesky")
    X = _indicators_from_latents(spec, eta, rng)
    X, frac = _clip_survey(X, clip)
    if frac > CLIP_WARNING_FRACTION:
        warnings.warn(f"{frac:.1%} of survey indicator values fall outside [0, 100]")
    return IndicatorSample(
        data=pd.DataFrame(X, columns=list(INDICATORS)),
        latents=pd.DataFrame(eta, columns=list(LATENTS)),
        clip_fraction=frac,
    )


@dataclass(frozen=True)
class PopulationIndex:
    """Composite index as the pipeline defines it, evaluated with the true parameters.

    Regression-method factor scores ``B (x - mu)`` are standardized by their
    population sd, reverse-coded, and weighted by the leading eigenvector of
    their population correlation matrix.
    """

    score_weights: np.ndarray  # latents x indicators
    score_sd: np.ndarray
    signs: np.ndarray
    weights: np.ndarray
    mean: np.ndarray

    def __call__(self, X: np.ndarray) -> np.ndarray:
        F = (np.asarray(X, float) - self.mean) @ self.score_weights.T
        return (F / self.score_sd * self.signs) @ self.weights


def population_index(spec: GeneratorSpec) -> PopulationIndex:
    L, P, Sigma = spec.loading_matrix, spec.psi, spec.sigma
    B = P @ L.T @ np.linalg.inv(Sigma)
    C = B @ Sigma @ B.T
    sd = np.sqrt(np.diag(C))
    signs = np.array([-1.0 if spec.reverse.get(k, False) else 1.0 for k in LATENTS])
    R = C / np.outer(sd, sd) * np.outer(signs, signs)
    vals, vecs = np.linalg.eigh(R)
    w = vecs[:, -1]
    if w[0] < 0:
        w = -w
    return PopulationIndex(B, sd, signs, w, spec.mean_vector)


def _couple_latents(spec: GeneratorSpec, rng: np.random.Generator, n_couples: int) -> np.ndarray:
    """Latents for 2 * n_couples respondents; the gap factor is shared within a couple."""
    P = spec.psi
    g = LATENTS.index("GenderGapUnpaidWork")
    jm = [i for i in range(3) if i != g]
    T = rng.standard_normal(n_couples)
    cross = P[np.ix_(jm, [g])][:, 0]
    cond_cov = P[np.ix_(jm, jm)] - np.outer(cross, cross)
    chol = np.linalg.cholesky(cond_cov)
    eta = np.empty((2 * n_couples, 3))
    T2 = np.repeat(T, 2)
    eta[:, g] = T2
    eta[:, jm] = T2[:, None] * cross + rng.standard_normal((2 * n_couples, 2)) @ chol.T
    return eta


def _split_weekly(hours: np.ndarray, weekend_ratio: float) -> tuple[np.ndarray, np.ndarray]:
    """Weekday and weekend slot counts whose weekly hours match ``hours``.

    The weekday count is floored and the remainder carried to the weekend
    count, so the weekly total is off by at most 1/6 hour. When the weekend
    count would overflow a day, the weekend is filled to within four slots
    of capacity and the weekday count absorbs the rest; since 2b mod 5 takes
    every residue over five consecutive b, the error bound is unchanged.
    """
    hours = np.asarray(hours, dtype=float)
    units = 6.0 * hours  # 5 a + 2 b
    a = np.floor(units / (5.0 + 2.0 * weekend_ratio) + 1e-9)
    b = np.rint((units - 5.0 * a) / 2.0)
    over = b > SLOTS_PER_DAY
    if np.any(over):
        u = np.atleast_1d(units)[np.atleast_1d(over)][:, None]
        cand_b = SLOTS_PER_DAY - np.arange(5.0)[None, :]
        cand_a = np.rint((u - 2.0 * cand_b) / 5.0)
        best = np.argmin(np.abs(u - 5.0 * cand_a - 2.0 * cand_b), axis=1)
        rows = np.arange(len(u))
        a = np.atleast_1d(a).copy()
        b = np.atleast_1d(b).copy()
        a[np.atleast_1d(over)] = cand_a[rows, best]
        b[np.atleast_1d(over)] = cand_b[rows, best]
        a, b = a.reshape(units.shape), b.reshape(units.shape)
    return a.astype(int), b.astype(int)


@dataclass
class CapacityReport:
    capped_days: int = 0
    capped_slots: int = 0
    gap_floor_hits: int = 0
    leisure_floor_hits: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


_CATEGORIES = ("chores", "childcare", "lpc", "lp_extra")


def _fit_day(counts: np.ndarray, report: CapacityReport) -> np.ndarray:
    """Trim the largest activity blocks until the day fits in 144 slots."""
    counts = counts.copy()
    excess = int(counts.sum()) - SLOTS_PER_DAY
    if excess > 0:
        report.capped_days += 1
        report.capped_slots += excess
        while excess > 0:
            i = int(np.argmax(counts))
            counts[i] -= 1
            excess -= 1
    return counts


_SLOT_STRINGS = np.array([str(i) for i in range(SLOTS_PER_DAY)], dtype=object)


def _day_columns(
    rid: str,
    kind: str,
    counts: np.ndarray,
    codes: Mapping[str, tuple[str, ...]],
    rng: np.random.Generator,
) -> dict[str, np.ndarray]:
    n_chores, n_child, n_lpc, n_extra = (int(c) for c in counts)
    filler = SLOTS_PER_DAY - n_chores - n_child - n_lpc - n_extra
    n_sleep = min(filler, 48)
    n_other = filler - n_sleep
    # night sleep, then the day's activities as contiguous blocks
    sizes = (n_chores, n_child, n_lpc + n_extra, n_other)
    pools = (codes["chores"], codes["childcare"], codes["leisure"], codes["other"])
    draws = rng.random(SLOTS_PER_DAY - n_sleep)
    parts = [np.full(n_sleep, "sleep", dtype=object)]
    pos = 0
    for size, pool in zip(sizes, pools):
        pick = (draws[pos : pos + size] * len(pool)).astype(int)
        parts.append(np.asarray(pool, dtype=object)[pick])
        pos += size
    primary = np.concatenate(parts)
    partner = np.full(SLOTS_PER_DAY, "0", dtype=object)
    children = np.full(SLOTS_PER_DAY, "0", dtype=object)
    start = n_sleep + n_chores
    children[start : start + n_child] = "1"
    start += n_child
    partner[start : start + n_lpc + n_extra] = "1"
    children[start : start + n_lpc] = "1"
    return {
        "respondent_id": np.full(SLOTS_PER_DAY, rid, dtype=object),
        "day_kind": np.full(SLOTS_PER_DAY, kind, dtype=object),
        "slot_index": _SLOT_STRINGS,
        "primary_code": primary,
        "secondary_code": np.full(SLOTS_PER_DAY, "", dtype=object),
        "with_partner": partner,
        "with_children": children,
    }


def _activity_codes(taxonomy: Taxonomy) -> dict[str, tuple[str, ...]]:
    codes = {g: taxonomy.codes_in(g) for g in ("chores", "childcare", "leisure", "other")}
    codes["leisure"] = tuple(c for c in codes["leisure"] if c != "sleep") or codes["leisure"]
    if "sleep" not in taxonomy:
        raise ValueError("taxonomy must contain the 'sleep' code used as diary filler")
    for g, c in codes.items():
        if not c:
            raise ValueError(f"taxonomy has no codes in group {g!r}")
    return codes


@dataclass
class CoupleBundle:
    survey: pd.DataFrame
    diary: pd.DataFrame
    taxonomy: Taxonomy
    truth: dict


def _fmt_number(x: float, decimals: int = 4) -> str:
    v = round(float(x), decimals)
    return str(int(v)) if v.is_integer() else repr(v)


def simulate_couple_dataset(spec: GeneratorSpec, taxonomy: Taxonomy | None = None) -> CoupleBundle:
    """Survey and diary tables for ``spec.n_couples`` couples plus the generating truth.

    Survey items are rounded to 4 decimals. Leisure targets come from the
    leisure layer applied to the population index of each respondent's
    (clipped) indicators; men's targets are raised by the report-inflation
    factor times the baseline intercept.
    """
    taxonomy = taxonomy or default_taxonomy()
    codes = _activity_codes(taxonomy)
    n_c = int(spec.n_couples)
    n = 2 * n_c
    rng = np.random.default_rng([spec.seed, 2])
    registry = default_registry()

    eta = _couple_latents(spec, rng, n_c)
    X = _indicators_from_latents(spec, eta, rng)
    # gap indicators are couple-level: keep the female member's draw for both
    for k in GAP_INDICATORS:
        j = INDICATORS.index(k)
        X[1::2, j] = X[0::2, j]
    X, clip_frac = _clip_survey(X, spec.clip)
    if clip_frac > CLIP_WARNING_FRACTION:
        warnings.warn(f"{clip_frac:.1%} of survey indicator values fall outside [0, 100]")
    report = CapacityReport()
    gap_cols = [INDICATORS.index(k) for k in GAP_INDICATORS]
    low = X[:, gap_cols] < -1.0
    report.gap_floor_hits = int(low[0::2].sum())
    X[:, gap_cols] = np.maximum(X[:, gap_cols], -1.0)
    idx = population_index(spec)(X) if n else np.zeros(0)

    lay = spec.leisure
    female = np.tile([True, False], n_c)
    u = np.repeat(rng.standard_normal(n_c) * lay.couple_sd, 2)
    lpc = lay.intercept + lay.slope * idx + u + rng.standard_normal(n) * lay.individual_sd
    extra = lay.extra_intercept + lay.extra_slope * idx + rng.standard_normal(n) * lay.extra_sd
    report.leisure_floor_hits = int((lpc < 0).sum() + (extra < 0).sum())
    lpc, extra = np.maximum(lpc, 0.0), np.maximum(extra, 0.0)
    lpc = lpc + np.where(female, 0.0, spec.male_report_inflation * lay.intercept)
    extra = extra + np.where(female, 0.0, spec.male_report_inflation * lay.extra_intercept)

    m_hours = spec.male_unpaid_hours
    unpaid = {}
    for dom, k in (("chores", "gap_chores"), ("childcare", "gap_childcare")):
        gap = X[:, INDICATORS.index(k)]
        unpaid[dom] = np.where(female, m_hours * (1.0 + gap), m_hours)
    targets = np.column_stack([unpaid["chores"], unpaid["childcare"], lpc, extra])
    if np.any(targets > HOURS_PER_WEEK) or np.any(targets.sum(axis=1) > HOURS_PER_WEEK):
        worst = float(max(targets.max(initial=0.0), targets.sum(axis=1).max(initial=0.0)))
        raise InfeasibleTarget(f"weekly target of {worst:.2f} h exceeds {HOURS_PER_WEEK:g} h")

    a = np.empty((n, 4), dtype=int)
    b = np.empty((n, 4), dtype=int)
    for c, ratio in enumerate((1.0, 1.0, lay.weekend_ratio, lay.weekend_ratio)):
        a[:, c], b[:, c] = _split_weekly(targets[:, c], ratio)

    couple_ids = [f"c{i + 1:05d}" for i in range(n_c)]
    rids = [f"r{i + 1:05d}" for i in range(n)]
    diary_parts: dict[str, list[np.ndarray]] = {c: [] for c in DIARY_COLUMNS}
    for i in range(n):
        for kind, counts in (("weekday", a[i]), ("weekend", b[i])):
            cols = _day_columns(rids[i], kind, _fit_day(counts, report), codes, rng)
            for c in DIARY_COLUMNS:
                diary_parts[c].append(cols[c])
    if n:
        diary = pd.DataFrame({c: np.concatenate(diary_parts[c]) for c in DIARY_COLUMNS})
    else:
        diary = pd.DataFrame(columns=list(DIARY_COLUMNS))

    # survey block
    j, m = LATENTS.index("Justification"), LATENTS.index("Masculinity")
    norms = np.clip(50 + 12 * eta[:, [m]] + rng.standard_normal((n, len(GENDER_NORM_ITEMS))) * 15, 0, 100)
    parenthood = np.clip(50 + 10 * eta[:, m] + rng.standard_normal(n) * 18, 0, 100)
    bargaining = rng.choice([1, 2, 3], size=n, p=[0.3, 0.5, 0.2])
    engagement = np.clip(50 - 5 * eta[:, [j]] + rng.standard_normal((n, len(ENGAGEMENT_ITEMS))) * 20, 0, 100)
    education = rng.integers(8, 21, size=n)
    employed = rng.random(n) < 0.7
    arm = np.where(rng.random(n) < 0.5, "physical", "psychological")
    treated = rng.random(n) < 0.5

    rows = []
    for i in range(n):
        row = {
            "respondent_id": rids[i],
            "couple_id": couple_ids[i // 2],
            "gender": "female" if female[i] else "male",
            "education_years": str(int(education[i])),
            "employed": str(int(employed[i])),
            "vignette_arm": arm[i],
            "info_treated": str(int(treated[i])),
            "weight": "",
        }
        for k in SURVEY_INDICATORS:
            row[k] = _fmt_number(X[i, INDICATORS.index(k)])
        for c, k in enumerate(GENDER_NORM_ITEMS):
            row[k] = _fmt_number(norms[i, c])
        row[PARENTHOOD_ITEM] = _fmt_number(parenthood[i])
        row[BARGAINING_ITEM] = str(int(bargaining[i]))
        for c, k in enumerate(ENGAGEMENT_ITEMS):
            row[k] = _fmt_number(engagement[i, c])
        rows.append(row)
    survey = pd.DataFrame(rows, columns=list(SURVEY_BASE_COLUMNS) + list(registry.keys))

    pop = population_index(spec)
    truth = {
        "generator": spec.to_dict(),
        "latent_order": list(LATENTS),
        "indicator_order": list(INDICATORS),
        "survey_clip_fraction": clip_frac,
        "capacity": report.to_dict(),
        "population_index": {
            "weights": pop.weights.tolist(),
            "score_sd": pop.score_sd.tolist(),
            "reverse": {k: bool(s < 0) for k, s in zip(LATENTS, pop.signs)},
        },
        "respondents": {
            "respondent_id": rids,
            "couple_id": [couple_ids[i // 2] for i in range(n)],
            **{k: eta[:, c].tolist() for c, k in enumerate(LATENTS)},
            "index": idx.tolist(),
            **{f"target_{k}": X[:, INDICATORS.index(k)].tolist() for k in GAP_INDICATORS},
            "target_leisure_with_partner_children": lpc.tolist(),
            "target_leisure_with_partner": (lpc + extra).tolist(),
            "target_chores_hours": unpaid["chores"].tolist(),
            "target_childcare_hours": unpaid["childcare"].tolist(),
        },
    }
    return CoupleBundle(survey=survey, diary=diary, taxonomy=taxonomy, truth=truth)


def diary_for_targets(
    respondent_id: str,
    weekly: Mapping[str, float],
    taxonomy: Taxonomy | None = None,
    weekend_ratio: float = 2.0,
    seed: int = 0,
) -> pd.DataFrame:
    """Diary rows (weekday + weekend) realizing weekly hours per category.

    ``weekly`` may hold ``chores``, ``childcare``, ``lpc`` (leisure with
    partner and children) and ``lp_extra`` (leisure with partner only).
    """
    taxonomy = taxonomy or default_taxonomy()
    codes = _activity_codes(taxonomy)
    h = np.array([float(weekly.get(c, 0.0)) for c in _CATEGORIES])
    if np.any(h < 0) or h.sum() > HOURS_PER_WEEK:
        raise InfeasibleTarget(f"weekly targets {dict(weekly)} cannot fit in {HOURS_PER_WEEK:g} h")
    ratios = np.array([1.0, 1.0, weekend_ratio, weekend_ratio])
    a = np.empty(4, dtype=int)
    b = np.empty(4, dtype=int)
    for c in range(4):
        a[c], b[c] = _split_weekly(h[c], ratios[c])
    report = CapacityReport()
    rng = np.random.default_rng(seed)
    frames = []
    for kind, counts in (("weekday", a), ("weekend", b)):
        frames.append(pd.DataFrame(_day_columns(respondent_id, kind, _fit_day(counts, report), codes, rng)))
    return pd.concat(frames, ignore_index=True)


def write_bundle(bundle: CoupleBundle, out_dir: str | Path, config: Mapping | None = None) -> dict[str, Path]:
    """Write survey.csv, diary.csv, taxonomy.csv, truth.json (and config.json if given)."""
    from .registry import write_taxonomy

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "survey": out / "survey.csv",
        "diary": out / "diary.csv",
        "taxonomy": out / "taxonomy.csv",
        "truth": out / "truth.json",
    }
    bundle.survey.to_csv(paths["survey"], index=False, lineterminator="\n")
    bundle.diary.to_csv(paths["diary"], index=False, lineterminator="\n")
    write_taxonomy(bundle.taxonomy, paths["taxonomy"])
    paths["truth"].write_text(json.dumps(bundle.truth, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    if config is not None:
        paths["config"] = out / "config.json"
        paths["config"].write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    return paths


@dataclass
class TwoArmSpec:
    """Probit design with a binary treatment of known average marginal effect.

    ``y = 1[b0 + b1 * treated + bx * x + e > 0]`` with ``x, e ~ N(0, 1)``;
    ``b1`` is solved so the population AME of ``treated`` equals ``ame``.
    """

    n: int = published.INFORMATION_TREATMENT_AME["n"]
    ame: float = -0.05
    intercept: float = 0.0
    covariate_coef: float = 0.5
    treated_share: float = 0.5
    seed: int = 0

    def treatment_coef(self) -> float:
        s = math.sqrt(1.0 + self.covariate_coef**2)
        base = stats.norm.cdf(self.intercept / s)

        def gap(b1: float) -> float:
            return stats.norm.cdf((self.intercept + b1) / s) - base - self.ame

        return float(optimize.brentq(gap, -10.0, 10.0, xtol=1e-14))


def simulate_two_arm(spec: TwoArmSpec) -> pd.DataFrame:
    rng = np.random.default_rng([spec.seed, 3])
    treated = (rng.random(spec.n) < spec.treated_share).astype(float)
    x = rng.standard_normal(spec.n)
    latent = spec.intercept + spec.treatment_coef() * treated + spec.covariate_coef * x
    y = (latent + rng.standard_normal(spec.n) > 0).astype(float)
    return pd.DataFrame({"y": y, "treated": treated, "x": x})
