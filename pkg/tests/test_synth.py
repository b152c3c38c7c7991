from __future__ import annotations

import json
import warnings

import numpy as np
import pandas as pd
import pytest
from scipy import stats
from hypothesis import given, settings
from hypothesis import strategies as st

from tolerance_index import published
from tolerance_index.derive import LEISURE_WITH_PARTNER, derive_dataset, weekly_hours
from tolerance_index.errors import InfeasibleTarget, NonPDPsi
from tolerance_index.ingest import (
    diary_days_from_frame,
    load_dataset,
    match_couples,
    survey_responses_from_frame,
)
from tolerance_index.registry import INDICATORS, default_registry, default_taxonomy, load_taxonomy
from tolerance_index.synth import (
    GeneratorSpec,
    TwoArmSpec,
    diary_for_targets,
    population_index,
    simulate_couple_dataset,
    simulate_indicators,
    simulate_two_arm,
    write_bundle,
)

REG = default_registry()
TAX = default_taxonomy()


def _quiet_indicators(spec, n):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return simulate_indicators(spec, n=n)


def test_physical_strength_variance():
    sample = _quiet_indicators(GeneratorSpec(seed=1), 100_000)
    var = sample.data["physical_strength"].var()
    assert var == pytest.approx(published.variance("physical_strength").fitted, rel=0.02)


def test_indicators_deterministic():
    a = _quiet_indicators(GeneratorSpec(seed=9), 500)
    b = _quiet_indicators(GeneratorSpec(seed=9), 500)
    c = _quiet_indicators(GeneratorSpec(seed=10), 500)
    pd.testing.assert_frame_equal(a.data, b.data)
    assert not a.data.equals(c.data)


def test_noiseless_limit():
    spec = GeneratorSpec(residual_variances={k: 1e-8 for k in INDICATORS}, seed=2)
    data = simulate_indicators(spec, n=2000).data
    R = data.corr()
    assert R.loc["seriousness", "justification"] == pytest.approx(1.0, abs=1e-6)
    assert R.loc["physical_strength", "drinking"] == pytest.approx(1.0, abs=1e-6)


def test_clip_fraction_reported():
    raw = _quiet_indicators(GeneratorSpec(seed=3), 20_000)
    clipped = simulate_indicators(GeneratorSpec(seed=3), n=20_000, clip=True)
    survey = clipped.data.drop(columns=["gap_chores", "gap_childcare"])
    assert clipped.clip_fraction == raw.clip_fraction
    assert 0 < clipped.clip_fraction < 0.05
    assert raw.data.drop(columns=["gap_chores", "gap_childcare"]).to_numpy().min() < 0
    assert survey.to_numpy().min() >= 0 and survey.to_numpy().max() <= 100


def test_non_pd_psi_rejected():
    with pytest.raises(NonPDPsi):
        GeneratorSpec(psi_masc_just=0.99, psi_masc_gap=-0.9, psi_just_gap=0.9)


def test_spec_from_dict_merges_and_rejects_unknown():
    spec = GeneratorSpec.from_dict({"n_couples": 3, "loadings": {"drinking": 1.0}, "leisure": {"slope": 0.5}})
    assert spec.loadings["drinking"] == 1.0 and spec.loadings["seriousness"] == GeneratorSpec().loadings["seriousness"]
    assert spec.leisure.slope == 0.5
    with pytest.raises(ValueError):
        GeneratorSpec.from_dict({"bogus": 1})
    assert GeneratorSpec.from_dict(GeneratorSpec().to_dict()) == GeneratorSpec()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 * 168 * 6).map(lambda k: k / 12))
def test_diary_target_within_quantization(target):
    frame = diary_for_targets("r1", {"lp_extra": target}, TAX)
    wd, we = diary_days_from_frame(frame, TAX)
    assert abs(weekly_hours(wd, we, LEISURE_WITH_PARTNER).hours - target) <= 1 / 3 + 1e-9


def test_diary_target_exact_example():
    frame = diary_for_targets("r1", {"lpc": 30.0, "lp_extra": 18.0, "chores": 10.0}, TAX)
    wd, we = diary_days_from_frame(frame, TAX)
    assert weekly_hours(wd, we, LEISURE_WITH_PARTNER).hours == pytest.approx(48.0, abs=1 / 3)


def test_infeasible_target():
    with pytest.raises(InfeasibleTarget):
        diary_for_targets("r1", {"chores": 100.0, "lpc": 80.0}, TAX)
    spec = GeneratorSpec(n_couples=5, leisure={"intercept": 400.0})
    with pytest.raises(InfeasibleTarget):
        simulate_couple_dataset(spec)


def test_empty_bundle_is_schema_valid(tmp_path):
    bundle = simulate_couple_dataset(GeneratorSpec(n_couples=0))
    paths = write_bundle(bundle, tmp_path)
    ds = load_dataset(paths["survey"], [paths["diary"]], load_taxonomy(paths["taxonomy"]), REG)
    assert ds.couples == [] and ds.summary()["n_couples"] == 0
    assert pd.read_csv(paths["survey"]).shape[0] == 0


def test_bundle_deterministic_and_truthful(tmp_path):
    spec = GeneratorSpec(n_couples=25, seed=12)
    a, b = simulate_couple_dataset(spec), simulate_couple_dataset(spec)
    pd.testing.assert_frame_equal(a.survey, b.survey)
    pd.testing.assert_frame_equal(a.diary, b.diary)
    assert json.dumps(a.truth, sort_keys=True) == json.dumps(b.truth, sort_keys=True)
    truth = a.truth
    assert truth["generator"]["seed"] == 12
    assert len(truth["respondents"]["respondent_id"]) == 50
    paths = write_bundle(a, tmp_path, config={"version": 1})
    assert json.loads(paths["config"].read_text()) == {"version": 1}


def test_bundle_targets_realized():
    bundle = simulate_couple_dataset(GeneratorSpec(n_couples=60, seed=13))
    couples, report = match_couples(
        survey_responses_from_frame(bundle.survey, REG), diary_days_from_frame(bundle.diary, bundle.taxonomy)
    )
    assert len(couples) == 60 and not report.excluded
    derived = derive_dataset(couples).respondents
    truth = bundle.truth["respondents"]
    assert list(derived["respondent_id"]) == list(truth["respondent_id"])
    err = np.abs(derived["leisure_with_partner_children"].to_numpy() - np.asarray(truth["target_leisure_with_partner_children"], float))
    assert err.max() <= 1 / 3 + 1e-9
    females = derived[derived["female"] == 1]
    assert np.all(females["gap_chores"].to_numpy() >= -1)


def test_population_index_variance_is_leading_eigenvalue():
    spec = GeneratorSpec()
    pop = population_index(spec)
    B = pop.score_weights
    C = B @ spec.sigma @ B.T
    R = C / np.outer(pop.score_sd, pop.score_sd) * np.outer(pop.signs, pop.signs)
    lead = np.linalg.eigvalsh(R)[-1]
    idx = pop(_quiet_indicators(GeneratorSpec(seed=14), 100_000).data.to_numpy())
    assert idx.var() == pytest.approx(lead, rel=0.02)
    assert abs(idx.mean()) < 0.02
    assert np.linalg.norm(pop.weights) == pytest.approx(1.0) and pop.weights[0] > 0


def test_two_arm_generator():
    spec = TwoArmSpec(seed=1)
    df = simulate_two_arm(spec)
    assert len(df) == spec.n and set(df["y"].unique()) <= {0.0, 1.0}
    b0, b1, bx = spec.intercept, spec.treatment_coef(), spec.covariate_coef
    s = np.sqrt(1 + bx**2)
    assert stats.norm.cdf((b0 + b1) / s) - stats.norm.cdf(b0 / s) == pytest.approx(spec.ame, abs=1e-10)
