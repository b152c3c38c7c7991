from __future__ import annotations

import math
import warnings

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tolerance_index.composite import (
    alpha_from_covariance,
    build_composite,
    cronbach_alpha,
    index_distribution,
)
from tolerance_index.errors import DegenerateCorrelation, TooFewItems

NAMES = ["Justification", "Masculinity", "GenderGapUnpaidWork"]
NO_REVERSE = {"GenderGapUnpaidWork": False}


def _scores(n=500, seed=0, rho=0.5):
    rng = np.random.default_rng(seed)
    common = rng.standard_normal(n)
    X = rho * common[:, None] + math.sqrt(1 - rho**2) * rng.standard_normal((n, 3))
    X[:, 2] *= -1
    return pd.DataFrame(X, columns=NAMES)


def test_identical_inputs():
    z = np.random.default_rng(0).standard_normal(100)
    df = pd.DataFrame({k: z for k in NAMES})
    model, index = build_composite(df, reverse=NO_REVERSE)
    assert np.allclose(model.weights, np.ones(3) / math.sqrt(3))
    zs = (z - z.mean()) / z.std(ddof=1)
    assert np.allclose(index, math.sqrt(3) * zs)
    assert abs(index.mean()) < 1e-12


def test_independent_inputs_warn():
    X = np.random.default_rng(1).standard_normal((20_000, 3))
    with pytest.warns(UserWarning, match="unstable"):
        model, _ = build_composite(pd.DataFrame(X, columns=NAMES))
    assert model.explained_variance == pytest.approx(1 / 3, abs=0.02)


def test_gap_factor_reversed_by_default():
    model, _ = build_composite(_scores())
    assert model.reverse == (False, False, True)
    assert np.all(model.weights > 0)
    assert np.linalg.norm(model.weights) == pytest.approx(1.0)
    assert 1 / 3 <= model.explained_variance <= 1


def test_sign_flip_of_one_input():
    df = _scores(seed=2)
    model, index = build_composite(df)
    flipped = df.assign(Masculinity=-df["Masculinity"])
    model2, index2 = build_composite(flipped)
    assert model2.weights[1] == pytest.approx(-model.weights[1])
    assert np.allclose(index2, index)


def test_reverse_toggle_bit_identical():
    df = _scores(seed=3)
    _, a = build_composite(df)
    _, b = build_composite(df.assign(GenderGapUnpaidWork=-df["GenderGapUnpaidWork"]), reverse=NO_REVERSE)
    assert np.array_equal(a.to_numpy(), b.to_numpy())


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.floats(0.1, 50), min_size=3, max_size=3),
    st.lists(st.floats(-100, 100), min_size=3, max_size=3),
)
def test_ranking_invariant_to_positive_affine_rescaling(scale, shift):
    df = _scores(n=200, seed=4)
    _, base = build_composite(df)
    _, moved = build_composite(df * np.array(scale) + np.array(shift))
    assert np.allclose(moved, base, atol=1e-8)


def test_missing_rows_get_missing_index():
    df = _scores(n=50)
    df.iloc[3, 1] = np.nan
    _, index = build_composite(df)
    assert np.isnan(index.iloc[3]) and index.notna().sum() == 49


def test_degenerate_inputs():
    with pytest.raises(DegenerateCorrelation):
        build_composite(_scores(n=3))
    df = _scores(n=20).assign(Masculinity=1.0)
    with pytest.raises(DegenerateCorrelation):
        build_composite(df)


def test_alpha_closed_forms():
    R = np.full((3, 3), 0.5)
    np.fill_diagonal(R, 1.0)
    assert alpha_from_covariance(R).alpha == pytest.approx(0.75)
    C = np.full((3, 3), 0.263)
    np.fill_diagonal(C, 0.489)
    assert alpha_from_covariance(C).alpha == pytest.approx(0.777, abs=5e-4)
    unit = np.full((3, 3), 0.263)
    np.fill_diagonal(unit, 1.0)
    assert alpha_from_covariance(unit).alpha == pytest.approx(0.517, abs=5e-4)


def test_alpha_uncorrelated_and_errors():
    X = np.random.default_rng(5).standard_normal((50_000, 3))
    assert abs(cronbach_alpha(X).alpha) < 0.02
    with pytest.raises(TooFewItems):
        cronbach_alpha(X[:, :1])


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 1000))
def test_alpha_scale_invariant(c):
    X = _scores(n=100, seed=6).to_numpy()
    assert cronbach_alpha(c * X).alpha == pytest.approx(cronbach_alpha(X).alpha, rel=1e-9)


def test_distribution_normal_skewness():
    d = index_distribution(np.random.default_rng(7).standard_normal(100_000))
    assert abs(d.skewness) < 0.1
    assert len(d.grid) == 512
    assert np.trapezoid(d.density, d.grid) == pytest.approx(1.0, abs=1e-3)


def test_distribution_mode_at_constant():
    x = np.r_[np.zeros(99), 50.0]
    assert abs(index_distribution(x).mode) < 1.0


def test_distribution_right_skew():
    x = np.random.default_rng(8).gamma(2.0, size=5000)
    d = index_distribution(x)
    assert d.skewness > 0 and d.mode < d.mean


def test_distribution_needs_thirty_values():
    with pytest.raises(ValueError):
        index_distribution(np.arange(10.0))
