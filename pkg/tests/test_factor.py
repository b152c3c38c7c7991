from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tolerance_index.errors import ConstantColumn, TooFewRows
from tolerance_index.factor import (
    correlation_matrix,
    parallel_analysis,
    pca_eigenvalues,
    retained_count,
)


def test_perfect_correlation():
    x = np.arange(10.0)
    corr = correlation_matrix(np.column_stack([x, 3 * x + 1]))
    assert corr.matrix[0, 1] == pytest.approx(1.0)
    assert np.all(np.diag(corr.matrix) == 1.0)


def test_independent_noise_off_diagonals_small():
    X = np.random.default_rng(0).standard_normal((100_000, 4))
    R = correlation_matrix(X).matrix
    assert np.abs(R[~np.eye(4, dtype=bool)]).max() < 0.02


def test_listwise_deletion_counted():
    X = np.random.default_rng(1).standard_normal((20, 3))
    X[[2, 5], 1] = np.nan
    corr = correlation_matrix(X)
    assert corr.n == 18 and corr.n_dropped == 2


def test_correlation_errors():
    with pytest.raises(ConstantColumn):
        correlation_matrix(np.column_stack([np.ones(10), np.arange(10.0)]))
    with pytest.raises(TooFewRows):
        correlation_matrix(np.random.default_rng(0).standard_normal((3, 3)))


def test_eigenvalue_closed_forms():
    assert np.allclose(pca_eigenvalues(np.eye(5)), 1.0)
    r = 0.3
    assert np.allclose(pca_eigenvalues(np.array([[1, r], [r, 1]])), [1 + r, 1 - r])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.permutations(range(5)))
def test_eigenvalues_sum_and_permutation(seed, perm):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((50, 5)) @ rng.standard_normal((5, 5))
    ev = pca_eigenvalues(correlation_matrix(X))
    assert ev.sum() == pytest.approx(5.0, abs=1e-8)
    assert np.all(np.diff(ev) <= 1e-12)
    assert np.allclose(pca_eigenvalues(correlation_matrix(X[:, list(perm)])), ev, atol=1e-10)


def test_retained_prefix_is_contiguous():
    assert retained_count(np.array([3, 0.5, 2]), np.array([1, 1, 1])) == 1
    assert retained_count(np.array([3, 2, 2]), np.array([1, 1, 1])) == 3
    assert retained_count(np.array([0.5, 2]), np.array([1, 1])) == 0


def test_parallel_analysis_deterministic_and_structured():
    rng = np.random.default_rng(2)
    f = rng.standard_normal((500, 1))
    X = np.hstack([f + 0.5 * rng.standard_normal((500, 3)), rng.standard_normal((500, 3))])
    a = parallel_analysis(X, replications=200, seed=7)
    b = parallel_analysis(X, replications=200, seed=7)
    assert a == b
    assert a.n_retained == 1
    assert a.to_dict()["reference"] == "standard normal"


def test_threshold_monotone_in_percentile():
    X = np.random.default_rng(3).standard_normal((200, 4))
    lo = parallel_analysis(X, replications=200, percentile=60, seed=1).threshold_eigenvalues
    hi = parallel_analysis(X, replications=200, percentile=95, seed=1).threshold_eigenvalues
    assert np.all(np.array(hi) >= np.array(lo))


def test_parallel_analysis_argument_checks():
    X = np.random.default_rng(0).standard_normal((50, 3))
    with pytest.raises(ValueError):
        parallel_analysis(X, replications=50)
    with pytest.raises(ValueError):
        parallel_analysis(X, percentile=40)
