"""Correlation structure, PCA eigenvalues and Horn's parallel analysis."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
import pandas as pd

from .errors import ConstantColumn, TooFewRows


@dataclass(frozen=True)
class CovMatrix:
    names: tuple[str, ...]
    n: int
    matrix: np.ndarray
    n_dropped: int = 0

    def __post_init__(self):
        m = self.matrix
        if m.shape != (len(self.names), len(self.names)):
            raise ValueError("matrix shape does not match names")
        if not np.allclose(m, m.T, atol=1e-12):
            raise ValueError("matrix is not symmetric")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise ValueError("matrix is not positive semidefinite")


def _matrix(data, names: Sequence[str] | None) -> tuple[np.ndarray, tuple[str, ...]]:
    if isinstance(data, pd.DataFrame):
        cols = list(names) if names is not None else list(data.columns)
        return data.loc[:, cols].to_numpy(dtype=float), tuple(map(str, cols))
    X = np.asarray(data, dtype=float)
    if names is None:
        names = [f"x{i}" for i in range(X.shape[1])]
    return X, tuple(names)


def correlation_matrix(data, names: Sequence[str] | None = None) -> CovMatrix:
    """Pearson correlations after listwise deletion of incomplete rows."""
    X, names = _matrix(data, names)
    complete = ~np.isnan(X).any(axis=1)
    X = X[complete]
    n, p = X.shape
    if n < p + 1:
        raise TooFewRows(f"{n} complete rows for {p} variables")
    sd = X.std(axis=0)
    if np.any(sd == 0):
        raise ConstantColumn(f"constant column {names[int(np.argmax(sd == 0))]!r}")
    R = np.corrcoef(X, rowvar=False)
    R = (R + R.T) / 2.0
    np.fill_diagonal(R, 1.0)
    return CovMatrix(names, n, R, int((~complete).sum()))


def pca_eigenvalues(corr: CovMatrix | np.ndarray) -> np.ndarray:
    m = corr.matrix if isinstance(corr, CovMatrix) else np.asarray(corr, dtype=float)
    return np.linalg.eigvalsh(m)[::-1].copy()


@dataclass(frozen=True)
class ParallelAnalysisResult:
    observed_eigenvalues: tuple[float, ...]
    threshold_eigenvalues: tuple[float, ...]
    n_retained: int
    replications: int
    percentile: float
    seed: int
    n: int

    def to_dict(self) -> dict:
        return {
            "observed_eigenvalues": list(self.observed_eigenvalues),
            "threshold_eigenvalues": list(self.threshold_eigenvalues),
            "n_retained": self.n_retained,
            "replications": self.replications,
            "percentile": self.percentile,
            "seed": self.seed,
            "n": self.n,
            "reference": "standard normal",
        }


@lru_cache(maxsize=16)
def _reference_eigenvalues(n: int, p: int, replications: int, seed: int) -> np.ndarray:
    """Correlation eigenvalues of iid normal n x p matrices, one row per replication."""
    out = np.empty((replications, p))
    for r in range(replications):
        rng = np.random.default_rng([seed, r])
        Z = rng.standard_normal((n, p))
        out[r] = np.linalg.eigvalsh(np.corrcoef(Z, rowvar=False))[::-1]
    out.setflags(write=False)
    return out


def retained_count(observed: np.ndarray, threshold: np.ndarray) -> int:
    """Length of the leading run where observed exceeds threshold."""
    above = np.asarray(observed) > np.asarray(threshold)
    return int(np.argmin(above)) if not above.all() else int(above.size)


def parallel_analysis(
    data,
    replications: int = 1000,
    percentile: float = 95.0,
    seed: int = 0,
    names: Sequence[str] | None = None,
) -> ParallelAnalysisResult:
    """Horn's parallel analysis against normal reference data of the same shape.

    Replication ``r`` draws from ``default_rng([seed, r])``, so the result does
    not depend on execution order.
    """
    if replications < 100:
        raise ValueError("parallel analysis needs at least 100 replications")
    if not 50.0 < percentile < 100.0:
        raise ValueError("percentile must lie in (50, 100)")
    corr = correlation_matrix(data, names)
    observed = pca_eigenvalues(corr)
    ref = _reference_eigenvalues(corr.n, len(corr.names), int(replications), int(seed))
    threshold = np.percentile(ref, percentile, axis=0)
    return ParallelAnalysisResult(
        observed_eigenvalues=tuple(float(v) for v in observed),
        threshold_eigenvalues=tuple(float(v) for v in threshold),
        n_retained=retained_count(observed, threshold),
        replications=int(replications),
        percentile=float(percentile),
        seed=int(seed),
        n=corr.n,
    )
