"""Composite tolerance index from standardized factor scores, plus reliability."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import DegenerateCorrelation, TooFewItems

LOW_EXPLAINED_VARIANCE = 0.4
DEFAULT_REVERSE = {"Justification": False, "Masculinity": False, "GenderGapUnpaidWork": True}


@dataclass(frozen=True)
class CompositeModel:
    inputs: tuple[str, ...]
    means: np.ndarray
    sds: np.ndarray
    reverse: tuple[bool, ...]
    weights: np.ndarray  # leading eigenvector, first entry positive
    eigenvalues: np.ndarray
    correlation: np.ndarray

    @property
    def explained_variance(self) -> float:
        return float(self.eigenvalues[0] / len(self.inputs))

    def aligned(self, scores: pd.DataFrame | np.ndarray) -> np.ndarray:
        """Standardized inputs with reverse-coded columns negated."""
        X = scores.loc[:, list(self.inputs)].to_numpy(dtype=float) if isinstance(scores, pd.DataFrame) else np.asarray(scores, float)
        Z = (X - self.means) / self.sds
        signs = np.where(self.reverse, -1.0, 1.0)
        return Z * signs

    def score(self, scores: pd.DataFrame | np.ndarray) -> np.ndarray:
        return self.aligned(scores) @ self.weights

    def to_dict(self) -> dict:
        return {
            "inputs": list(self.inputs),
            "standardizers": {
                name: {"mean": float(m), "sd": float(s)} for name, m, s in zip(self.inputs, self.means, self.sds)
            },
            "reverse": {name: bool(r) for name, r in zip(self.inputs, self.reverse)},
            "weights": {name: float(w) for name, w in zip(self.inputs, self.weights)},
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "explained_variance": self.explained_variance,
            "sign_convention": f"weight on {self.inputs[0]} positive",
        }


def build_composite(
    scores: pd.DataFrame,
    reverse: Mapping[str, bool] | None = None,
    inputs: Sequence[str] | None = None,
) -> tuple[CompositeModel, pd.Series]:
    """First principal component of the standardized (and reverse-coded) inputs.

    Rows with a missing input get a missing index value.
    """
    inputs = tuple(inputs if inputs is not None else scores.columns)
    reverse = {**DEFAULT_REVERSE, **(reverse or {})}
    X = scores.loc[:, list(inputs)].to_numpy(dtype=float)
    complete = ~np.isnan(X).any(axis=1)
    Xc = X[complete]
    if len(Xc) < 4:
        raise DegenerateCorrelation(f"need at least 4 complete rows, got {len(Xc)}")
    means = Xc.mean(axis=0)
    sds = Xc.std(axis=0, ddof=1)
    if np.any(sds == 0):
        raise DegenerateCorrelation("constant factor score column")
    flags = tuple(bool(reverse.get(name, False)) for name in inputs)
    signs = np.where(flags, -1.0, 1.0)
    Z = (Xc - means) / sds * signs
    R = np.corrcoef(Z, rowvar=False)
    if not np.all(np.isfinite(R)):
        raise DegenerateCorrelation("correlation matrix is not finite")
    vals, vecs = np.linalg.eigh(R)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    if vals[0] <= 0:
        raise DegenerateCorrelation("leading eigenvalue is not positive")
    w = vecs[:, 0]
    w = w / np.linalg.norm(w)
    if w[0] < 0:
        w = -w
    model = CompositeModel(inputs, means, sds, flags, w, vals, R)
    if model.explained_variance < LOW_EXPLAINED_VARIANCE:
        warnings.warn(
            f"first component explains {model.explained_variance:.3f} of variance; weights are unstable"
        )
    index = np.full(len(X), np.nan)
    index[complete] = Z @ w
    return model, pd.Series(index, index=scores.index, name="index")


@dataclass(frozen=True)
class ReliabilityReport:
    average_covariance: float
    average_variance: float
    n_items: int
    alpha: float

    def to_dict(self) -> dict:
        return {
            "average_interitem_covariance": self.average_covariance,
            "average_item_variance": self.average_variance,
            "n_items": self.n_items,
            "cronbach_alpha": self.alpha,
        }


def alpha_from_covariance(C: np.ndarray) -> ReliabilityReport:
    C = np.asarray(C, dtype=float)
    k = C.shape[0]
    if k < 2:
        raise TooFewItems("Cronbach's alpha needs at least two items")
    v_bar = float(np.trace(C) / k)
    c_bar = float((C.sum() - np.trace(C)) / (k * (k - 1)))
    alpha = k * c_bar / (v_bar + (k - 1) * c_bar)
    return ReliabilityReport(c_bar, v_bar, k, float(alpha))


def cronbach_alpha(items) -> ReliabilityReport:
    """Alpha for an n x k item matrix (listwise complete rows)."""
    X = items.to_numpy(dtype=float) if isinstance(items, pd.DataFrame) else np.asarray(items, dtype=float)
    if X.ndim != 2 or X.shape[1] < 2:
        raise TooFewItems("Cronbach's alpha needs at least two items")
    X = X[~np.isnan(X).any(axis=1)]
    return alpha_from_covariance(np.cov(X, rowvar=False, ddof=1))


@dataclass
class IndexDistribution:
    n: int
    mean: float
    sd: float
    skewness: float
    bandwidth: float
    mode: float
    grid: np.ndarray = field(repr=False)
    density: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mean": self.mean,
            "sd": self.sd,
            "skewness": self.skewness,
            "bandwidth": self.bandwidth,
            "mode": self.mode,
            "grid": [float(v) for v in self.grid],
            "density": [float(v) for v in self.density],
        }


def silverman_bandwidth(x: np.ndarray) -> float:
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34) if q75 > q25 else sd
    return 0.9 * spread * len(x) ** (-0.2)


def index_distribution(values, grid_points: int = 512) -> IndexDistribution:
    """Moments and a Gaussian kernel density on an even grid."""
    x = np.asarray(values, dtype=float)
    x = x[~np.isnan(x)]
    if x.size < 30:
        raise ValueError("index_distribution needs at least 30 values")
    mean = float(x.mean())
    centred = x - mean
    m2 = float(np.mean(centred**2))
    skew = float(np.mean(centred**3) / m2**1.5) if m2 > 0 else 0.0
    h = silverman_bandwidth(x)
    if not h > 0:
        h = 1.0
    grid = np.linspace(x.min() - 3 * h, x.max() + 3 * h, grid_points)
    density = np.zeros(grid_points)
    for start in range(0, x.size, 8192):
        u = (grid[:, None] - x[None, start : start + 8192]) / h
        density += np.exp(-0.5 * u**2).sum(axis=1)
    density /= x.size * h * math.sqrt(2 * math.pi)
    return IndexDistribution(
        n=int(x.size),
        mean=mean,
        sd=float(x.std(ddof=1)),
        skewness=skew,
        bandwidth=h,
        mode=float(grid[int(np.argmax(density))]),
        grid=grid,
        density=density,
    )
