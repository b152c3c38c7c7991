"""Confirmatory factor model fitted by normal-theory maximum likelihood.

Identification fixes every latent variance at 1 and leaves all loadings
free. The free parameter vector is ordered

    theta = [loadings (p), residual variances (p), latent covariances (pairs)]

where ``pairs`` enumerates latent pairs ``(a, b)``, ``a < b``, in row-major
order.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np
import pandas as pd
from scipy import linalg, optimize, stats

from .errors import NoConvergence, NonPositiveDefiniteS, SingularInformation
from .registry import INDICATOR_LATENT, INDICATORS, LATENTS

RESIDUAL_FLOOR = 1e-8
PSI_BOUND = 1.0 - 1e-8


@dataclass(frozen=True)
class SemSpec:
    latents: tuple[str, ...]
    indicators: tuple[str, ...]
    assignment: tuple[int, ...]  # latent index of each indicator

    def __post_init__(self):
        if len(self.assignment) != len(self.indicators):
            raise ValueError("assignment must cover every indicator")
        if any(not 0 <= a < len(self.latents) for a in self.assignment):
            raise ValueError("assignment refers to an unknown latent")
        if len(set(self.indicators)) != len(self.indicators):
            raise ValueError("duplicate indicator")

    @classmethod
    def from_map(cls, mapping: Mapping[str, str], latents: Sequence[str] | None = None) -> "SemSpec":
        if latents is None:
            latents = list(dict.fromkeys(mapping.values()))
        index = {name: i for i, name in enumerate(latents)}
        return cls(tuple(latents), tuple(mapping), tuple(index[v] for v in mapping.values()))

    @classmethod
    def default(cls) -> "SemSpec":
        return cls.from_map({k: INDICATOR_LATENT[k] for k in INDICATORS}, LATENTS)

    @property
    def p(self) -> int:
        return len(self.indicators)

    @property
    def m(self) -> int:
        return len(self.latents)

    @property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple(combinations(range(self.m), 2))

    @property
    def n_params(self) -> int:
        return 2 * self.p + len(self.pairs)

    @property
    def param_names(self) -> tuple[str, ...]:
        names = [f"{ind}<-{self.latents[a]}" for ind, a in zip(self.indicators, self.assignment)]
        names += [f"var(e.{ind})" for ind in self.indicators]
        names += [f"cov({self.latents[a]},{self.latents[b]})" for a, b in self.pairs]
        return tuple(names)

    def unpack(self, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        p = self.p
        lam = theta[:p]
        eps = theta[p : 2 * p]
        psi = np.eye(self.m)
        for value, (a, b) in zip(theta[2 * p :], self.pairs):
            psi[a, b] = psi[b, a] = value
        return lam, eps, psi

    def pack(self, lam, eps, psi) -> np.ndarray:
        cov = [psi[a, b] for a, b in self.pairs]
        return np.concatenate([np.asarray(lam, float), np.asarray(eps, float), np.asarray(cov, float)])

    def loading_matrix(self, lam: np.ndarray) -> np.ndarray:
        L = np.zeros((self.p, self.m))
        L[np.arange(self.p), self.assignment] = lam
        return L

    def bounds(self) -> list[tuple[float | None, float | None]]:
        return (
            [(None, None)] * self.p
            + [(RESIDUAL_FLOOR, None)] * self.p
            + [(-PSI_BOUND, PSI_BOUND)] * len(self.pairs)
        )


def implied_covariance(spec: SemSpec, theta: np.ndarray) -> np.ndarray:
    lam, eps, psi = spec.unpack(theta)
    L = spec.loading_matrix(lam)
    return L @ psi @ L.T + np.diag(eps)


def sigma_derivatives(spec: SemSpec, theta: np.ndarray) -> np.ndarray:
    """dSigma/dtheta_j stacked as a (q, p, p) array."""
    lam, _, psi = spec.unpack(theta)
    L = spec.loading_matrix(lam)
    M = L @ psi
    p, q = spec.p, spec.n_params
    out = np.zeros((q, p, p))
    for k, a in enumerate(spec.assignment):
        out[k, k, :] += M[:, a]
        out[k, :, k] += M[:, a]
        out[p + k, k, k] = 1.0
    for j, (a, b) in enumerate(spec.pairs):
        outer = np.outer(L[:, a], L[:, b])
        out[2 * p + j] = outer + outer.T
    return out


def _chol_inverse(A: np.ndarray) -> tuple[np.ndarray, float] | None:
    try:
        c = linalg.cho_factor(A, lower=True)
    except linalg.LinAlgError:
        return None
    inv = linalg.cho_solve(c, np.eye(A.shape[0]))
    logdet = 2.0 * np.log(np.diag(c[0])).sum()
    return inv, logdet


def ml_discrepancy(spec: SemSpec, theta: np.ndarray, S: np.ndarray) -> float:
    """ln|Sigma| + tr(S Sigma^-1) - ln|S| - p; +inf where Sigma is not positive definite."""
    res = _chol_inverse(implied_covariance(spec, theta))
    if res is None:
        return math.inf
    inv, logdet = res
    _, logdet_s = np.linalg.slogdet(S)
    return float(logdet + np.sum(S * inv) - logdet_s - spec.p)


def ml_gradient(spec: SemSpec, theta: np.ndarray, S: np.ndarray) -> np.ndarray:
    sigma = implied_covariance(spec, theta)
    inv = np.linalg.inv(sigma)
    W = inv @ (sigma - S) @ inv
    return np.einsum("jab,ab->j", sigma_derivatives(spec, theta), W)


def expected_hessian(spec: SemSpec, theta: np.ndarray) -> np.ndarray:
    """E[d2 F/dtheta dtheta'] = tr(Sigma^-1 Sigma_i Sigma^-1 Sigma_j)."""
    inv = np.linalg.inv(implied_covariance(spec, theta))
    D = sigma_derivatives(spec, theta)
    G = np.einsum("ab,jbc,cd->jad", inv, D, inv)
    return np.einsum("iab,jab->ij", D, G)


@dataclass
class SemEstimate:
    spec: SemSpec
    theta: np.ndarray
    n: int
    means: np.ndarray
    S: np.ndarray
    discrepancy: float
    iterations: int
    gradient_norm: float
    heywood: tuple[str, ...] = ()
    n_dropped: int = 0
    cov_robust: np.ndarray | None = None
    cov_ml: np.ndarray | None = None

    @property
    def loadings(self) -> np.ndarray:
        return self.theta[: self.spec.p]

    @property
    def residual_variances(self) -> np.ndarray:
        return self.theta[self.spec.p : 2 * self.spec.p]

    @property
    def psi(self) -> np.ndarray:
        return self.spec.unpack(self.theta)[2]

    @property
    def loading_matrix(self) -> np.ndarray:
        return self.spec.loading_matrix(self.loadings)

    @property
    def sigma(self) -> np.ndarray:
        return implied_covariance(self.spec, self.theta)

    @property
    def fitted_variances(self) -> np.ndarray:
        return self.loadings**2 + self.residual_variances

    @property
    def std_loadings(self) -> np.ndarray:
        return self.loadings / np.sqrt(self.fitted_variances)

    @property
    def se(self) -> np.ndarray:
        cov = self.cov_robust if self.cov_robust is not None else self.cov_ml
        if cov is None:
            return np.full(self.spec.n_params, np.nan)
        return np.sqrt(np.diag(cov))

    @property
    def se_ml(self) -> np.ndarray:
        if self.cov_ml is None:
            return np.full(self.spec.n_params, np.nan)
        return np.sqrt(np.diag(self.cov_ml))

    @property
    def z(self) -> np.ndarray:
        return self.theta / self.se

    @property
    def p_values(self) -> np.ndarray:
        return 2.0 * stats.norm.sf(np.abs(self.z))

    def to_dict(self) -> dict:
        spec = self.spec
        se, z, pv = self.se, self.z, self.p_values
        p = spec.p
        indicators = []
        for k, name in enumerate(spec.indicators):
            indicators.append(
                {
                    "indicator": name,
                    "latent": spec.latents[spec.assignment[k]],
                    "unstd": float(self.loadings[k]),
                    "std": float(self.std_loadings[k]),
                    "se": float(se[k]),
                    "z": float(z[k]),
                    "p": float(pv[k]),
                    "residual_variance": float(self.residual_variances[k]),
                    "residual_variance_se": float(se[p + k]),
                }
            )
        covs = []
        for j, (a, b) in enumerate(spec.pairs):
            i = 2 * p + j
            covs.append(
                {
                    "latent_1": spec.latents[a],
                    "latent_2": spec.latents[b],
                    "estimate": float(self.theta[i]),
                    "se": float(se[i]),
                    "z": float(z[i]),
                    "p": float(pv[i]),
                }
            )
        return {
            "n": self.n,
            "n_dropped": self.n_dropped,
            "se_kind": "robust" if self.cov_robust is not None else "ml",
            "loadings": indicators,
            "latent_covariances": covs,
            "convergence": {
                "discrepancy": float(self.discrepancy),
                "iterations": self.iterations,
                "gradient_norm": float(self.gradient_norm),
                "heywood": list(self.heywood),
            },
        }


def _as_matrix(spec: SemSpec, data) -> tuple[np.ndarray, np.ndarray]:
    """Indicator matrix in spec order and the mask of complete rows."""
    if isinstance(data, pd.DataFrame):
        X = data.loc[:, list(spec.indicators)].to_numpy(dtype=float)
    else:
        X = np.asarray(data, dtype=float)
        if X.ndim != 2 or X.shape[1] != spec.p:
            raise ValueError(f"expected an (n, {spec.p}) indicator matrix")
    complete = ~np.isnan(X).any(axis=1)
    return X, complete


def _projected(grad: np.ndarray, theta: np.ndarray, bounds) -> np.ndarray:
    g = grad.copy()
    for j, (lo, hi) in enumerate(bounds):
        if lo is not None and theta[j] <= lo and g[j] > 0:
            g[j] = 0.0
        if hi is not None and theta[j] >= hi and g[j] < 0:
            g[j] = 0.0
    return g


def _clip(theta: np.ndarray, bounds) -> np.ndarray:
    lo = np.array([-np.inf if b[0] is None else b[0] for b in bounds])
    hi = np.array([np.inf if b[1] is None else b[1] for b in bounds])
    return np.clip(theta, lo, hi)


def _minimize(spec: SemSpec, R: np.ndarray, max_iter: int, gtol: float, ftol: float):
    """Quasi-Newton descent on the correlation-scale problem, then Fisher-scoring polish."""
    bounds = spec.bounds()
    theta = spec.pack(np.full(spec.p, 0.5), np.full(spec.p, 0.5), np.eye(spec.m))

    def fun(t):
        f = ml_discrepancy(spec, t, R)
        if not math.isfinite(f):
            return 1e10, np.zeros_like(t)
        return f, ml_gradient(spec, t, R)

    res = optimize.minimize(
        fun,
        theta,
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
        options={"maxiter": max_iter, "ftol": 1e-15, "gtol": 1e-10, "maxcor": 20},
    )
    theta = _clip(res.x, bounds)
    iterations = int(res.nit)
    f = ml_discrepancy(spec, theta, R)
    f_prev = math.inf

    lo = np.array([-np.inf if b[0] is None else b[0] for b in bounds])
    hi = np.array([np.inf if b[1] is None else b[1] for b in bounds])
    while True:
        g = ml_gradient(spec, theta, R)
        pg = _projected(g, theta, bounds)
        gnorm = float(np.max(np.abs(pg)))
        rel = abs(f_prev - f) / max(abs(f), 1.0)
        if gnorm < gtol and rel < ftol:
            return theta, f, iterations, gnorm
        if iterations >= max_iter:
            raise NoConvergence(
                f"no convergence after {iterations} iterations (gradient {gnorm:.3g})"
            )
        iterations += 1
        active = ((theta <= lo) & (g > 0)) | ((theta >= hi) & (g < 0))
        free = ~active
        H = expected_hessian(spec, theta)
        step = np.zeros_like(theta)
        try:
            step[free] = np.linalg.solve(H[np.ix_(free, free)], g[free])
        except np.linalg.LinAlgError:
            step[free] = g[free]
        t = 1.0
        for _ in range(60):
            cand = _clip(theta - t * step, bounds)
            fc = ml_discrepancy(spec, cand, R)
            if fc <= f + 1e-14 * max(abs(f), 1.0):
                break
            t *= 0.5
        else:
            # no decrease representable in floating point
            if gnorm < 100 * gtol:
                return theta, f, iterations, gnorm
            raise NoConvergence(f"line search failed at gradient {gnorm:.3g}")
        f_prev, f, theta = f, fc, cand


def _normalize_signs(spec: SemSpec, theta: np.ndarray) -> np.ndarray:
    lam, eps, psi = spec.unpack(theta.copy())
    flip = np.ones(spec.m)
    assign = np.asarray(spec.assignment)
    for a in range(spec.m):
        if lam[assign == a].sum() < 0:
            flip[a] = -1.0
    lam = lam * flip[assign]
    psi = psi * np.outer(flip, flip)
    return spec.pack(lam, eps, psi)


def fit_ml(
    spec: SemSpec,
    data,
    *,
    max_iter: int = 10_000,
    gtol: float = 1e-6,
    ftol: float = 1e-9,
    standard_errors: bool = True,
) -> SemEstimate:
    """Maximum-likelihood fit of ``spec`` to the rows of ``data``.

    Rows with any missing indicator are dropped (listwise). The sample
    covariance uses divisor n. Optimization runs on the correlation scale,
    which is exact by scale equivariance of the ML discrepancy, and the
    estimates are mapped back to item units.
    """
    X, complete = _as_matrix(spec, data)
    n_dropped = int((~complete).sum())
    X = X[complete]
    n = X.shape[0]
    if n <= spec.n_params:
        raise NonPositiveDefiniteS(f"n = {n} must exceed the {spec.n_params} free parameters")
    means = X.mean(axis=0)
    S = np.cov(X, rowvar=False, ddof=0)
    if _chol_inverse(S) is None or np.any(np.diag(S) <= 0):
        raise NonPositiveDefiniteS("sample covariance is not positive definite")

    d = np.sqrt(np.diag(S))
    R = S / np.outer(d, d)
    theta_std, f, iterations, gnorm = _minimize(spec, R, max_iter, gtol, ftol)
    theta_std = _normalize_signs(spec, theta_std)

    lam, eps, psi = spec.unpack(theta_std)
    theta = spec.pack(lam * d, eps * d**2, psi)
    at_floor = eps <= RESIDUAL_FLOOR * (1 + 1e-6)
    heywood = tuple(ind for ind, flag in zip(spec.indicators, at_floor) if flag)
    if heywood:
        warnings.warn(f"Heywood case: residual variance at its bound for {', '.join(heywood)}")
    at_bound = [
        f"{spec.latents[a]}-{spec.latents[b]}"
        for (a, b), v in zip(spec.pairs, theta_std[2 * spec.p :])
        if abs(v) >= PSI_BOUND * (1 - 1e-6)
    ]
    if at_bound:
        warnings.warn(f"latent correlation at +/-1 for {', '.join(at_bound)}; factor weakly identified")

    est = SemEstimate(
        spec=spec,
        theta=theta,
        n=n,
        means=means,
        S=S,
        discrepancy=f,
        iterations=iterations,
        gradient_norm=gnorm,
        heywood=heywood,
        n_dropped=n_dropped,
    )
    if standard_errors:
        est.cov_ml = ml_covariance(est)
        est.cov_robust = robust_covariance(est, X)
    return est


def ml_covariance(est: SemEstimate) -> np.ndarray:
    """Inverse expected information, (n/2 * E[Hessian of F])^-1."""
    H = expected_hessian(est.spec, est.theta)
    info = 0.5 * est.n * H
    if np.linalg.cond(info) > 1e14:
        raise SingularInformation("expected information matrix is singular")
    return np.linalg.inv(info)


def observation_scores(est: SemEstimate, X: np.ndarray) -> np.ndarray:
    """Per-observation gradients of the normal log-likelihood, shape (n, q)."""
    spec = est.spec
    lam, _, psi = spec.unpack(est.theta)
    L = spec.loading_matrix(lam)
    M = L @ psi
    inv = np.linalg.inv(est.sigma)
    W = (X - X.mean(axis=0)) @ inv
    U = W @ M
    V = W @ L
    assign = np.asarray(spec.assignment)
    k = np.arange(spec.p)
    lam_scores = W * U[:, assign] - (inv @ M)[k, assign]
    eps_scores = 0.5 * (W**2 - np.diag(inv))
    LiL = L.T @ inv @ L
    cov_scores = np.column_stack([V[:, a] * V[:, b] - LiL[a, b] for a, b in spec.pairs]) if spec.pairs else np.empty((len(X), 0))
    return np.hstack([lam_scores, eps_scores, cov_scores])


def robust_covariance(est: SemEstimate, X: np.ndarray) -> np.ndarray:
    """Sandwich A^-1 B A^-1 with A the expected information and B the score outer product."""
    A = 0.5 * est.n * expected_hessian(est.spec, est.theta)
    if np.linalg.cond(A) > 1e14:
        raise SingularInformation("expected information matrix is singular")
    scores = observation_scores(est, X)
    B = scores.T @ scores
    A_inv = np.linalg.inv(A)
    return A_inv @ B @ A_inv


def robust_se(est: SemEstimate, data) -> np.ndarray:
    X, complete = _as_matrix(est.spec, data)
    return np.sqrt(np.diag(robust_covariance(est, X[complete])))


@dataclass(frozen=True)
class FitStats:
    indicators: tuple[str, ...]
    fitted: np.ndarray
    predicted: np.ndarray
    residual: np.ndarray
    r2: np.ndarray
    mc: np.ndarray
    mc2: np.ndarray
    cd: float
    srmr: float

    def rows(self) -> list[dict]:
        return [
            {
                "indicator": name,
                "fitted": float(self.fitted[k]),
                "predicted": float(self.predicted[k]),
                "residual": float(self.residual[k]),
                "r2": float(self.r2[k]),
                "mc": float(self.mc[k]),
                "mc2": float(self.mc2[k]),
            }
            for k, name in enumerate(self.indicators)
        ]

    def to_dict(self) -> dict:
        return {
            "equations": self.rows(),
            "cd": self.cd,
            "srmr": self.srmr,
            "srmr_convention": "lower triangle including diagonal",
            "cd_definition": "1 - det(Theta_eps) / det(S)",
        }


def fit_statistics(est: SemEstimate) -> FitStats:
    predicted = est.loadings**2
    residual = est.residual_variances.copy()
    fitted = predicted + residual
    r2 = predicted / fitted
    mc = np.sqrt(r2)
    sigma = est.sigma
    theta_eps = sigma - est.loading_matrix @ est.psi @ est.loading_matrix.T
    cd = 1.0 - np.linalg.det(theta_eps) / np.linalg.det(est.S)
    S = est.S
    d = np.sqrt(np.diag(S))
    std_resid = (S - sigma) / np.outer(d, d)
    tri = np.tril_indices(est.spec.p)
    srmr = math.sqrt(float(np.mean(std_resid[tri] ** 2)))
    return FitStats(est.spec.indicators, fitted, predicted, residual, r2, mc, mc * mc, float(cd), srmr)


@dataclass
class FactorScores:
    scores: pd.DataFrame
    n_skipped: int = 0
    raw_sd: dict[str, float] = field(default_factory=dict)


def factor_scores(est: SemEstimate, data) -> FactorScores:
    """Regression-method scores Psi L' Sigma^-1 (x - xbar), re-standardized per latent.

    Incomplete rows get NaN and are counted in ``n_skipped``.
    """
    spec = est.spec
    X, complete = _as_matrix(spec, data)
    index = data.index if isinstance(data, pd.DataFrame) else pd.RangeIndex(len(X))
    out = np.full((len(X), spec.m), np.nan)
    Xc = X[complete]
    raw_sd = {}
    if len(Xc):
        B = np.linalg.solve(est.sigma, est.loading_matrix @ est.psi)
        raw = (Xc - Xc.mean(axis=0)) @ B
        sd = raw.std(axis=0, ddof=1) if len(Xc) > 1 else np.ones(spec.m)
        raw_sd = {name: float(s) for name, s in zip(spec.latents, sd)}
        out[complete] = (raw - raw.mean(axis=0)) / np.where(sd > 0, sd, 1.0)
    return FactorScores(
        pd.DataFrame(out, index=index, columns=list(spec.latents)),
        int((~complete).sum()),
        raw_sd,
    )
