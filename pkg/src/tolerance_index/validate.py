"""Regression harness: OLS with robust/clustered errors, subgroup fits, probit AMEs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd
from scipy import optimize, special, stats

from .errors import NoConvergence, RankDeficient, Separation, TooFewClusters
from .derive import subgroup_split

SE_KINDS = ("classical", "robust", "cluster")


def stars(p: float) -> str:
    if p is None or not math.isfinite(p):
        return ""
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.1:
        return "*"
    return ""


@dataclass
class OlsResult:
    names: tuple[str, ...]
    coef: np.ndarray
    se: np.ndarray
    se_kind: str
    n: int
    r2: float
    df_resid: int
    cluster_key: str | None = None
    n_clusters: int | None = None
    vcov: np.ndarray | None = field(default=None, repr=False)
    residuals: np.ndarray | None = field(default=None, repr=False)

    @property
    def t(self) -> np.ndarray:
        return self.coef / self.se

    @property
    def p_values(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return 2.0 * stats.t.sf(np.abs(self.t), self.df_resid)

    def coefficient(self, name: str) -> float:
        return float(self.coef[self.names.index(name)])

    def std_error(self, name: str) -> float:
        return float(self.se[self.names.index(name)])

    def rows(self) -> list[dict]:
        pv = self.p_values
        return [
            {
                "term": name,
                "coef": float(self.coef[i]),
                "se": float(self.se[i]),
                "t": float(self.t[i]),
                "p": float(pv[i]),
                "stars": stars(float(pv[i])),
            }
            for i, name in enumerate(self.names)
        ]

    def to_dict(self) -> dict:
        return {
            "se_kind": self.se_kind,
            "cluster_key": self.cluster_key,
            "n_clusters": self.n_clusters,
            "n": self.n,
            "r2": self.r2,
            "coefficients": self.rows(),
        }


def _check_rank(X: np.ndarray) -> None:
    n, k = X.shape
    if n < k or np.linalg.matrix_rank(X) < k:
        raise RankDeficient(f"design matrix with {n} rows and {k} columns is not of full column rank")


def ols_fit(
    y,
    X,
    se_kind: str = "classical",
    clusters=None,
    names: Sequence[str] | None = None,
    cluster_key: str | None = None,
) -> OlsResult:
    """Least squares with classical, HC0 (``robust``) or cluster-robust errors.

    Cluster errors scale the summed-score sandwich by G/(G-1) * (n-1)/(n-k).
    """
    if se_kind not in SE_KINDS:
        raise ValueError(f"se_kind must be one of {SE_KINDS}")
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    names = tuple(names) if names is not None else tuple(f"x{i}" for i in range(k))
    _check_rank(X)
    XtX = X.T @ X
    bread = np.linalg.inv(XtX)
    beta = bread @ (X.T @ y)
    e = y - X @ beta
    df_resid = n - k
    n_clusters = None
    if se_kind == "classical":
        sigma2 = float(e @ e) / df_resid if df_resid > 0 else math.nan
        vcov = sigma2 * bread
    elif se_kind == "robust":
        meat = (X * (e**2)[:, None]).T @ X
        vcov = bread @ meat @ bread
    else:
        if clusters is None:
            raise TooFewClusters("cluster standard errors need a cluster key")
        codes, uniques = pd.factorize(pd.Series(clusters), sort=True)
        G = len(uniques)
        if G < 2:
            raise TooFewClusters(f"{G} cluster(s); at least 2 required")
        scores = np.zeros((G, k))
        np.add.at(scores, codes, X * e[:, None])
        meat = scores.T @ scores
        factor = G / (G - 1) * (n - 1) / (n - k)
        vcov = factor * (bread @ meat @ bread)
        n_clusters = G
        df_resid = G - 1
    se = np.sqrt(np.maximum(np.diag(vcov), 0.0))
    tss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float(e @ e) / tss if tss > 0 else math.nan
    return OlsResult(
        names=names,
        coef=beta,
        se=se,
        se_kind=se_kind,
        n=n,
        r2=r2,
        df_resid=df_resid,
        cluster_key=cluster_key if se_kind == "cluster" else None,
        n_clusters=n_clusters,
        vcov=vcov,
        residuals=e,
    )


def design(df: pd.DataFrame, regressors: Sequence[str], intercept: bool = True) -> tuple[np.ndarray, tuple[str, ...]]:
    cols = [df[r].to_numpy(dtype=float) for r in regressors]
    names = list(regressors)
    if intercept:
        cols.append(np.ones(len(df)))
        names.append("const")
    return np.column_stack(cols) if cols else np.empty((len(df), 0)), tuple(names)


def fit_frame(
    df: pd.DataFrame,
    outcome: str,
    regressors: Sequence[str],
    se_kind: str = "cluster",
    cluster_key: str | None = "couple_id",
) -> OlsResult:
    """OLS of ``outcome`` on ``regressors`` plus a constant, dropping incomplete rows."""
    needed = [outcome, *regressors] + ([cluster_key] if se_kind == "cluster" and cluster_key else [])
    sub = df.dropna(subset=needed)
    X, names = design(sub, regressors)
    clusters = sub[cluster_key].to_numpy() if se_kind == "cluster" and cluster_key else None
    return ols_fit(sub[outcome].to_numpy(dtype=float), X, se_kind, clusters, names, cluster_key)


@dataclass
class SubgroupFit:
    split: str
    group: str
    n: int
    result: OlsResult | None
    failure: str | None = None

    def to_dict(self, focal: str) -> dict:
        out = {"split": self.split, "group": self.group, "n": self.n}
        if self.result is None:
            out.update(status="EstimationFailed", reason=self.failure)
        else:
            out.update(status="ok", **self.result.to_dict())
        return out


def _group_label(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    return str(value)


def subgroup_regressions(
    df: pd.DataFrame,
    outcome: str,
    regressor: str,
    splits: Sequence[str],
    rules: dict[str, str | float] | None = None,
    se_kind: str = "cluster",
    cluster_key: str | None = "couple_id",
) -> list[SubgroupFit]:
    """Separate regressions within each level of each split variable.

    A group whose fit fails (rank, too few clusters) is reported with its
    reason instead of aborting the table.
    """
    rules = rules or {}
    out: list[SubgroupFit] = []
    for split in splits:
        labels = subgroup_split(df[split].to_numpy(), rules.get(split, "median"))
        present = pd.Series([lab is not None for lab in labels], index=df.index)
        levels = sorted({_group_label(l) for l in labels if l is not None})
        label_str = pd.Series([None if l is None else _group_label(l) for l in labels], index=df.index)
        for level in levels:
            sub = df[present & (label_str == level)]
            try:
                res = fit_frame(sub, outcome, [regressor], se_kind, cluster_key)
                out.append(SubgroupFit(split, level, res.n, res))
            except (RankDeficient, TooFewClusters, np.linalg.LinAlgError) as exc:
                out.append(SubgroupFit(split, level, int(len(sub)), None, f"{type(exc).__name__}: {exc}"))
    return out


@dataclass
class ProbitFit:
    names: tuple[str, ...]
    coef: np.ndarray
    vcov: np.ndarray
    loglik: float
    iterations: int
    n: int
    gradient_norm: float

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.vcov))


def _probit_parts(beta: np.ndarray, X: np.ndarray, y: np.ndarray):
    q = 2.0 * y - 1.0
    z = q * (X @ beta)
    logcdf = special.log_ndtr(z)
    ll = float(logcdf.sum())
    # inverse Mills ratio phi(z)/Phi(z), computed in logs for large |z|
    lam = np.exp(stats.norm.logpdf(z) - logcdf)
    grad = X.T @ (q * lam)
    w = lam * (lam + z)
    hess = -(X * w[:, None]).T @ X
    return ll, grad, hess


def separating_direction(y: np.ndarray, X: np.ndarray, tol: float = 1e-7) -> np.ndarray | None:
    """A direction d with (2y-1) x'd >= 0 for every row and > 0 for some, if one exists.

    Such a d exists exactly when the outcome is completely or quasi-completely
    separated, in which case the likelihood has no finite maximizer. Solved as
    a linear program over the box |d| <= 1.
    """
    A = (2.0 * y - 1.0)[:, None] * X
    scale = np.abs(A).max() or 1.0
    A = A / scale
    res = optimize.linprog(
        -A.sum(axis=0), A_ub=-A, b_ub=np.zeros(len(A)), bounds=[(-1.0, 1.0)] * X.shape[1], method="highs"
    )
    if res.status == 0 and -res.fun > tol * len(A):
        return res.x
    return None


def probit_fit(
    y,
    X,
    names: Sequence[str] | None = None,
    tol: float = 1e-8,
    max_iter: int = 200,
    separation_norm: float = 1e3,
) -> ProbitFit:
    """Newton-Raphson probit with step halving.

    Converges when the score's max-norm falls below ``tol``. Separation is
    checked up front by linear programming; a coefficient norm beyond
    ``separation_norm`` during the iterations is also treated as separation.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("probit outcome must be 0/1")
    if y.min() == y.max():
        raise Separation("outcome has a single class")
    _check_rank(X)
    if separating_direction(y, X) is not None:
        raise Separation("outcome is (quasi-)completely separated by the regressors")
    n, k = X.shape
    names = tuple(names) if names is not None else tuple(f"x{i}" for i in range(k))
    beta = np.zeros(k)
    ll, grad, hess = _probit_parts(beta, X, y)
    for it in range(1, max_iter + 1):
        try:
            step = np.linalg.solve(-hess, grad)
        except np.linalg.LinAlgError:
            raise Separation("singular probit Hessian; outcome likely separated") from None
        t = 1.0
        while True:
            cand = beta + t * step
            ll_c, grad_c, hess_c = _probit_parts(cand, X, y)
            if ll_c >= ll - 1e-12 * abs(ll) or t < 1e-10:
                break
            t *= 0.5
        beta, ll, grad, hess = cand, ll_c, grad_c, hess_c
        if np.linalg.norm(beta) > separation_norm:
            raise Separation(f"coefficient norm {np.linalg.norm(beta):.3g} exceeds {separation_norm:g}")
        gnorm = float(np.max(np.abs(grad)))
        if gnorm < tol:
            vcov = np.linalg.inv(-hess)
            return ProbitFit(names, beta, vcov, ll, it, n, gnorm)
    raise NoConvergence(f"probit did not converge in {max_iter} iterations")


@dataclass
class ProbitResult:
    focal: str
    kind: str
    ame: float
    se: float
    ci: tuple[float, float]
    n: int
    coef: dict[str, float]

    @property
    def z(self) -> float:
        return self.ame / self.se if self.se > 0 else math.nan

    @property
    def p(self) -> float:
        return float(2 * stats.norm.sf(abs(self.z))) if math.isfinite(self.z) else math.nan

    def to_dict(self) -> dict:
        return {
            "focal": self.focal,
            "kind": self.kind,
            "ame": self.ame,
            "se": self.se,
            "z": self.z,
            "p": self.p,
            "stars": stars(self.p),
            "ci95": list(self.ci),
            "n": self.n,
            "coefficients": self.coef,
        }


def probit_ame(fit: ProbitFit, X, focal: str, kind: str | None = None) -> ProbitResult:
    """Average marginal effect of ``focal`` with a delta-method standard error.

    ``kind`` is ``"binary"`` (discrete 0 -> 1 change) or ``"continuous"``
    (mean derivative); by default a 0/1-valued column is treated as binary.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    j = fit.names.index(focal)
    beta = fit.coef
    if kind is None:
        kind = "binary" if np.isin(X[:, j], (0.0, 1.0)).all() else "continuous"
    if kind == "binary":
        X1, X0 = X.copy(), X.copy()
        X1[:, j], X0[:, j] = 1.0, 0.0
        z1, z0 = X1 @ beta, X0 @ beta
        ame = float(np.mean(stats.norm.cdf(z1) - stats.norm.cdf(z0)))
        jac = (stats.norm.pdf(z1)[:, None] * X1 - stats.norm.pdf(z0)[:, None] * X0).mean(axis=0)
    elif kind == "continuous":
        z = X @ beta
        dens = stats.norm.pdf(z)
        ame = float(np.mean(dens) * beta[j])
        # d/dbeta [phi(x b) b_j] = phi(x b) (e_j - b_j (x b) x)
        jac = -beta[j] * (dens * z)[:, None] * X
        jac = jac.mean(axis=0)
        jac[j] += float(np.mean(dens))
    else:
        raise ValueError("kind must be 'binary' or 'continuous'")
    se = float(math.sqrt(max(jac @ fit.vcov @ jac, 0.0)))
    return ProbitResult(
        focal=focal,
        kind=kind,
        ame=ame,
        se=se,
        ci=(ame - 1.96 * se, ame + 1.96 * se),
        n=fit.n,
        coef={name: float(b) for name, b in zip(fit.names, beta)},
    )


def binarize(values, rule: str | float = "median") -> np.ndarray:
    """1 where the value is strictly above the median (or threshold), else 0."""
    x = np.asarray(values, dtype=float)
    threshold = float(np.nanmedian(x)) if rule == "median" else float(rule)
    out = (x > threshold).astype(float)
    out[np.isnan(x)] = np.nan
    return out
