"""Batch pipeline: config loading, stage execution and report emission.

Stages run in a fixed order (ingest, derive, factor, sem, composite,
validate). Each completed stage writes its JSON report immediately, so a
failure leaves the reports of earlier stages plus ``errors.json`` behind.
"""

from __future__ import annotations

import copy
import datetime as _dt
import json
import math
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import jsonschema
import numpy as np
import pandas as pd

from . import __version__
from .composite import build_composite, cronbach_alpha, index_distribution
from .derive import RESPONDENT_COLUMNS, DerivedData, derive_dataset
from .errors import ConfigInvalid, IoFailure, StageFailed, ToleranceIndexError
from .factor import correlation_matrix, parallel_analysis, pca_eigenvalues
from .ingest import Dataset, load_dataset
from .registry import (
    INDICATOR_LABELS,
    INDICATOR_LATENT,
    INDICATORS,
    LATENT_LABELS,
    LATENTS,
    ItemRegistry,
    default_registry,
    load_taxonomy,
    registry_from_keys,
)
from .sem import SemEstimate, SemSpec, factor_scores, fit_ml, fit_statistics
from .validate import (
    SE_KINDS,
    binarize,
    fit_frame,
    probit_ame,
    probit_fit,
    subgroup_regressions,
)

CONFIG_VERSION = 1
OUTPUT_DIR_ENV = "TOLIDX_OUTPUT_DIR"
STAGES = ("ingest", "derive", "factor", "sem", "composite", "validate")
EXIT_OK, EXIT_CONFIG, EXIT_STAGE = 0, 1, 2

_REGRESSION_SCHEMA = {
    "type": "object",
    "required": ["name", "outcome", "regressor"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "outcome": {"type": "string"},
        "regressor": {"type": "string"},
        "controls": {"type": "array", "items": {"type": "string"}},
        "se_kind": {"enum": list(SE_KINDS)},
        "cluster_key": {"type": ["string", "null"]},
        "splits": {"type": "array", "items": {"type": "string"}},
        "split_rules": {
            "type": "object",
            "additionalProperties": {"anyOf": [{"const": "median"}, {"type": "number"}]},
        },
    },
}

_PROBIT_SCHEMA = {
    "type": "object",
    "required": ["name", "outcome", "focal"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "outcome": {"type": "string"},
        "focal": {"type": "string"},
        "controls": {"type": "array", "items": {"type": "string"}},
        "binarize": {"anyOf": [{"const": "median"}, {"type": "number"}]},
        "subset": {"type": "object", "additionalProperties": {"type": ["string", "number", "boolean"]}},
        "focal_kind": {"enum": ["binary", "continuous"]},
    },
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["version", "inputs"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": CONFIG_VERSION},
        "inputs": {
            "type": "object",
            "required": ["survey", "diaries"],
            "additionalProperties": False,
            "properties": {
                "survey": {"type": "string"},
                "diaries": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                "taxonomy": {"type": "string"},
            },
        },
        "registry": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "scale_items": {"type": "array", "items": {"type": "string"}},
                "choice_items": {
                    "type": "object",
                    "additionalProperties": {"type": "array", "items": {"type": "integer"}},
                },
            },
        },
        "parallel_analysis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "replications": {"type": "integer", "minimum": 100},
                "percentile": {"type": "number", "exclusiveMinimum": 50, "exclusiveMaximum": 100},
                "seed": {"type": "integer", "minimum": 0},
            },
        },
        "sem": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "model": {
                    "type": "object",
                    "additionalProperties": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                },
                "max_iter": {"type": "integer", "minimum": 1},
            },
        },
        "composite": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"reverse": {"type": "object", "additionalProperties": {"type": "boolean"}}},
        },
        "regressions": {"type": "array", "items": _REGRESSION_SCHEMA},
        "probits": {"type": "array", "items": _PROBIT_SCHEMA},
        "output_dir": {"type": "string"},
    },
}


def default_config(survey: str = "survey.csv", diaries=("diary.csv",), taxonomy: str = "taxonomy.csv") -> dict:
    """Config reproducing the leisure and information-treatment designs."""
    return {
        "version": CONFIG_VERSION,
        "inputs": {"survey": survey, "diaries": list(diaries), "taxonomy": taxonomy},
        "parallel_analysis": {"replications": 1000, "percentile": 95, "seed": 0},
        "sem": {"model": {lat: [k for k in INDICATORS if INDICATOR_LATENT[k] == lat] for lat in LATENTS}},
        "composite": {"reverse": {"Justification": False, "Masculinity": False, "GenderGapUnpaidWork": True}},
        "regressions": [
            {
                "name": "leisure_with_partner",
                "outcome": "leisure_with_partner",
                "regressor": "index",
                "se_kind": "cluster",
                "cluster_key": "couple_id",
                "splits": ["female", "employed", "bargaining_power", "gender_norms"],
            },
            {
                "name": "leisure_with_partner_children",
                "outcome": "leisure_with_partner_children",
                "regressor": "index",
                "se_kind": "cluster",
                "cluster_key": "couple_id",
                "splits": ["female", "employed", "bargaining_power", "gender_norms"],
            },
        ],
        "probits": [
            {
                "name": "information_physical_women",
                "outcome": "index",
                "binarize": "median",
                "focal": "info_treated",
                "controls": ["education_years", "employed"],
                "subset": {"female": 1, "vignette_physical": 1},
            }
        ],
        "output_dir": "reports",
    }


@dataclass
class RegressionSpec:
    name: str
    outcome: str
    regressor: str
    controls: tuple[str, ...] = ()
    se_kind: str = "cluster"
    cluster_key: str | None = "couple_id"
    splits: tuple[str, ...] = ()
    split_rules: dict[str, Any] = field(default_factory=dict)


@dataclass
class ProbitSpec:
    name: str
    outcome: str
    focal: str
    controls: tuple[str, ...] = ()
    binarize: str | float = "median"
    subset: dict[str, Any] = field(default_factory=dict)
    focal_kind: str | None = None


@dataclass
class PipelineConfig:
    survey: Path
    diaries: tuple[Path, ...]
    taxonomy: Path | None
    registry: ItemRegistry
    pa_replications: int
    pa_percentile: float
    pa_seed: int
    sem_model: dict[str, tuple[str, ...]]
    sem_max_iter: int
    reverse: dict[str, bool]
    regressions: tuple[RegressionSpec, ...]
    probits: tuple[ProbitSpec, ...]
    output_dir: Path
    source: Path | None = None
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def sem_spec(self) -> SemSpec:
        mapping = {ind: lat for lat, inds in self.sem_model.items() for ind in inds}
        return SemSpec.from_map(mapping, list(self.sem_model))


def _resolve(base: Path, value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() else (base / p)


def available_variables(config: PipelineConfig) -> set[str]:
    """Columns of the analysis frame the regressions may refer to."""
    return set(RESPONDENT_COLUMNS) | {"index"} | set(config.sem_model)


def config_from_dict(raw: Mapping, base_dir: str | Path = ".", source: Path | None = None) -> PipelineConfig:
    """Validate a config document and resolve its paths against ``base_dir``.

    Raises ConfigInvalid on schema violations, missing input files, unknown
    regression variables or an ill-formed SEM model.
    """
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigInvalid(f"config {where}: {exc.message}") from None
    raw = copy.deepcopy(dict(raw))
    base = Path(base_dir)
    defaults = default_config()
    inputs = raw["inputs"]
    survey = _resolve(base, inputs["survey"])
    diaries = tuple(_resolve(base, d) for d in inputs["diaries"])
    taxonomy = _resolve(base, inputs["taxonomy"]) if "taxonomy" in inputs else None
    for p in (survey, *diaries, *([taxonomy] if taxonomy else [])):
        if not p.is_file():
            raise ConfigInvalid(f"input file not found: {p}")

    if "registry" in raw:
        reg = raw["registry"]
        registry = registry_from_keys(reg.get("scale_items", []), reg.get("choice_items"))
    else:
        registry = default_registry()

    pa = {**defaults["parallel_analysis"], **raw.get("parallel_analysis", {})}
    sem = raw.get("sem", {})
    model = {k: tuple(v) for k, v in sem.get("model", defaults["sem"]["model"]).items()}
    seen: set[str] = set()
    for inds in model.values():
        for ind in inds:
            if ind in seen:
                raise ConfigInvalid(f"indicator {ind!r} assigned to two latents")
            if ind not in RESPONDENT_COLUMNS:
                raise ConfigInvalid(f"SEM indicator {ind!r} is not a derived variable")
            seen.add(ind)
    if len(model) < 2:
        raise ConfigInvalid("the SEM needs at least two latent factors")

    reverse = {**defaults["composite"]["reverse"], **raw.get("composite", {}).get("reverse", {})}
    unknown = set(reverse) - set(model)
    if unknown and "composite" in raw:
        raise ConfigInvalid(f"reverse flags for unknown latents: {sorted(unknown)}")
    reverse = {k: v for k, v in reverse.items() if k in model}

    regressions = tuple(
        RegressionSpec(
            name=r["name"],
            outcome=r["outcome"],
            regressor=r["regressor"],
            controls=tuple(r.get("controls", ())),
            se_kind=r.get("se_kind", "cluster"),
            cluster_key=r.get("cluster_key", "couple_id"),
            splits=tuple(r.get("splits", ())),
            split_rules=dict(r.get("split_rules", {})),
        )
        for r in raw.get("regressions", [])
    )
    probits = tuple(
        ProbitSpec(
            name=p["name"],
            outcome=p["outcome"],
            focal=p["focal"],
            controls=tuple(p.get("controls", ())),
            binarize=p.get("binarize", "median"),
            subset=dict(p.get("subset", {})),
            focal_kind=p.get("focal_kind"),
        )
        for p in raw.get("probits", [])
    )
    names = [r.name for r in regressions] + [p.name for p in probits]
    if len(set(names)) != len(names):
        raise ConfigInvalid("regression and probit names must be unique")

    out_env = os.environ.get(OUTPUT_DIR_ENV)
    output_dir = Path(out_env) if out_env else _resolve(base, raw.get("output_dir", "reports"))

    cfg = PipelineConfig(
        survey=survey,
        diaries=diaries,
        taxonomy=taxonomy,
        registry=registry,
        pa_replications=int(pa["replications"]),
        pa_percentile=float(pa["percentile"]),
        pa_seed=int(pa["seed"]),
        sem_model=model,
        sem_max_iter=int(sem.get("max_iter", 10_000)),
        reverse=reverse,
        regressions=regressions,
        probits=probits,
        output_dir=output_dir,
        source=source,
        raw=raw,
    )
    known = available_variables(cfg)
    for r in regressions:
        needed = [r.outcome, r.regressor, *r.controls, *r.splits]
        if r.se_kind == "cluster":
            if not r.cluster_key:
                raise ConfigInvalid(f"regression {r.name!r}: cluster errors need a cluster_key")
            needed.append(r.cluster_key)
        for v in needed:
            if v not in known:
                raise ConfigInvalid(f"regression {r.name!r} refers to unknown variable {v!r}")
    for p in probits:
        for v in [p.outcome, p.focal, *p.controls, *p.subset]:
            if v not in known:
                raise ConfigInvalid(f"probit {p.name!r} refers to unknown variable {v!r}")
    return cfg


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigInvalid(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"{path}: not valid JSON ({exc})") from None
    return config_from_dict(raw, path.parent, source=path)


# ---------------------------------------------------------------- reports


def clean_json(value):
    """Plain-Python, JSON-safe copy of ``value`` (NaN and inf become null)."""
    if isinstance(value, Mapping):
        return {str(k): clean_json(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [clean_json(v) for v in value]
    if isinstance(value, np.ndarray):
        return [clean_json(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, Path):
        return str(value)
    return value


def write_json(path: Path, payload) -> None:
    try:
        path.write_text(json.dumps(clean_json(payload), indent=2, allow_nan=False) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def write_csv(path: Path, frame: pd.DataFrame) -> None:
    try:
        frame.to_csv(path, index=False, float_format="%.4f", lineterminator="\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


SEM_TABLE_COLUMNS = ("Observed Variable", "Latent Factor", "Unstd. Coeff.", "Std. Coeff.", "Std. Err.", "z", "p")
VARIANCE_TABLE_COLUMNS = ("Observed Variable", "Fitted", "Predicted", "Residual", "R-squared", "mc", "mc2")
REGRESSION_CSV_COLUMNS = (
    "model", "split", "group", "status", "term", "coef", "se", "t", "p", "stars", "n", "r2", "se_kind", "n_clusters",
)
PROBIT_CSV_COLUMNS = ("model", "focal", "kind", "ame", "se", "z", "p", "stars", "ci_low", "ci_high", "n")


def sem_table(est: SemEstimate) -> pd.DataFrame:
    d = est.to_dict()
    rows = [
        {
            "Observed Variable": INDICATOR_LABELS.get(r["indicator"], r["indicator"]),
            "Latent Factor": LATENT_LABELS.get(r["latent"], r["latent"]),
            "Unstd. Coeff.": r["unstd"],
            "Std. Coeff.": r["std"],
            "Std. Err.": r["se"],
            "z": r["z"],
            "p": r["p"],
        }
        for r in d["loadings"]
    ]
    return pd.DataFrame(rows, columns=list(SEM_TABLE_COLUMNS))


def variance_table(est: SemEstimate) -> pd.DataFrame:
    stats_ = fit_statistics(est)
    rows = [
        {
            "Observed Variable": INDICATOR_LABELS.get(r["indicator"], r["indicator"]),
            "Fitted": r["fitted"],
            "Predicted": r["predicted"],
            "Residual": r["residual"],
            "R-squared": r["r2"],
            "mc": r["mc"],
            "mc2": r["mc2"],
        }
        for r in stats_.rows()
    ]
    return pd.DataFrame(rows, columns=list(VARIANCE_TABLE_COLUMNS))


def regression_rows(report: Mapping) -> pd.DataFrame:
    """Flatten the validate report into one row per coefficient."""
    rows = []

    def add(model: str, split: str, group: str, fit: Mapping):
        if fit.get("status", "ok") != "ok":
            rows.append({"model": model, "split": split, "group": group, "status": fit["status"], "n": fit.get("n")})
            return
        for c in fit["coefficients"]:
            rows.append(
                {
                    "model": model,
                    "split": split,
                    "group": group,
                    "status": "ok",
                    "term": c["term"],
                    "coef": c["coef"],
                    "se": c["se"],
                    "t": c["t"],
                    "p": c["p"],
                    "stars": c["stars"],
                    "n": fit["n"],
                    "r2": fit["r2"],
                    "se_kind": fit["se_kind"],
                    "n_clusters": fit["n_clusters"],
                }
            )

    for reg in report.get("regressions", []):
        add(reg["name"], "", "all", reg["full_sample"])
        for sub in reg["subgroups"]:
            add(reg["name"], sub["split"], sub["group"], sub)
    return pd.DataFrame(rows, columns=list(REGRESSION_CSV_COLUMNS))


def probit_rows(report: Mapping) -> pd.DataFrame:
    rows = []
    for p in report.get("probits", []):
        r = p["result"]
        rows.append(
            {
                "model": p["name"],
                "focal": r["focal"],
                "kind": r["kind"],
                "ame": r["ame"],
                "se": r["se"],
                "z": r["z"],
                "p": r["p"],
                "stars": r["stars"],
                "ci_low": r["ci95"][0],
                "ci_high": r["ci95"][1],
                "n": r["n"],
            }
        )
    return pd.DataFrame(rows, columns=list(PROBIT_CSV_COLUMNS))


# ---------------------------------------------------------------- stages


def _column_summary(frame: pd.DataFrame) -> dict:
    out = {}
    for col in frame.columns:
        if frame[col].dtype == object:
            continue
        v = frame[col].to_numpy(dtype=float)
        ok = v[~np.isnan(v)]
        out[col] = {
            "n": int(ok.size),
            "mean": float(ok.mean()) if ok.size else None,
            "sd": float(ok.std(ddof=1)) if ok.size > 1 else None,
            "min": float(ok.min()) if ok.size else None,
            "max": float(ok.max()) if ok.size else None,
        }
    return out


def run_factor(data: pd.DataFrame, indicators, replications: int, percentile: float, seed: int) -> dict:
    corr = correlation_matrix(data, list(indicators))
    pa = parallel_analysis(data, replications, percentile, seed, list(indicators))
    return {
        "indicators": list(corr.names),
        "n": corr.n,
        "n_dropped": corr.n_dropped,
        "correlation": corr.matrix,
        "eigenvalues": pca_eigenvalues(corr),
        "parallel_analysis": pa.to_dict(),
    }


@dataclass
class CompositeOutput:
    model: Any
    index: pd.Series
    report: dict


def run_composite(scores: pd.DataFrame, reverse: Mapping[str, bool]) -> CompositeOutput:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        model, index = build_composite(scores, reverse, list(scores.columns))
    aligned = pd.DataFrame(model.aligned(scores), columns=list(model.inputs)).dropna()
    report = {
        "model": model.to_dict(),
        "reliability": cronbach_alpha(aligned).to_dict(),
        "reliability_items": "standardized, reverse-aligned factor scores",
        "warnings": [str(w.message) for w in caught],
    }
    valid = index.dropna()
    if valid.size >= 30:
        report["distribution"] = index_distribution(valid.to_numpy()).to_dict()
    return CompositeOutput(model, index, report)


def _subset(frame: pd.DataFrame, subset: Mapping[str, Any]) -> pd.DataFrame:
    mask = pd.Series(True, index=frame.index)
    for col, value in subset.items():
        mask &= frame[col] == value
    return frame[mask]


def run_validate(frame: pd.DataFrame, regressions, probits) -> dict:
    out: dict = {"regressions": [], "probits": []}
    for r in regressions:
        full = fit_frame(frame, r.outcome, [r.regressor, *r.controls], r.se_kind, r.cluster_key)
        subs = subgroup_regressions(frame, r.outcome, r.regressor, list(r.splits), r.split_rules, r.se_kind, r.cluster_key)
        out["regressions"].append(
            {
                "name": r.name,
                "outcome": r.outcome,
                "regressor": r.regressor,
                "controls": list(r.controls),
                "full_sample": {"status": "ok", **full.to_dict()},
                "subgroups": [s.to_dict(r.regressor) for s in subs],
                "split_rules": {s: r.split_rules.get(s, "median") for s in r.splits},
            }
        )
    for p in probits:
        sub = _subset(frame, p.subset).dropna(subset=[p.outcome, p.focal, *p.controls])
        y = binarize(sub[p.outcome].to_numpy(dtype=float), p.binarize)
        threshold = float(np.median(sub[p.outcome])) if p.binarize == "median" else float(p.binarize)
        names = [p.focal, *p.controls, "const"]
        X = np.column_stack([sub[c].to_numpy(dtype=float) for c in names[:-1]] + [np.ones(len(sub))])
        fit = probit_fit(y, X, names)
        res = probit_ame(fit, X, p.focal, p.focal_kind)
        out["probits"].append(
            {
                "name": p.name,
                "outcome": p.outcome,
                "subset": dict(p.subset),
                "binarization": {
                    "rule": p.binarize,
                    "threshold": threshold,
                    "share_positive": float(y.mean()),
                },
                "result": res.to_dict(),
                "coefficient_se": {n: float(s) for n, s in zip(fit.names, fit.se)},
                "iterations": fit.iterations,
                "loglik": fit.loglik,
            }
        )
    return out


@dataclass
class PipelineResult:
    exit_code: int
    output_dir: Path
    stages: dict[str, str]
    files: list[str]
    error: StageFailed | None = None
    artifacts: dict[str, Any] = field(default_factory=dict, repr=False)


def run_pipeline(config: PipelineConfig, created: str | None = None) -> PipelineResult:
    """Run every stage, writing each stage's report as soon as it completes.

    Returns exit code 0 on success and 2 when a stage fails; in the latter
    case ``errors.json`` names the stage and cause.
    """
    out = config.output_dir
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create output directory {out}: {exc}") from exc
    status = {s: "pending" for s in STAGES}
    files: list[str] = []
    art: dict[str, Any] = {}

    def emit_json(name: str, payload) -> None:
        write_json(out / name, payload)
        files.append(name)

    def emit_csv(name: str, frame: pd.DataFrame) -> None:
        write_csv(out / name, frame)
        files.append(name)

    def ingest():
        taxonomy = load_taxonomy(config.taxonomy) if config.taxonomy else None
        if taxonomy is None:
            from .registry import default_taxonomy

            taxonomy = default_taxonomy()
        ds: Dataset = load_dataset(config.survey, config.diaries, taxonomy, config.registry)
        art["dataset"] = ds
        emit_json("ingest.json", {"stage": "ingest", **ds.summary()})

    def derive():
        dd: DerivedData = derive_dataset(art["dataset"].couples)
        art["derived"] = dd
        emit_csv("derived_respondents.csv", dd.respondents)
        emit_csv("derived_couples.csv", dd.couples)
        emit_json(
            "derive.json",
            {"stage": "derive", **dd.summary(), "variables": _column_summary(dd.respondents)},
        )

    def factor():
        spec = config.sem_spec
        rep = run_factor(
            art["derived"].respondents, spec.indicators, config.pa_replications, config.pa_percentile, config.pa_seed
        )
        emit_json("factor.json", {"stage": "factor", **rep})

    def sem():
        spec = config.sem_spec
        data = art["derived"].respondents
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            est = fit_ml(spec, data, max_iter=config.sem_max_iter)
        fs = factor_scores(est, data)
        art["sem"], art["scores"] = est, fs
        stats_ = fit_statistics(est)
        emit_csv("sem_table.csv", sem_table(est))
        emit_csv("sem_variances.csv", variance_table(est))
        emit_json(
            "sem.json",
            {
                "stage": "sem",
                **est.to_dict(),
                "fit": stats_.to_dict(),
                "factor_scores": {"method": "regression", "n_skipped": fs.n_skipped, "raw_sd": fs.raw_sd},
                "warnings": [str(w.message) for w in caught],
            },
        )

    def composite():
        comp = run_composite(art["scores"].scores, config.reverse)
        art["composite"] = comp
        resp = art["derived"].respondents
        emit_csv("composite.csv", pd.DataFrame({"respondent_id": resp["respondent_id"], "index": comp.index.to_numpy()}))
        emit_json("composite.json", {"stage": "composite", **comp.report})

    def validate():
        frame = analysis_frame(art["derived"], art["scores"].scores, art["composite"].index)
        rep = run_validate(frame, config.regressions, config.probits)
        art["validate"] = rep
        emit_csv("regressions.csv", regression_rows(rep))
        emit_csv("probits.csv", probit_rows(rep))
        emit_json("validate.json", {"stage": "validate", **rep})

    runners = {
        "ingest": ingest,
        "derive": derive,
        "factor": factor,
        "sem": sem,
        "composite": composite,
        "validate": validate,
    }
    error = None
    for stage in STAGES:
        try:
            runners[stage]()
            status[stage] = "ok"
        except IoFailure:
            raise
        except (ToleranceIndexError, ValueError, ArithmeticError, np.linalg.LinAlgError, KeyError) as exc:
            status[stage] = "failed"
            error = StageFailed(stage, exc)
            for later in STAGES[STAGES.index(stage) + 1 :]:
                status[later] = "skipped"
            emit_json(
                "errors.json",
                {"stage": stage, "error": type(exc).__name__, "message": str(exc)},
            )
            break

    exit_code = EXIT_OK if error is None else EXIT_STAGE
    manifest = {
        "package_version": __version__,
        "config_version": CONFIG_VERSION,
        "config": config.source,
        "created": created or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "status": "ok" if error is None else "failed",
        "exit_code": exit_code,
        "stages": status,
        "files": files + ["manifest.json"],
    }
    write_json(out / "manifest.json", manifest)
    return PipelineResult(exit_code, out, status, files + ["manifest.json"], error, art)


def analysis_frame(derived: DerivedData, scores: pd.DataFrame, index: pd.Series) -> pd.DataFrame:
    """Derived respondent table with factor scores and the composite index attached."""
    frame = derived.respondents.copy()
    for col in scores.columns:
        frame[col] = scores[col].to_numpy()
    frame["index"] = index.to_numpy()
    return frame
