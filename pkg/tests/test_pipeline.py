from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from tolerance_index.cli import main
from tolerance_index.errors import ConfigInvalid
from tolerance_index.pipeline import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_STAGE,
    OUTPUT_DIR_ENV,
    REGRESSION_CSV_COLUMNS,
    SEM_TABLE_COLUMNS,
    config_from_dict,
    default_config,
    load_config,
    regression_rows,
    run_pipeline,
    write_csv,
)
from tolerance_index.synth import GeneratorSpec, simulate_couple_dataset, write_bundle

SIX_REPORTS = ("ingest.json", "derive.json", "factor.json", "sem.json", "composite.json", "validate.json")


def _bundle_dir(root: Path, n_couples=200, seed=0) -> Path:
    cfg = default_config()
    cfg["parallel_analysis"]["replications"] = 100
    write_bundle(simulate_couple_dataset(GeneratorSpec(n_couples=n_couples, seed=seed)), root, cfg)
    return root


@pytest.fixture(scope="module")
def bundle_dir(tmp_path_factory):
    return _bundle_dir(tmp_path_factory.mktemp("bundle"))


@pytest.fixture(scope="module")
def run(bundle_dir):
    result = run_pipeline(load_config(bundle_dir / "config.json"), created="fixed")
    return result


def test_smoke_run(run):
    assert run.exit_code == EXIT_OK
    assert all(v == "ok" for v in run.stages.values())
    for name in SIX_REPORTS:
        assert (run.output_dir / name).is_file()
    manifest = json.loads((run.output_dir / "manifest.json").read_text())
    assert manifest["status"] == "ok" and manifest["created"] == "fixed"


def test_sem_table_headers(run):
    table = pd.read_csv(run.output_dir / "sem_table.csv")
    assert tuple(table.columns) == SEM_TABLE_COLUMNS
    assert len(table) == 11


def test_json_and_csv_agree(run):
    sem = json.loads((run.output_dir / "sem.json").read_text())
    table = pd.read_csv(run.output_dir / "sem_table.csv")
    unstd = np.array([r["unstd"] for r in sem["loadings"]])
    assert np.allclose(table["Unstd. Coeff."], unstd, atol=5e-5)
    assert np.allclose(table["Std. Coeff."], [r["std"] for r in sem["loadings"]], atol=5e-5)
    validate = json.loads((run.output_dir / "validate.json").read_text())
    regs = pd.read_csv(run.output_dir / "regressions.csv")
    full = validate["regressions"][0]["full_sample"]["coefficients"]
    row = regs[(regs["model"] == "leisure_with_partner") & (regs["group"] == "all") & (regs["term"] == "index")]
    coef = next(c for c in full if c["term"] == "index")
    assert row["coef"].iloc[0] == pytest.approx(coef["coef"], abs=5e-5)
    assert row["se"].iloc[0] == pytest.approx(coef["se"], abs=5e-5)


def test_composite_report(run):
    comp = pd.read_csv(run.output_dir / "composite.csv")
    assert list(comp.columns) == ["respondent_id", "index"]
    assert len(comp) == 400 and abs(comp["index"].mean()) < 1e-3


def test_empty_subgroup_table_has_header(tmp_path):
    write_csv(tmp_path / "r.csv", regression_rows({"regressions": []}))
    assert (tmp_path / "r.csv").read_text().strip() == ",".join(REGRESSION_CSV_COLUMNS)


def test_rerun_is_byte_identical(bundle_dir, tmp_path, run):
    raw = json.loads((bundle_dir / "config.json").read_text())
    raw["output_dir"] = str(tmp_path / "again")
    again = run_pipeline(config_from_dict(raw, bundle_dir), created="fixed")
    for name in SIX_REPORTS:
        assert (again.output_dir / name).read_bytes() == (run.output_dir / name).read_bytes()


def test_missing_taxonomy_fails_fast(bundle_dir, tmp_path):
    raw = json.loads((bundle_dir / "config.json").read_text())
    raw["inputs"]["taxonomy"] = "nope.csv"
    raw["output_dir"] = str(tmp_path / "out")
    with pytest.raises(ConfigInvalid, match="not found"):
        config_from_dict(raw, bundle_dir)
    assert not (tmp_path / "out").exists()


@pytest.mark.parametrize(
    "mutate",
    [
        lambda c: c.update(version=2),
        lambda c: c["regressions"][0].update(outcome="no_such_variable"),
        lambda c: c["regressions"][0].update(se_kind="bootstrap"),
        lambda c: c["sem"]["model"].update(Extra=["drinking"]),
        lambda c: c["regressions"].append(dict(c["regressions"][0])),
    ],
)
def test_invalid_configs(bundle_dir, mutate):
    raw = json.loads((bundle_dir / "config.json").read_text())
    mutate(raw)
    with pytest.raises(ConfigInvalid):
        config_from_dict(raw, bundle_dir)


def test_stage_failure_writes_errors(tmp_path):
    root = _bundle_dir(tmp_path / "bad", n_couples=40, seed=1)
    survey = pd.read_csv(root / "survey.csv", dtype=str, keep_default_na=False)
    survey["drinking"] = "50"
    survey.to_csv(root / "survey.csv", index=False)
    result = run_pipeline(load_config(root / "config.json"), created="fixed")
    assert result.exit_code == EXIT_STAGE
    assert result.stages["ingest"] == "ok" and result.stages["derive"] == "ok"
    assert result.stages["factor"] == "failed" and result.stages["validate"] == "skipped"
    errors = json.loads((result.output_dir / "errors.json").read_text())
    assert errors["stage"] == "factor" and errors["error"] == "ConstantColumn"
    assert (result.output_dir / "derive.json").is_file()
    assert not (result.output_dir / "sem.json").exists()


def test_output_dir_env_override(bundle_dir, tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "env_out"))
    assert load_config(bundle_dir / "config.json").output_dir == tmp_path / "env_out"


def test_cli_exit_codes(tmp_path, monkeypatch):
    out = tmp_path / "sim"
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"n_couples": 60, "seed": 2}))
    assert main(["-q", "simulate", "--spec", str(spec), "--out", str(out)]) == EXIT_OK
    cfg = json.loads((out / "config.json").read_text())
    cfg["parallel_analysis"]["replications"] = 100
    (out / "config.json").write_text(json.dumps(cfg))
    assert main(["-q", "check", "--config", str(out / "config.json")]) == EXIT_OK
    assert main(["-q", "run", "--config", str(out / "config.json")]) == EXIT_OK
    assert (out / "reports" / "validate.json").is_file()
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert main(["-q", "check", "--config", str(broken)]) == EXIT_CONFIG
    spec.write_text(json.dumps({"psi_masc_just": 0.99, "psi_masc_gap": -0.9, "psi_just_gap": 0.9}))
    assert main(["-q", "simulate", "--spec", str(spec), "--out", str(tmp_path / "x")]) == EXIT_CONFIG
