import json
import os

import pytest
from click.testing import CliRunner

from elaselect import cli

TINY = [
    "--fids",
    "1-3",
    "--iids",
    "1-5",
    "--sample-sizes",
    "50",
    "--reps",
    "1",
    "--budgets",
    "30",
]


def invoke(args):
    runner = CliRunner()
    result = runner.invoke(cli.main, args, catch_exceptions=False)
    return result


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny")
    result = invoke(["all", *TINY, "--out", str(out), "--no-figures"])
    assert result.exit_code == 0, result.output
    return out


def test_all_produces_complete_outputs(tiny_run):
    for name in (
        "features.csv",
        "performance.csv",
        "predictions.csv",
        "selectors.csv",
        "frequency_b30_s50.csv",
        "report.json",
    ):
        assert (tiny_run / name).exists(), name
    report = json.loads((tiny_run / "report.json").read_text())
    assert len(report["model_table"]) == 30
    assert len(report["selection"]["selectors"]) == 90
    # 4 solvers, 1 budget, 1 sample size
    assert len(report["regression"]["best_log_models"]) == 4
    # predictions: 30 models x 4 algos x 1 budget x 1 size x 2 modes x 15 instances
    rows = [
        line
        for line in (tiny_run / "predictions.csv").read_text().splitlines()
        if line and not line.startswith("#") and not line.startswith("model_id")
    ]
    assert len(rows) == 30 * 4 * 2 * 15


def test_outputs_embed_config_hash(tiny_run):
    first = (tiny_run / "features.csv").read_text().splitlines()[0]
    assert first.startswith("# config_hash=") and "seed=0" in first


def test_determinism_across_reruns_and_jobs(tiny_run, tmp_path):
    out2 = tmp_path / "again"
    result = invoke(["all", *TINY, "--jobs", "2", "--out", str(out2), "--no-figures"])
    assert result.exit_code == 0, result.output
    for name in (
        "features.csv",
        "performance.csv",
        "predictions.csv",
        "selectors.csv",
        "frequency_b30_s50.csv",
    ):
        assert (tiny_run / name).read_bytes() == (out2 / name).read_bytes(), name


def test_missing_inputs_name_producing_command(tmp_path):
    result = CliRunner().invoke(
        cli.main, ["train", *TINY, "--out", str(tmp_path / "empty")]
    )
    assert result.exit_code != 0
    assert "features" in result.output

    result = CliRunner().invoke(
        cli.main, ["select", *TINY, "--out", str(tmp_path / "empty")]
    )
    assert result.exit_code != 0
    assert "train" in result.output


def test_config_hash_semantics():
    base = cli.RunConfig()
    assert cli.config_hash(base) == cli.config_hash(
        cli.RunConfig(out="elsewhere", jobs=8)
    )
    assert cli.config_hash(base) != cli.config_hash(cli.RunConfig(seed=1))
    assert cli.config_hash(base) != cli.config_hash(cli.RunConfig(threshold=0.5))
    assert cli.config_hash(base) != cli.config_hash(cli.RunConfig(budgets=(250,)))


def test_config_file_and_flag_override(tmp_path):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"fids": "1-2", "reps": 1, "budgets": [20], "sample_sizes": [50]}))
    out = tmp_path / "o"
    result = invoke(
        ["features", "--config", str(cfg_file), "--fids", "1", "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    rows = [
        line
        for line in (out / "features.csv").read_text().splitlines()
        if line and not line.startswith("#") and not line.startswith("fid,")
    ]
    # flag --fids 1 overrides the config file's 1-2; reps comes from the file
    assert len(rows) == 5
    assert all(line.startswith("1,") for line in rows)


def test_unknown_config_key_rejected(tmp_path):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"nope": 1}))
    result = CliRunner().invoke(cli.main, ["features", "--config", str(cfg_file)])
    assert result.exit_code != 0
    assert "unknown config keys" in result.output


def test_out_env_var(tmp_path, monkeypatch):
    out = tmp_path / "envout"
    monkeypatch.setenv(cli.OUT_ENVVAR, str(out))
    result = invoke(["features", "--fids", "1", "--iids", "1", "--sample-sizes", "50", "--reps", "1"])
    assert result.exit_code == 0, result.output
    assert (out / "features.csv").exists()


def test_ingest_roundtrip(tmp_path):
    src = tmp_path / "external.csv"
    src.write_text(
        "algorithm,fid,iid,dim,budget,precision\n"
        "HCMA,1,1,5,250,2.82\nMCS,1,1,5,250,0.5\n"
    )
    out = tmp_path / "o"
    result = invoke(["ingest", str(src), "--out", str(out)])
    assert result.exit_code == 0, result.output
    text = (out / "performance.csv").read_text()
    assert "HCMA,1,1,5,250,2.8199999999999998" in text or "HCMA,1,1,5,250,2.82" in text


def test_threshold_sweep_output(tiny_run, tmp_path):
    out = tmp_path / "sweep"
    out.mkdir()
    for name in ("features.csv", "performance.csv", "predictions.csv"):
        (out / name).write_bytes((tiny_run / name).read_bytes())
    result = invoke(
        ["select", *TINY, "--out", str(out), "--threshold-grid", "0.0,0.9,1e6"]
    )
    assert result.exit_code == 0, result.output
    assert (out / "threshold_sweep.csv").exists()
    rows = [
        r
        for r in (out / "threshold_sweep.csv").read_text().splitlines()
        if r and not r.startswith("#") and not r.startswith("model_id")
    ]
    assert len(rows) == 3 * 30


def test_report_renders_figures(tiny_run, tmp_path):
    out = tmp_path / "figs"
    out.mkdir()
    for name in ("features.csv", "performance.csv", "predictions.csv"):
        (out / name).write_bytes((tiny_run / name).read_bytes())
    result = invoke(["report", *TINY, "--out", str(out)])
    assert result.exit_code == 0, result.output
    fig_dir = out / "figures"
    names = sorted(os.listdir(fig_dir))
    assert "selectors_b30_s50.png" in names
    assert "regression_b30_s50.png" in names
    assert any(n.startswith("frequency_unscaled") for n in names)
