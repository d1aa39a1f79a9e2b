import json

import numpy as np
import pytest
from click.testing import CliRunner

from tvmi import pipeline as pl
from tvmi.cli import main
from tvmi.errors import AlignmentError, InstabilityError
from tvmi.vecm import select_lag_bic

TABLES = ("table1.csv", "table2.csv", "table3.csv", "zeta.csv", "zeta_annual.csv")


def invoke(*args, env=None):
    return CliRunner().invoke(main, [str(a) for a in args], env=env, catch_exceptions=False)


@pytest.fixture(scope="module")
def synth_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    res = invoke("synth", "--scenario", "paperlike", "--seed", 7, "--out", d / "panel.csv", "--truth", d / "truth.csv")
    assert res.exit_code == 0, res.output
    return d


@pytest.fixture(scope="module")
def pipeline_run(synth_files, tmp_path_factory):
    out = tmp_path_factory.mktemp("run1")
    res = invoke("pipeline", synth_files / "panel.csv", "--out-dir", out, "--bootstrap", 100)
    assert res.exit_code == 0, res.output
    return out


def test_synth_outputs(synth_files):
    lines = (synth_files / "panel.csv").read_text().splitlines()
    assert lines[0] == "date,m1,m2,m3,hub"
    assert len(lines) == 621
    truth = (synth_files / "truth.csv").read_text().splitlines()
    assert truth[0] == "date,zeta" and len(truth) == 621


def test_ingest_command(synth_files, tmp_path):
    text = (synth_files / "panel.csv").read_text().splitlines()
    parts = text[10].split(",")
    parts[2] = ""
    text[10] = ",".join(parts)
    src = tmp_path / "gappy.csv"
    src.write_text("\n".join(text) + "\n")
    res = invoke("ingest", src, "--out", tmp_path / "filled.csv")
    assert res.exit_code == 0
    assert "m2: 1 imputed" in res.output
    mask = (tmp_path / "filled.mask.csv").read_text().splitlines()
    assert mask[10].split(",")[2] == "1"
    bad = tmp_path / "bad.csv"
    bad.write_text("date,a\n2000-01,-1\n")
    assert invoke("ingest", bad).exit_code == pl.EXIT_CODES["ingest"]


def test_unitroot_command(synth_files, tmp_path):
    res = invoke("unitroot", "--case", "trend", "--criterion", "mbic", "--column", "m1",
                 synth_files / "panel.csv", "--out", tmp_path / "u.csv")
    assert res.exit_code == 0
    rows = (tmp_path / "u.csv").read_text().splitlines()
    assert rows[0].startswith("series,statistic,lags,phi_hat")
    assert len(rows) == 2 and rows[1].startswith("m1,")
    assert invoke("unitroot", "--column", "nope", synth_files / "panel.csv").exit_code == pl.EXIT_CODES["unitroot"]
    full = invoke("unitroot", synth_files / "panel.csv")
    assert full.exit_code == 0 and "adf_gls" in full.output and "phi_hat" in full.output


def test_coint_command(synth_files):
    res = invoke("coint", "--lags", 2, synth_files / "panel.csv")
    assert res.exit_code == 0
    for label in ("None", "At most 1", "At most 2", "At most 3"):
        assert label in res.output


def test_vecm_command(synth_files, tmp_path):
    res = invoke("vecm", "--lags", "auto", synth_files / "panel.csv", "--out", tmp_path / "v.csv")
    assert res.exit_code == 0
    logs = pl.load_logs(synth_files / "panel.csv")
    assert f"k = {select_lag_bic(None, logs, 8)}," in res.output
    text = (tmp_path / "v.csv").read_text()
    assert "level,const,coef" in text and "fit,lc,value" in text
    assert invoke("vecm", "--lags", "zero", synth_files / "panel.csv").exit_code == 2


def test_tvvecm_command(synth_files, tmp_path):
    res = invoke("tvvecm", synth_files / "panel.csv", "--bootstrap", 100, "--out-dir", tmp_path)
    assert res.exit_code == 0, res.output
    header = (tmp_path / "zeta.csv").read_text().splitlines()[0]
    assert header == "date,zeta,lo,hi,accel"
    assert (tmp_path / "zeta.svg").read_text().lstrip().startswith("<?xml")
    assert invoke("tvvecm", synth_files / "panel.csv", "--bootstrap", 10, "--out-dir", tmp_path).exit_code == 7


def test_pipeline_outputs(pipeline_run):
    for name in TABLES + ("zeta.svg", "manifest.json"):
        assert (pipeline_run / name).is_file()
    manifest = json.loads((pipeline_run / "manifest.json").read_text())
    assert manifest["status"] == "complete"
    assert manifest["decisions"]["rank"] == 3
    assert manifest["seed"] == 42
    assert set(manifest["outputs"]) >= set(TABLES)
    assert "numpy" in manifest["versions"]
    table2 = (pipeline_run / "table2.csv").read_text()
    assert "selected_rank" in table2


def test_pipeline_rerun_from_manifest_is_byte_identical(pipeline_run, tmp_path):
    res = invoke("pipeline", "--config", pipeline_run / "manifest.json", "--out-dir", tmp_path)
    assert res.exit_code == 0, res.output
    for name in TABLES + ("zeta.svg",):
        assert (tmp_path / name).read_bytes() == (pipeline_run / name).read_bytes(), name


def test_pipeline_key_value_config_and_env(synth_files, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"input = {synth_files / 'panel.csv'}\nreps = 100  # bootstrap draws\nseed = 3\n")
    out = tmp_path / "env-out"
    res = invoke("pipeline", "--config", cfg, env={pl.OUTPUT_ENV: str(out)})
    assert res.exit_code == 0, res.output
    assert json.loads((out / "manifest.json").read_text())["seed"] == 3


def test_pipeline_config_errors(synth_files, tmp_path):
    assert invoke("pipeline", synth_files / "panel.csv", "--bootstrap", 0, "--out-dir", tmp_path / "x").exit_code == 2
    assert not (tmp_path / "x").exists()
    assert invoke("pipeline", tmp_path / "missing.csv").exit_code == 2
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(f"input = {synth_files / 'panel.csv'}\ncolour = blue\n")
    assert invoke("pipeline", "--config", cfg).exit_code == 2


def test_pipeline_stage_failure_removes_outputs(tmp_path):
    walks = tmp_path / "walks.csv"
    assert invoke("synth", "--scenario", "independent", "--seed", 2, "--out", walks).exit_code == 0
    out = tmp_path / "out"
    res = CliRunner().invoke(main, ["pipeline", str(walks), "--out-dir", str(out), "--bootstrap", "100"])
    assert res.exit_code == pl.EXIT_CODES["cointegration"]
    assert "stage 'cointegration' failed" in res.output
    assert list(out.iterdir()) == []


def test_pipeline_late_failure_removes_earlier_tables(synth_files, tmp_path, monkeypatch):
    def explode(*args, **kw):
        raise InstabilityError("bootstrap replication 5 exploded at step 3")

    monkeypatch.setattr(pl, "bootstrap_bands", explode)
    cfg = pl.PipelineConfig(input=str(synth_files / "panel.csv"), output_dir=str(tmp_path), reps=100)
    with pytest.raises(pl.StageError) as info:
        pl.run_pipeline(cfg)
    assert info.value.exit_code == 7 and "replication 5" in str(info.value)
    assert list(tmp_path.iterdir()) == []


def test_pipeline_stationary_input_stops_at_unit_root_screen(tmp_path):
    rng = np.random.default_rng(0)
    lines = ["date,a,b"] + [
        f"{1900 + t // 12}-{t % 12 + 1:02d},{np.exp(0.1 * rng.standard_normal()):.6f},{np.exp(0.1 * rng.standard_normal()):.6f}"
        for t in range(300)
    ]
    src = tmp_path / "flat.csv"
    src.write_text("\n".join(lines) + "\n")
    res = CliRunner().invoke(main, ["pipeline", str(src), "--out-dir", str(tmp_path / "o")])
    assert res.exit_code == pl.EXIT_CODES["unitroot"]
    assert "I(1)" in res.output


def write_annual(path, years, values, name):
    path.write_text(f"year,{name}\n" + "".join(f"{y},{v!r}\n" for y, v in zip(years, values)))


def test_robustness_command(tmp_path):
    from tvmi.synth import generate, scenario

    panel, _ = generate(scenario("bivariate", seed=3))
    years = range(1880, 1932)
    write_annual(tmp_path / "z.csv", years, np.exp(panel.values[:, 0]).tolist(), "zeta")
    write_annual(tmp_path / "t.csv", years, np.exp(panel.values[:, 1]).tolist(), "telegrams")
    res = invoke("robustness", tmp_path / "z.csv", tmp_path / "t.csv", "--out", tmp_path / "t5.csv")
    assert res.exit_code == 0
    text = (tmp_path / "t5.csv").read_text()
    assert text.splitlines()[0] == "panel,row,stat,eigenvalue,maxeig,trace,dlog_zeta,dlog_telegrams"
    assert "cointegration" in text and "vecm" in text
    assert "cointegration,selected_rank,value,1" in text


def test_robustness_span_mismatch(tmp_path):
    write_annual(tmp_path / "a.csv", range(1880, 1930), [1.0 + i for i in range(50)], "a")
    write_annual(tmp_path / "b.csv", range(1881, 1931), [1.0 + i for i in range(50)], "b")
    with pytest.raises(AlignmentError):
        pl.run_robustness(tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "t5.csv")
    res = CliRunner().invoke(main, ["robustness", str(tmp_path / "a.csv"), str(tmp_path / "b.csv"), "--out", str(tmp_path / "t5.csv")])
    assert res.exit_code != 0 and "spans differ" in res.output


def test_version():
    assert invoke("--version").exit_code == 0
