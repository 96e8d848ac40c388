from __future__ import annotations

import json
import shutil

import numpy as np
import pytest

from cavityanneal import cli
from cavityanneal.config import ExperimentConfig, loads
from cavityanneal.errors import StageError, ValidationError
from cavityanneal.io import file_sha256, read_csv, read_json, write_json
from cavityanneal.pipeline import (
    config_hash,
    golden_compare,
    load_fixture,
    plan,
    run_pipeline,
)

SMALL = """
spectrum: {points: 21}
schedule: {taus: [5.0, 10.0], samples: 40}
"""


def small_config() -> ExperimentConfig:
    return loads(SMALL)


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run1")
    run_pipeline(small_config(), out)
    return out


def _files(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_plan():
    assert plan() == ["select-modes", "synthesize", "spectrum", "anneal", "readout", "hopfield-bounds"]
    assert plan("synthesize") == ["select-modes", "synthesize"]
    assert plan(only="readout") == ["select-modes", "synthesize", "anneal", "readout"]
    assert plan(only="hopfield-bounds") == ["hopfield-bounds"]
    with pytest.raises(ValidationError):
        plan("bogus")


def test_manifest_lists_every_output(small_run):
    man = read_json(small_run / "manifest.json")
    assert man["status"] == "complete"
    listed = {e["path"]: e for e in man["files"]}
    for name in ("spectrum_chi1.csv", "trajectory_chi1_tau5.csv", "intensities_chi1.csv",
                 "program_chi1.json", "selection.json", "hopfield_chi1.json", "config.json"):
        assert name in listed, name
    assert any(p.startswith("figures/") and p.endswith(".png") for p in listed)
    for path, entry in listed.items():
        assert entry["sha256"] == file_sha256(small_run / path)
    on_disk = {p.relative_to(small_run).as_posix() for p in small_run.rglob("*") if p.is_file()}
    assert on_disk - set(listed) == {"manifest.json"}


def test_csv_headers_carry_units_and_hash(small_run):
    h = config_hash(small_config())
    for p in small_run.glob("*.csv"):
        meta, cols, data = read_csv(p)
        assert meta["config"] == h
        assert len(meta) >= 2, p.name
        assert data.shape[1] == len(cols)
    for p in small_run.glob("*.json"):
        d = read_json(p)
        assert d["schema_version"] == 1


def test_trajectory_contents(small_run):
    meta, cols, data = read_csv(small_run / "trajectory_chi1_tau10.csv")
    assert cols[0] == "tJ" and cols[1:9] == [f"sz{i}" for i in range(1, 9)]
    assert len(data) == 40
    np.testing.assert_allclose(data[:, 1:9].sum(axis=1), 0.0, atol=1e-12)
    summary = read_json(small_run / "anneal_summary.json")
    assert {r["tau"] for r in summary["recalls"]["chi1"]} == {5.0, 10.0}


def test_rerun_is_byte_identical(small_run, tmp_path):
    run_pipeline(small_config(), tmp_path)
    a, b = _files(small_run), _files(tmp_path)
    assert a.keys() == b.keys()
    assert [k for k in a if a[k] != b[k]] == []


def test_thread_count_does_not_change_results(small_run, tmp_path):
    run_pipeline(small_config(), tmp_path, threads=3)
    a, b = _files(small_run), _files(tmp_path)
    assert [k for k in a if a[k] != b[k]] == []


def test_reuse_saved_selection(small_run, tmp_path):
    shutil.copy(small_run / "selection.json", tmp_path / "selection.json")
    run_pipeline(small_config(), tmp_path, reuse=True)
    a, b = _files(small_run), _files(tmp_path)
    for name in ("program_chi1.json", "spectrum_chi1.csv", "anneal_summary.json", "reconstruction_chi1.json"):
        assert a[name] == b[name]


def test_failure_keeps_partial_outputs(tmp_path):
    cfg = small_config()
    cfg.schedule.method = "not-a-method"
    with pytest.raises(StageError) as exc:
        run_pipeline(cfg, tmp_path)
    assert exc.value.stage == "anneal"
    man = read_json(tmp_path / "manifest.json")
    assert man["status"] == "failed:anneal"
    assert man["stages"] == ["select-modes", "synthesize", "spectrum"]
    listed = {e["path"] for e in man["files"]}
    assert {"selection.json", "program_chi1.json", "spectrum_chi1.csv"} <= listed
    assert (tmp_path / "spectrum_chi1.csv").exists()


def test_stop_stage(tmp_path):
    run_pipeline(small_config(), tmp_path, stop_stage="synthesize")
    assert read_json(tmp_path / "manifest.json")["stages"] == ["select-modes", "synthesize"]
    assert not (tmp_path / "spectrum_summary.json").exists()


# --- golden comparison --------------------------------------------------------------------

@pytest.fixture(scope="module")
def golden_out(tmp_path_factory):
    out = tmp_path_factory.mktemp("golden")
    assert cli.main(["golden", "--out", str(out)]) == 0
    return out


def test_golden_passes(golden_out, capsys):
    report = read_json(golden_out / "golden_report.json")
    assert report["passed"]
    names = {r["quantity"] for r in report["rows"]}
    assert {"min_gap", "min_gap_zeta", "ground_overlap_2J", "anneal_overlap_tau50",
            "final_signs_match"} <= names


def test_golden_detects_corruption(golden_out):
    fixture = load_fixture()
    bundle = read_json(golden_out / "golden_bundle.json")["quantities"]
    assert golden_compare(bundle, fixture).passed
    bad = dict(bundle, min_gap=bundle["min_gap"] + 0.1)
    report = golden_compare(bad, fixture)
    assert not report.passed and report.failures() == ["min_gap"]
    del bad["min_gap"]
    report = golden_compare(bad, fixture)
    assert report.failures() == ["min_gap"]
    assert any(line.startswith("FAIL  min_gap: computed missing") for line in report.lines())


def test_golden_fixture_validation(tmp_path):
    fx = load_fixture()
    del fx["instance"]["tau"]
    p = write_json(tmp_path / "fx.json", {k: v for k, v in fx.items() if k != "schema_version"})
    with pytest.raises(ValidationError, match="instance.tau"):
        load_fixture(p)
    assert cli.main(["golden", "--fixture", str(p)]) == 2


def test_cli_golden_fails_on_tightened_fixture(tmp_path, capsys):
    fx = load_fixture()
    fx["quantities"]["min_gap"] = {"value": 0.40, "tol": 0.01}
    p = write_json(tmp_path / "fx.json", {k: v for k, v in fx.items() if k != "schema_version"})
    assert cli.main(["golden", "--fixture", str(p)]) == 1
    assert "FAIL  min_gap" in capsys.readouterr().out


# --- command line ---------------------------------------------------------------------------

def test_cli_subcommand_writes_delimited_summary(tmp_path, capsys):
    cfg = tmp_path / "small.yaml"
    cfg.write_text(SMALL)
    out = tmp_path / "out"
    assert cli.main(["hopfield-bounds", "--config", str(cfg), "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "hopfield_chi1\tnu_upper=4\t" in text
    assert (out / "figures").is_dir()
    _, cols, _ = read_csv(out / "hopfield_nu_chi1.csv")
    assert cols[0] == "nu"


def test_cli_bad_config_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("lattice:\n  n_up: 12\n")
    assert cli.main(["pipeline", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "lattice.n_up (line 2)" in capsys.readouterr().err


def test_cli_overrides(tmp_path):
    cfg = tmp_path / "small.yaml"
    cfg.write_text(SMALL)
    out = tmp_path / "o"
    assert cli.main(["select-modes", "--config", str(cfg), "--out", str(out), "--threads", "2",
                     "--seed", "7"]) == 0
    saved = read_json(out / "config.json")["experiment"]
    assert saved["runtime"]["seed"] == 7 and saved["runtime"]["threads"] == 2
    assert json.loads((out / "manifest.json").read_text())["seed"] == 7
