import json
from pathlib import Path

import pytest

from lfpp_lab import cli, harness


def smoke_config(tmp_path, **overrides):
    d = {"kind": "covariance", "master_seed": 11,
         "output_dir": str(tmp_path / "out"), "resource_profile": "smoke",
         "parameters": {"n_cells": 32, "replicates": 200, "n_pairs": 3}}
    d.update(overrides)
    return d


def write_toml(path: Path, d: dict) -> Path:
    lines = []
    for k, v in d.items():
        if k == "parameters":
            continue
        lines.append(f'{k} = {json.dumps(v)}')
    lines.append("[parameters]")
    for k, v in d["parameters"].items():
        lines.append(f"{k} = {json.dumps(v)}")
    path.write_text("\n".join(lines) + "\n")
    return path


def test_run_writes_artifacts_and_passes(tmp_path):
    cfg = harness.config_from_dict(smoke_config(tmp_path))
    out = harness.run(cfg, jobs=1)
    assert (out / "records.csv").exists()
    assert (out / "summary.json").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "complete"
    assert manifest["schema_version"] == harness.SCHEMA_VERSION
    summary = json.loads((out / "summary.json").read_text())
    assert summary["covariance_check"] == "pass"
    header = (out / "records.csv").read_text().splitlines()[0]
    assert header == "kind,parameters,replicate,statistic,value,seed"


def test_rerun_and_parallel_byte_identical(tmp_path):
    cfg = harness.config_from_dict(smoke_config(tmp_path))
    out = harness.run(cfg, jobs=1)
    first = (out / "records.csv").read_bytes()
    out = harness.run(cfg, jobs=3)
    assert (out / "records.csv").read_bytes() == first


def test_interrupted_run_resumes_identically(tmp_path):
    cfg = harness.config_from_dict(smoke_config(tmp_path))
    full = harness.run(harness.config_from_dict(
        smoke_config(tmp_path, output_dir=str(tmp_path / "ref"))), jobs=1)
    ref = (full / "records.csv").read_bytes()

    # simulate an interruption: execute only half the jobs, leave partial state
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {"schema_version": harness.SCHEMA_VERSION,
                "code_version": "test", "status": "partial",
                "config": cfg.as_dict()}
    (out_dir / "manifest.json").write_text(json.dumps(manifest))
    jobs = harness.plan_jobs(cfg)
    harness.execute_jobs(jobs[: len(jobs) // 2], 1,
                         out_dir / "records.partial.jsonl")
    assert (out_dir / "records.partial.jsonl").exists()
    assert not (out_dir / "records.csv").exists()

    harness.resume(out_dir, jobs=1)
    assert (out_dir / "records.csv").read_bytes() == ref
    assert not (out_dir / "records.partial.jsonl").exists()
    assert json.loads((out_dir / "manifest.json").read_text())["status"] == "complete"


def test_resume_on_complete_is_noop(tmp_path):
    cfg = harness.config_from_dict(smoke_config(tmp_path))
    out = harness.run(cfg, jobs=1)
    mtime = (out / "records.csv").stat().st_mtime_ns
    harness.resume(out, jobs=1)
    assert (out / "records.csv").stat().st_mtime_ns == mtime


def test_resume_refuses_tampered_config(tmp_path):
    cfg = harness.config_from_dict(smoke_config(tmp_path))
    out = harness.run(cfg, jobs=1)
    manifest = json.loads((out / "manifest.json").read_text())
    manifest["status"] = "partial"
    manifest["config"]["parameters"]["n_cells"] = -5
    (out / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(harness.ConfigError):
        harness.resume(out, jobs=1)


def test_validation_rejects_bad_values(tmp_path):
    with pytest.raises(harness.ConfigError):
        harness.config_from_dict(smoke_config(tmp_path, kind="nope"))
    bad = smoke_config(tmp_path)
    bad["parameters"]["replicates"] = 3
    with pytest.raises(harness.ConfigError):
        harness.config_from_dict(bad)
    sc = {"kind": "scaling", "master_seed": 1, "output_dir": str(tmp_path / "s"),
          "resource_profile": "smoke",
          "parameters": {"xi_list": [-1.0], "replicates": 31}}
    with pytest.raises(harness.ConfigError):
        harness.config_from_dict(sc)


def test_resource_cap_exceeded(tmp_path):
    big = smoke_config(tmp_path)
    big["parameters"]["n_cells"] = 512
    with pytest.raises(harness.ResourceError):
        harness.config_from_dict(big)


def test_cli_exit_codes(tmp_path, capsys):
    p = write_toml(tmp_path / "bad.toml",
                   smoke_config(tmp_path, kind="covariance",
                                parameters={"n_cells": 32, "replicates": 3,
                                            "n_pairs": 2}))
    assert cli.main(["run", str(p)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "validation"

    p2 = write_toml(tmp_path / "big.toml",
                    smoke_config(tmp_path,
                                 parameters={"n_cells": 512, "replicates": 200,
                                             "n_pairs": 2}))
    assert cli.main(["run", str(p2)]) == 3

    assert cli.main(["report", str(tmp_path / "missing")]) == 2


def test_cli_run_report_and_overrides(tmp_path, capsys):
    p = write_toml(tmp_path / "cfg.toml", smoke_config(tmp_path))
    rc = cli.main(["run", str(p), "--jobs", "2",
                   "--set", "parameters.replicates=150"])
    assert rc == 0
    out = capsys.readouterr().out.strip()
    manifest = json.loads((Path(out) / "manifest.json").read_text())
    assert manifest["config"]["parameters"]["replicates"] == 150
    assert cli.main(["report", out]) == 0
    assert "covariance_check" in capsys.readouterr().out


def test_invalid_config_writes_no_output(tmp_path):
    bad = smoke_config(tmp_path)
    bad["parameters"]["replicates"] = 3
    p = write_toml(tmp_path / "bad.toml", bad)
    assert cli.main(["run", str(p)]) == 2
    assert not (tmp_path / "out").exists()


def test_record_value_formatting():
    r = harness.ExperimentRecord("tail", {"r": 0.25, "set": "across"}, 3,
                                 "normalized_distance", 1.5, 42)
    assert r.csv_row() == ["tail", "r=0.25;set=across", "3",
                           "normalized_distance", "1.5", "42"]
    r2 = harness.ExperimentRecord("tail", {}, 0, "x", float("nan"), 1)
    assert r2.csv_row()[4] == "censored"
