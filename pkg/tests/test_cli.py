"""Exit-code contract and file outputs, exercised by spawning the
installed entry point the way a user would."""
import json
import os
import subprocess
import sys

import pytest

from trihop.data_eval import read_report, read_traces

RUN = [sys.executable, "-m", "trihop"]


def spawn(args, cwd, env_overrides=None, drop=()):
    env = {k: v for k, v in os.environ.items() if k not in drop}
    env.update(env_overrides or {})
    return subprocess.run(RUN + args, cwd=cwd, env=env, capture_output=True, text=True)


def run_mode(tmp_path, fixtures_dir, mode, out_name, extra=()):
    return spawn(
        [
            "run",
            "--data", str(fixtures_dir / "e2e_dataset.jsonl"),
            "--mode", mode,
            "--backend", "mock",
            "--mock-script", str(fixtures_dir / "e2e_mock.jsonl"),
            "--k", "3",
            "--out", out_name,
            *extra,
        ],
        cwd=tmp_path,
    )


def test_no_arguments_is_usage_error(tmp_path):
    result = spawn([], cwd=tmp_path)
    assert result.returncode == 2
    assert "usage" in result.stderr.lower()


def test_unknown_flag_is_usage_error(tmp_path):
    result = spawn(["run", "--frobnicate"], cwd=tmp_path)
    assert result.returncode == 2
    assert "usage" in result.stderr.lower()


def test_unknown_subcommand_is_usage_error(tmp_path):
    result = spawn(["trainify"], cwd=tmp_path)
    assert result.returncode == 2


def test_help_exits_zero(tmp_path):
    result = spawn(["--help"], cwd=tmp_path)
    assert result.returncode == 0
    assert "run" in result.stdout and "export-finetune" in result.stdout


def test_missing_dataset_is_config_error(tmp_path, fixtures_dir):
    result = spawn(
        [
            "run", "--data", "absent.jsonl", "--mode", "vanilla",
            "--backend", "mock", "--mock-script", str(fixtures_dir / "e2e_mock.jsonl"),
            "--out", "t.jsonl",
        ],
        cwd=tmp_path,
    )
    assert result.returncode == 3
    assert "error" in result.stderr


def test_bad_fixture_is_config_error(tmp_path, fixtures_dir):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{}\n", encoding="utf-8")
    result = spawn(
        [
            "run", "--data", str(fixtures_dir / "e2e_dataset.jsonl"), "--mode", "vanilla",
            "--backend", "mock", "--mock-script", str(bad), "--out", "t.jsonl",
        ],
        cwd=tmp_path,
    )
    assert result.returncode == 3


def test_missing_required_value_is_config_error(tmp_path, fixtures_dir):
    result = spawn(
        ["run", "--data", str(fixtures_dir / "e2e_dataset.jsonl"), "--mode", "vanilla"],
        cwd=tmp_path,
    )
    assert result.returncode == 3
    assert "--out" in result.stderr


def test_missing_api_key_is_backend_error(tmp_path, fixtures_dir):
    result = spawn(
        [
            "run", "--data", str(fixtures_dir / "e2e_dataset.jsonl"), "--mode", "vanilla",
            "--backend", "http", "--endpoint-url", "https://example.invalid/v1", "--model", "m",
            "--out", "t.jsonl",
        ],
        cwd=tmp_path,
        drop={"THOR_API_KEY"},
    )
    assert result.returncode == 4
    assert "THOR_API_KEY" in result.stderr


def test_run_eval_export_report_pipeline(tmp_path, fixtures_dir):
    data = str(fixtures_dir / "e2e_dataset.jsonl")
    assert run_mode(tmp_path, fixtures_dir, "vanilla", "vanilla.jsonl").returncode == 0
    assert run_mode(tmp_path, fixtures_dir, "thor", "thor.jsonl").returncode == 0

    result = spawn(["eval", "--traces", "thor.jsonl", "--data", data, "--out", "thor.json"], cwd=tmp_path)
    assert result.returncode == 0
    assert "macro_f1_all=1.0000" in result.stdout
    report, config = read_report(tmp_path / "thor.json")
    assert report.macro_f1_all == 1.0
    assert config["mode"] == "thor"

    result = spawn(["export-finetune", "--traces", "thor.jsonl", "--data", data, "--out", "train.jsonl"], cwd=tmp_path)
    assert result.returncode == 0
    lines = (tmp_path / "train.jsonl").read_text(encoding="utf-8").splitlines()
    assert json.loads(lines[0])["schema"] == "trihop/finetune/v1"
    assert len(lines) - 1 == 60  # 20 thor traces, 3 records each

    result = spawn(
        ["report", "--data", data, "--traces", "vanilla.jsonl", "thor.jsonl", "--out-dir", "figs"],
        cwd=tmp_path,
    )
    assert result.returncode == 0
    assert "vanilla" in result.stdout and "thor" in result.stdout
    assert "0.6000" in result.stdout and "1.0000" in result.stdout
    tsv = (tmp_path / "figs" / "comparison.tsv").read_text(encoding="utf-8")
    assert tsv.splitlines()[0].startswith("mode\tmacro_f1_all")
    assert (tmp_path / "figs" / "comparison.png").stat().st_size > 0


def test_export_rejects_single_hop_traces(tmp_path, fixtures_dir):
    data = str(fixtures_dir / "e2e_dataset.jsonl")
    assert run_mode(tmp_path, fixtures_dir, "vanilla", "vanilla.jsonl").returncode == 0
    result = spawn(["export-finetune", "--traces", "vanilla.jsonl", "--data", data, "--out", "x.jsonl"], cwd=tmp_path)
    assert result.returncode == 3
    assert "thor" in result.stderr


def test_eval_against_wrong_dataset_is_config_error(tmp_path, fixtures_dir):
    assert run_mode(tmp_path, fixtures_dir, "vanilla", "vanilla.jsonl").returncode == 0
    other = tmp_path / "other.jsonl"
    other.write_text(
        json.dumps({"id": "zz", "sentence": "s", "target": "s", "polarity": "neutral", "implicit": False}) + "\n",
        encoding="utf-8",
    )
    result = spawn(["eval", "--traces", "vanilla.jsonl", "--data", str(other), "--out", "r.json"], cwd=tmp_path)
    assert result.returncode == 3


def test_manifest_with_flag_override(tmp_path, fixtures_dir):
    manifest = tmp_path / "run.toml"
    manifest.write_text(
        "\n".join(
            [
                f'data = "{fixtures_dir / "e2e_dataset.jsonl"}"',
                'mode = "thor"',
                'out = "from_manifest.jsonl"',
                "",
                "[backend]",
                'kind = "mock"',
                f'mock_script = "{fixtures_dir / "e2e_mock.jsonl"}"',
                "",
                "[voting]",
                "k = 3",
            ]
        )
        + "\n",
        encoding="utf-8",
    )
    result = spawn(["run", "--config", str(manifest)], cwd=tmp_path)
    assert result.returncode == 0
    _, config = read_traces(tmp_path / "from_manifest.jsonl")
    assert config["mode"] == "thor" and config["voting"]["k"] == 3

    result = spawn(["run", "--config", str(manifest), "--mode", "vanilla", "--out", "override.jsonl"], cwd=tmp_path)
    assert result.returncode == 0
    _, config = read_traces(tmp_path / "override.jsonl")
    assert config["mode"] == "vanilla"


def test_bad_manifest_is_config_error(tmp_path):
    manifest = tmp_path / "run.toml"
    manifest.write_text("mode = [unclosed\n", encoding="utf-8")
    result = spawn(["run", "--config", str(manifest)], cwd=tmp_path)
    assert result.returncode == 3


def test_injected_backend_failure_still_exits_zero(tmp_path, fixtures_dir):
    # per-instance failures are recorded in the traces, not fatal
    script = []
    for line in (fixtures_dir / "e2e_mock.jsonl").read_text(encoding="utf-8").splitlines():
        record = json.loads(line)
        if record["id"] == "e10" and record["step"] == 1:
            record = {"id": "e10", "step": 1, "error": "injected outage"}
        script.append(json.dumps(record))
    hobbled = tmp_path / "hobbled.jsonl"
    hobbled.write_text("".join(l + "\n" for l in script), encoding="utf-8")
    result = spawn(
        [
            "run", "--data", str(fixtures_dir / "e2e_dataset.jsonl"), "--mode", "vanilla",
            "--backend", "mock", "--mock-script", str(hobbled), "--k", "3", "--out", "t.jsonl",
        ],
        cwd=tmp_path,
    )
    assert result.returncode == 0
    assert "(1 failed)" in result.stdout
    traces, _ = read_traces(tmp_path / "t.jsonl")
    failed = [t for t in traces if t.failed]
    assert [t.instance_id for t in failed] == ["e10"]
    assert len(traces) == 20
