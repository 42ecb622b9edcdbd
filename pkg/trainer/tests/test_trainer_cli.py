import pytest

import trihop_trainer.cli as cli
from trihop_trainer import ResourceError
from trihop_trainer.cli import dispatch


def test_no_arguments_is_usage_error(capsys):
    assert dispatch([]) == 2
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_flag_is_usage_error(capsys):
    assert dispatch(["train", "--frobnicate"]) == 2


def test_train_then_predict(tmp_path, train_file, capsys):
    code = dispatch(
        [
            "train",
            "--data", str(train_file),
            "--out-dir", str(tmp_path / "ckpt"),
            "--epochs", "2",
            "--seed", "13",
        ]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "trained 2 epochs on 60 records" in out
    assert (tmp_path / "ckpt" / "model.pt").is_file()
    assert (tmp_path / "ckpt" / "metrics.json").is_file()

    code = dispatch(
        ["predict", "--checkpoint", str(tmp_path / "ckpt"), "--input", "Given the sentence"]
    )
    assert code == 0
    assert capsys.readouterr().out.strip() in ("positive", "neutral", "negative")


@pytest.mark.parametrize(
    "argv",
    [
        ["train", "--data", "absent.jsonl", "--out-dir", "ckpt"],
        ["train", "--data", "x", "--out-dir", "ckpt", "--steps", "a,b"],
        ["predict", "--checkpoint", "nowhere", "--input", "text"],
    ],
)
def test_config_and_data_errors(tmp_path, argv, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert dispatch(argv) == 3
    assert "error:" in capsys.readouterr().err


def test_bad_epochs_is_config_error(tmp_path, train_file, capsys):
    code = dispatch(
        ["train", "--data", str(train_file), "--out-dir", str(tmp_path), "--epochs", "0"]
    )
    assert code == 3
    assert "epochs" in capsys.readouterr().err


def test_resource_exhaustion_exit_code(tmp_path, train_file, monkeypatch, capsys):
    def exhausted(config, examples):
        raise ResourceError("not enough memory (while training ...)")

    monkeypatch.setattr(cli, "train", exhausted)
    code = dispatch(["train", "--data", str(train_file), "--out-dir", str(tmp_path)])
    assert code == 4
    assert "memory" in capsys.readouterr().err
