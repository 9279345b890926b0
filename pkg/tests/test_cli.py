import json

import numpy as np
import pytest
from PIL import Image

from blightscan.cli import main
from blightscan.persistence import load_model
from blightscan.pipeline import THREADS_ENV, default_threads
from blightscan.synthetic import make_stripes_dataset

SMALL = ["--size", "64"]


@pytest.fixture(scope="module")
def trained_model(stripes_root, tmp_path_factory):
    out = tmp_path_factory.mktemp("model") / "model.txt"
    assert main(["train", "--data", str(stripes_root), "--out", str(out), *SMALL, "--threads", "2"]) == 0
    return out


def test_train_writes_model_and_report(stripes_root, tmp_path, capsys):
    out = tmp_path / "m.txt"
    report = tmp_path / "r.json"
    assert main(["train", "--data", str(stripes_root), "--out", str(out), "--report", str(report), *SMALL]) == 0
    printed = json.loads(capsys.readouterr().out)
    assert out.exists()
    assert printed == json.loads(report.read_text())
    assert printed["classifier"] == "svm" and printed["n"] == 12
    assert printed["hyperparameters"]["gamma"] == 1 / 1764


def test_train_is_byte_deterministic(stripes_root, tmp_path, capsys):
    outs = []
    for i in range(2):
        out = tmp_path / f"m{i}.txt"
        assert main(["train", "--data", str(stripes_root), "--out", str(out), *SMALL, "--threads", str(i + 1)]) == 0
        outs.append((out.read_bytes(), capsys.readouterr().out))
    assert outs[0] == outs[1]


@pytest.mark.parametrize(
    "argv",
    [
        ["train", "--data", "x", "--out", "y", "--split", "1.5"],
        ["train", "--data", "x", "--out", "y", "--bogus"],
        ["train", "--data", "x", "--out", "y", "--size", "60"],
        ["train", "--data", "x", "--out", "y", "--c", "-1"],
        ["compare", "--data", "x", "--gamma", "zero"],
        ["nosuchcommand"],
        [],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert capsys.readouterr().err


def test_single_class_exits_1(tmp_path, capsys):
    make_stripes_dataset(tmp_path, n_per_class=4, size=32, seed=3)
    import shutil

    shutil.rmtree(tmp_path / "healthy")
    code = main(["train", "--data", str(tmp_path), "--out", str(tmp_path / "m"), "--size", "32"])
    assert code == 1
    assert "SingleClass" in capsys.readouterr().err


def test_missing_dataset_exits_1(tmp_path, capsys):
    assert main(["train", "--data", str(tmp_path / "nope"), "--out", str(tmp_path / "m")]) == 1
    assert "NotADirectory" in capsys.readouterr().err


def test_unknown_positive_class_exits_1(stripes_root, tmp_path, capsys):
    code = main(["train", "--data", str(stripes_root), "--out", str(tmp_path / "m"), *SMALL, "--positive", "rust"])
    assert code == 1
    assert "rust" in capsys.readouterr().err


def test_predict_positive_training_image(trained_model, stripes_root, capsys):
    image = sorted((stripes_root / "late_blight").iterdir())[0]
    assert main(["predict", "--model", str(trained_model), "--image", str(image)]) == 0
    label, value = capsys.readouterr().out.split()
    assert label == "late_blight" and float(value) >= 0
    image = sorted((stripes_root / "healthy").iterdir())[0]
    main(["predict", "--model", str(trained_model), "--image", str(image)])
    label, value = capsys.readouterr().out.split()
    assert label == "healthy" and float(value) < 0


def test_predict_resizes_to_model_size(trained_model, stripes_root, tmp_path, capsys):
    image = sorted((stripes_root / "late_blight").iterdir())[0]
    big = tmp_path / "big.png"
    Image.open(image).resize((150, 90)).save(big)
    assert main(["predict", "--model", str(trained_model), "--image", str(big)]) == 0
    assert capsys.readouterr().out.split()[0] in ("late_blight", "healthy")


def test_eval_writes_report(trained_model, stripes_root, tmp_path, capsys):
    report = tmp_path / "eval.json"
    assert main(["eval", "--model", str(trained_model), "--data", str(stripes_root), "--report", str(report)]) == 0
    d = json.loads(report.read_text())
    assert d["n"] == 60 and d["accuracy"] >= 0.95
    assert "accuracy" in capsys.readouterr().out


def test_eval_with_manifest(trained_model, stripes_root, tmp_path):
    from blightscan.dataset import SplitSpec, scan_dataset, stratified_split, write_manifest

    _, test_m = stratified_split(scan_dataset(stripes_root), SplitSpec(0.8, 42))
    write_manifest(test_m, tmp_path / "test.csv")
    report = tmp_path / "eval.json"
    args = ["eval", "--model", str(trained_model), "--data", str(stripes_root), "--manifest", str(tmp_path / "test.csv"),
            "--report", str(report)]
    assert main(args) == 0
    assert json.loads(report.read_text())["n"] == 12


def test_features_row_length(tmp_path):
    img = tmp_path / "x.png"
    Image.fromarray(np.random.default_rng(0).integers(0, 256, (100, 140, 3), dtype=np.uint8)).save(img)
    out = tmp_path / "f.csv"
    assert main(["features", "--image", str(img), "--out", str(out)]) == 0
    text = out.read_text()
    assert text.endswith("\n") and text.count("\n") == 1
    values = [float(v) for v in text.strip().split(",")]
    assert len(values) == 8100
    assert 0 <= min(values) and max(values) <= 1


def test_compare_table_and_reports(stripes_root, tmp_path, capsys):
    out_dir = tmp_path / "reports"
    assert main(["compare", "--data", str(stripes_root), "--seed", "3", *SMALL, "--out-dir", str(out_dir)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].split()[0] == "classifier"
    assert [line.split()[0] for line in out[1:4]] == ["svm", "knn", "tree"]
    reports = [json.loads((out_dir / f"report_{n}.json").read_text()) for n in ("svm", "knn", "tree")]
    assert len({r["provenance"]["split"]["membership_hash"] for r in reports}) == 1
    assert len({r["provenance"]["feature_hash"] for r in reports}) == 1
    assert reports[1]["hyperparameters"] == {"k": 3, "metric": "euclidean"}


@pytest.mark.parametrize("command", ["train", "eval", "predict", "features", "compare", "synth"])
def test_help_exits_0(command, capsys):
    assert main([command, "--help"]) == 0
    text = capsys.readouterr().out
    assert "--" in text
    if command in ("train", "compare"):
        for flag in ("--size", "--cell", "--block", "--bins", "--kernel", "--gamma", "--c", "--split", "--seed",
                     "--positive", "--threads"):
            assert flag in text
        assert "default: 0.8" in text


def test_threads_env_fallback(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert default_threads() == 3
    monkeypatch.setenv(THREADS_ENV, "junk")
    assert default_threads() >= 1


def test_synth_command(tmp_path):
    assert main(["synth", "--out", str(tmp_path / "s"), "--n-per-class", "3", "--size", "32"]) == 0
    assert len(list((tmp_path / "s" / "late_blight").iterdir())) == 3
