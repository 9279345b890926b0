import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blightscan.dataset import SplitSpec, scan_dataset, stratified_split
from blightscan.errors import AllImagesFailed, ConfigMismatch, EmptyInput, LengthMismatch, SingleClass
from blightscan.evaluation import ConfusionMatrix, compare, confusion, evaluate, format_table, metrics
from blightscan.hog import HogConfig
from blightscan.pipeline import PipelineConfig, featurize
from blightscan.svm import TrainParams, train_smo
from blightscan.synthetic import make_stripes_dataset

CFG64 = PipelineConfig(size=(64, 64))


def test_confusion_examples():
    assert confusion([1, -1], [1, -1]) == ConfusionMatrix(tp=1, fp=0, fn=0, tn=1)
    assert confusion([1], [-1]).fp == 1
    assert confusion([-1], [1]).fn == 1


def test_confusion_errors():
    with pytest.raises(LengthMismatch):
        confusion([1, 1], [1])
    with pytest.raises(EmptyInput):
        confusion([], [])


def test_metrics_worked_example():
    r = metrics(ConfusionMatrix(tp=40, fp=10, fn=5, tn=45))
    assert r.accuracy == 0.85
    assert r.precision == 0.80
    assert r.recall == pytest.approx(0.888889, abs=1e-6)
    assert r.mse == 0.15
    assert r.f1 == pytest.approx(0.842105, abs=1e-6)
    assert r.accuracy + r.mse == 1


def test_metrics_perfect_and_undefined():
    r = metrics(ConfusionMatrix(tp=4, fp=0, fn=0, tn=6))
    assert (r.accuracy, r.mse) == (1.0, 0.0)
    r = metrics(ConfusionMatrix(tp=0, fp=0, fn=3, tn=7))
    assert r.precision == 0 and r.precision_undefined
    assert r.f1 == 0
    r = metrics(ConfusionMatrix(tp=0, fp=2, fn=0, tn=7))
    assert r.recall == 0 and r.recall_undefined
    with pytest.raises(EmptyInput):
        metrics(ConfusionMatrix(0, 0, 0, 0))


@given(st.integers(0, 500), st.integers(0, 500), st.integers(0, 500), st.integers(0, 500))
def test_metric_identities(tp, fp, fn, tn):
    cm = ConfusionMatrix(tp, fp, fn, tn)
    if cm.n == 0:
        return
    r = metrics(cm)
    assert r.accuracy + r.mse == 1
    assert r.recall * (tp + fn) == pytest.approx(tp, rel=1e-12, abs=1e-12)
    assert r.precision * (tp + fp) == pytest.approx(tp, rel=1e-12, abs=1e-12)
    for v in (r.accuracy, r.precision, r.recall, r.mse, r.f1):
        assert 0 <= v <= 1


@pytest.fixture(scope="module")
def trained(stripes_root):
    m = scan_dataset(stripes_root)
    train_m, test_m = stratified_split(m, SplitSpec(0.8, 1))
    fs = featurize(train_m, CFG64)
    model = train_smo(fs.features, fs.labels, hog_config=CFG64.hog, image_size=(64, 64))
    return model, train_m, test_m


def test_evaluate_on_training_split(trained):
    model, train_m, _ = trained
    r = evaluate(model, train_m, CFG64)
    assert r.accuracy == 1.0
    assert r.n == len(train_m)


def test_evaluate_is_byte_deterministic(trained):
    model, _, test_m = trained
    assert evaluate(model, test_m, CFG64).to_json() == evaluate(model, test_m, CFG64).to_json()


def test_evaluate_records_failures(trained, tmp_path):
    model, _, test_m = trained
    root = tmp_path / "d"
    for e in test_m.entries[:3]:
        (root / e.relpath).parent.mkdir(parents=True, exist_ok=True)
        (root / e.relpath).write_bytes((test_m.root / e.relpath).read_bytes())
    (root / "late_blight").mkdir(parents=True, exist_ok=True)
    (root / "late_blight" / "broken.png").write_bytes(b"\x89PNG nope")
    data = scan_dataset(root)
    r = evaluate(model, data, CFG64)
    assert r.n == 3
    d = json.loads(r.to_json())
    assert d["n_failed"] == 1 and d["failures"][0][0] == "late_blight/broken.png"


def test_evaluate_all_failed(trained, tmp_path):
    model, _, _ = trained
    (tmp_path / "late_blight").mkdir()
    for i in range(2):
        (tmp_path / "late_blight" / f"{i}.jpg").write_bytes(b"garbage")
    with pytest.raises(AllImagesFailed):
        evaluate(model, scan_dataset(tmp_path), CFG64)


def test_evaluate_config_mismatch(trained):
    model, _, test_m = trained
    with pytest.raises(ConfigMismatch):
        evaluate(model, test_m, PipelineConfig(size=(64, 64), hog=HogConfig(n_bins=6)))


def test_compare_shares_split_and_features(stripes_root):
    m = scan_dataset(stripes_root)
    res = compare(m, SplitSpec(0.8, 5), CFG64, train_params=TrainParams(seed=5))
    assert list(res.reports) == ["svm", "knn", "tree"]
    ns = {r.n for r in res.reports.values()}
    assert ns == {res.n_test}
    hashes = {(r.provenance["split"]["membership_hash"], r.provenance["feature_hash"]) for r in res.reports.values()}
    assert hashes == {(res.split_hash, res.feature_hash)}
    other = compare(m, SplitSpec(0.8, 6), CFG64)
    assert other.split_hash != res.split_hash
    table = format_table(res.reports)
    assert len(table.strip().splitlines()) == 4


def test_compare_single_class_fails_fast(tmp_path):
    make_stripes_dataset(tmp_path, n_per_class=4, size=32, seed=1)
    import shutil

    shutil.rmtree(tmp_path / "healthy")
    with pytest.raises(SingleClass):
        compare(scan_dataset(tmp_path), SplitSpec(0.5, 1), PipelineConfig(size=(32, 32)))


def test_threads_do_not_change_features(stripes_root):
    m = scan_dataset(stripes_root)
    a = featurize(m, PipelineConfig(size=(64, 64), threads=1))
    b = featurize(m, PipelineConfig(size=(64, 64), threads=4))
    assert a.content_hash() == b.content_hash()
    assert np.array_equal(a.labels, b.labels)
