import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blightscan.dataset import (
    Entry,
    Manifest,
    SplitSpec,
    manifest_to_csv,
    read_manifest,
    scan_dataset,
    stratified_split,
    write_manifest,
)
from blightscan.errors import BadFraction, DegenerateClass, EmptyDataset, MalformedManifest, NotADirectory


def touch(root, *relpaths):
    for rel in relpaths:
        p = root / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_bytes(b"")


def synthetic_manifest(counts, root="/data"):
    names = tuple(sorted(counts))
    entries = [
        Entry(f"{name}/{i:04d}.png", names.index(name)) for name in names for i in range(counts[name])
    ]
    return Manifest(root, tuple(sorted(entries, key=lambda e: e.relpath)), names)


def test_scan_two_classes(tmp_path):
    touch(tmp_path, "late_blight/a.jpg", "late_blight/b.jpg", "late_blight/c.png", "healthy/x.jpg", "healthy/y.jpg")
    m = scan_dataset(tmp_path)
    assert len(m) == 5
    assert m.class_names == ("healthy", "late_blight")
    assert m.class_counts() == {"healthy": 2, "late_blight": 3}
    assert [e.relpath for e in m.entries] == sorted(e.relpath for e in m.entries)


def test_scan_only_text_files_is_empty(tmp_path):
    touch(tmp_path, "a/notes.txt", "b/notes.txt")
    with pytest.raises(EmptyDataset):
        scan_dataset(tmp_path)


def test_scan_skips_unsupported_extension(tmp_path):
    touch(tmp_path, "late_blight/leaf.tiff", "late_blight/leaf.JPG", "healthy/h.Png", "healthy/h.bmp")
    m = scan_dataset(tmp_path)
    assert m.skipped == ("late_blight/leaf.tiff",)
    assert len(m) == 3


def test_scan_not_a_directory(tmp_path):
    (tmp_path / "file").write_text("x")
    with pytest.raises(NotADirectory):
        scan_dataset(tmp_path / "file")
    with pytest.raises(NotADirectory):
        scan_dataset(tmp_path / "missing")


def test_rescan_is_identical(tmp_path):
    touch(tmp_path, "b/2.png", "a/1.png", "b/1.png", "a/sub/3.jpeg")
    assert scan_dataset(tmp_path) == scan_dataset(tmp_path)
    assert [e.relpath for e in scan_dataset(tmp_path).entries] == ["a/1.png", "a/sub/3.jpeg", "b/1.png", "b/2.png"]


def test_split_counts_example():
    m = synthetic_manifest({"late_blight": 60, "healthy": 40})
    train, test = stratified_split(m, SplitSpec(0.8, 42))
    assert train.class_counts() == {"healthy": 32, "late_blight": 48}
    assert test.class_counts() == {"healthy": 8, "late_blight": 12}


def test_split_is_deterministic():
    m = synthetic_manifest({"late_blight": 60, "healthy": 40})
    a = stratified_split(m, SplitSpec(0.8, 42))
    b = stratified_split(m, SplitSpec(0.8, 42))
    assert manifest_to_csv(a[0]) == manifest_to_csv(b[0])
    assert manifest_to_csv(a[1]) == manifest_to_csv(b[1])
    c = stratified_split(m, SplitSpec(0.8, 43))
    assert manifest_to_csv(c[0]) != manifest_to_csv(a[0])


@pytest.mark.parametrize("fraction", [1.0, 0.0, -0.5, 1.5])
def test_split_bad_fraction(fraction):
    with pytest.raises(BadFraction):
        SplitSpec(fraction, 1)


def test_split_degenerate_class():
    m = synthetic_manifest({"late_blight": 5, "healthy": 1})
    with pytest.raises(DegenerateClass):
        stratified_split(m, SplitSpec(0.5, 1))


@settings(max_examples=60, deadline=None)
@given(
    counts=st.dictionaries(st.sampled_from(["a", "b", "c", "late_blight"]), st.integers(2, 40), min_size=1),
    fraction=st.floats(0.01, 0.99),
    seed=st.integers(0, 2**64 - 1),
)
def test_split_partition_properties(counts, fraction, seed):
    m = synthetic_manifest(counts)
    train, test = stratified_split(m, SplitSpec(fraction, seed))
    assert len(train) + len(test) == len(m)
    train_set = {e.relpath for e in train.entries}
    test_set = {e.relpath for e in test.entries}
    assert not train_set & test_set
    assert train_set | test_set == {e.relpath for e in m.entries}
    for name, n in counts.items():
        assert train.class_counts()[name] == math.floor(fraction * n)
        assert test.class_counts()[name] >= 1


def test_manifest_round_trip(tmp_path):
    m = synthetic_manifest({"late_blight": 3, "healthy": 2}, root=tmp_path)
    out = tmp_path / "m.csv"
    write_manifest(m, out)
    assert out.read_bytes().startswith(b"relpath,label\n")
    assert b"\r" not in out.read_bytes()
    assert read_manifest(out) == m


def test_manifest_round_trip_with_empty_class(tmp_path):
    m = synthetic_manifest({"late_blight": 2, "healthy": 3}, root=tmp_path)
    train, _ = stratified_split(m, SplitSpec(0.4, 3))  # floor(0.8) = 0 late_blight in train
    write_manifest(train, tmp_path / "t.csv")
    assert read_manifest(tmp_path / "t.csv", class_names=m.class_names) == train


def test_manifest_bad_header(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("path,label\na.png,x\n")
    with pytest.raises(MalformedManifest):
        read_manifest(p)


def test_manifest_duplicate_relpath(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("relpath,label\na.png,x\na.png,x\n")
    with pytest.raises(MalformedManifest):
        read_manifest(p)


def test_manifest_unknown_label(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("relpath,label\na.png,rust\n")
    with pytest.raises(MalformedManifest):
        read_manifest(p, class_names=("healthy", "late_blight"))


def test_binary_labels():
    m = synthetic_manifest({"late_blight": 2, "healthy": 1, "mosaic": 1})
    assert m.binary_labels("late_blight") == [-1, 1, 1, -1]
