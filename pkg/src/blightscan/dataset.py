"""Labeled image discovery, stratified splits and manifest CSV files.

A dataset is a directory tree ``<root>/<class>/<image files>``; class names
are taken verbatim from the subdirectory names.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import BadFraction, DegenerateClass, EmptyDataset, MalformedManifest, NotADirectory
from .rng import XorShift64Star

IMAGE_EXTENSIONS = frozenset({".jpg", ".jpeg", ".png", ".bmp"})
MANIFEST_HEADER = ("relpath", "label")


@dataclass(frozen=True)
class Entry:
    relpath: str
    label: int


@dataclass(frozen=True)
class Manifest:
    root: Path
    entries: tuple[Entry, ...]
    class_names: tuple[str, ...]
    # files rejected by the extension filter during a scan (relpaths)
    skipped: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        relpaths = [e.relpath for e in self.entries]
        if relpaths != sorted(relpaths):
            raise ValueError("manifest entries must be sorted by relpath")
        if len(set(relpaths)) != len(relpaths):
            raise ValueError("duplicate relpath in manifest")
        for e in self.entries:
            if not 0 <= e.label < len(self.class_names):
                raise ValueError(f"label {e.label} out of range for {e.relpath}")

    def __len__(self):
        return len(self.entries)

    def class_counts(self) -> dict[str, int]:
        counts = {name: 0 for name in self.class_names}
        for e in self.entries:
            counts[self.class_names[e.label]] += 1
        return counts

    def label_name(self, entry: Entry) -> str:
        return self.class_names[entry.label]

    def path_of(self, entry: Entry) -> Path:
        return self.root / entry.relpath

    def binary_labels(self, positive: str) -> list[int]:
        """Map entries to +1 (``positive`` class) or -1 (everything else)."""
        return [1 if self.class_names[e.label] == positive else -1 for e in self.entries]


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 42

    def __post_init__(self):
        if not (0.0 < self.train_fraction < 1.0):
            raise BadFraction(f"train_fraction must lie strictly in (0, 1), got {self.train_fraction}")


def scan_dataset(root) -> Manifest:
    root = Path(root)
    if not root.is_dir():
        raise NotADirectory(f"dataset root is not a directory: {root}")

    found: dict[str, list[str]] = {}
    skipped: list[str] = []
    for child in sorted(root.iterdir()):
        if not child.is_dir():
            skipped.append(child.name)
            continue
        accepted = []
        for path in sorted(child.rglob("*")):
            if not path.is_file():
                continue
            rel = path.relative_to(root).as_posix()
            if path.suffix.lower() in IMAGE_EXTENSIONS:
                accepted.append(rel)
            else:
                skipped.append(rel)
        if accepted:
            found[child.name] = accepted

    if not found:
        raise EmptyDataset(f"no images with extensions {sorted(IMAGE_EXTENSIONS)} under {root}")

    class_names = tuple(sorted(found))
    entries = [Entry(rel, class_names.index(name)) for name, rels in found.items() for rel in rels]
    entries.sort(key=lambda e: e.relpath)
    return Manifest(root, tuple(entries), class_names, tuple(sorted(skipped)))


def stratified_split(m: Manifest, spec: SplitSpec) -> tuple[Manifest, Manifest]:
    """Split every class independently: floor(fraction * n_c) entries go to train.

    One generator seeded with ``spec.seed`` shuffles the classes in
    ``class_names`` order; each class's entries start in relpath order.
    """
    if not (0.0 < spec.train_fraction < 1.0):
        raise BadFraction(f"train_fraction must lie strictly in (0, 1), got {spec.train_fraction}")
    by_class: list[list[Entry]] = [[] for _ in m.class_names]
    for e in m.entries:
        by_class[e.label].append(e)
    for name, members in zip(m.class_names, by_class):
        if len(members) < 2:
            raise DegenerateClass(f"class {name!r} has {len(members)} entries, need at least 2")

    rng = XorShift64Star(spec.seed)
    train: list[Entry] = []
    test: list[Entry] = []
    for members in by_class:
        shuffled = list(members)
        rng.shuffle(shuffled)
        n_train = math.floor(spec.train_fraction * len(shuffled))
        train.extend(shuffled[:n_train])
        test.extend(shuffled[n_train:])

    def build(entries):
        return Manifest(m.root, tuple(sorted(entries, key=lambda e: e.relpath)), m.class_names)

    return build(train), build(test)


def membership_hash(*manifests: Manifest) -> str:
    """SHA-256 over the relpaths of each manifest, in order; identifies a split."""
    h = hashlib.sha256()
    for i, man in enumerate(manifests):
        h.update(f"#{i}\n".encode())
        for e in man.entries:
            h.update(f"{e.relpath}\t{man.class_names[e.label]}\n".encode())
    return h.hexdigest()


def manifest_to_csv(m: Manifest) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(MANIFEST_HEADER)
    for e in m.entries:
        writer.writerow((e.relpath, m.class_names[e.label]))
    return buf.getvalue()


def write_manifest(m: Manifest, out) -> None:
    Path(out).write_text(manifest_to_csv(m), encoding="utf-8", newline="\n")


def read_manifest(path, root=None, class_names=None) -> Manifest:
    """Parse a manifest CSV.

    ``root`` defaults to the CSV's directory. Without ``class_names`` the
    class list is the sorted set of labels present in the file; with it,
    any label outside the list is rejected.
    """
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != MANIFEST_HEADER:
        got = rows[0] if rows else "<empty file>"
        raise MalformedManifest(f"{path}: expected header {','.join(MANIFEST_HEADER)}, got {got}")

    pairs = []
    seen = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2 or not row[0] or not row[1]:
            raise MalformedManifest(f"{path}:{lineno}: expected 'relpath,label', got {row}")
        relpath, label = row
        if relpath in seen:
            raise MalformedManifest(f"{path}:{lineno}: duplicate relpath {relpath!r}")
        seen.add(relpath)
        pairs.append((relpath, label))

    if class_names is None:
        class_names = tuple(sorted({label for _, label in pairs}))
    else:
        class_names = tuple(class_names)
    index = {name: i for i, name in enumerate(class_names)}
    entries = []
    for relpath, label in pairs:
        if label not in index:
            raise MalformedManifest(f"{path}: unknown label {label!r} for {relpath!r}")
        entries.append(Entry(relpath, index[label]))
    entries.sort(key=lambda e: e.relpath)
    return Manifest(Path(root) if root is not None else path.parent, tuple(entries), class_names)
