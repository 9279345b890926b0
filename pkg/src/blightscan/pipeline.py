"""File -> grayscale -> resize -> HOG, over a whole manifest."""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dataset import Manifest
from .errors import BlightScanError
from .hog import HogConfig, descriptor_len, extract_hog
from .imaging import load_gray

THREADS_ENV = "BLIGHTSCAN_THREADS"


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


@dataclass(frozen=True)
class PipelineConfig:
    size: tuple[int, int] = (128, 128)  # (width, height)
    hog: HogConfig = field(default_factory=HogConfig)
    positive_class: str = "late_blight"
    threads: int = 1

    def __post_init__(self):
        descriptor_len(self.hog, *self.size)

    @property
    def feature_dim(self) -> int:
        return descriptor_len(self.hog, *self.size)


@dataclass(frozen=True, eq=False)
class FeatureSet:
    features: np.ndarray  # (n_ok, feature_dim)
    labels: np.ndarray  # +1 / -1
    relpaths: tuple[str, ...]
    failures: tuple[tuple[str, str], ...]  # (relpath, reason)

    def __len__(self):
        return len(self.labels)

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.features, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.labels, dtype="<i8").tobytes())
        return h.hexdigest()


def image_features(path, cfg: PipelineConfig) -> np.ndarray:
    return extract_hog(load_gray(path, cfg.size), cfg.hog).values


def featurize(m: Manifest, cfg: PipelineConfig) -> FeatureSet:
    """Extract descriptors for every entry; undecodable files are recorded, not dropped silently.

    Extraction may run on several threads; results are collected in manifest order.
    """

    def work(entry):
        try:
            return image_features(m.path_of(entry), cfg), None
        except (BlightScanError, OSError) as exc:
            return None, str(exc)

    if cfg.threads > 1 and len(m) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(work, m.entries))
    else:
        results = [work(e) for e in m.entries]

    labels = m.binary_labels(cfg.positive_class)
    rows, ys, kept, failures = [], [], [], []
    for entry, label, (vec, err) in zip(m.entries, labels, results):
        if err is not None:
            failures.append((entry.relpath, err))
        else:
            rows.append(vec)
            ys.append(label)
            kept.append(entry.relpath)
    dim = cfg.feature_dim
    features = np.vstack(rows) if rows else np.zeros((0, dim))
    return FeatureSet(features, np.array(ys, dtype=np.int64), tuple(kept), tuple(failures))
