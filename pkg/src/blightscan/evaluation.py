"""Confusion matrices, the four comparison metrics, and the SVM/KNN/tree study."""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Optional

import numpy as np

from .baselines import KnnModel, KnnParams, TreeParams, tree_fit
from .dataset import Manifest, SplitSpec, membership_hash, stratified_split
from .errors import AllImagesFailed, ConfigMismatch, EmptyInput, LengthMismatch
from .pipeline import FeatureSet, PipelineConfig, featurize
from .svm import KernelSpec, SvmModel, TrainParams, train_smo

REPORT_SCHEMA = "blightscan-report/1"
MSE_DEFINITION = "mean squared error of hard 0/1 labels; equals the misclassification rate"


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def confusion(predictions, truth) -> ConfusionMatrix:
    pred = np.asarray(predictions)
    true = np.asarray(truth)
    if pred.shape != true.shape:
        raise LengthMismatch(f"{pred.size} predictions vs {true.size} labels")
    if pred.size == 0:
        raise EmptyInput("cannot score an empty prediction list")
    pp, tp_ = pred == 1, true == 1
    return ConfusionMatrix(
        tp=int(np.sum(pp & tp_)),
        fp=int(np.sum(pp & ~tp_)),
        fn=int(np.sum(~pp & tp_)),
        tn=int(np.sum(~pp & ~tp_)),
    )


@dataclass(frozen=True)
class MetricsReport:
    classifier: str
    confusion: ConfusionMatrix
    accuracy: float
    precision: float
    recall: float
    mse: float
    f1: float
    precision_undefined: bool
    recall_undefined: bool
    positive_class: str = "late_blight"
    label_mapping: dict = field(default_factory=dict)
    hyperparameters: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    failures: tuple = ()

    @property
    def n(self) -> int:
        return self.confusion.n

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema": REPORT_SCHEMA,
            "classifier": self.classifier,
            "positive_class": self.positive_class,
            "label_mapping": dict(sorted(self.label_mapping.items())),
            "n": self.n,
            "confusion": asdict(self.confusion),
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "mse": self.mse,
            "mse_definition": MSE_DEFINITION,
            "f1": self.f1,
            "precision_undefined": self.precision_undefined,
            "recall_undefined": self.recall_undefined,
            "hyperparameters": self.hyperparameters,
            "provenance": self.provenance,
            "n_failed": len(self.failures),
            "failures": [list(f) for f in self.failures],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"


def metrics(cm: ConfusionMatrix, classifier: str = "", **extra) -> MetricsReport:
    n = cm.n
    if n == 0:
        raise EmptyInput("confusion matrix has no samples")
    precision_undefined = cm.tp + cm.fp == 0
    recall_undefined = cm.tp + cm.fn == 0
    precision = 0.0 if precision_undefined else cm.tp / (cm.tp + cm.fp)
    recall = 0.0 if recall_undefined else cm.tp / (cm.tp + cm.fn)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return MetricsReport(
        classifier=classifier,
        confusion=cm,
        accuracy=(cm.tp + cm.tn) / n,
        precision=precision,
        recall=recall,
        mse=(cm.fp + cm.fn) / n,
        f1=f1,
        precision_undefined=precision_undefined,
        recall_undefined=recall_undefined,
        **extra,
    )


def label_mapping(class_names, positive: str) -> dict[str, int]:
    return {name: (1 if name == positive else -1) for name in class_names}


def svm_hyperparameters(model: SvmModel, params: TrainParams) -> dict:
    return {
        "kernel": model.kernel.kind,
        "gamma": model.kernel.gamma,
        "c": params.c,
        "tol": params.tol,
        "eps": params.eps,
        "max_passes": params.max_passes,
        "max_iters": params.max_iters,
        "smo_seed": params.seed,
        "n_support_vectors": model.n_sv,
        "warnings": list(model.warnings),
    }


def pipeline_provenance(cfg: PipelineConfig, **more) -> dict:
    out = {"image_size": list(cfg.size), "hog": cfg.hog.as_dict()}
    out.update(more)
    return out


def score(model, fs: FeatureSet, classifier: str, **extra) -> MetricsReport:
    if len(fs) == 0:
        raise AllImagesFailed(f"none of the {len(fs.failures)} images could be processed")
    preds = model.predict(fs.features)
    return metrics(confusion(preds, fs.labels), classifier, failures=fs.failures, **extra)


def evaluate(
    model,
    test: Manifest,
    cfg: PipelineConfig,
    classifier: str = "svm",
    hyperparameters: Optional[dict] = None,
    split: Optional[dict] = None,
) -> MetricsReport:
    """Run the whole pipeline on ``test`` and score ``model`` against it."""
    hog_config = getattr(model, "hog_config", None)
    if hog_config is not None and hog_config != cfg.hog:
        raise ConfigMismatch(f"model was trained with {hog_config}, pipeline uses {cfg.hog}")
    if len(test) == 0:
        raise EmptyInput("test manifest is empty")
    fs = featurize(test, cfg)
    return score(
        model,
        fs,
        classifier,
        positive_class=cfg.positive_class,
        label_mapping=label_mapping(test.class_names, cfg.positive_class),
        hyperparameters=hyperparameters or {},
        provenance=pipeline_provenance(cfg, split=split, feature_hash=fs.content_hash()),
    )


@dataclass
class ComparisonResult:
    reports: dict[str, MetricsReport]
    timings: dict[str, dict[str, float]]
    split_hash: str
    feature_hash: str
    n_train: int
    n_test: int
    svm_model: SvmModel


def compare(
    data: Manifest,
    spec: SplitSpec,
    cfg: PipelineConfig,
    kernel: KernelSpec = KernelSpec(),
    train_params: TrainParams = TrainParams(),
    knn_params: KnnParams = KnnParams(),
    tree_params: TreeParams = TreeParams(),
) -> ComparisonResult:
    """Train SVM, KNN and a tree on one split and one feature matrix; score all three.

    The SVM is trained first so a single-class training set fails before
    the baselines run.
    """
    train_m, test_m = stratified_split(data, spec)
    split_hash = membership_hash(train_m, test_m)
    train_fs = featurize(train_m, cfg)
    test_fs = featurize(test_m, cfg)
    if len(train_fs) == 0:
        raise AllImagesFailed("no training image could be processed")
    if len(test_fs) == 0:
        raise AllImagesFailed("no test image could be processed")
    feature_hash = _joint_hash(train_fs, test_fs)
    mapping = label_mapping(data.class_names, cfg.positive_class)
    split = {
        "seed": spec.seed,
        "train_fraction": spec.train_fraction,
        "membership_hash": split_hash,
        "n_train": len(train_fs),
        "n_train_failed": len(train_fs.failures),
    }
    provenance = pipeline_provenance(cfg, split=split, feature_hash=feature_hash)
    negative = _negative_name(data.class_names, cfg.positive_class)

    timings: dict[str, dict[str, float]] = {}
    reports: dict[str, MetricsReport] = {}

    def run(name, fit, hyper):
        t0 = time.perf_counter()
        model = fit()
        t1 = time.perf_counter()
        report = score(
            model,
            test_fs,
            name,
            positive_class=cfg.positive_class,
            label_mapping=mapping,
            hyperparameters=hyper(model),
            provenance=provenance,
        )
        t2 = time.perf_counter()
        timings[name] = {"train_s": t1 - t0, "predict_s": t2 - t1}
        reports[name] = report
        return model

    svm_model = run(
        "svm",
        lambda: train_smo(
            train_fs.features,
            train_fs.labels,
            kernel,
            train_params,
            hog_config=cfg.hog,
            positive_class=cfg.positive_class,
            negative_class=negative,
            image_size=cfg.size,
        ),
        lambda m: svm_hyperparameters(m, train_params),
    )
    run(
        "knn",
        lambda: KnnModel.fit(train_fs.features, train_fs.labels, knn_params),
        lambda m: {"k": knn_params.k, "metric": knn_params.metric},
    )
    run(
        "tree",
        lambda: tree_fit(train_fs.features, train_fs.labels, tree_params),
        lambda m: {
            "max_depth": tree_params.max_depth,
            "min_leaf": tree_params.min_leaf,
            "n_nodes": len(m.nodes),
            "depth": m.depth,
        },
    )
    return ComparisonResult(reports, timings, split_hash, feature_hash, len(train_fs), len(test_fs), svm_model)


def _joint_hash(train_fs: FeatureSet, test_fs: FeatureSet) -> str:
    return hashlib.sha256((train_fs.content_hash() + test_fs.content_hash()).encode()).hexdigest()


def _negative_name(class_names, positive: str) -> str:
    others = [c for c in class_names if c != positive]
    return others[0] if len(others) == 1 else f"not_{positive}"


def format_table(reports: dict[str, MetricsReport]) -> str:
    header = ("classifier", "n", "accuracy", "precision", "recall", "mse", "f1")
    rows = [header]
    for name, r in reports.items():
        rows.append(
            (name, str(r.n)) + tuple(f"{v:.4f}" for v in (r.accuracy, r.precision, r.recall, r.mse, r.f1))
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = []
    for row in rows:
        cells = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"
