"""Command-line entry point: train, eval, predict, features, compare, synth.

Exit codes: 0 success, 1 pipeline error, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .baselines import KnnParams, TreeParams
from .dataset import SplitSpec, membership_hash, read_manifest, scan_dataset, stratified_split
from .errors import BlightScanError
from .evaluation import compare, evaluate, format_table, label_mapping, pipeline_provenance, svm_hyperparameters
from .evaluation import score as score_features
from .hog import HogConfig, descriptor_len, extract_hog
from .imaging import load_gray
from .persistence import load_model, save_model
from .pipeline import PipelineConfig, default_threads, featurize
from .svm import KernelSpec, TrainParams, train_smo

log = logging.getLogger("blightscan")


class UsageError(Exception):
    pass


def _fraction(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"must lie strictly between 0 and 1, got {text}")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


class _DefaultsFormatter(argparse.ArgumentDefaultsHelpFormatter):
    """Show defaults, except unset ones whose help already explains them."""

    def _get_help_string(self, action):
        if action.default is None:
            return action.help
        return super()._get_help_string(action)


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return v


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _gamma(text: str):
    if text == "auto":
        return None
    return _positive_float(text)


def _add_hog_flags(p):
    g = p.add_argument_group("image and HOG")
    g.add_argument("--size", type=_positive_int, default=128, help="working image side in pixels (square)")
    g.add_argument("--cell", type=_positive_int, default=8, help="HOG cell size in pixels")
    g.add_argument("--block", type=_positive_int, default=2, help="HOG block side in cells")
    g.add_argument("--stride", type=_positive_int, default=1, help="HOG block stride in cells")
    g.add_argument("--bins", type=_positive_int, default=9, help="orientation bins")
    g.add_argument("--signed", action="store_true", help="use signed gradients over [0, 360)")
    g.add_argument("--clip", type=_positive_float, default=0.2, help="L2-Hys clip threshold")


def _add_data_flags(p):
    g = p.add_argument_group("data")
    g.add_argument("--data", type=Path, required=True, help="dataset root (<root>/<class>/<images>)")
    g.add_argument("--split", type=_fraction, default=0.8, help="train fraction per class")
    g.add_argument("--seed", type=_seed, default=42, help="split and solver seed")
    g.add_argument("--positive", default="late_blight", help="class name mapped to +1")
    g.add_argument("--threads", type=_positive_int, default=None,
                   help="feature-extraction threads (default: $BLIGHTSCAN_THREADS or CPU count)")


def _add_svm_flags(p):
    g = p.add_argument_group("SVM")
    g.add_argument("--kernel", choices=("rbf", "linear"), default="rbf", help="kernel function")
    g.add_argument("--gamma", type=_gamma, default="auto", help="rbf gamma; 'auto' = 1/feature_dim")
    g.add_argument("--c", type=_positive_float, default=1.0, help="box constraint C")
    g.add_argument("--tol", type=_positive_float, default=1e-3, help="KKT tolerance")
    g.add_argument("--max-iters", type=_nonneg_int, default=None, help="SMO iteration cap (default: 1000*n)")


def _add_baseline_flags(p):
    g = p.add_argument_group("baselines")
    g.add_argument("--k", type=_positive_int, default=3, help="KNN neighbours")
    g.add_argument("--max-depth", type=_nonneg_int, default=12, help="tree depth limit")
    g.add_argument("--min-leaf", type=_positive_int, default=2, help="minimum samples per tree leaf")


def build_parser() -> argparse.ArgumentParser:
    fmt = _DefaultsFormatter
    parser = argparse.ArgumentParser(prog="blightscan", description="HOG + SVM late-blight leaf classifier",
                                     formatter_class=fmt)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train an SVM and report held-out metrics", formatter_class=fmt)
    _add_data_flags(p)
    _add_hog_flags(p)
    _add_svm_flags(p)
    p.add_argument("--out", type=Path, required=True, help="model file to write")
    p.add_argument("--report", type=Path, default=None, help="also write the held-out report here")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a saved model on a dataset", formatter_class=fmt)
    p.add_argument("--model", type=Path, required=True, help="model file")
    p.add_argument("--data", type=Path, required=True, help="dataset root")
    p.add_argument("--manifest", type=Path, default=None, help="restrict to the entries of this manifest CSV")
    p.add_argument("--report", type=Path, required=True, help="report file to write")
    p.add_argument("--threads", type=_positive_int, default=None, help="feature-extraction threads")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="classify one image (resized to the model's size)", formatter_class=fmt)
    p.add_argument("--model", type=Path, required=True, help="model file")
    p.add_argument("--image", type=Path, required=True, help="image to classify")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("features", help="write one image's HOG descriptor as a CSV row", formatter_class=fmt)
    p.add_argument("--image", type=Path, required=True, help="input image")
    p.add_argument("--out", type=Path, required=True, help="CSV file to write")
    _add_hog_flags(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("compare", help="SVM vs KNN vs decision tree on one split", formatter_class=fmt)
    _add_data_flags(p)
    _add_hog_flags(p)
    _add_svm_flags(p)
    _add_baseline_flags(p)
    p.add_argument("--out-dir", type=Path, default=Path("reports"), help="directory for the three reports")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("synth", help="generate the synthetic stripes dataset", formatter_class=fmt)
    p.add_argument("--out", type=Path, required=True, help="dataset root to create")
    p.add_argument("--n-per-class", type=_positive_int, default=100, help="images per class")
    p.add_argument("--size", type=_positive_int, default=128, help="image side in pixels")
    p.add_argument("--noise", type=float, default=20.0, help="Gaussian noise sigma")
    p.add_argument("--seed", type=_seed, default=0, help="noise and stripe seed")
    p.set_defaults(func=cmd_synth)
    return parser


def _hog_config(args) -> HogConfig:
    cfg = HogConfig(
        cell_size=args.cell,
        block_size=args.block,
        block_stride=args.stride,
        n_bins=args.bins,
        unsigned_gradients=not args.signed,
        clip=args.clip,
    )
    descriptor_len(cfg, args.size, args.size)
    return cfg


def _threads(args) -> int:
    return args.threads if args.threads is not None else default_threads()


def _pipeline(args) -> PipelineConfig:
    return PipelineConfig((args.size, args.size), _hog_config(args), getattr(args, "positive", "late_blight"),
                          _threads(args))


def _svm_settings(args):
    return KernelSpec(args.kernel, args.gamma if args.kernel == "rbf" else None), TrainParams(
        c=args.c, tol=args.tol, max_iters=args.max_iters, seed=args.seed
    )


def _require_positive(manifest, positive: str):
    if positive not in manifest.class_names:
        raise BlightScanError(f"positive class {positive!r} not among classes {list(manifest.class_names)}")


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")


def cmd_train(args) -> int:
    cfg = _pipeline(args)
    kernel, params = _svm_settings(args)
    data = scan_dataset(args.data)
    _require_positive(data, cfg.positive_class)
    spec = SplitSpec(args.split, args.seed)
    train_m, test_m = stratified_split(data, spec)
    train_fs = featurize(train_m, cfg)
    others = [c for c in data.class_names if c != cfg.positive_class]
    model = train_smo(
        train_fs.features,
        train_fs.labels,
        kernel,
        params,
        hog_config=cfg.hog,
        positive_class=cfg.positive_class,
        negative_class=others[0] if len(others) == 1 else f"not_{cfg.positive_class}",
        image_size=cfg.size,
    )
    test_fs = featurize(test_m, cfg)
    save_model(model, args.out)
    split = {"seed": spec.seed, "train_fraction": spec.train_fraction,
             "membership_hash": membership_hash(train_m, test_m), "n_train": len(train_fs),
             "n_train_failed": len(train_fs.failures)}
    report = score_features(
        model, test_fs, "svm",
        positive_class=cfg.positive_class,
        label_mapping=label_mapping(data.class_names, cfg.positive_class),
        hyperparameters=svm_hyperparameters(model, params),
        provenance=pipeline_provenance(cfg, split=split, feature_hash=test_fs.content_hash()),
    )
    text = report.to_json()
    if args.report:
        _write(args.report, text)
    sys.stdout.write(text)
    return 0


def cmd_eval(args) -> int:
    model = load_model(args.model)
    cfg = PipelineConfig(model.image_size, model.hog_config, model.positive_class, _threads(args))
    if args.manifest is not None:
        data = read_manifest(args.manifest, root=args.data)
    else:
        data = scan_dataset(args.data)
    report = evaluate(model, data, cfg, "svm", hyperparameters={
        "kernel": model.kernel.kind, "gamma": model.kernel.gamma, "c": model.c,
        "n_support_vectors": model.n_sv, "warnings": list(model.warnings),
    })
    _write(args.report, report.to_json())
    sys.stdout.write(format_table({"svm": report}))
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    gray = load_gray(args.image, model.image_size)
    f = model.decision_value(extract_hog(gray, model.hog_config).values)
    label = model.positive_class if f >= 0 else model.negative_class
    print(f"{label} {f!r}")
    return 0


def cmd_features(args) -> int:
    cfg = _hog_config(args)
    gray = load_gray(args.image, (args.size, args.size))
    values = extract_hog(gray, cfg).values
    _write(args.out, ",".join(repr(float(v)) for v in values) + "\n")
    return 0


def cmd_compare(args) -> int:
    cfg = _pipeline(args)
    kernel, params = _svm_settings(args)
    data = scan_dataset(args.data)
    _require_positive(data, cfg.positive_class)
    result = compare(
        data,
        SplitSpec(args.split, args.seed),
        cfg,
        kernel,
        params,
        KnnParams(k=args.k),
        TreeParams(max_depth=args.max_depth, min_leaf=args.min_leaf),
    )
    for name, report in result.reports.items():
        _write(args.out_dir / f"report_{name}.json", report.to_json())
    sys.stdout.write(format_table(result.reports))
    sys.stdout.write(f"split {result.split_hash}\nfeatures {result.feature_hash}\n")
    # timings vary run to run, so they stay off stdout and out of the reports
    for name, t in result.timings.items():
        print(f"{name}: train {t['train_s']:.3f}s predict {t['predict_s']:.3f}s", file=sys.stderr)
    return 0


def cmd_synth(args) -> int:
    from .synthetic import make_stripes_dataset

    make_stripes_dataset(args.out, args.n_per_class, args.size, args.noise, args.seed)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command in ("train", "features", "compare"):
            try:
                _hog_config(args)
            except BlightScanError as exc:
                raise UsageError(str(exc)) from exc
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"blightscan: error: {exc}", file=sys.stderr)
        return 2
    except (BlightScanError, OSError) as exc:
        print(f"blightscan: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
