"""Text model files.

Grammar (UTF-8, LF line endings)::

    BLIGHTMODEL 1
    <key>=<value>          one line per header key, in HEADER_KEYS order
    <coeff> <x_1> ... <x_d>   n_sv payload lines

Floats are written as the shortest decimal that round-trips the binary64
value (Python ``repr``), so a loaded model reproduces decision values
bit-for-bit. Version 1 rejects unknown header keys.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import BadMagic, CorruptPayload, ModelIOError, UnsupportedVersion
from .hog import HogConfig
from .svm import KernelSpec, SvmModel

MAGIC = "BLIGHTMODEL"
VERSION = "1"

HEADER_KEYS = (
    "kernel",
    "gamma",
    "c",
    "bias",
    "n_sv",
    "feature_dim",
    "positive_class",
    "negative_class",
    "image_width",
    "image_height",
    "hog_cell_size",
    "hog_block_size",
    "hog_block_stride",
    "hog_n_bins",
    "hog_unsigned_gradients",
    "hog_clip",
    "hog_epsilon",
    "warnings",
)


def _fmt(v) -> str:
    return repr(float(v))


def _check_text(name: str, value: str) -> str:
    if not value or any(ch in value for ch in "\n\r=") or value != value.strip():
        raise ValueError(f"{name} {value!r} cannot be stored in a model header")
    return value


def model_to_text(m: SvmModel) -> str:
    hog = m.hog_config
    header = {
        "kernel": m.kernel.kind,
        "gamma": "none" if m.kernel.gamma is None else _fmt(m.kernel.gamma),
        "c": _fmt(m.c),
        "bias": _fmt(m.bias),
        "n_sv": str(m.n_sv),
        "feature_dim": str(m.feature_dim),
        "positive_class": _check_text("positive_class", m.positive_class),
        "negative_class": _check_text("negative_class", m.negative_class),
        "image_width": str(m.image_size[0]),
        "image_height": str(m.image_size[1]),
        "hog_cell_size": str(hog.cell_size),
        "hog_block_size": str(hog.block_size),
        "hog_block_stride": str(hog.block_stride),
        "hog_n_bins": str(hog.n_bins),
        "hog_unsigned_gradients": "true" if hog.unsigned_gradients else "false",
        "hog_clip": _fmt(hog.clip),
        "hog_epsilon": _fmt(hog.epsilon),
        "warnings": ",".join(m.warnings),
    }
    lines = [f"{MAGIC} {VERSION}"]
    lines += [f"{k}={header[k]}" for k in HEADER_KEYS]
    for coeff, sv in zip(m.coeffs, m.support_vectors):
        lines.append(" ".join([_fmt(coeff)] + [_fmt(v) for v in sv]))
    return "\n".join(lines) + "\n"


def save_model(m: SvmModel, out) -> None:
    text = model_to_text(m)
    try:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise ModelIOError(f"cannot write model to {out}: {exc}") from exc


def _float(token: str, where: str) -> float:
    try:
        v = float(token)
    except ValueError:
        raise CorruptPayload(f"{where}: not a number: {token!r}") from None
    if not np.isfinite(v):
        raise CorruptPayload(f"{where}: non-finite value {token!r}")
    return v


def _int(token: str, where: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise CorruptPayload(f"{where}: not an integer: {token!r}") from None


def model_from_text(text: str, source: str = "<model>") -> SvmModel:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise BadMagic(f"{source}: empty file")
    first = lines[0].split(" ")
    if first[0] != MAGIC or len(first) != 2:
        raise BadMagic(f"{source}: expected '{MAGIC} {VERSION}', got {lines[0][:40]!r}")
    if first[1] != VERSION:
        raise UnsupportedVersion(f"{source}: model format version {first[1]!r} is not supported")

    header: dict[str, str] = {}
    i = 1
    while i < len(lines) and "=" in lines[i]:
        key, value = lines[i].split("=", 1)
        if key not in HEADER_KEYS:
            raise CorruptPayload(f"{source}:{i + 1}: unknown header key {key!r}")
        if key in header:
            raise CorruptPayload(f"{source}:{i + 1}: repeated header key {key!r}")
        header[key] = value
        i += 1
    missing = [k for k in HEADER_KEYS if k not in header]
    if missing:
        raise CorruptPayload(f"{source}: missing header keys {missing}")

    n_sv = _int(header["n_sv"], "n_sv")
    dim = _int(header["feature_dim"], "feature_dim")
    payload = lines[i:]
    if len(payload) != n_sv:
        raise CorruptPayload(f"{source}: header says n_sv={n_sv} but found {len(payload)} payload rows")
    coeffs = np.empty(n_sv)
    svs = np.empty((n_sv, dim))
    for r, line in enumerate(payload):
        where = f"{source}:{i + r + 1}"
        tokens = line.split(" ")
        if len(tokens) != dim + 1:
            raise CorruptPayload(f"{where}: expected {dim + 1} values, got {len(tokens)}")
        coeffs[r] = _float(tokens[0], where)
        svs[r] = [_float(t, where) for t in tokens[1:]]

    try:
        kind = header["kernel"]
        gamma = None if header["gamma"] == "none" else _float(header["gamma"], "gamma")
        kernel = KernelSpec(kind, gamma)
        if kind == "rbf" and gamma is None:
            raise CorruptPayload(f"{source}: rbf model without gamma")
        unsigned = header["hog_unsigned_gradients"]
        if unsigned not in ("true", "false"):
            raise CorruptPayload(f"{source}: hog_unsigned_gradients must be true/false")
        hog = HogConfig(
            cell_size=_int(header["hog_cell_size"], "hog_cell_size"),
            block_size=_int(header["hog_block_size"], "hog_block_size"),
            block_stride=_int(header["hog_block_stride"], "hog_block_stride"),
            n_bins=_int(header["hog_n_bins"], "hog_n_bins"),
            unsigned_gradients=unsigned == "true",
            clip=_float(header["hog_clip"], "hog_clip"),
            epsilon=_float(header["hog_epsilon"], "hog_epsilon"),
        )
    except ValueError as exc:
        if isinstance(exc, CorruptPayload):
            raise
        raise CorruptPayload(f"{source}: {exc}") from exc

    c = _float(header["c"], "c")
    model = SvmModel(
        kernel=kernel,
        support_vectors=svs,
        coeffs=coeffs,
        bias=_float(header["bias"], "bias"),
        c=c,
        hog_config=hog,
        positive_class=header["positive_class"],
        negative_class=header["negative_class"],
        image_size=(_int(header["image_width"], "image_width"), _int(header["image_height"], "image_height")),
        warnings=tuple(w for w in header["warnings"].split(",") if w),
    )
    check_invariants(model, source)
    return model


def check_invariants(m: SvmModel, source: str = "<model>") -> None:
    if not m.c > 0:
        raise CorruptPayload(f"{source}: C must be positive")
    if np.any(np.abs(m.coeffs) > m.c * (1 + 1e-12)):
        raise CorruptPayload(f"{source}: a coefficient exceeds the box constraint C={m.c}")
    n = max(1, m.n_sv)
    if abs(float(np.sum(m.coeffs))) > 1e-6 * n * m.c:
        raise CorruptPayload(f"{source}: coefficients do not sum to zero")


def load_model(path) -> SvmModel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelIOError(f"cannot read model {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise BadMagic(f"{path}: not a text model file") from exc
    return model_from_text(text, str(path))
