"""Image decoding and the grayscale/resize preprocessing that feeds HOG.

Images are plain numpy arrays: RGB as ``(height, width, 3)`` uint8 and
grayscale as ``(height, width)`` uint8.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import BadSize, DecodeError

SUPPORTED_FORMATS = ("PNG", "JPEG", "BMP")
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def decode_image(data: bytes) -> np.ndarray:
    """Decode PNG/JPEG/BMP bytes into an RGB array; alpha is dropped."""
    try:
        with Image.open(io.BytesIO(data), formats=SUPPORTED_FORMATS) as im:
            im.load()
            if im.mode in ("I;16", "I;16B", "I;16L", "I"):
                # 16-bit grayscale: keep the high byte
                arr = np.asarray(im, dtype=np.uint32) >> 8
                rgb = np.repeat(arr.astype(np.uint8)[:, :, None], 3, axis=2)
            else:
                rgb = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except Exception as exc:  # Pillow raises a zoo of types for bad streams
        raise DecodeError(f"cannot decode image: {exc}") from exc
    return np.ascontiguousarray(rgb)


def load_rgb(path) -> np.ndarray:
    return decode_image(Path(path).read_bytes())


def to_grayscale(rgb: np.ndarray) -> np.ndarray:
    """Rec. 601 luma, rounded half away from zero."""
    rgb = np.asarray(rgb, dtype=np.float64)
    luma = LUMA_WEIGHTS[0] * rgb[..., 0] + LUMA_WEIGHTS[1] * rgb[..., 1] + LUMA_WEIGHTS[2] * rgb[..., 2]
    return np.clip(_round_half_away(luma), 0, 255).astype(np.uint8)


def _axis_taps(n_in: int, n_out: int):
    dst = np.arange(n_out, dtype=np.float64)
    src = (dst + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    lo = np.floor(src).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, src - lo


def resize_bilinear(img: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Bilinear resize with half-pixel centres and edge clamping."""
    if out_w < 1 or out_h < 1:
        raise BadSize(f"output size must be at least 1x1, got {out_w}x{out_h}")
    img = np.asarray(img)
    in_h, in_w = img.shape
    src = img.astype(np.float64)
    x0, x1, fx = _axis_taps(in_w, out_w)
    y0, y1, fy = _axis_taps(in_h, out_h)

    top = src[y0][:, x0] * (1 - fx) + src[y0][:, x1] * fx
    bottom = src[y1][:, x0] * (1 - fx) + src[y1][:, x1] * fx
    out = top * (1 - fy)[:, None] + bottom * fy[:, None]
    return np.clip(_round_half_away(out), 0, 255).astype(np.uint8)


def load_gray(path, size: tuple[int, int]) -> np.ndarray:
    """Decode a file and return its grayscale image at ``size = (width, height)``."""
    gray = to_grayscale(load_rgb(path))
    width, height = size
    if gray.shape == (height, width):
        return gray
    return resize_bilinear(gray, width, height)
