"""Seeded synthetic stripe images for desk-scale end-to-end checks.

Positive-class images carry vertical stripes, negative-class images
horizontal ones; both get additive Gaussian noise.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image


def stripe_image(rng: np.random.Generator, size: int, vertical: bool, noise: float) -> np.ndarray:
    period = rng.uniform(6.0, 16.0)
    phase = rng.uniform(0.0, 2 * np.pi)
    amplitude = rng.uniform(40.0, 80.0)
    t = np.arange(size, dtype=np.float64)
    wave = 128.0 + amplitude * np.sin(2 * np.pi * t / period + phase)
    img = np.tile(wave, (size, 1)) if vertical else np.tile(wave[:, None], (1, size))
    img = img + rng.normal(0.0, noise, size=(size, size))
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def make_stripes_dataset(
    root,
    n_per_class: int = 100,
    size: int = 128,
    noise: float = 20.0,
    seed: int = 0,
    positive: str = "late_blight",
    negative: str = "healthy",
) -> Path:
    root = Path(root)
    rng = np.random.default_rng(seed)
    for name, vertical in ((positive, True), (negative, False)):
        out = root / name
        out.mkdir(parents=True, exist_ok=True)
        for i in range(n_per_class):
            Image.fromarray(stripe_image(rng, size, vertical, noise)).save(out / f"{name}_{i:04d}.png")
    return root
