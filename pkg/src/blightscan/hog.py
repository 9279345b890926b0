"""Histogram of Oriented Gradients in the Dalal-Triggs style.

Centered-difference gradients, magnitude-weighted orientation votes with
linear interpolation between the two nearest bin centres (no spatial
interpolation, no Gaussian block window), and L2-Hys normalization over
overlapping blocks of cells.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidConfig, Misaligned, TooFewCells, TooSmall


@dataclass(frozen=True)
class HogConfig:
    cell_size: int = 8
    block_size: int = 2
    block_stride: int = 1
    n_bins: int = 9
    unsigned_gradients: bool = True
    clip: float = 0.2
    epsilon: float = 1e-6

    def __post_init__(self):
        if self.cell_size < 2:
            raise InvalidConfig(f"cell_size must be >= 2, got {self.cell_size}")
        if self.block_size < 1:
            raise InvalidConfig(f"block_size must be >= 1, got {self.block_size}")
        if not 1 <= self.block_stride <= self.block_size:
            raise InvalidConfig(f"block_stride must lie in [1, block_size], got {self.block_stride}")
        if self.n_bins < 2:
            raise InvalidConfig(f"n_bins must be >= 2, got {self.n_bins}")
        if not 0 < self.clip <= 1:
            raise InvalidConfig(f"clip must lie in (0, 1], got {self.clip}")
        if not self.epsilon > 0:
            raise InvalidConfig(f"epsilon must be positive, got {self.epsilon}")

    @property
    def angle_range(self) -> float:
        return 180.0 if self.unsigned_gradients else 360.0

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GradientField:
    magnitude: np.ndarray  # (h, w), >= 0
    orientation: np.ndarray  # (h, w), degrees in [0, angle_range)

    @property
    def shape(self):
        return self.magnitude.shape


@dataclass(frozen=True)
class CellGrid:
    histograms: np.ndarray  # (cells_y, cells_x, n_bins)

    @property
    def cells_y(self) -> int:
        return self.histograms.shape[0]

    @property
    def cells_x(self) -> int:
        return self.histograms.shape[1]


@dataclass(frozen=True)
class HogDescriptor:
    values: np.ndarray
    config: HogConfig
    width: int
    height: int

    def __len__(self):
        return len(self.values)


def compute_gradients(img: np.ndarray, unsigned: bool = True) -> GradientField:
    """Per-pixel gradient magnitude and orientation.

    Borders replicate the edge pixel, so edge gradients are one-sided
    differences of half the usual span. A zero gradient has orientation 0.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or min(img.shape) < 3:
        raise TooSmall(f"gradient needs a 2-D image of at least 3x3, got shape {img.shape}")
    padded = np.pad(img, 1, mode="edge")
    gx = padded[1:-1, 2:] - padded[1:-1, :-2]
    gy = padded[2:, 1:-1] - padded[:-2, 1:-1]
    magnitude = np.sqrt(gx * gx + gy * gy)
    span = 180.0 if unsigned else 360.0
    orientation = np.mod(np.degrees(np.arctan2(gy, gx)), span)
    # mod of a tiny negative angle rounds up to span itself
    orientation[orientation >= span] = 0.0
    orientation[magnitude == 0] = 0.0
    return GradientField(magnitude, orientation)


def _bin_votes(orientation: np.ndarray, n_bins: int, span: float):
    """Lower bin index, upper bin index and upper-bin weight for each angle."""
    width = span / n_bins
    pos = orientation / width - 0.5
    lo = np.floor(pos)
    frac = pos - lo
    lo = lo.astype(np.intp)
    return np.mod(lo, n_bins), np.mod(lo + 1, n_bins), frac


def cell_histograms(g: GradientField, cfg: HogConfig) -> CellGrid:
    h, w = g.shape
    cs = cfg.cell_size
    if h % cs or w % cs:
        raise Misaligned(f"image {w}x{h} is not divisible by cell_size {cs}")
    cells_y, cells_x = h // cs, w // cs
    lo, hi, frac = _bin_votes(g.orientation, cfg.n_bins, cfg.angle_range)

    rows = np.arange(h)[:, None] // cs
    cols = np.arange(w)[None, :] // cs
    cell = (rows * cells_x + cols) * cfg.n_bins
    n_total = cells_y * cells_x * cfg.n_bins
    hist = np.bincount((cell + lo).ravel(), weights=(g.magnitude * (1 - frac)).ravel(), minlength=n_total)
    hist += np.bincount((cell + hi).ravel(), weights=(g.magnitude * frac).ravel(), minlength=n_total)
    return CellGrid(hist.reshape(cells_y, cells_x, cfg.n_bins))


def l2_hys(v: np.ndarray, clip: float, epsilon: float) -> np.ndarray:
    v = v / np.sqrt(np.dot(v, v) + epsilon * epsilon)
    v = np.minimum(v, clip)
    return v / np.sqrt(np.dot(v, v) + epsilon * epsilon)


def _block_counts(cells_x: int, cells_y: int, cfg: HogConfig) -> tuple[int, int]:
    if cells_x < cfg.block_size or cells_y < cfg.block_size:
        raise TooFewCells(f"{cells_x}x{cells_y} cells cannot hold a {cfg.block_size}x{cfg.block_size} block")
    bx = (cells_x - cfg.block_size) // cfg.block_stride + 1
    by = (cells_y - cfg.block_size) // cfg.block_stride + 1
    return bx, by


def normalize_blocks(cells: CellGrid, cfg: HogConfig) -> np.ndarray:
    """L2-Hys normalize every block; blocks and their cells are row-major."""
    bx, by = _block_counts(cells.cells_x, cells.cells_y, cfg)
    bs, st = cfg.block_size, cfg.block_stride
    out = np.empty((by, bx, bs * bs * cfg.n_bins))
    for j in range(by):
        for i in range(bx):
            block = cells.histograms[j * st : j * st + bs, i * st : i * st + bs].ravel()
            out[j, i] = l2_hys(block, cfg.clip, cfg.epsilon)
    return out.ravel()


def descriptor_len(cfg: HogConfig, width: int, height: int) -> int:
    if width % cfg.cell_size or height % cfg.cell_size:
        raise Misaligned(f"image {width}x{height} is not divisible by cell_size {cfg.cell_size}")
    bx, by = _block_counts(width // cfg.cell_size, height // cfg.cell_size, cfg)
    return bx * by * cfg.block_size**2 * cfg.n_bins


def extract_hog(img: np.ndarray, cfg: HogConfig | None = None) -> HogDescriptor:
    cfg = cfg or HogConfig()
    img = np.asarray(img)
    height, width = img.shape
    descriptor_len(cfg, width, height)  # validates alignment and block fit up front
    grad = compute_gradients(img, unsigned=cfg.unsigned_gradients)
    values = normalize_blocks(cell_histograms(grad, cfg), cfg)
    return HogDescriptor(values, cfg, width, height)
