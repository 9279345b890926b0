"""Soft-margin binary SVM trained with Sequential Minimal Optimization.

The solver follows Platt's SMO: an outer loop alternating full sweeps and
sweeps over unbound multipliers, a second-choice heuristic maximizing
|E1 - E2|, and fallbacks over unbound then all points from a seeded random
start. The full error vector is kept up to date after every step.
"""

from __future__ import annotations

import logging
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import DimMismatch, InvalidConfig, NonFinite, SingleClass
from .hog import HogConfig
from .rng import XorShift64Star

log = logging.getLogger(__name__)

ITERATION_CAP = "iteration_cap_reached"
STALLED = "stalled"

# multipliers within this fraction of C from a bound count as on the bound
BOUND_TOL = 1e-8


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "rbf"
    gamma: Optional[float] = None  # rbf only; None means 1/feature_dim

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise InvalidConfig(f"unknown kernel {self.kind!r}")
        if self.kind == "rbf" and self.gamma is not None and not self.gamma > 0:
            raise InvalidConfig(f"rbf gamma must be positive, got {self.gamma}")

    def resolve(self, feature_dim: int) -> "KernelSpec":
        if self.kind == "rbf" and self.gamma is None:
            return replace(self, gamma=1.0 / feature_dim)
        return self

    def matrix(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Kernel values between every row of ``a`` and every row of ``b``."""
        if self.kind == "linear":
            return a @ b.T
        if self.gamma is None:
            raise InvalidConfig("rbf gamma unresolved")
        sq = (a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :] - 2.0 * (a @ b.T)
        return np.exp(-self.gamma * np.maximum(sq, 0.0))

    def against(self, rows: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Kernel values between each row of ``rows`` and the single vector ``x``."""
        if self.kind == "linear":
            return rows @ x
        diff = rows - x
        return np.exp(-self.gamma * np.einsum("ij,ij->i", diff, diff))


def kernel_eval(k: KernelSpec, x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimMismatch(f"kernel arguments differ in shape: {x.shape} vs {y.shape}")
    if k.kind == "linear":
        return float(np.dot(x, y))
    d = x - y
    return float(np.exp(-k.gamma * np.dot(d, d)))


@dataclass(frozen=True)
class TrainParams:
    c: float = 1.0
    tol: float = 1e-3
    eps: float = 1e-12
    max_passes: int = 10
    max_iters: Optional[int] = None  # None means 1000 * n
    seed: int = 0
    cache_bytes: int = 512 * 1024 * 1024

    def __post_init__(self):
        if not self.c > 0:
            raise InvalidConfig(f"C must be positive, got {self.c}")
        if not self.tol > 0:
            raise InvalidConfig(f"tol must be positive, got {self.tol}")


@dataclass(frozen=True, eq=False)
class SvmModel:
    kernel: KernelSpec
    support_vectors: np.ndarray  # (n_sv, feature_dim)
    coeffs: np.ndarray  # alpha_i * y_i
    bias: float
    c: float
    hog_config: HogConfig = field(default_factory=HogConfig)
    positive_class: str = "late_blight"
    negative_class: str = "rest"
    image_size: tuple[int, int] = (128, 128)
    warnings: tuple[str, ...] = ()
    # training-set row of each support vector; not persisted
    support_indices: Optional[np.ndarray] = None

    @property
    def feature_dim(self) -> int:
        return self.support_vectors.shape[1]

    @property
    def n_sv(self) -> int:
        return len(self.coeffs)

    def decision_value(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.feature_dim,):
            raise DimMismatch(f"expected a vector of length {self.feature_dim}, got shape {x.shape}")
        if self.n_sv == 0:
            return float(self.bias)
        return float(self.coeffs @ self.kernel.against(self.support_vectors, x) + self.bias)

    def decision_values(self, xs) -> np.ndarray:
        return np.array([self.decision_value(x) for x in np.asarray(xs, dtype=np.float64)])

    def predict_one(self, x) -> int:
        # ties go to the positive class
        return 1 if self.decision_value(x) >= 0 else -1

    def predict(self, xs) -> np.ndarray:
        return np.where(self.decision_values(xs) >= 0, 1, -1)


def decision_value(m: SvmModel, x) -> float:
    return m.decision_value(x)


def predict(m: SvmModel, x) -> int:
    return m.predict_one(x)


def dual_objective(alpha, labels, gram) -> float:
    """sum(alpha) - 1/2 * sum_ij alpha_i alpha_j y_i y_j K_ij."""
    ay = np.asarray(alpha) * np.asarray(labels)
    return float(np.sum(alpha) - 0.5 * ay @ gram @ ay)


class _KernelRows:
    """Kernel rows K(x_i, X), from a full Gram matrix when it fits the budget."""

    def __init__(self, x: np.ndarray, kernel: KernelSpec, budget: int):
        self.x = x
        self.kernel = kernel
        n = len(x)
        self.diag = np.array([kernel_eval(kernel, xi, xi) for xi in x]) if n else np.zeros(0)
        self.gram = kernel.matrix(x, x) if n * n * 8 <= budget else None
        self._lru: OrderedDict[int, np.ndarray] = OrderedDict()
        self._lru_cap = max(2, budget // max(1, n * 8))

    def row(self, i: int) -> np.ndarray:
        if self.gram is not None:
            return self.gram[i]
        r = self._lru.get(i)
        if r is None:
            r = self.kernel.against(self.x, self.x[i])
            self._lru[i] = r
            if len(self._lru) > self._lru_cap:
                self._lru.popitem(last=False)
        else:
            self._lru.move_to_end(i)
        return r


class _Smo:
    def __init__(self, x, y, kernel, p: TrainParams, on_step):
        self.y = y
        self.n = len(y)
        self.C = p.c
        self.tol = p.tol
        self.eps = p.eps
        self.max_iters = 1000 * self.n if p.max_iters is None else p.max_iters
        self.max_passes = p.max_passes
        self.k = _KernelRows(x, kernel, p.cache_bytes)
        self.rng = XorShift64Star(p.seed)
        self.on_step = on_step
        self.snap = BOUND_TOL * p.c
        self.alpha = np.zeros(self.n)
        self.b = 0.0
        self.err = -y.astype(np.float64)  # f(x) - y with alpha = 0, b = 0
        self.iters = 0
        self.cap_hit = False

    def _unbound(self) -> np.ndarray:
        return np.flatnonzero((self.alpha > self.snap) & (self.alpha < self.C - self.snap))

    def _take_step(self, i1: int, i2: int) -> bool:
        if i1 == i2:
            return False
        C, alpha, y = self.C, self.alpha, self.y
        a1, a2 = alpha[i1], alpha[i2]
        y1, y2 = y[i1], y[i2]
        e1, e2 = self.err[i1], self.err[i2]
        s = y1 * y2
        if y1 != y2:
            lo, hi = max(0.0, a2 - a1), min(C, C + a2 - a1)
        else:
            lo, hi = max(0.0, a2 + a1 - C), min(C, a2 + a1)
        if lo >= hi:
            return False
        row1, row2 = self.k.row(i1), self.k.row(i2)
        k11, k22, k12 = self.k.diag[i1], self.k.diag[i2], row1[i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 0:
            a2n = min(max(a2 + y2 * (e1 - e2) / eta, lo), hi)
        else:
            # objective gain along the constraint line for a step d on alpha2
            def gain(d):
                return d * y2 * (e1 - e2) - 0.5 * eta * d * d

            g_lo, g_hi = gain(lo - a2), gain(hi - a2)
            if g_lo > g_hi + self.eps:
                a2n = lo
            elif g_hi > g_lo + self.eps:
                a2n = hi
            else:
                a2n = a2
        snap = self.snap
        if a2n < snap:
            a2n = 0.0
        elif a2n > C - snap:
            a2n = C
        if abs(a2n - a2) < self.eps * (a2n + a2 + self.eps):
            return False
        a1n = a1 + s * (a2 - a2n)
        if a1n < 0:
            a2n += s * a1n
            a1n = 0.0
        elif a1n > C:
            a2n += s * (a1n - C)
            a1n = C

        d1, d2 = y1 * (a1n - a1), y2 * (a2n - a2)
        b1 = self.b - e1 - d1 * k11 - d2 * k12
        b2 = self.b - e2 - d1 * k12 - d2 * k22
        if snap < a1n < C - snap:
            b_new = b1
        elif snap < a2n < C - snap:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)

        self.err += d1 * row1 + d2 * row2 + (b_new - self.b)
        alpha[i1], alpha[i2] = a1n, a2n
        self.b = b_new
        if self.on_step is not None:
            self.on_step(alpha.copy(), self.b)
        return True

    def _violates(self, i: int) -> bool:
        r = self.err[i] * self.y[i]
        a = self.alpha[i]
        return (r < -self.tol and a < self.C - self.snap) or (r > self.tol and a > self.snap)

    def _any_violator(self) -> bool:
        return any(self._violates(i) for i in range(self.n))

    def _refit_bias(self) -> None:
        """Set b from the current multipliers alone.

        With unbound multipliers b is the mean of y_i - g_i over them, where
        g_i = f(x_i) - b. Otherwise b is the midpoint of the interval allowed
        by the bound multipliers' KKT inequalities.
        """
        y, a = self.y, self.alpha
        g = self.err + y - self.b
        unbound = self._unbound()
        if len(unbound):
            b_new = float(np.mean(y[unbound] - g[unbound]))
        else:
            at_zero = a <= self.snap
            at_c = a >= self.C - self.snap
            lower_set = (at_zero & (y > 0)) | (at_c & (y < 0))
            upper_set = (at_zero & (y < 0)) | (at_c & (y > 0))
            lo = np.max((y - g)[lower_set]) if lower_set.any() else -np.inf
            hi = np.min((y - g)[upper_set]) if upper_set.any() else np.inf
            if np.isinf(lo):
                b_new = float(hi)
            elif np.isinf(hi):
                b_new = float(lo)
            else:
                b_new = float(0.5 * (lo + hi))
        self.err += b_new - self.b
        self.b = b_new

    def _examine(self, i2: int) -> int:
        if not self._violates(i2):
            return 0
        if self.iters >= self.max_iters:
            self.cap_hit = True
            return 0
        self.iters += 1
        unbound = self._unbound()
        if len(unbound) > 1:
            i1 = int(unbound[np.argmax(np.abs(self.err[unbound] - self.err[i2]))])
            if self._take_step(i1, i2):
                return 1
        start = self.rng.below(self.n)
        if len(unbound):
            k = start % len(unbound)
            for i1 in np.roll(unbound, -k):
                if self._take_step(int(i1), i2):
                    return 1
        for i1 in np.roll(np.arange(self.n), -start):
            if self._take_step(int(i1), i2):
                return 1
        return 0

    def run(self) -> list[str]:
        examine_all = True
        changed = 0
        stalled_passes = 0
        while (changed > 0 or examine_all) and not self.cap_hit:
            changed = 0
            candidates = range(self.n) if examine_all else self._unbound()
            for i in candidates:
                changed += self._examine(int(i))
                if self.cap_hit:
                    break
            if examine_all:
                if changed == 0:
                    if not self._any_violator():
                        break
                    # the b1/b2 rule can leave b outside its KKT interval when
                    # every multiplier sits on a bound; re-derive it and sweep again
                    self._refit_bias()
                    if not self._any_violator():
                        break
                    stalled_passes += 1
                    if stalled_passes >= self.max_passes:
                        break
                    continue
                stalled_passes = 0
                examine_all = False
            elif changed == 0:
                examine_all = True

        flags = []
        if self.cap_hit:
            flags.append(ITERATION_CAP)
            log.warning("SMO stopped at the iteration cap (%d)", self.max_iters)
        elif self._any_violator():
            flags.append(STALLED)
            log.warning("SMO stalled with KKT violations above tol=%g", self.tol)
        return flags


def _check_training_data(features, labels):
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    if x.ndim != 2:
        raise DimMismatch(f"features must be a 2-D array of equal-length vectors, got shape {x.shape}")
    if len(x) != len(y):
        raise DimMismatch(f"{len(x)} feature vectors but {len(y)} labels")
    if not np.all(np.isfinite(x)):
        raise NonFinite("features contain NaN or infinity")
    if not np.all((y == 1) | (y == -1)):
        raise ValueError("labels must be +1 or -1")
    if len(y) < 2 or np.all(y == y[0]):
        raise SingleClass("training data must contain both classes (+1 and -1)")
    return x, y.astype(np.float64)


def train_smo(
    features,
    labels,
    kernel: KernelSpec = KernelSpec(),
    params: TrainParams = TrainParams(),
    *,
    hog_config: HogConfig | None = None,
    positive_class: str = "late_blight",
    negative_class: str = "rest",
    image_size: tuple[int, int] = (128, 128),
    on_step: Callable[[np.ndarray, float], None] | None = None,
) -> SvmModel:
    """Fit the soft-margin dual with SMO.

    ``on_step(alpha, bias)`` is called after every accepted pair update.
    Support vectors are the points with alpha > ``params.eps``.
    """
    x, y = _check_training_data(features, labels)
    kernel = kernel.resolve(x.shape[1])
    solver = _Smo(x, y, kernel, params, on_step)
    flags = solver.run()
    keep = np.flatnonzero(solver.alpha > params.eps)
    return SvmModel(
        kernel=kernel,
        support_vectors=x[keep].copy(),
        coeffs=solver.alpha[keep] * y[keep],
        bias=float(solver.b),
        c=params.c,
        hog_config=hog_config or HogConfig(),
        positive_class=positive_class,
        negative_class=negative_class,
        image_size=tuple(image_size),
        warnings=tuple(flags),
        support_indices=keep,
    )


def training_alphas(m: SvmModel, features) -> np.ndarray:
    """Recover one alpha per training row from a model's support vectors.

    Uses the stored support indices when present, otherwise matches rows by
    exact equality (as for a model loaded from disk).
    """
    x = np.asarray(features, dtype=np.float64)
    alpha = np.zeros(len(x))
    mags = np.abs(m.coeffs)
    if m.support_indices is not None:
        alpha[m.support_indices] = mags
        return alpha
    used = np.zeros(len(x), dtype=bool)
    for sv, a in zip(m.support_vectors, mags):
        hits = np.flatnonzero(np.all(x == sv, axis=1) & ~used)
        if len(hits) == 0:
            raise ValueError("support vector not found in the training features")
        used[hits[0]] = True
        alpha[hits[0]] = a
    return alpha


def kkt_max_violation(m: SvmModel, features, labels, p: TrainParams | None = None) -> float:
    """Largest KKT violation over the training set, in units of y*f(x) - 1.

    alpha = 0 needs y*f >= 1, 0 < alpha < C needs y*f = 1, alpha = C needs
    y*f <= 1. Bound membership uses the solver's tolerance of BOUND_TOL * C.
    """
    c = m.c if p is None else p.c
    snap = BOUND_TOL * c
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    alpha = training_alphas(m, x)
    r = y * m.decision_values(x) - 1.0
    viol = np.where(
        alpha <= snap, np.maximum(0.0, -r), np.where(alpha >= c - snap, np.maximum(0.0, r), np.abs(r))
    )
    return float(viol.max()) if len(viol) else 0.0
