"""Discretized Gaussian observation model and linear functionals.

The model observes y_i = f_i + sigma * z_i for i = 1..d with i.i.d. standard
normal z_i and sigma = 1/sqrt(n).  Function-class problems embed L2 functions
on the midpoint grid of [-1/2, 1/2] (see :mod:`adaptci.spaces`); sparse-mean
problems use the coordinates directly.
"""

from dataclasses import dataclass

import numpy as np
from scipy import special

from .spaces import grid_index_of_zero, grid_points

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


@dataclass(frozen=True)
class SequenceModel:
    """Gaussian sequence model with d coordinates and noise level 1/sqrt(n)."""

    d: int
    n: float
    sigma: float

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if self.n <= 0:
            raise ValueError(f"n must be positive, got {self.n}")
        if abs(self.sigma * np.sqrt(self.n) - 1.0) > 1e-12 and self.sigma != 0.0:
            raise ValueError("sigma must equal 1/sqrt(n)")

    @staticmethod
    def from_n(d, n):
        return SequenceModel(d=d, n=float(n), sigma=1.0 / np.sqrt(n))

    @staticmethod
    def noiseless(d):
        """Degenerate sigma = 0 model, used for smoke tests."""
        return SequenceModel(d=d, n=np.inf, sigma=0.0)


@dataclass(frozen=True)
class LinearFunctional:
    """Representer w of the functional Tf = <w, f>."""

    w: tuple

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        norm = np.linalg.norm(w)
        if not np.isfinite(norm) or norm <= 0:
            raise ValueError("representer must have finite positive norm")

    @property
    def vector(self):
        return np.asarray(self.w, dtype=float)

    @property
    def dim(self):
        return len(self.w)

    @property
    def norm(self):
        return float(np.linalg.norm(self.vector))


def point_eval_functional(d):
    """Tf = f(0) on the grid embedding: w = (1/sqrt(delta)) e_{i0}."""
    _, delta = grid_points(d)
    i0 = grid_index_of_zero(d)
    w = np.zeros(d)
    w[i0] = 1.0 / np.sqrt(delta)
    return LinearFunctional(tuple(w))


def sum_functional(d):
    """Tf = sum_i f(i) in raw coordinates: w = (1, ..., 1)."""
    return LinearFunctional((1.0,) * d)


def coordinate_functional(d, i):
    """Tf = f(i), 1-based."""
    if not (1 <= i <= d):
        raise ValueError(f"coordinate index must be in 1..{d}")
    w = np.zeros(d)
    w[i - 1] = 1.0
    return LinearFunctional(tuple(w))


@dataclass(frozen=True)
class ConfidenceLevel:
    """Confidence parameter alpha with its upper-tail normal quantiles."""

    alpha: float
    z_alpha: float
    z_alpha_half: float

    @staticmethod
    def make(alpha):
        if not (0.0 < alpha < 0.5):
            raise ValueError(f"alpha must be in (0, 1/2), got {alpha}")
        return ConfidenceLevel(
            alpha=float(alpha),
            z_alpha=float(special.ndtri(1.0 - alpha)),
            z_alpha_half=float(special.ndtri(1.0 - alpha / 2.0)),
        )

    def split(self, k):
        """Bonferroni level alpha/k."""
        return ConfidenceLevel.make(self.alpha / k)


@dataclass(frozen=True)
class Observation:
    y: tuple
    seed: int

    @property
    def vector(self):
        return np.asarray(self.y, dtype=float)


def evaluate(functional, f):
    """Tf = <w, f>."""
    f = np.asarray(f, dtype=float)
    w = functional.vector
    if f.shape != w.shape:
        raise ValueError(f"dimension mismatch: w has {w.shape}, f has {f.shape}")
    return float(w @ f)


def sample(model, f, seed):
    """Draw y = f + sigma * z with z standard normal, deterministically in seed."""
    f = np.asarray(f, dtype=float)
    if f.shape != (model.d,):
        raise ValueError(f"f must have length {model.d}, got {f.shape}")
    if model.sigma == 0.0:
        y = f.copy()
    else:
        rng = np.random.Generator(np.random.PCG64(seed))
        y = f + model.sigma * rng.standard_normal(model.d)
    return Observation(y=tuple(y), seed=int(seed))


def _splitmix64(v):
    v &= _MASK64
    v = (v ^ (v >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    v = (v ^ (v >> 27)) * 0x94D049BB133111EB & _MASK64
    return v ^ (v >> 31)


def derive_replicate_seed(master, index):
    """Statistically independent 64-bit stream seed for one replicate.

    Splitmix-style finalizer applied to master + golden-ratio * (index + 1);
    distinct indices yield distinct seeds in practice.
    """
    if index < 0:
        raise ValueError("replicate index must be nonnegative")
    return _splitmix64((int(master) + _GOLDEN * (int(index) + 1)) & _MASK64)
