"""Symmetric uniform fronthaul quantizer.

Labels sit at ``step * (z - (L-1)/2)`` and thresholds at ``step * (z - L/2)``.
Real and imaginary parts are quantized independently with half-open cells
``[tau_z, tau_{z+1})``, so a value lying exactly on a threshold goes up.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import optimize
from scipy.stats import norm

from .errors import ConfigurationError, DomainError, NumericError


@dataclass(frozen=True, eq=False)
class QuantCodebook:
    step: float
    levels: int
    labels: np.ndarray = field(repr=False)
    thresholds: np.ndarray = field(repr=False)

    @property
    def alphabet(self) -> np.ndarray:
        """All ``L**2`` complex points, real part varying slowest."""
        return (self.labels[:, None] + 1j * self.labels[None, :]).ravel()

    @property
    def min_entry_power(self) -> float:
        return 2.0 * float(self.labels[self.levels // 2]) ** 2

    def indices(self, x) -> np.ndarray:
        """Cell index of each real value in ``x``."""
        return np.searchsorted(self.thresholds, np.asarray(x, dtype=float), side="right")

    def contains(self, P) -> bool:
        """True when every entry of ``P`` is exactly a codebook point."""
        P = np.asarray(P, dtype=complex)
        return bool(np.all(np.isin(P.real, self.labels)) and np.all(np.isin(P.imag, self.labels)))


def _check_levels(levels: int) -> None:
    if int(levels) != levels or levels < 2 or (int(levels) & (int(levels) - 1)):
        raise ConfigurationError(f"levels must be a power of two >= 2, got {levels!r}")


def build_codebook(levels: int, step: float) -> QuantCodebook:
    _check_levels(levels)
    if not np.isfinite(step) or step <= 0:
        raise ConfigurationError(f"step must be positive and finite, got {step!r}")
    levels = int(levels)
    z = np.arange(levels)
    labels = step * (z - (levels - 1) / 2.0)
    thresholds = step * (z[1:] - levels / 2.0)
    labels.setflags(write=False)
    thresholds.setflags(write=False)
    return QuantCodebook(float(step), levels, labels, thresholds)


def quantize_real(x, codebook: QuantCodebook) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("cannot quantize non-finite values")
    return codebook.labels[codebook.indices(x)]


def quantize_scalar(value: complex, codebook: QuantCodebook) -> complex:
    value = complex(value)
    re = quantize_real(value.real, codebook)
    im = quantize_real(value.imag, codebook)
    return complex(float(re), float(im))


def quantize_matrix(W, codebook: QuantCodebook):
    """Elementwise quantization; returns a codebook-constrained precoder."""
    from .wmmse import PrecodingMatrix

    W = np.asarray(W, dtype=complex)
    entries = quantize_real(W.real, codebook) + 1j * quantize_real(W.imag, codebook)
    return PrecodingMatrix(entries, constrained=True, codebook=codebook)


def second_nearest_real(x, codebook: QuantCodebook) -> np.ndarray:
    """Second-closest label to each real value.

    The closest label is the quantizer output; the runner-up is the closer
    of its two neighbours (lower neighbour on a tie, the only neighbour at the
    edges of the label range).
    """
    x = np.asarray(x, dtype=float)
    idx = codebook.indices(x)
    L = codebook.levels
    lo = np.clip(idx - 1, 0, L - 1)
    hi = np.clip(idx + 1, 0, L - 1)
    d_lo = np.where(idx > 0, np.abs(x - codebook.labels[lo]), np.inf)
    d_hi = np.where(idx < L - 1, np.abs(x - codebook.labels[hi]), np.inf)
    return codebook.labels[np.where(d_lo <= d_hi, lo, hi)]


def gaussian_distortion(levels: int, step: float, variance: float = 1.0) -> float:
    """Mean squared quantization error of ``Normal(0, variance)`` per real dimension.

    Closed form per cell using the Gaussian CDF and PDF.
    """
    sigma = np.sqrt(variance)
    L = int(levels)
    z = np.arange(L)
    labels = step * (z - (L - 1) / 2.0) / sigma
    edges = np.concatenate(([-np.inf], step * (z[1:] - L / 2.0) / sigma, [np.inf]))
    a, b = edges[:-1], edges[1:]
    pa, pb = norm.pdf(a), norm.pdf(b)
    # x * pdf(x) -> 0 at the infinite edges
    apa = np.zeros(L)
    bpb = np.zeros(L)
    apa[1:] = a[1:] * pa[1:]
    bpb[:-1] = b[:-1] * pb[:-1]
    mass = norm.cdf(b) - norm.cdf(a)
    per_cell = mass * (1.0 + labels**2) + (apa - bpb) - 2.0 * labels * (pa - pb)
    return float(variance * per_cell.sum())


def optimal_step_size(levels: int, variance: float) -> float:
    """Step minimizing Gaussian distortion for ``Normal(0, variance)`` inputs.

    Golden-section search over ``(0, 4]`` at unit variance, then rescaled by
    the standard deviation.
    """
    _check_levels(levels)
    if not np.isfinite(variance) or variance <= 0:
        raise ConfigurationError(f"variance must be positive, got {variance!r}")
    return _unit_step(int(levels)) * float(np.sqrt(variance))


@lru_cache(maxsize=None)
def _unit_step(levels: int) -> float:
    def f(step):
        return gaussian_distortion(levels, step, 1.0)

    grid = np.geomspace(1e-4, 4.0, 400)
    values = np.array([f(s) for s in grid])
    i = int(np.argmin(values))
    if i == 0 or i == len(grid) - 1:
        raise NumericError(f"distortion minimum for L={levels} not bracketed in (0, 4]")
    res = optimize.minimize_scalar(f, bracket=(grid[i - 1], grid[i], grid[i + 1]),
                                   method="golden", tol=1e-10)
    if not res.success or not (grid[i - 1] < res.x < grid[i + 1]):
        raise NumericError(f"golden-section search failed for L={levels}")
    return float(res.x)


def codebook_for_power(levels: int, q: float, K: int, M: int) -> QuantCodebook:
    """Codebook tuned to entries distributed CN(0, q/(KM))."""
    return build_codebook(levels, optimal_step_size(levels, q / (2.0 * K * M)))
