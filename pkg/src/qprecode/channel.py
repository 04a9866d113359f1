"""Spatially correlated Rician fading for a uniform planar array.

Antenna elements are ordered row-major over (horizontal, vertical): element
``(a, b)`` has index ``a * m_v + b``. All UEs sit at zero elevation, so the
vertical factor of the local scattering correlation is all-ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class ArrayGeometry:
    m_h: int = 4
    m_v: int = 4
    d_h: float = 0.5
    d_v: float = 0.5

    def __post_init__(self):
        if self.m_h < 1 or self.m_v < 1:
            raise ConfigurationError("array dimensions must be positive")
        if self.d_h <= 0 or self.d_v <= 0:
            raise ConfigurationError("antenna spacings must be positive")

    @property
    def M(self) -> int:
        return self.m_h * self.m_v

    def element_indices(self):
        a, b = np.meshgrid(np.arange(self.m_h), np.arange(self.m_v), indexing="ij")
        return a.ravel(), b.ravel()


@dataclass(frozen=True, eq=False)
class UeDrop:
    azimuths: np.ndarray
    elevations: np.ndarray

    @property
    def K(self) -> int:
        return len(self.azimuths)


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    H: np.ndarray  # K x M
    drop: UeDrop
    correlations: np.ndarray  # K x M x M


def upa_los_vector(azimuth: float, elevation: float, geometry: ArrayGeometry) -> np.ndarray:
    a, b = geometry.element_indices()
    phase = (a * geometry.d_h * np.cos(elevation) * np.sin(azimuth)
             + b * geometry.d_v * np.sin(elevation))
    return np.exp(2j * np.pi * phase)


def local_scattering_correlation(azimuth: float, asd: float, geometry: ArrayGeometry) -> np.ndarray:
    """Gaussian local scattering correlation (angular std ``asd`` in radians)."""
    if not 0 < asd < np.pi / 4:
        raise ConfigurationError(f"asd must lie in (0, pi/4) radians, got {asd!r}")
    dist = np.arange(geometry.m_h)[:, None] - np.arange(geometry.m_h)[None, :]
    arg = 2 * np.pi * geometry.d_h * dist
    R_az = np.exp(1j * arg * np.sin(azimuth)) * np.exp(-0.5 * asd**2 * (arg * np.cos(azimuth)) ** 2)
    R = np.kron(R_az, np.ones((geometry.m_v, geometry.m_v)))
    return 0.5 * (R + R.conj().T)


def psd_sqrt(R: np.ndarray) -> np.ndarray:
    """Hermitian square root (batched over leading axes), negative eigenvalues clipped."""
    w, V = np.linalg.eigh(R)
    return (V * np.sqrt(np.clip(w, 0.0, None))[..., None, :]) @ np.swapaxes(V.conj(), -1, -2)


def random_drop(rng: np.random.Generator, K: int) -> UeDrop:
    if K < 1:
        raise ConfigurationError("K must be at least 1")
    az = rng.uniform(-np.pi, np.pi, size=K)
    return UeDrop(az, np.zeros(K))


def sample_channel(rng: np.random.Generator, drop: UeDrop, kappa: float,
                   geometry: ArrayGeometry, asd: float, correlations=None) -> ChannelRealization:
    """Draw ``H`` (K x M); ``correlations`` overrides the local scattering model."""
    if kappa < 0:
        raise ConfigurationError("kappa must be non-negative")
    K, M = drop.K, geometry.M
    if correlations is None:
        correlations = np.stack([local_scattering_correlation(az, asd, geometry)
                                 for az in drop.azimuths])
    else:
        correlations = np.broadcast_to(np.asarray(correlations, dtype=complex), (K, M, M)).copy()
    if np.isinf(kappa):
        w_los, w_nlos = 1.0, 0.0
    else:
        w_los, w_nlos = np.sqrt(kappa / (kappa + 1)), np.sqrt(1 / (kappa + 1))

    w = (rng.standard_normal((K, M)) + 1j * rng.standard_normal((K, M))) / np.sqrt(2)
    los = np.stack([upa_los_vector(az, el, geometry)
                    for az, el in zip(drop.azimuths, drop.elevations)])
    nlos = np.einsum("kmn,kn->km", psd_sqrt(correlations), w)
    return ChannelRealization(w_los * los + w_nlos * nlos, drop, correlations)
