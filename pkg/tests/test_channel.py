import numpy as np
import pytest
from scipy import integrate

from qprecode.channel import (ArrayGeometry, UeDrop, local_scattering_correlation, random_drop,
                              sample_channel, upa_los_vector)
from qprecode.errors import ConfigurationError

GEO = ArrayGeometry(4, 4, 0.5, 0.5)
ASD = np.deg2rad(10)


def test_los_broadside_is_all_ones():
    np.testing.assert_allclose(upa_los_vector(0.0, 0.0, GEO), np.ones(16))


def test_los_endfire_alternates_horizontally():
    v = upa_los_vector(np.pi / 2, 0.0, GEO).reshape(4, 4)  # [a, b]
    expected = np.exp(1j * np.pi * np.arange(4))[:, None] * np.ones((1, 4))
    np.testing.assert_allclose(v, expected, atol=1e-12)


def test_los_unit_modulus(rng):
    for _ in range(20):
        v = upa_los_vector(rng.uniform(-np.pi, np.pi), rng.uniform(-1, 1), GEO)
        np.testing.assert_array_equal(np.abs(v) == pytest.approx(1.0, abs=1e-15), True)
        assert np.vdot(v, v).real == pytest.approx(16)


def test_los_elevation_uses_vertical_axis():
    v = upa_los_vector(0.0, np.pi / 2, ArrayGeometry(2, 3, 0.5, 0.5)).reshape(2, 3)
    np.testing.assert_allclose(v[0], np.exp(1j * np.pi * np.arange(3)), atol=1e-12)


def test_small_spread_tends_to_rank_one():
    az = 0.4
    R = local_scattering_correlation(az, 1e-7, GEO)
    a = upa_los_vector(az, 0.0, GEO)
    np.testing.assert_allclose(R, np.outer(a, a.conj()), atol=1e-9)


def test_neighbour_correlation_closed_form():
    R = local_scattering_correlation(0.0, ASD, GEO)
    R_az = R[::4, ::4]
    expected = np.exp(-(ASD**2 / 2) * np.pi**2)
    assert expected == pytest.approx(0.8605, abs=1e-4)
    assert abs(R_az[0, 1]) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("az", [0.0, 0.7, -2.1])
def test_correlation_against_integration(az):
    R_az = local_scattering_correlation(az, ASD, GEO)[::4, ::4]
    pdf = lambda t: np.exp(-t**2 / (2 * ASD**2)) / (np.sqrt(2 * np.pi) * ASD)

    def integral(phase):
        re = integrate.quad(lambda t: np.cos(phase(t)) * pdf(t), -np.inf, np.inf)[0]
        im = integrate.quad(lambda t: np.sin(phase(t)) * pdf(t), -np.inf, np.inf)[0]
        return re + 1j * im

    for dist in (1, 2, 3):
        arg = 2 * np.pi * 0.5 * dist
        linear = integral(lambda t: arg * (np.sin(az) + t * np.cos(az)))
        exact = integral(lambda t: arg * np.sin(az + t))
        assert R_az[dist, 0] == pytest.approx(linear, abs=1e-8)
        # the Gaussian form linearizes sin(az + t); the gap is small at 10 degrees
        assert abs(R_az[dist, 0] - exact) < 0.05


def test_correlation_structure_random_configs(rng):
    for _ in range(100):
        geo = ArrayGeometry(int(rng.integers(1, 6)), int(rng.integers(1, 5)),
                            rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0))
        R = local_scattering_correlation(rng.uniform(-np.pi, np.pi), rng.uniform(0.01, 0.7), geo)
        assert np.max(np.abs(R - R.conj().T)) < 1e-12
        np.testing.assert_allclose(np.diag(R), 1.0, atol=1e-12)
        assert np.linalg.eigvalsh(R).min() >= -1e-8


@pytest.mark.parametrize("asd", [0.0, -0.1, np.pi / 4, 1.0])
def test_spread_out_of_range(asd):
    with pytest.raises(ConfigurationError):
        local_scattering_correlation(0.0, asd, GEO)


def test_random_drop_shape_and_determinism():
    d1 = random_drop(np.random.default_rng(3), 4)
    d2 = random_drop(np.random.default_rng(3), 4)
    assert d1.K == 4 and np.all(d1.elevations == 0)
    np.testing.assert_array_equal(d1.azimuths, d2.azimuths)


def test_random_drop_uniformity():
    az = random_drop(np.random.default_rng(5), 100_000).azimuths
    assert az.min() >= -np.pi and az.max() < np.pi
    assert abs(az.mean()) < 0.02


def test_infinite_kappa_is_pure_los(rng):
    drop = random_drop(rng, 3)
    ch = sample_channel(rng, drop, np.inf, GEO, ASD)
    for k in range(3):
        np.testing.assert_allclose(ch.H[k], upa_los_vector(drop.azimuths[k], 0.0, GEO))


def _entry_power(kappa, correlations=None, n=100_000, seed=9):
    # n UEs at one azimuth give n independent draws of the same row distribution
    rng = np.random.default_rng(seed)
    drop = UeDrop(np.full(n, 0.3), np.zeros(n))
    H = sample_channel(rng, drop, kappa, ArrayGeometry(2, 2), ASD, correlations).H
    return np.mean(np.abs(H) ** 2, axis=0)


def test_rayleigh_identity_variance():
    p = _entry_power(0.0, correlations=np.eye(4))
    np.testing.assert_allclose(p, 1.0, rtol=0.02)


@pytest.mark.parametrize("kappa", [0.0, 5.0])
def test_rician_variance(kappa):
    np.testing.assert_allclose(_entry_power(kappa), 1.0, rtol=0.02)


def test_channel_determinism():
    def draw(seed):
        rng = np.random.default_rng(seed)
        return sample_channel(rng, random_drop(rng, 4), 5.0, GEO, ASD).H

    np.testing.assert_array_equal(draw(11), draw(11))
    assert not np.array_equal(draw(11), draw(12))


def test_realization_correlations_valid(rng):
    ch = sample_channel(rng, random_drop(rng, 4), 5.0, GEO, ASD)
    assert ch.H.shape == (4, 16) and np.all(np.isfinite(ch.H))
    for R in ch.correlations:
        assert np.max(np.abs(R - R.conj().T)) < 1e-12
        np.testing.assert_allclose(np.diag(R), 1.0)
        assert np.linalg.eigvalsh(R).min() >= -1e-8
