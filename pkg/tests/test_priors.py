import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import rect_psd_autocorr_quadrature
from respirad.config import PulseSpec, RadarConfig
from respirad.errors import ConfigError
from respirad.priors import (
    BreathingBand,
    breathing_autocorrelation,
    breathing_covariance,
    channel_prior_gamma,
    channel_prior_known_delay,
    eigen_reduce,
    forward_channel_covariance,
    gamma_fb_covariance,
    make_breathing_prior,
)

# high-precision reference values (50-digit arithmetic, rounded once)
AUTOCORR_AT_100MS = 0.92436617797860589493
FORWARD_COV_01 = 0.66335859690758721153 + 0.3991365690384115584j
GAMMA_COV_01 = 0.3254699035853789904 + 0.54829928656046071878j

LIGHT_SPEED = 299792458.0


def test_autocorrelation_zero_lag_is_one():
    band = BreathingBand()
    assert breathing_autocorrelation(0.0, band) == 1.0
    out = breathing_autocorrelation(np.array([0.0, 0.3, 0.0]), band)
    assert out[0] == 1.0 and out[2] == 1.0


def test_autocorrelation_golden_value():
    band = BreathingBand(f_min=9.0 / 60.0, f_max=1.0)
    np.testing.assert_allclose(
        breathing_autocorrelation(0.1, band), AUTOCORR_AT_100MS, rtol=1e-14
    )


@pytest.mark.parametrize("tau", [0.05, 0.1, 0.37, 1.3, 4.0])
def test_autocorrelation_matches_quadrature(tau):
    band = BreathingBand()
    direct = float(breathing_autocorrelation(tau, band))
    numeric = rect_psd_autocorr_quadrature(tau, band.f_min, band.f_max)
    assert abs(direct - numeric) <= 1e-9


@settings(max_examples=60, deadline=None)
@given(
    st.floats(-50.0, 50.0),
    st.floats(0.0, 4.0),
    st.floats(1e-3, 5.0),
)
def test_autocorrelation_bounded(tau, f_min, width):
    band = BreathingBand(f_min=f_min, f_max=f_min + width)
    assert abs(float(breathing_autocorrelation(tau, band))) <= 1.0 + 1e-12


def test_breathing_covariance_is_toeplitz():
    band = BreathingBand()
    cov = breathing_covariance(band, 12, 0.1)
    np.testing.assert_array_equal(cov, cov.T)
    np.testing.assert_array_equal(np.diag(cov), np.ones(12))
    for lag in range(12):
        expected = breathing_autocorrelation(lag * 0.1, band)
        np.testing.assert_allclose(np.diag(cov, k=lag), expected, rtol=1e-14)


def test_breathing_covariance_rejects_aliased_band():
    with pytest.raises(ConfigError):
        breathing_covariance(BreathingBand(f_max=6.0), 10, 0.1)
    with pytest.raises(ConfigError):
        BreathingBand(f_min=1.2, f_max=1.0)


def test_breathing_prior_rank_golden():
    prior = make_breathing_prior(BreathingBand(), 100, 0.1)
    assert prior.rank == 29
    assert make_breathing_prior(BreathingBand(0.15, 1.0), 100, 0.1).rank == 29


def test_eigen_reduce_reconstruction():
    cov = breathing_covariance(BreathingBand(), 100, 0.1)
    basis, vals, rank = eigen_reduce(cov)
    assert basis.shape == (100, rank) and vals.shape == (rank,)
    assert np.all(np.diff(vals) <= 0.0) and np.all(vals > 0.0)
    np.testing.assert_allclose(basis.T @ basis, np.eye(rank), atol=1e-12)
    assert np.abs(basis @ np.diag(vals) @ basis.T - cov).max() <= 1e-6


def test_eigen_reduce_validation():
    with pytest.raises(ConfigError):
        eigen_reduce(np.zeros((3, 4)))
    asym = np.array([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(ConfigError):
        eigen_reduce(asym)
    with pytest.raises(ConfigError):
        eigen_reduce(np.eye(3), rel_tol=1.5)


def test_forward_channel_golden_entry():
    cov = forward_channel_covariance(1.0 / LIGHT_SPEED, 20e-9, 0.75, 128, 1e9 / 128)
    np.testing.assert_allclose(cov[0, 1], FORWARD_COV_01, rtol=1e-14)
    np.testing.assert_allclose(np.diag(cov), np.ones(128), rtol=1e-15)
    np.testing.assert_allclose(cov, cov.conj().T, rtol=0.0, atol=1e-15)


def test_gamma_covariance_golden_entry():
    cov = gamma_fb_covariance(1.0 / LIGHT_SPEED, 20e-9, 128, 1e9 / 128)
    np.testing.assert_allclose(cov[0, 1], GAMMA_COV_01, rtol=1e-14)
    np.testing.assert_allclose(np.diag(cov), np.ones(128), rtol=1e-15)
    np.testing.assert_allclose(cov, cov.conj().T, rtol=0.0, atol=1e-15)


def test_forward_channel_los_dominates_at_large_ratio():
    cov = forward_channel_covariance(1.0 / LIGHT_SPEED, 20e-9, 1e6, 128, 1e9 / 128)
    # pure LoS limit: every entry is a unit-magnitude phase
    np.testing.assert_allclose(np.abs(cov[0, 5]), 1.0, atol=1e-5)


@pytest.mark.parametrize(
    "builder",
    [
        lambda cfg, pulse: channel_prior_gamma(1.0 / LIGHT_SPEED, 20e-9, cfg, pulse),
        lambda cfg, pulse: channel_prior_known_delay(
            1.0 / LIGHT_SPEED, 20e-9, 0.75, cfg, pulse
        ),
    ],
    ids=["gamma", "known-delay"],
)
def test_channel_prior_invariants(builder):
    cfg, pulse = RadarConfig(), PulseSpec()
    prior = builder(cfg, pulse)
    cov = prior.cov
    assert cov.shape == (128, 128)
    np.testing.assert_allclose(cov, cov.conj().T, rtol=0.0, atol=1e-12)
    np.testing.assert_allclose(np.trace(cov).real, 128.0, rtol=1e-12)
    eigs = np.linalg.eigvalsh(cov)
    assert eigs[0] >= 0.0
    vecs, vals = prior.eigendecomposition()
    assert np.all(np.diff(vals) <= 1e-12) and vals[-1] >= 0.0
    np.testing.assert_allclose(
        (vecs * vals) @ vecs.conj().T, cov, rtol=0.0, atol=1e-10
    )


def test_channel_prior_parameter_validation():
    with pytest.raises(ConfigError):
        forward_channel_covariance(-1e-9, 20e-9, 0.75, 8, 1e7)
    with pytest.raises(ConfigError):
        gamma_fb_covariance(1e-9, 0.0, 8, 1e7)


@settings(max_examples=25, deadline=None)
@given(
    st.integers(2, 40),
    st.floats(0.01, 0.3),
    st.floats(0.0, 1.0),
    st.floats(0.05, 0.6),
)
def test_breathing_covariance_psd(num_reps, rep_interval, f_min, width):
    band = BreathingBand(f_min=f_min, f_max=f_min + width)
    nyquist = 0.5 / rep_interval
    if band.f_max > nyquist:
        with pytest.raises(ConfigError):
            breathing_covariance(band, num_reps, rep_interval)
        return
    cov = breathing_covariance(band, num_reps, rep_interval)
    assert np.linalg.eigvalsh(cov)[0] >= -1e-8
