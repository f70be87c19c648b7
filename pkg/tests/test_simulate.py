import numpy as np
import pytest

from respirad.config import PulseSpec, RadarConfig
from respirad.errors import ConfigError, DataError
from respirad.priors import (
    BreathingBand,
    forward_channel_covariance,
    make_breathing_prior,
)
from respirad.signal import remove_clutter, synthesize_pulse
from respirad.simulate import (
    GroundTruth,
    TargetParams,
    covariance_factor,
    sample_breathing,
    sample_channels,
    synthesize_measurement,
)

LIGHT_SPEED = 299792458.0


def small_radar(n_freq=6, m_reps=20):
    return RadarConfig(
        num_antennas=1,
        num_freq=n_freq,
        num_reps=m_reps,
        freq_spacing=1e9 / 128,
    )


def test_sample_breathing_deterministic():
    prior = make_breathing_prior(BreathingBand(), 30, 0.1)
    a = sample_breathing(prior, 0.005, np.random.default_rng(7))
    b = sample_breathing(prior, 0.005, np.random.default_rng(7))
    c = sample_breathing(prior, 0.005, np.random.default_rng(8))
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert a.shape == (30,) and a.dtype == np.float64


def test_sample_breathing_covariance_monte_carlo():
    prior = make_breathing_prior(BreathingBand(), 12, 0.1)
    target_cov = prior.basis @ np.diag(prior.eig_values) @ prior.basis.T
    rng = np.random.default_rng(11)
    n = 50_000
    draws = np.stack([sample_breathing(prior, 1.0, rng) for _ in range(n)])
    sample_cov = draws.T @ draws / n
    # per-entry standard error of a Gaussian sample covariance
    se = np.sqrt(
        (np.outer(np.diag(target_cov), np.diag(target_cov)) + target_cov**2) / n
    )
    assert np.all(np.abs(sample_cov - target_cov) <= 6.0 * se + 1e-12)


def test_sample_breathing_amplitude_scaling():
    prior = make_breathing_prior(BreathingBand(), 25, 0.1)
    a = sample_breathing(prior, 0.005, np.random.default_rng(1))
    b = sample_breathing(prior, 0.010, np.random.default_rng(1))
    np.testing.assert_allclose(b, 2.0 * a, rtol=1e-14)
    with pytest.raises(ConfigError):
        sample_breathing(prior, -1.0, np.random.default_rng(1))


def test_sample_channels_covariance_monte_carlo():
    cfg = small_radar(n_freq=6)
    cov_hf = forward_channel_covariance(
        1.0 / LIGHT_SPEED, 20e-9, 0.75, 6, cfg.freq_spacing
    )
    target = TargetParams(reflection=0.8 + 0.3j, geometry=1.7)
    spectrum = np.ones(6, dtype=np.complex128)
    rng = np.random.default_rng(12)
    n = 120_000
    outers = np.zeros((6, 6), dtype=np.complex128)
    sq = np.zeros((6, 6))
    for _ in range(n):
        h = sample_channels(cov_hf, target, spectrum, cfg, rng)[0]
        o = np.outer(h, h.conj())
        outers += o
        sq += np.abs(o) ** 2
    mean = outers / n
    se = np.sqrt(np.maximum(sq / n - np.abs(mean) ** 2, 0.0) / n)

    # product of two independent one-way draws: covariance is the
    # element-wise square of the one-way covariance, times the weights
    weight = (cfg.freq_grid() + cfg.carrier) * spectrum.real
    scale = -2j * np.pi * 1.7 * (0.8 + 0.3j) / LIGHT_SPEED
    expected = (abs(scale) ** 2) * np.outer(weight, weight) * cov_hf**2
    assert np.all(np.abs(mean - expected) <= 6.0 * se + 1e-12)


def test_sample_channels_validation():
    cfg = small_radar(n_freq=6)
    cov = np.eye(5, dtype=np.complex128)
    with pytest.raises(ConfigError):
        sample_channels(cov, TargetParams(), np.ones(6), cfg, np.random.default_rng(0))
    with pytest.raises(ConfigError):
        sample_channels(
            np.eye(6, dtype=np.complex128),
            TargetParams(),
            np.ones(5),
            cfg,
            np.random.default_rng(0),
        )


def test_covariance_factor_reconstructs():
    rng = np.random.default_rng(13)
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    cov = a @ a.conj().T
    f = covariance_factor(cov)
    np.testing.assert_allclose(f @ f.conj().T, cov, atol=1e-12)
    with pytest.raises(ConfigError):
        covariance_factor(np.diag([1.0, -1.0]).astype(np.complex128))


def test_snr_definition_and_noise_level():
    cfg = RadarConfig(num_freq=64, num_reps=50)
    rng = np.random.default_rng(14)
    breathing = 0.005 * rng.standard_normal(50)
    channels = rng.standard_normal((1, 64)) + 1j * rng.standard_normal((1, 64))
    truth = GroundTruth(breathing=breathing, channels=channels)

    frames, lam = synthesize_measurement(truth, -10.0, rng, cfg)
    expected_lam = 10.0 ** (-1.0) * (64 * 50) / truth.signal_energy()
    np.testing.assert_allclose(lam, expected_lam, rtol=1e-12)

    signal = breathing[None, :, None] * channels[:, None, :]
    noise = frames.frames - signal
    measured_var = np.mean(np.abs(noise) ** 2)
    np.testing.assert_allclose(measured_var, 1.0 / lam, rtol=0.05)


def test_unoccupied_differs_by_exact_signal_term():
    cfg = small_radar()
    rng = np.random.default_rng(15)
    breathing = 0.005 * rng.standard_normal(cfg.num_reps)
    channels = rng.standard_normal((1, 6)) + 1j * rng.standard_normal((1, 6))
    truth = GroundTruth(breathing=breathing, channels=channels)

    occ, lam_occ = synthesize_measurement(
        truth, -5.0, np.random.default_rng(99), cfg, occupied=True
    )
    empty, lam_empty = synthesize_measurement(
        truth, -5.0, np.random.default_rng(99), cfg, occupied=False
    )
    assert lam_occ == lam_empty
    signal = breathing[None, :, None] * channels[:, None, :]
    np.testing.assert_allclose(occ.frames - empty.frames, signal, atol=1e-15)


def test_synthesize_deterministic():
    cfg = small_radar()
    rng = np.random.default_rng(16)
    truth = GroundTruth(
        breathing=0.005 * rng.standard_normal(cfg.num_reps),
        channels=rng.standard_normal((1, 6)) + 1j * rng.standard_normal((1, 6)),
    )
    a, la = synthesize_measurement(truth, 0.0, np.random.default_rng(5), cfg, clutter_rms=0.1)
    b, lb = synthesize_measurement(truth, 0.0, np.random.default_rng(5), cfg, clutter_rms=0.1)
    np.testing.assert_array_equal(a.frames, b.frames)
    assert la == lb


def test_exact_phase_matches_linear_for_small_motion():
    cfg = small_radar()
    rng = np.random.default_rng(17)
    target = TargetParams()
    breathing = 1e-9 * rng.standard_normal(cfg.num_reps)
    channels = rng.standard_normal((1, 6)) + 1j * rng.standard_normal((1, 6))
    truth = GroundTruth(breathing=breathing, channels=channels)

    lin, _ = synthesize_measurement(
        truth, 40.0, np.random.default_rng(3), cfg, exact_phase=False
    )
    exact, _ = synthesize_measurement(
        truth, 40.0, np.random.default_rng(3), cfg, exact_phase=True, target=target
    )
    # the exact model adds a static offset that clutter removal cancels
    a = remove_clutter(lin)
    b = remove_clutter(exact)
    scale = np.linalg.norm(a.data)
    assert np.linalg.norm(a.data - b.data) <= 1e-6 * scale


def test_exact_phase_requires_target():
    cfg = small_radar()
    truth = GroundTruth(
        breathing=np.ones(cfg.num_reps), channels=np.ones((1, 6), dtype=complex)
    )
    with pytest.raises(ConfigError):
        synthesize_measurement(
            truth, 0.0, np.random.default_rng(0), cfg, exact_phase=True
        )


def test_zero_energy_truth_rejected():
    cfg = small_radar()
    truth = GroundTruth(
        breathing=np.zeros(cfg.num_reps), channels=np.ones((1, 6), dtype=complex)
    )
    with pytest.raises(DataError):
        synthesize_measurement(truth, 0.0, np.random.default_rng(0), cfg)


def test_target_params_validation():
    with pytest.raises(ConfigError):
        TargetParams(geometry=0.0)
    with pytest.raises(ConfigError):
        TargetParams(geometry=2.5)
    with pytest.raises(ConfigError):
        TargetParams(reflection=0.0)
    with pytest.raises(ConfigError):
        TargetParams(delay=-1e-9)
    refl, geom = TargetParams(reflection=1j, geometry=1.0).per_antenna(3)
    np.testing.assert_array_equal(refl, [1j, 1j, 1j])
    with pytest.raises(ConfigError):
        TargetParams(reflection=np.array([1.0, 2.0])).per_antenna(3)


def test_ground_truth_validation():
    with pytest.raises(ConfigError):
        GroundTruth(breathing=np.ones((2, 2)), channels=np.ones((1, 4), dtype=complex))
    with pytest.raises(ConfigError):
        GroundTruth(
            breathing=np.ones(4),
            channels=np.ones((1, 4), dtype=complex),
            noise_precision=0.0,
        )
    truth = GroundTruth(breathing=2 * np.ones(3), channels=np.full((1, 2), 1 + 1j))
    np.testing.assert_allclose(truth.signal_energy(), 12.0 * 4.0)


def test_breathing_spectrum_concentrates_in_band():
    band = BreathingBand()
    prior = make_breathing_prior(band, 100, 0.1)
    cov = prior.basis @ np.diag(prior.eig_values) @ prior.basis.T
    dft = np.fft.fft(np.eye(100), axis=0, norm="ortho")
    expected_psd = np.real(np.diag(dft @ cov @ dft.conj().T))

    rng = np.random.default_rng(18)
    n = 3000
    draws = np.stack([sample_breathing(prior, 1.0, rng) for _ in range(n)])
    specs = np.abs(np.fft.fft(draws, axis=1, norm="ortho")) ** 2
    mean_psd = specs.mean(axis=0)
    se = specs.std(axis=0, ddof=1) / np.sqrt(n)
    assert np.all(np.abs(mean_psd - expected_psd) <= 6.0 * se + 1e-9)

    # finite-window leakage exists but stays small: the mass at Doppler
    # frequencies well outside the band is under 5 percent
    freqs = np.abs(np.fft.fftfreq(100, d=0.1))
    outside = (freqs < band.f_min - 0.02) | (freqs > band.f_max + 0.02)
    assert expected_psd[outside].sum() / expected_psd.sum() < 0.05
