"""Synthetic frame generation: breathing traces, backscatter channels,
noise at a prescribed SNR, and optional static clutter.

The generative chain mirrors the inference model except for one
deliberate mismatch: the effective channel is the product of two
independent complex Gaussian one-way channels, which is itself not
Gaussian. SNR is defined as lambda * ||b_t||^2 * ||h_s||^2 / (N M), so
the noise precision is solved per realization rather than fixed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import RadarConfig
from .errors import ConfigError, DataError
from .priors import BreathingPrior
from .signal import FrameSet

__all__ = [
    "TargetParams",
    "GroundTruth",
    "sample_breathing",
    "sample_channels",
    "synthesize_measurement",
]


@dataclass(frozen=True)
class TargetParams:
    """Reflection coefficient, bistatic geometry factor and LoS delay.

    geometry scales how much of the chest displacement appears as path
    length change; 2 is the monostatic round-trip limit. Scalars are
    broadcast over antennas.
    """

    reflection: complex = 1.0 + 0.0j
    geometry: float = 2.0
    delay: float = 1.0 / 299792458.0

    def __post_init__(self):
        refl = np.atleast_1d(np.asarray(self.reflection, dtype=np.complex128))
        geom = np.atleast_1d(np.asarray(self.geometry, dtype=np.float64))
        if not np.all(np.isfinite(refl)) or np.any(refl == 0):
            raise ConfigError("reflection coefficients must be finite and nonzero")
        if np.any(geom <= 0.0) or np.any(geom > 2.0):
            raise ConfigError("geometry factors must lie in (0, 2]")
        if self.delay <= 0.0:
            raise ConfigError("delay must be positive")

    def per_antenna(self, n_ant: int):
        """(reflection, geometry) arrays of length n_ant."""
        try:
            refl = np.broadcast_to(
                np.atleast_1d(np.asarray(self.reflection, dtype=np.complex128)),
                (n_ant,),
            )
            geom = np.broadcast_to(
                np.atleast_1d(np.asarray(self.geometry, dtype=np.float64)), (n_ant,)
            )
        except ValueError as exc:
            raise ConfigError(f"target parameters do not fit {n_ant} antennas") from exc
        return refl.copy(), geom.copy()


@dataclass(frozen=True)
class GroundTruth:
    """What the simulator knows: the displacement trace in meters, the
    effective channel per antenna, and (once synthesized) the noise
    precision that realized the requested SNR."""

    breathing: np.ndarray  # (M,) real
    channels: np.ndarray  # (K, N) complex
    noise_precision: Optional[float] = None

    def __post_init__(self):
        breathing = np.asarray(self.breathing, dtype=np.float64)
        channels = np.asarray(self.channels, dtype=np.complex128)
        if breathing.ndim != 1 or channels.ndim != 2:
            raise ConfigError("breathing must be (M,), channels (K, N)")
        if self.noise_precision is not None and not self.noise_precision > 0.0:
            raise ConfigError("noise_precision must be positive when set")
        object.__setattr__(self, "breathing", breathing)
        object.__setattr__(self, "channels", channels)

    def signal_energy(self) -> float:
        """||b_t||^2 * ||h_s||^2, the SNR numerator without lambda."""
        return float(
            (self.breathing @ self.breathing) * np.vdot(self.channels, self.channels).real
        )


def sample_breathing(prior: BreathingPrior, amplitude_rms: float, rng) -> np.ndarray:
    """Draw one displacement trace b_t = U sqrt(C_b) z, scaled to the
    requested RMS amplitude in meters (the unscaled process has unit
    variance per sample)."""
    if amplitude_rms < 0.0:
        raise ConfigError("amplitude_rms must be nonnegative")
    rng = np.random.default_rng(rng)
    coeffs = np.sqrt(prior.eig_values) * rng.standard_normal(prior.rank)
    return amplitude_rms * (prior.basis @ coeffs)


def _draw_complex_gaussian(factor: np.ndarray, rng) -> np.ndarray:
    """CN(0, F F^H) sample given a factor of the covariance."""
    n = factor.shape[1]
    z = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
    return factor @ z


def covariance_factor(cov: np.ndarray) -> np.ndarray:
    """PSD square root via eigendecomposition, tolerant of tiny negatives."""
    vals, vecs = np.linalg.eigh(cov)
    if vals[0] < -1e-9 * max(vals[-1], 0.0):
        raise ConfigError("one-way channel covariance is not PSD")
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def sample_channels(
    cov_hf: np.ndarray,
    target: TargetParams,
    pulse_spectrum: np.ndarray,
    config: RadarConfig,
    rng,
) -> np.ndarray:
    """Draw the effective channels: (K, N) complex.

    Per antenna, forward and backward one-way channels are independent
    CN(0, cov_hf) draws; the effective channel is their product weighted
    by -j 2 pi rho alpha (f + f_c) s / c.
    """
    rng = np.random.default_rng(rng)
    n_ant, n_freq = config.num_antennas, config.num_freq
    if cov_hf.shape != (n_freq, n_freq):
        raise ConfigError("cov_hf dimension does not match num_freq")
    if pulse_spectrum.shape != (n_freq,):
        raise ConfigError("pulse spectrum length does not match num_freq")
    refl, geom = target.per_antenna(n_ant)
    factor = covariance_factor(cov_hf)
    weight = (config.freq_grid() + config.carrier) * pulse_spectrum
    out = np.empty((n_ant, n_freq), dtype=np.complex128)
    for k in range(n_ant):
        h_f = _draw_complex_gaussian(factor, rng)
        h_b = _draw_complex_gaussian(factor, rng)
        scale = -2j * np.pi * geom[k] * refl[k] / config.propagation_speed
        out[k] = scale * (h_f * h_b) * weight
    return out


def synthesize_measurement(
    truth: GroundTruth,
    snr_db: float,
    rng,
    config: RadarConfig,
    *,
    occupied: bool = True,
    clutter_rms: float = 0.0,
    exact_phase: bool = False,
    target: Optional[TargetParams] = None,
):
    """Emit frames at the requested SNR; returns (FrameSet, lambda_used).

    The noise precision is solved from
    snr = lambda * ||b_t||^2 * ||h_s||^2 / (N M), then frames are
    r[k, m] = b_t[m] h_s[k] + clutter[k] + w[k, m]. With occupied=False
    the target term is omitted but lambda is still derived from the
    passed truth, so calibration noise matches the occupied trials'
    noise level distribution. exact_phase replaces the linear-in-b_t
    target term by the exact complex exponential (needs target for the
    per-antenna geometry); the static part it introduces is removed by
    clutter subtraction like any other clutter.
    """
    rng = np.random.default_rng(rng)
    m_reps, n_ant, n_freq = config.num_reps, config.num_antennas, config.num_freq
    if truth.breathing.shape != (m_reps,) or truth.channels.shape != (n_ant, n_freq):
        raise ConfigError("ground truth dimensions do not match config")
    if clutter_rms < 0.0:
        raise ConfigError("clutter_rms must be nonnegative")

    energy = truth.signal_energy()
    if energy <= 0.0:
        raise DataError("zero-energy ground truth cannot realize a finite SNR")
    lam = 10.0 ** (snr_db / 10.0) * (n_freq * m_reps) / energy

    frames = np.zeros((n_ant, m_reps, n_freq), dtype=np.complex128)
    if occupied:
        if exact_phase:
            if target is None:
                raise ConfigError("exact_phase needs the target geometry")
            _, geom = target.per_antenna(n_ant)
            slope = (
                -2j
                * np.pi
                * geom[:, None]
                * (config.freq_grid() + config.carrier)[None, :]
                / config.propagation_speed
            )  # (K, N): d(phase)/d(displacement)
            phase = np.exp(slope[:, None, :] * truth.breathing[None, :, None])
            frames += (truth.channels / slope)[:, None, :] * (phase - 1.0)
        else:
            frames += truth.breathing[None, :, None] * truth.channels[:, None, :]

    if clutter_rms > 0.0:
        clutter = (
            rng.standard_normal((n_ant, n_freq))
            + 1j * rng.standard_normal((n_ant, n_freq))
        ) * (clutter_rms / np.sqrt(2.0))
        frames += clutter[:, None, :]

    noise = (
        rng.standard_normal((n_ant, m_reps, n_freq))
        + 1j * rng.standard_normal((n_ant, m_reps, n_freq))
    ) / np.sqrt(2.0 * lam)
    frames += noise
    return FrameSet(config, frames), lam
