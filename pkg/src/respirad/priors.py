"""Prior covariances for the breathing motion and the effective channels.

Breathing: a band-limited (rectangular two-sided PSD) unit-variance
Gaussian process sampled at the repetition interval, reduced to the
eigenspace of its rank-deficient covariance.

Channels: complex N x N covariances for the per-antenna effective channel,
either from a known line-of-sight delay plus diffuse multipath, or a
delay-agnostic gamma-shaped decay. Both are weighted by the deterministic
carrier/pulse factor and trace-normalized to N.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .config import PulseSpec, RadarConfig
from .errors import ConfigError
from .signal import synthesize_pulse

__all__ = [
    "BreathingBand",
    "BreathingPrior",
    "ChannelPrior",
    "PriorSet",
    "breathing_autocorrelation",
    "breathing_covariance",
    "eigen_reduce",
    "make_breathing_prior",
    "forward_channel_covariance",
    "gamma_fb_covariance",
    "channel_prior_known_delay",
    "channel_prior_gamma",
]

EIGEN_REL_TOL = 1e-8
PSD_RIDGE = 1e-10


@dataclass(frozen=True)
class BreathingBand:
    """Two-sided rectangular PSD support [f_min, f_max] in Hz."""

    f_min: float = 9.0 / 60.0
    f_max: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.f_min < self.f_max:
            raise ConfigError("need 0 <= f_min < f_max")

    def validate_for(self, rep_interval: float):
        nyquist = 0.5 / rep_interval
        if self.f_max > nyquist:
            raise ConfigError(
                f"f_max {self.f_max} Hz exceeds slow-time Nyquist {nyquist} Hz"
            )


@dataclass(frozen=True)
class BreathingPrior:
    """Breathing covariance and its eigenspace factorization.

    cov_full = basis @ diag(eig_values) @ basis.T up to the retention
    threshold; eig_values are sorted descending and strictly positive.
    """

    cov_full: np.ndarray  # (M, M)
    basis: np.ndarray  # (M, L), orthonormal columns
    eig_values: np.ndarray  # (L,)

    @property
    def rank(self) -> int:
        return int(self.eig_values.shape[0])

    def full_eigendecomposition(self):
        """All M eigenpairs of cov_full as (vectors, values), eigenvalues
        descending and clipped at 0; cached per instance."""
        cached = self.__dict__.get("_eig")
        if cached is None:
            vals, vecs = np.linalg.eigh(self.cov_full)
            order = np.argsort(vals)[::-1]
            cached = (vecs[:, order].copy(), np.clip(vals[order], 0.0, None))
            object.__setattr__(self, "_eig", cached)
        return cached


@dataclass(frozen=True)
class ChannelPrior:
    """Per-antenna covariance of the effective channel, trace = N."""

    cov: np.ndarray  # (N, N) Hermitian PSD
    kind: str  # "known-delay" or "gamma"
    params: dict = field(default_factory=dict)

    def eigendecomposition(self):
        """Eigenpairs of cov as (vectors, values), eigenvalues descending
        and clipped at 0; cached per instance."""
        cached = self.__dict__.get("_eig")
        if cached is None:
            vals, vecs = np.linalg.eigh(self.cov)
            order = np.argsort(vals)[::-1]
            cached = (vecs[:, order].copy(), np.clip(vals[order], 0.0, None))
            object.__setattr__(self, "_eig", cached)
        return cached


@dataclass(frozen=True)
class PriorSet:
    """Everything the inference engine needs: breathing prior plus one
    channel prior per antenna."""

    breathing: BreathingPrior
    channels: tuple

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))

    @property
    def num_antennas(self) -> int:
        return len(self.channels)

    def channel(self, k: int) -> ChannelPrior:
        return self.channels[k]


def breathing_autocorrelation(tau, band: BreathingBand):
    """Autocorrelation of the rectangular-PSD process; c(0) = 1.

    Written as a difference of sinc terms so that tiny lags cannot hit a
    0/0 underflow: f*sinc(2*f*tau) = sin(2*pi*f*tau) / (2*pi*tau).
    """
    tau = np.asarray(tau, dtype=np.float64)
    width = band.f_max - band.f_min
    return (
        band.f_max * np.sinc(2.0 * band.f_max * tau)
        - band.f_min * np.sinc(2.0 * band.f_min * tau)
    ) / width


def breathing_covariance(band: BreathingBand, num_reps: int, rep_interval: float) -> np.ndarray:
    """Toeplitz covariance of the breathing samples at the repetition grid."""
    band.validate_for(rep_interval)
    lags = np.arange(num_reps) * rep_interval
    col = breathing_autocorrelation(lags, band)
    return toeplitz(col)


def eigen_reduce(cov: np.ndarray, rel_tol: float = EIGEN_REL_TOL):
    """Keep eigenpairs with eigenvalue > rel_tol * max, sorted descending.

    Returns (basis, eig_values, rank).
    """
    cov = np.asarray(cov, dtype=np.float64)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ConfigError("covariance must be square")
    if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-10 * max(1.0, np.abs(cov).max())):
        raise ConfigError("covariance must be symmetric")
    if not 0.0 < rel_tol < 1.0:
        raise ConfigError("rel_tol must lie in (0, 1)")
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    keep = vals > rel_tol * vals[0]
    return vecs[:, keep].copy(), vals[keep].copy(), int(keep.sum())


def make_breathing_prior(
    band: BreathingBand, num_reps: int, rep_interval: float, rel_tol: float = EIGEN_REL_TOL
) -> BreathingPrior:
    cov = breathing_covariance(band, num_reps, rep_interval)
    basis, vals, _ = eigen_reduce(cov, rel_tol)
    return BreathingPrior(cov_full=cov, basis=basis, eig_values=vals)


def forward_channel_covariance(
    tau_0: float, tau_f: float, k_los: float, num_freq: int, freq_spacing: float
) -> np.ndarray:
    """One-way channel covariance: LoS power ratio k_los over a diffuse
    tail with exponential power delay profile (decay tau_f), delayed by
    tau_0. Diagonal normalized to 1 (E_LoS + E_DM = 1).
    """
    if tau_0 <= 0 or tau_f <= 0 or k_los <= 0:
        raise ConfigError("tau_0, tau_f and k_los must be positive")
    e_dm = 1.0 / (1.0 + k_los)
    e_los = k_los * e_dm
    lag = np.arange(num_freq)[:, None] - np.arange(num_freq)[None, :]
    diffuse = e_dm / (1.0 + 2j * np.pi * tau_f * freq_spacing * lag)
    phase = np.exp(-2j * np.pi * tau_0 * freq_spacing * lag)
    return (e_los + diffuse) * phase


def gamma_fb_covariance(
    tau_0_expected: float, tau_f: float, num_freq: int, freq_spacing: float
) -> np.ndarray:
    """Round-trip channel covariance with a gamma-shaped power delay
    profile whose time-domain peak sits at the round-trip delay
    2 * tau_0_expected. Diagonal equals 1.
    """
    if tau_0_expected <= 0 or tau_f <= 0:
        raise ConfigError("tau_0_expected and tau_f must be positive")
    a = 1.0 + 2.0 * tau_0_expected / tau_f
    lag = np.arange(num_freq)[:, None] - np.arange(num_freq)[None, :]
    return (1.0 + 2j * np.pi * tau_f * freq_spacing * lag) ** (-a)


def _spectral_weight(config: RadarConfig, pulse: PulseSpec) -> np.ndarray:
    s = synthesize_pulse(config, pulse)
    return (config.freq_grid() + config.carrier) * s.real / config.carrier


def _finalize_channel_cov(cov: np.ndarray, weight: np.ndarray, num_freq: int) -> np.ndarray:
    cov = weight[:, None] * cov * weight[None, :]
    cov = 0.5 * (cov + cov.conj().T)
    vals, vecs = np.linalg.eigh(cov)
    if vals[0] < -1e-9 * vals[-1]:
        warnings.warn("channel covariance needed substantial PSD clipping", stacklevel=3)
    vals = np.clip(vals, 0.0, None)
    cov = (vecs * vals) @ vecs.conj().T
    cov = cov + (PSD_RIDGE * np.trace(cov).real / num_freq) * np.eye(num_freq)
    cov *= num_freq / np.trace(cov).real
    return 0.5 * (cov + cov.conj().T)


def channel_prior_known_delay(
    tau_0: float,
    tau_f: float,
    k_los: float,
    config: RadarConfig,
    pulse: PulseSpec,
) -> ChannelPrior:
    """Prior for the effective channel when the LoS delay is known.

    The round-trip covariance is the element-wise product of the forward
    and backward one-way covariances (independent zero-mean Gaussian
    legs), then carrier/pulse weighted and trace-normalized.
    """
    one_way = forward_channel_covariance(
        tau_0, tau_f, k_los, config.num_freq, config.freq_spacing
    )
    fb = one_way * one_way  # forward and backward legs share the covariance
    cov = _finalize_channel_cov(fb, _spectral_weight(config, pulse), config.num_freq)
    return ChannelPrior(
        cov=cov,
        kind="known-delay",
        params={"tau_0": tau_0, "tau_f": tau_f, "k_los": k_los},
    )


def channel_prior_gamma(
    tau_0_expected: float,
    tau_f: float,
    config: RadarConfig,
    pulse: PulseSpec,
) -> ChannelPrior:
    """Delay-agnostic prior: gamma-shaped round-trip covariance."""
    fb = gamma_fb_covariance(tau_0_expected, tau_f, config.num_freq, config.freq_spacing)
    cov = _finalize_channel_cov(fb, _spectral_weight(config, pulse), config.num_freq)
    return ChannelPrior(
        cov=cov,
        kind="gamma",
        params={"tau_0_expected": tau_0_expected, "tau_f": tau_f},
    )
