"""Detection statistics and constant-false-alarm threshold calibration.

Three detectors operate on the same clutter-removed signal:
 - the variational log-odds statistic built from the converged posterior,
 - an estimator-correlator treating the target return as a Gaussian
   process correlated across slow time only,
 - a delay-Doppler FFT peak detector.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, DataError, NumericalError
from .priors import BreathingBand, PriorSet
from .signal import StackedSignal
from .vmp import VmpState, null_model_fit, run_inference

__all__ = [
    "DetectionResult",
    "ThresholdTable",
    "DETECTOR_KINDS",
    "vmp_statistic",
    "vmp_statistic_from_state",
    "ec_statistic",
    "fft_statistic",
    "fft_delay_doppler_power",
    "threshold_from_scores",
    "calibrate_threshold",
]

DETECTOR_KINDS = ("vmp", "ec", "fft")

LN_PI = float(np.log(np.pi))
LN_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class DetectionResult:
    """A single decision: statistic compared against a threshold.

    Ties decide for absence, so decision is strictly statistic > threshold.
    """

    statistic: float
    threshold: float
    detector_kind: str
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.detector_kind not in DETECTOR_KINDS:
            raise ConfigError(f"unknown detector kind {self.detector_kind!r}")

    @property
    def decision(self) -> bool:
        return self.statistic > self.threshold


@dataclass(frozen=True)
class ThresholdTable:
    """Per-SNR calibrated thresholds for one detector at one false-alarm rate."""

    snr_db: np.ndarray
    gamma: np.ndarray
    target_pfa: float
    n_trials: int

    def __post_init__(self):
        snr = np.asarray(self.snr_db, dtype=np.float64)
        gam = np.asarray(self.gamma, dtype=np.float64)
        if snr.shape != gam.shape or snr.ndim != 1:
            raise ConfigError("snr_db and gamma must be 1-D arrays of equal length")
        if not 0.0 < self.target_pfa < 1.0:
            raise ConfigError("target_pfa must lie in (0, 1)")
        if self.n_trials * self.target_pfa < 50.0:
            raise ConfigError(
                "need n_trials * target_pfa >= 50 for a stable tail quantile"
            )
        object.__setattr__(self, "snr_db", snr)
        object.__setattr__(self, "gamma", gam)

    def lookup(self, snr_db: float) -> float:
        idx = np.nonzero(np.isclose(self.snr_db, snr_db, rtol=0.0, atol=1e-9))[0]
        if idx.size == 0:
            raise DataError(f"no calibrated threshold at {snr_db} dB")
        return float(self.gamma[idx[0]])


def vmp_statistic_from_state(
    state: VmpState,
    stacked: StackedSignal,
    priors: PriorSet,
    prefactor: str = "nm-1",
) -> float:
    """Log-odds statistic of a converged fit against the noise-only model.

    prefactor selects the multiplier of ln(lambda1/lambda0): "nm-1" (the
    default) or "knm-1"; the two differ only for K > 1 and by a constant
    absorbed into threshold calibration.
    """
    if state.flagged:
        return float("-inf")
    if prefactor not in ("nm-1", "knm-1"):
        raise ConfigError("prefactor must be 'nm-1' or 'knm-1'")
    m_reps, n_ant, n_freq = stacked.dims
    null = null_model_fit(stacked)
    log_ratio = float(np.log(state.lambda_hat / null.lambda0_hat))
    count = n_freq * m_reps if prefactor == "nm-1" else stacked.total_dim
    out = (count - 1) * log_ratio

    cb0 = priors.breathing.eig_values
    out -= 0.5 * float(
        np.sum((state.b_hat * state.b_hat + state.cb_diag) / cb0)
    )
    for k in range(n_ant):
        vecs, mu = priors.channel(k).eigendecomposition()
        if np.any(mu <= 0.0):
            raise NumericalError("channel prior covariance is singular")
        h_eig = vecs.conj().T @ state.h_hat[k]
        out -= float(np.sum((np.abs(h_eig) ** 2 + state.ch_gains[k]) / mu))

    # entropy difference H(q1) - H(q0)
    out += 0.5 * state.rank * (LN_2PI + 1.0) + 0.5 * float(
        np.log(state.cb_diag).sum()
    )
    out += n_ant * n_freq * (LN_PI + 1.0) + float(np.log(state.ch_gains).sum())
    out += log_ratio  # Gamma entropies share shape; rates differ
    return float(out)


def vmp_statistic(
    stacked: StackedSignal,
    priors: PriorSet,
    rng=None,
    tol: float = 1e-8,
    max_iter: int = 500,
    n_restarts: int = 1,
    prefactor: str = "nm-1",
) -> float:
    """Run inference and score; numerical failures map to -inf."""
    try:
        state = run_inference(
            stacked, priors, tol=tol, max_iter=max_iter, n_restarts=n_restarts, rng=rng
        )
    except NumericalError:
        return float("-inf")
    return vmp_statistic_from_state(state, stacked, priors, prefactor=prefactor)


def ec_statistic(stacked: StackedSignal, priors: PriorSet) -> float:
    """Estimator-correlator quadratic form r^H C_s (C_s + v I)^-1 r.

    Gaussian baseline that models only the slow-time correlation of the
    return: the signal covariance is C_bt (x) I, so frequency bins are
    treated as independent and the frequency-domain channel structure
    is deliberately ignored. The noise variance v is taken from the
    data as ||r||^2 / (KNM). Evaluated via the slow-time
    eigendecomposition, never the (NM, NM) matrix.
    """
    m_reps, n_ant, n_freq = stacked.dims
    if priors.num_antennas != n_ant:
        raise ConfigError(f"{priors.num_antennas} channel priors for {n_ant} antennas")
    if priors.breathing.cov_full.shape[0] != m_reps:
        raise ConfigError("breathing prior dimension does not match repetitions")
    if stacked.energy() <= 0.0:
        return 0.0
    noise_var = stacked.energy() / stacked.total_dim

    cube = stacked.as_cube()
    b_vecs, b_vals = priors.breathing.full_eigendecomposition()
    weights = b_vals / (b_vals + noise_var)
    out = 0.0
    for k in range(n_ant):
        z = b_vecs.T @ cube[:, k, :]
        out += float(weights @ np.sum(np.abs(z) ** 2, axis=1))
    return out


def fft_delay_doppler_power(
    frame_matrix: np.ndarray,
) -> np.ndarray:
    """(M, N) power map: delay transform across frequency, DFT across
    slow time, orthonormal scaling on both axes."""
    delay = np.fft.ifft(frame_matrix, axis=1, norm="ortho")
    doppler = np.fft.fft(delay, axis=0, norm="ortho")
    return np.abs(doppler) ** 2


def fft_statistic(
    stacked: StackedSignal,
    rep_interval: Optional[float] = None,
    band: Optional[BreathingBand] = None,
    normalize: bool = True,
) -> float:
    """Peak delay-Doppler power, the zero-Doppler row excluded.

    With a band, the search is restricted to Doppler bins whose absolute
    frequency lies inside it (rep_interval required to map bins to Hz).
    By default the peak is normalized by the mean sample power of the
    same antenna, making the statistic invariant to the overall noise
    level. Multi-antenna signals contribute the sum of per-antenna
    peaks.
    """
    m_reps, n_ant, _ = stacked.dims
    keep = np.ones(m_reps, dtype=bool)
    keep[0] = False  # zero Doppler is nulled by clutter removal
    if band is not None:
        if rep_interval is None:
            raise ConfigError("band restriction requires rep_interval")
        freqs = np.abs(np.fft.fftfreq(m_reps, d=rep_interval))
        keep &= (freqs >= band.f_min) & (freqs <= band.f_max)
        if not keep.any():
            raise ConfigError("breathing band excludes every Doppler bin")
    cube = stacked.as_cube()
    out = 0.0
    for k in range(n_ant):
        power = fft_delay_doppler_power(cube[:, k, :])
        peak = float(power[keep].max())
        if normalize:
            mean_power = float(np.mean(np.abs(cube[:, k, :]) ** 2))
            peak = peak / mean_power if mean_power > 0.0 else 0.0
        out += peak
    return out


def threshold_from_scores(scores, p_fa: float) -> float:
    """Empirical (1 - p_fa) quantile with linear interpolation."""
    arr = np.asarray(scores, dtype=np.float64)
    if not 0.0 < p_fa < 1.0:
        raise ConfigError("p_fa must lie in (0, 1)")
    if arr.size * p_fa < 50.0:
        raise ConfigError("need n_trials * p_fa >= 50 for a stable tail quantile")
    if not np.all(np.isfinite(arr)):
        raise DataError("calibration scores must be finite")
    return float(np.quantile(arr, 1.0 - p_fa, method="linear"))


def calibrate_threshold(
    statistic_fn: Callable[[StackedSignal], float],
    h0_sampler: Callable[[np.random.Generator], StackedSignal],
    p_fa: float,
    n_trials: int,
    rng=None,
) -> float:
    """Draw noise-only signals, score them, return the tail quantile."""
    rng = np.random.default_rng(rng)
    scores = np.empty(n_trials)
    for i in range(n_trials):
        scores[i] = statistic_fn(h0_sampler(rng))
    return threshold_from_scores(scores, p_fa)
