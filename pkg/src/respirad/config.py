"""Radar dimensioning and transmit pulse parameters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

SPEED_OF_LIGHT = 299792458.0


@dataclass(frozen=True)
class RadarConfig:
    """Static dimensions and physical constants of a multistatic UWB radar.

    The baseband frequency grid is symmetric about the carrier,
    f_n = (n - (N-1)/2) * freq_spacing for n = 0..N-1, so that pulse
    spectra and carrier-weighting are unambiguous.
    """

    num_antennas: int = 1
    num_freq: int = 128
    num_reps: int = 100
    freq_spacing: float = 1e9 / 128
    carrier: float = 6.5e9
    rep_interval: float = 0.1
    propagation_speed: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if self.num_antennas < 1 or self.num_freq < 1:
            raise ConfigError("num_antennas and num_freq must be >= 1")
        if self.num_reps < 2:
            raise ConfigError("num_reps must be >= 2 (clutter removal needs repetitions)")
        for name in ("freq_spacing", "carrier", "rep_interval", "propagation_speed"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")

    @property
    def total_dim(self) -> int:
        """K*N*M, the length of the stacked clutter-removed vector."""
        return self.num_antennas * self.num_freq * self.num_reps

    def freq_grid(self) -> np.ndarray:
        """Baseband frequency of each bin, symmetric about zero."""
        n = np.arange(self.num_freq)
        return (n - (self.num_freq - 1) / 2.0) * self.freq_spacing

    def slow_time(self) -> np.ndarray:
        """Sampling instants of the repetitions in seconds."""
        return np.arange(self.num_reps) * self.rep_interval


@dataclass(frozen=True)
class PulseSpec:
    """Raised-cosine transmit pulse: flat magnitude with a cosine taper.

    `bandwidth` is the -inf..inf Nyquist bandwidth B; the occupied band is
    (1 + rolloff) * B.
    """

    bandwidth: float = 500e6
    rolloff: float = 0.5

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ConfigError("bandwidth must be positive")
        if not 0.0 <= self.rolloff <= 1.0:
            raise ConfigError("rolloff must lie in [0, 1]")

    @property
    def occupied_bandwidth(self) -> float:
        return (1.0 + self.rolloff) * self.bandwidth
