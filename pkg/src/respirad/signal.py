"""Received-frame containers, pulse synthesis, clutter removal and stacking.

Stacking order of the clutter-removed vector is fixed throughout the
package: repetition m outermost, antenna k in the middle, frequency bin n
innermost, i.e. a C-order flattened (M, K, N) array.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import PulseSpec, RadarConfig
from .errors import ConfigError

__all__ = [
    "FrameSet",
    "StackedSignal",
    "raised_cosine_magnitude",
    "synthesize_pulse",
    "remove_clutter",
    "antenna_slice",
    "reassemble",
]


@dataclass(frozen=True)
class FrameSet:
    """Raw complex baseband frames, indexed [antenna k, repetition m, bin n]."""

    config: RadarConfig
    frames: np.ndarray

    def __post_init__(self):
        expected = (self.config.num_antennas, self.config.num_reps, self.config.num_freq)
        frames = np.ascontiguousarray(self.frames, dtype=np.complex128)
        if frames.shape != expected:
            raise ConfigError(f"frames shape {frames.shape} does not match config {expected}")
        if not np.all(np.isfinite(frames)):
            raise ConfigError("frames contain non-finite values")
        object.__setattr__(self, "frames", frames)


@dataclass(frozen=True)
class StackedSignal:
    """Clutter-removed measurement stacked into one vector of length K*N*M.

    `data` is the C-order flattening of an (M, K, N) array. Instances
    produced by `remove_clutter` have zero mean over repetitions in every
    (k, n) slot; direct construction does not re-check this.
    """

    config: RadarConfig
    data: np.ndarray

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.complex128)
        if data.shape != (self.config.total_dim,):
            raise ConfigError(
                f"stacked data length {data.shape} != K*N*M = {self.config.total_dim}"
            )
        object.__setattr__(self, "data", data)

    @property
    def dims(self):
        """(M, K, N): repetitions, antennas, frequency bins."""
        cfg = self.config
        return cfg.num_reps, cfg.num_antennas, cfg.num_freq

    @property
    def total_dim(self) -> int:
        return self.config.total_dim

    def as_cube(self) -> np.ndarray:
        """View as (M, K, N)."""
        cfg = self.config
        return self.data.reshape(cfg.num_reps, cfg.num_antennas, cfg.num_freq)

    def energy(self) -> float:
        return float(np.vdot(self.data, self.data).real)


def raised_cosine_magnitude(freq, bandwidth: float, rolloff: float):
    """Magnitude spectrum: 1 in the flat band, cosine taper in the
    transition band, 0 beyond (1 + rolloff) * bandwidth / 2.
    """
    f = np.abs(np.asarray(freq, dtype=np.float64))
    f_flat = (1.0 - rolloff) * bandwidth / 2.0
    f_stop = (1.0 + rolloff) * bandwidth / 2.0
    mag = np.zeros_like(f)
    mag[f <= f_flat] = 1.0
    if rolloff > 0.0:
        trans = (f > f_flat) & (f < f_stop)
        mag[trans] = np.cos(np.pi / 2.0 * (f[trans] - f_flat) / (f_stop - f_flat))
    return mag


def synthesize_pulse(config: RadarConfig, spec: PulseSpec) -> np.ndarray:
    """Sample the pulse spectrum on the baseband grid, energy-normalized
    so that sum |s_n|^2 = N. Zero phase.
    """
    span = config.num_freq * config.freq_spacing
    if spec.occupied_bandwidth > span:
        raise ConfigError(
            f"pulse occupies {spec.occupied_bandwidth / 1e6:.1f} MHz but the grid "
            f"spans only {span / 1e6:.1f} MHz"
        )
    mag = raised_cosine_magnitude(config.freq_grid(), spec.bandwidth, spec.rolloff)
    energy = np.sum(mag**2)
    if energy == 0.0:
        raise ConfigError("pulse spectrum vanishes on the entire grid")
    s = mag * np.sqrt(config.num_freq / energy)
    return s.astype(np.complex128)


def remove_clutter(frames: FrameSet) -> StackedSignal:
    """Subtract the per-(k, n) mean over repetitions and stack."""
    cfg = frames.config
    if cfg.num_reps < 2:
        raise ConfigError("need at least 2 repetitions to remove clutter")
    cube = frames.frames  # (K, M, N)
    cleaned = cube - cube.mean(axis=1, keepdims=True)
    stacked = np.transpose(cleaned, (1, 0, 2)).reshape(-1)
    return StackedSignal(cfg, stacked)


def antenna_slice(signal: StackedSignal, k: int) -> np.ndarray:
    """Entries of antenna k, repetition-major: [r_{k,0}; ...; r_{k,M-1}]."""
    cfg = signal.config
    if not 0 <= k < cfg.num_antennas:
        raise IndexError(f"antenna index {k} out of range [0, {cfg.num_antennas})")
    return signal.as_cube()[:, k, :].reshape(-1)


def reassemble(config: RadarConfig, slices) -> StackedSignal:
    """Inverse of `antenna_slice` over all antennas."""
    cube = np.stack(
        [np.asarray(s).reshape(config.num_reps, config.num_freq) for s in slices], axis=1
    )
    return StackedSignal(config, cube.reshape(-1))
