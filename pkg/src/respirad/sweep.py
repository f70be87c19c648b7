"""Monte Carlo detection sweeps: calibration, trials, and CSV artifacts.

Every trial derives its randomness from
SeedSequence([master_seed, point_index, stream_code, trial_index]) with
stream 0 for calibration and 1 for detection trials, so aggregate results
are bit-identical regardless of how trials are distributed over workers.

Calibration draws a phantom ground truth per trial (consuming the same
random variates as an occupied trial) and emits pure noise at the noise
precision that phantom would have required; thresholds therefore match
the per-SNR noise level distribution of the occupied trials.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import PulseSpec, RadarConfig
from .detectors import (
    DETECTOR_KINDS,
    ThresholdTable,
    ec_statistic,
    fft_statistic,
    threshold_from_scores,
    vmp_statistic_from_state,
)
from .errors import ConfigError, DataError, NumericalError
from .priors import (
    BreathingBand,
    PriorSet,
    channel_prior_gamma,
    channel_prior_known_delay,
    forward_channel_covariance,
    make_breathing_prior,
)
from .signal import remove_clutter, synthesize_pulse
from .simulate import GroundTruth, TargetParams, sample_breathing, sample_channels, synthesize_measurement
from .vmp import run_inference

__all__ = [
    "SweepConfig",
    "CurvePoint",
    "DetectionCurve",
    "build_priors",
    "make_prior_set",
    "run_sweep",
    "run_calibration",
    "wilson_interval",
    "export_results",
    "read_results",
    "write_threshold_table",
    "read_threshold_table",
]

WILSON_Z = 1.959963984540054  # two-sided 95% normal quantile

PRIOR_KINDS = ("gamma", "known-delay")

CAL_STREAM = 0
TRIAL_STREAM = 1


@dataclass(frozen=True)
class SweepConfig:
    """Everything a detection-probability sweep depends on."""

    snr_grid_db: tuple = tuple(float(s) for s in range(-30, -9, 2))
    trials_per_point: int = 2000
    cal_trials: int = 5000
    p_fa: float = 0.01
    detectors: tuple = DETECTOR_KINDS
    prior_kind: str = "gamma"
    radar: RadarConfig = RadarConfig()
    pulse: PulseSpec = PulseSpec()
    band: BreathingBand = BreathingBand()
    target: TargetParams = TargetParams()
    amplitude_rms: float = 0.005
    clutter_rms: float = 0.0
    tau_f: float = 20e-9
    k_los: float = 0.75
    master_seed: int = 0
    workers: int = 1
    vmp_tol: float = 1e-8
    vmp_max_iter: int = 500
    vmp_restarts: int = 1
    fft_band_restrict: bool = True

    def __post_init__(self):
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))
        object.__setattr__(self, "detectors", tuple(self.detectors))
        if len(self.snr_grid_db) == 0:
            raise ConfigError("snr_grid_db must be nonempty")
        if self.trials_per_point < 100:
            raise ConfigError("trials_per_point must be >= 100")
        if not 0.0 < self.p_fa < 1.0:
            raise ConfigError("p_fa must lie in (0, 1)")
        if self.cal_trials * self.p_fa < 50.0:
            raise ConfigError("need cal_trials * p_fa >= 50")
        unknown = set(self.detectors) - set(DETECTOR_KINDS)
        if unknown or not self.detectors:
            raise ConfigError(f"detectors must be a nonempty subset of {DETECTOR_KINDS}")
        if self.prior_kind not in PRIOR_KINDS:
            raise ConfigError(f"prior_kind must be one of {PRIOR_KINDS}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


@dataclass(frozen=True)
class CurvePoint:
    detector: str
    snr_db: float
    pd: float
    ci_lo: float
    ci_hi: float
    n_trials: int
    n_flagged: int

    def __post_init__(self):
        if not 0.0 <= self.pd <= 1.0:
            raise ConfigError("pd must lie in [0, 1]")
        if not self.ci_lo <= self.pd <= self.ci_hi:
            raise ConfigError("confidence interval must contain the estimate")


@dataclass(frozen=True)
class DetectionCurve:
    points: tuple

    def __post_init__(self):
        ordered = tuple(
            sorted(self.points, key=lambda p: (p.detector, p.snr_db))
        )
        object.__setattr__(self, "points", ordered)

    def pd(self, detector: str, snr_db: float) -> float:
        for p in self.points:
            if p.detector == detector and np.isclose(p.snr_db, snr_db):
                return p.pd
        raise DataError(f"no point for {detector} at {snr_db} dB")

    def point(self, detector: str, snr_db: float) -> CurvePoint:
        for p in self.points:
            if p.detector == detector and np.isclose(p.snr_db, snr_db):
                return p
        raise DataError(f"no point for {detector} at {snr_db} dB")


def wilson_interval(successes: int, total: int, z: float = WILSON_Z):
    """Wilson score interval for a binomial proportion."""
    if total < 1:
        raise ConfigError("total must be >= 1")
    if not 0 <= successes <= total:
        raise ConfigError("successes must lie in [0, total]")
    p = successes / total
    z2 = z * z
    denom = 1.0 + z2 / total
    center = (p + z2 / (2.0 * total)) / denom
    half = z * np.sqrt(p * (1.0 - p) / total + z2 / (4.0 * total * total)) / denom
    # at the boundaries the interval closes on 0 / 1 exactly; avoid roundoff
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == total else min(1.0, center + half)
    return lo, hi


def make_prior_set(
    radar: RadarConfig,
    pulse: PulseSpec,
    band: BreathingBand,
    prior_kind: str,
    delay: float,
    tau_f: float,
    k_los: float,
) -> PriorSet:
    """Breathing prior plus one shared channel prior per antenna."""
    if prior_kind not in PRIOR_KINDS:
        raise ConfigError(f"prior_kind must be one of {PRIOR_KINDS}")
    breathing = make_breathing_prior(band, radar.num_reps, radar.rep_interval)
    if prior_kind == "known-delay":
        channel = channel_prior_known_delay(delay, tau_f, k_los, radar, pulse)
    else:
        channel = channel_prior_gamma(delay, tau_f, radar, pulse)
    return PriorSet(breathing=breathing, channels=(channel,) * radar.num_antennas)


def build_priors(config: SweepConfig) -> PriorSet:
    return make_prior_set(
        config.radar,
        config.pulse,
        config.band,
        config.prior_kind,
        config.target.delay,
        config.tau_f,
        config.k_los,
    )


def _trial_rngs(master_seed: int, point_index: int, stream: int, trial_index: int):
    root = np.random.SeedSequence([master_seed, point_index, stream, trial_index])
    sim_seq, det_seq = root.spawn(2)
    return np.random.default_rng(sim_seq), np.random.default_rng(det_seq)


def _chunk_statistics(args):
    """Worker task: run a contiguous block of trials for one sweep point.

    Returns (start_index, {detector: scores}) with scores in trial order;
    a numerically failed variational fit scores -inf.
    """
    config, snr_db, point_index, stream, start, count, occupied = args
    priors = build_priors(config)
    cov_hf = forward_channel_covariance(
        config.target.delay,
        config.tau_f,
        config.k_los,
        config.radar.num_freq,
        config.radar.freq_spacing,
    )
    pulse_spectrum = synthesize_pulse(config.radar, config.pulse)
    fft_band = config.band if config.fft_band_restrict else None

    scores = {d: np.empty(count) for d in config.detectors}
    for j in range(count):
        trial = start + j
        rng_sim, rng_det = _trial_rngs(config.master_seed, point_index, stream, trial)
        breathing = sample_breathing(priors.breathing, config.amplitude_rms, rng_sim)
        channels = sample_channels(
            cov_hf, config.target, pulse_spectrum, config.radar, rng_sim
        )
        truth = GroundTruth(breathing=breathing, channels=channels)
        frames, _ = synthesize_measurement(
            truth,
            snr_db,
            rng_sim,
            config.radar,
            occupied=occupied,
            clutter_rms=config.clutter_rms,
        )
        stacked = remove_clutter(frames)
        for detector in config.detectors:
            if detector == "vmp":
                try:
                    state = run_inference(
                        stacked,
                        priors,
                        tol=config.vmp_tol,
                        max_iter=config.vmp_max_iter,
                        n_restarts=config.vmp_restarts,
                        rng=rng_det,
                    )
                    value = vmp_statistic_from_state(state, stacked, priors)
                except NumericalError:
                    value = float("-inf")
            elif detector == "ec":
                value = ec_statistic(stacked, priors)
            else:
                value = fft_statistic(
                    stacked, rep_interval=config.radar.rep_interval, band=fft_band
                )
            scores[detector][j] = value
    return start, scores


def _point_scores(config, executor, snr_db, point_index, stream, n_trials):
    """All trial statistics for one (point, stream), in trial order."""
    if executor is None:
        _, scores = _chunk_statistics(
            (config, snr_db, point_index, stream, 0, n_trials, stream == TRIAL_STREAM)
        )
        return scores
    bounds = np.linspace(0, n_trials, config.workers + 1).astype(int)
    jobs = [
        (config, snr_db, point_index, stream, int(lo), int(hi - lo), stream == TRIAL_STREAM)
        for lo, hi in zip(bounds[:-1], bounds[1:])
        if hi > lo
    ]
    out = {d: np.empty(n_trials) for d in config.detectors}
    for start, scores in executor.map(_chunk_statistics, jobs):
        for d, vals in scores.items():
            out[d][start : start + vals.size] = vals
    return out


def _split_valid(scores: np.ndarray):
    valid = np.isfinite(scores)
    return scores[valid], int(np.sum(~valid))


def _check_flag_rate(n_flagged: int, total: int, context: str):
    if n_flagged / total >= 0.01:
        raise NumericalError(
            f"{context}: {n_flagged}/{total} trials failed numerically"
        )


def run_calibration(config: SweepConfig):
    """Noise-only thresholds per detector: {detector: ThresholdTable}."""
    with _maybe_pool(config) as executor:
        gammas = {d: [] for d in config.detectors}
        for point_index, snr_db in enumerate(config.snr_grid_db):
            scores = _point_scores(
                config, executor, snr_db, point_index, CAL_STREAM, config.cal_trials
            )
            for d in config.detectors:
                finite, n_flagged = _split_valid(scores[d])
                _check_flag_rate(n_flagged, config.cal_trials, f"calibration {snr_db} dB")
                gammas[d].append(threshold_from_scores(finite, config.p_fa))
    snr = np.asarray(config.snr_grid_db)
    return {
        d: ThresholdTable(
            snr_db=snr,
            gamma=np.asarray(gammas[d]),
            target_pfa=config.p_fa,
            n_trials=config.cal_trials,
        )
        for d in config.detectors
    }


class _InlinePool:
    """Context manager standing in for a process pool when workers == 1."""

    def __enter__(self):
        return None

    def __exit__(self, *exc):
        return False


def _maybe_pool(config: SweepConfig):
    if config.workers == 1:
        return _InlinePool()
    return ProcessPoolExecutor(max_workers=config.workers)


def run_sweep(config: SweepConfig) -> DetectionCurve:
    """Calibrate per point, run occupied trials, estimate Pd with Wilson
    intervals. Fully deterministic given master_seed."""
    points = []
    with _maybe_pool(config) as executor:
        for point_index, snr_db in enumerate(config.snr_grid_db):
            cal_scores = _point_scores(
                config, executor, snr_db, point_index, CAL_STREAM, config.cal_trials
            )
            trial_scores = _point_scores(
                config, executor, snr_db, point_index, TRIAL_STREAM, config.trials_per_point
            )
            for d in config.detectors:
                finite_cal, cal_flagged = _split_valid(cal_scores[d])
                _check_flag_rate(cal_flagged, config.cal_trials, f"calibration {snr_db} dB")
                gamma = threshold_from_scores(finite_cal, config.p_fa)

                finite, n_flagged = _split_valid(trial_scores[d])
                _check_flag_rate(n_flagged, config.trials_per_point, f"trials {snr_db} dB")
                detections = int(np.sum(finite > gamma))
                n_valid = finite.size
                ci_lo, ci_hi = wilson_interval(detections, n_valid)
                points.append(
                    CurvePoint(
                        detector=d,
                        snr_db=float(snr_db),
                        pd=detections / n_valid,
                        ci_lo=ci_lo,
                        ci_hi=ci_hi,
                        n_trials=n_valid,
                        n_flagged=n_flagged,
                    )
                )
    return DetectionCurve(points=tuple(points))


CURVE_COLUMNS = ("detector", "snr_db", "pd", "ci_lo", "ci_hi", "n_trials", "n_flagged")


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def export_results(curve: DetectionCurve, path) -> None:
    """CSV, one row per (detector, snr) sorted by detector then snr."""
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CURVE_COLUMNS)
            for p in curve.points:
                writer.writerow(
                    [
                        p.detector,
                        _fmt(p.snr_db),
                        _fmt(p.pd),
                        _fmt(p.ci_lo),
                        _fmt(p.ci_hi),
                        str(p.n_trials),
                        str(p.n_flagged),
                    ]
                )
    except OSError as exc:
        raise DataError(f"cannot write results to {path}: {exc}") from exc


def read_results(path) -> DetectionCurve:
    """Parse a CSV produced by export_results."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if tuple(header or ()) != CURVE_COLUMNS:
                raise DataError(f"{path}: unexpected results header {header}")
            points = tuple(
                CurvePoint(
                    detector=row[0],
                    snr_db=float(row[1]),
                    pd=float(row[2]),
                    ci_lo=float(row[3]),
                    ci_hi=float(row[4]),
                    n_trials=int(row[5]),
                    n_flagged=int(row[6]),
                )
                for row in reader
            )
    except OSError as exc:
        raise DataError(f"cannot read results from {path}: {exc}") from exc
    return DetectionCurve(points=points)


THRESHOLD_COLUMNS = ("snr_db", "gamma", "p_fa", "n_trials")


def write_threshold_table(table: ThresholdTable, path) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(THRESHOLD_COLUMNS)
            for snr, gamma in zip(table.snr_db, table.gamma):
                writer.writerow(
                    [_fmt(snr), _fmt(gamma), _fmt(table.target_pfa), str(table.n_trials)]
                )
    except OSError as exc:
        raise DataError(f"cannot write thresholds to {path}: {exc}") from exc


def read_threshold_table(path) -> ThresholdTable:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if tuple(header or ()) != THRESHOLD_COLUMNS:
                raise DataError(f"{path}: unexpected threshold header {header}")
            rows = list(reader)
    except OSError as exc:
        raise DataError(f"cannot read thresholds from {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: threshold table has no rows")
    return ThresholdTable(
        snr_db=np.asarray([float(r[0]) for r in rows]),
        gamma=np.asarray([float(r[1]) for r in rows]),
        target_pfa=float(rows[0][2]),
        n_trials=int(rows[0][3]),
    )
