"""Presence detection from respiratory chest motion in UWB radar frames.

A stepped-frequency multistatic radar observes a breathing person as a
rank-one cross term between a real motion trace and per-antenna complex
channels, buried in noise of unknown level. This package provides the
variational inference engine for that model, an evidence-based detector
with two classical baselines, a physics-grounded simulator, threshold
calibration, and a Monte Carlo sweep harness with file I/O and a CLI.
"""

from .config import PulseSpec, RadarConfig, SPEED_OF_LIGHT
from .detectors import (
    DETECTOR_KINDS,
    DetectionResult,
    ThresholdTable,
    calibrate_threshold,
    ec_statistic,
    fft_delay_doppler_power,
    fft_statistic,
    threshold_from_scores,
    vmp_statistic,
    vmp_statistic_from_state,
)
from .errors import ConfigError, DataError, NumericalError
from .fileio import (
    MeasurementHeader,
    ingest,
    ingest_info,
    read_measurement,
    write_measurement,
)
from .priors import (
    BreathingBand,
    BreathingPrior,
    ChannelPrior,
    PriorSet,
    breathing_autocorrelation,
    breathing_covariance,
    channel_prior_gamma,
    channel_prior_known_delay,
    eigen_reduce,
    forward_channel_covariance,
    gamma_fb_covariance,
    make_breathing_prior,
)
from .signal import (
    FrameSet,
    StackedSignal,
    raised_cosine_magnitude,
    remove_clutter,
    synthesize_pulse,
)
from .simulate import (
    GroundTruth,
    TargetParams,
    sample_breathing,
    sample_channels,
    synthesize_measurement,
)
from .sweep import (
    CurvePoint,
    DetectionCurve,
    SweepConfig,
    build_priors,
    export_results,
    make_prior_set,
    read_results,
    read_threshold_table,
    run_calibration,
    run_sweep,
    wilson_interval,
    write_threshold_table,
)
from .vmp import (
    NullFit,
    VmpState,
    compute_elbo,
    init_state,
    null_model_fit,
    prior_log_normalizer,
    run_inference,
    update_iteration,
)

__version__ = "0.1.0"

__all__ = [
    "BreathingBand",
    "BreathingPrior",
    "ChannelPrior",
    "ConfigError",
    "CurvePoint",
    "DETECTOR_KINDS",
    "DataError",
    "DetectionCurve",
    "DetectionResult",
    "FrameSet",
    "GroundTruth",
    "MeasurementHeader",
    "NullFit",
    "NumericalError",
    "PriorSet",
    "PulseSpec",
    "RadarConfig",
    "SPEED_OF_LIGHT",
    "StackedSignal",
    "SweepConfig",
    "TargetParams",
    "ThresholdTable",
    "VmpState",
    "breathing_autocorrelation",
    "breathing_covariance",
    "build_priors",
    "calibrate_threshold",
    "channel_prior_gamma",
    "channel_prior_known_delay",
    "compute_elbo",
    "ec_statistic",
    "eigen_reduce",
    "export_results",
    "fft_delay_doppler_power",
    "fft_statistic",
    "forward_channel_covariance",
    "gamma_fb_covariance",
    "ingest",
    "ingest_info",
    "init_state",
    "make_breathing_prior",
    "make_prior_set",
    "null_model_fit",
    "prior_log_normalizer",
    "raised_cosine_magnitude",
    "read_measurement",
    "read_results",
    "read_threshold_table",
    "remove_clutter",
    "run_calibration",
    "run_inference",
    "run_sweep",
    "sample_breathing",
    "sample_channels",
    "synthesize_measurement",
    "synthesize_pulse",
    "threshold_from_scores",
    "update_iteration",
    "vmp_statistic",
    "vmp_statistic_from_state",
    "wilson_interval",
    "write_measurement",
    "write_threshold_table",
]
