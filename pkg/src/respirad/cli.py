"""Command-line interface.

Subcommands: simulate, infer, detect, calibrate, sweep, ingest-info.
Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .config import PulseSpec, RadarConfig, SPEED_OF_LIGHT
from .detectors import (
    DETECTOR_KINDS,
    ec_statistic,
    fft_statistic,
    vmp_statistic,
)
from .errors import ConfigError, DataError, NumericalError
from .fileio import ingest, ingest_info, write_measurement
from .priors import BreathingBand, forward_channel_covariance, make_breathing_prior
from .signal import FrameSet, remove_clutter, synthesize_pulse
from .simulate import GroundTruth, TargetParams, sample_breathing, sample_channels, synthesize_measurement
from .sweep import (
    SweepConfig,
    export_results,
    make_prior_set,
    run_calibration,
    run_sweep,
    write_threshold_table,
)
from .vmp import run_inference

__all__ = ["main"]


def _parse_band(text: str) -> BreathingBand:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError("--band expects 'fmin,fmax' in Hz")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise ConfigError(f"--band values must be numbers: {text!r}") from exc
    return BreathingBand(f_min=lo, f_max=hi)


def _detector_list(choice: str):
    return DETECTOR_KINDS if choice == "all" else (choice,)


def _snr_grid(args) -> tuple:
    if args.snr_step <= 0:
        raise ConfigError("--snr-step must be positive")
    if args.snr_max < args.snr_min:
        raise ConfigError("--snr-max must be >= --snr-min")
    n = int(np.floor((args.snr_max - args.snr_min) / args.snr_step + 1e-9)) + 1
    return tuple(args.snr_min + i * args.snr_step for i in range(n))


def _radar_from_args(args, num_reps=None) -> RadarConfig:
    return RadarConfig(
        num_antennas=args.antennas,
        num_reps=RadarConfig.num_reps if num_reps is None else num_reps,
    )


def _target_from_args(args) -> TargetParams:
    return TargetParams(delay=args.range_m / SPEED_OF_LIGHT)


def _sweep_config(args, detectors) -> SweepConfig:
    return SweepConfig(
        snr_grid_db=_snr_grid(args),
        trials_per_point=getattr(args, "trials", 2000),
        cal_trials=args.cal_trials,
        p_fa=args.pfa,
        detectors=detectors,
        prior_kind=args.prior,
        radar=RadarConfig(num_antennas=args.antennas),
        band=_parse_band(args.band),
        target=_target_from_args(args),
        amplitude_rms=args.amplitude_rms,
        clutter_rms=args.clutter_rms,
        tau_f=args.tau_f,
        k_los=args.k_los,
        master_seed=args.seed,
        workers=args.workers,
        fft_band_restrict=args.fft_band_restrict,
    )


def _cmd_simulate(args) -> int:
    m_total = int(round(args.duration / RadarConfig.rep_interval))
    radar = _radar_from_args(args, num_reps=m_total)
    pulse = PulseSpec()
    band = _parse_band(args.band)
    target = _target_from_args(args)
    rng = np.random.default_rng(args.seed)

    breathing_prior = make_breathing_prior(band, radar.num_reps, radar.rep_interval)
    cov_hf = forward_channel_covariance(
        target.delay, args.tau_f, args.k_los, radar.num_freq, radar.freq_spacing
    )
    spectrum = synthesize_pulse(radar, pulse)
    breathing = sample_breathing(breathing_prior, args.amplitude_rms, rng)
    channels = sample_channels(cov_hf, target, spectrum, radar, rng)
    truth = GroundTruth(breathing=breathing, channels=channels)
    frames, lam = synthesize_measurement(
        truth,
        args.snr,
        rng,
        radar,
        occupied=not args.empty,
        clutter_rms=args.clutter_rms,
    )
    write_measurement(
        args.out,
        frames.frames,
        freq_spacing=radar.freq_spacing,
        carrier=radar.carrier,
        rep_interval=radar.rep_interval,
        device="simulator",
        occupied=not args.empty,
    )
    print(
        json.dumps(
            {
                "out": str(args.out),
                "occupied": not args.empty,
                "snr_db": args.snr,
                "noise_precision": lam,
                "num_reps_total": m_total,
            }
        )
    )
    return 0


def _load_window(args):
    header, config, windows = ingest(args.infile, window_seconds=args.window_seconds)
    if not 0 <= args.window < len(windows):
        raise DataError(
            f"window {args.window} out of range; file has {len(windows)} windows"
        )
    return header, config, windows[args.window]


def _priors_for_file(args, config):
    return make_prior_set(
        config,
        PulseSpec(),
        _parse_band(args.band),
        args.prior,
        args.range_m / SPEED_OF_LIGHT,
        args.tau_f,
        args.k_los,
    )


def _cmd_infer(args) -> int:
    _, config, frame_set = _load_window(args)
    priors = _priors_for_file(args, config)
    stacked = remove_clutter(frame_set)
    state = run_inference(stacked, priors, rng=np.random.default_rng(args.seed))
    trace = state.breathing_trace(priors)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["rep_index", "time_s", "displacement"])
            for m, value in enumerate(trace):
                writer.writerow(
                    [m, format(m * config.rep_interval, ".12g"), format(value, ".12g")]
                )
    if args.elbo_out:
        with open(args.elbo_out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "elbo"])
            for i, value in enumerate(state.elbo_trace, start=1):
                writer.writerow([i, format(value, ".12g")])
    print(
        json.dumps(
            {
                "lambda_hat": state.lambda_hat,
                "iterations": state.n_iter,
                "converged": state.converged,
                "flagged": state.flagged,
                "elbo": float(state.elbo_trace[-1]),
            }
        )
    )
    return 0


def _cmd_detect(args) -> int:
    _, config, frame_set = _load_window(args)
    priors = _priors_for_file(args, config)
    if args.inject_noise_rms > 0.0:
        rng = np.random.default_rng(args.seed)
        noise = (
            rng.standard_normal(frame_set.frames.shape)
            + 1j * rng.standard_normal(frame_set.frames.shape)
        ) * (args.inject_noise_rms / np.sqrt(2.0))
        frame_set = FrameSet(config, frame_set.frames + noise)
    stacked = remove_clutter(frame_set)
    band = _parse_band(args.band) if args.fft_band_restrict else None
    results = {}
    for detector in _detector_list(args.detector):
        if detector == "vmp":
            value = vmp_statistic(stacked, priors, rng=np.random.default_rng(args.seed))
        elif detector == "ec":
            value = ec_statistic(stacked, priors)
        else:
            value = fft_statistic(stacked, rep_interval=config.rep_interval, band=band)
        results[detector] = {
            "statistic": value,
            "threshold": args.threshold,
            "decision": bool(value > args.threshold),
        }
    print(json.dumps(results))
    return 0


def _with_detector_suffix(path: str, detector: str) -> str:
    if "." in path.rsplit("/", 1)[-1]:
        stem, ext = path.rsplit(".", 1)
        return f"{stem}.{detector}.{ext}"
    return f"{path}.{detector}"


def _cmd_calibrate(args) -> int:
    detectors = _detector_list(args.detector)
    config = _sweep_config(args, detectors)
    tables = run_calibration(config)
    multi = len(detectors) > 1
    written = {}
    for detector, table in tables.items():
        path = _with_detector_suffix(args.out, detector) if multi else args.out
        write_threshold_table(table, path)
        written[detector] = str(path)
    print(json.dumps({"thresholds": written, "p_fa": args.pfa}))
    return 0


def _cmd_sweep(args) -> int:
    detectors = _detector_list(args.detector)
    config = _sweep_config(args, detectors)
    curve = run_sweep(config)
    export_results(curve, args.out)
    print(
        json.dumps(
            {
                "out": str(args.out),
                "points": len(curve.points),
                "detectors": list(detectors),
                "snr_grid_db": list(config.snr_grid_db),
            }
        )
    )
    return 0


def _cmd_ingest_info(args) -> int:
    info = ingest_info(args.infile, window_seconds=args.window_seconds)
    print(json.dumps(info, indent=2))
    return 0


def _add_common(parser, *, band=True, prior=True, channel=True):
    parser.add_argument("--seed", type=int, default=0, help="master RNG seed")
    if band:
        parser.add_argument(
            "--band", default="0.15,1.0", help="breathing band 'fmin,fmax' in Hz"
        )
    if prior:
        parser.add_argument(
            "--prior",
            choices=("known-delay", "gamma"),
            default="gamma",
            help="channel prior family",
        )
    if channel:
        parser.add_argument(
            "--range-m", type=float, default=1.0, help="target distance in meters"
        )
        parser.add_argument(
            "--tau-f", type=float, default=20e-9, help="multipath decay constant (s)"
        )
        parser.add_argument(
            "--k-los", type=float, default=0.75, help="LoS-to-diffuse power ratio"
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="respirad",
        description="Presence detection from respiratory motion in UWB radar frames",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="emit a synthetic measurement file")
    _add_common(p, prior=False)
    p.add_argument("--snr", type=float, default=-20.0, help="target SNR in dB")
    p.add_argument("--antennas", type=int, default=1)
    p.add_argument("--duration", type=float, default=10.0, help="seconds of data")
    p.add_argument("--amplitude-rms", type=float, default=0.005)
    p.add_argument("--clutter-rms", type=float, default=0.0)
    p.add_argument("--empty", action="store_true", help="no target, noise only")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("infer", help="run variational inference on one window")
    _add_common(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--window", type=int, default=0)
    p.add_argument("--window-seconds", type=float, default=10.0)
    p.add_argument("--out", default="", help="CSV for the displacement trace")
    p.add_argument("--elbo-out", default="", help="CSV for the ELBO trace")
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("detect", help="single-window decision")
    _add_common(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--window", type=int, default=0)
    p.add_argument("--window-seconds", type=float, default=10.0)
    p.add_argument("--detector", choices=DETECTOR_KINDS + ("all",), default="vmp")
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument(
        "--fft-band-restrict",
        action=argparse.BooleanOptionalAction,
        default=True,
    )
    p.add_argument(
        "--inject-noise-rms",
        type=float,
        default=0.0,
        help="add complex white noise of this per-sample RMS before detection",
    )
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("calibrate", help="emit per-SNR thresholds as CSV")
    _add_common(p)
    p.add_argument("--snr-min", type=float, required=True)
    p.add_argument("--snr-max", type=float, required=True)
    p.add_argument("--snr-step", type=float, default=2.0)
    p.add_argument("--pfa", type=float, default=0.01)
    p.add_argument("--trials", dest="cal_trials", type=int, default=5000)
    p.add_argument("--detector", choices=DETECTOR_KINDS + ("all",), default="all")
    p.add_argument("--antennas", type=int, default=1)
    p.add_argument("--amplitude-rms", type=float, default=0.005)
    p.add_argument("--clutter-rms", type=float, default=0.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument(
        "--fft-band-restrict",
        action=argparse.BooleanOptionalAction,
        default=True,
    )
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("sweep", help="full Monte Carlo detection sweep")
    _add_common(p)
    p.add_argument("--snr-min", type=float, required=True)
    p.add_argument("--snr-max", type=float, required=True)
    p.add_argument("--snr-step", type=float, default=2.0)
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--cal-trials", dest="cal_trials", type=int, default=5000)
    p.add_argument("--pfa", type=float, default=0.01)
    p.add_argument("--detector", choices=DETECTOR_KINDS + ("all",), default="all")
    p.add_argument("--antennas", type=int, default=1)
    p.add_argument("--amplitude-rms", type=float, default=0.005)
    p.add_argument("--clutter-rms", type=float, default=0.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument(
        "--fft-band-restrict",
        action=argparse.BooleanOptionalAction,
        default=True,
    )
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("ingest-info", help="validate and summarize a file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--window-seconds", type=float, default=10.0)
    p.set_defaults(func=_cmd_ingest_info)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
