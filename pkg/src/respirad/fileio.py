"""Measurement file format and windowed ingestion.

A measurement file is one UTF-8 JSON header line terminated by a newline,
followed by a raw little-endian complex128 payload of shape
(M_total, K, N) in C order (repetition-major, antenna, frequency bin).
The header carries the dimensions and the acquisition parameters needed
to rebuild a RadarConfig for each analysis window.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .config import RadarConfig
from .errors import DataError
from .signal import FrameSet

__all__ = [
    "MeasurementHeader",
    "write_measurement",
    "read_measurement",
    "ingest",
    "ingest_info",
]

SCHEMA_VERSION = 1
MAX_HEADER_BYTES = 65536
BYTES_PER_SAMPLE = 16

_REQUIRED_FIELDS = {
    "schema": int,
    "num_antennas": int,
    "num_freq": int,
    "num_reps_total": int,
    "freq_spacing": (int, float),
    "carrier": (int, float),
    "rep_interval": (int, float),
}


@dataclass(frozen=True)
class MeasurementHeader:
    """Parsed and validated header of a measurement file."""

    num_antennas: int
    num_freq: int
    num_reps_total: int
    freq_spacing: float
    carrier: float
    rep_interval: float
    device: str = ""
    occupied: bool | None = None

    @property
    def payload_bytes(self) -> int:
        return (
            self.num_antennas * self.num_freq * self.num_reps_total * BYTES_PER_SAMPLE
        )

    def window_config(self, num_reps: int) -> RadarConfig:
        return RadarConfig(
            num_antennas=self.num_antennas,
            num_freq=self.num_freq,
            num_reps=num_reps,
            freq_spacing=self.freq_spacing,
            carrier=self.carrier,
            rep_interval=self.rep_interval,
        )


def write_measurement(
    path,
    frames: np.ndarray,
    freq_spacing: float,
    carrier: float,
    rep_interval: float,
    device: str = "",
    occupied: bool | None = None,
) -> None:
    """Write frames of shape (K, M_total, N) with their acquisition header."""
    frames = np.asarray(frames, dtype=np.complex128)
    if frames.ndim != 3:
        raise DataError("frames must have shape (K, M_total, N)")
    n_ant, m_total, n_freq = frames.shape
    header = {
        "schema": SCHEMA_VERSION,
        "num_antennas": n_ant,
        "num_freq": n_freq,
        "num_reps_total": m_total,
        "freq_spacing": freq_spacing,
        "carrier": carrier,
        "rep_interval": rep_interval,
        "device": device,
    }
    if occupied is not None:
        header["occupied"] = bool(occupied)
    payload = np.ascontiguousarray(frames.transpose(1, 0, 2)).astype("<c16")
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(payload.tobytes())


def _parse_header(raw: bytes, path) -> MeasurementHeader:
    try:
        obj = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: malformed header (bytes 0..{len(raw)}): {exc}") from exc
    if not isinstance(obj, dict):
        raise DataError(f"{path}: header is not a JSON object")
    for name, kind in _REQUIRED_FIELDS.items():
        if name not in obj:
            raise DataError(f"{path}: header missing field {name!r}")
        if not isinstance(obj[name], kind) or isinstance(obj[name], bool):
            raise DataError(f"{path}: header field {name!r} has wrong type")
    if obj["schema"] != SCHEMA_VERSION:
        raise DataError(f"{path}: unsupported schema version {obj['schema']}")
    if min(obj["num_antennas"], obj["num_freq"], obj["num_reps_total"]) < 1:
        raise DataError(f"{path}: header dimensions must be positive")
    if min(obj["freq_spacing"], obj["carrier"], obj["rep_interval"]) <= 0:
        raise DataError(f"{path}: header parameters must be positive")
    occupied = obj.get("occupied")
    if occupied is not None and not isinstance(occupied, bool):
        raise DataError(f"{path}: 'occupied' must be a boolean when present")
    device = obj.get("device", "")
    if not isinstance(device, str):
        raise DataError(f"{path}: 'device' must be a string")
    return MeasurementHeader(
        num_antennas=obj["num_antennas"],
        num_freq=obj["num_freq"],
        num_reps_total=obj["num_reps_total"],
        freq_spacing=float(obj["freq_spacing"]),
        carrier=float(obj["carrier"]),
        rep_interval=float(obj["rep_interval"]),
        device=device,
        occupied=occupied,
    )


def read_measurement(path):
    """Return (MeasurementHeader, frames (K, M_total, N) complex128)."""
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise DataError(f"cannot read measurement from {path}: {exc}") from exc
    with fh:
        prefix = fh.read(MAX_HEADER_BYTES)
        newline = prefix.find(b"\n")
        if newline < 0:
            raise DataError(
                f"{path}: no header line within the first {MAX_HEADER_BYTES} bytes"
            )
        header = _parse_header(prefix[:newline], path)
        payload_start = newline + 1
        size = os.fstat(fh.fileno()).st_size
        expected = payload_start + header.payload_bytes
        if size < expected:
            raise DataError(
                f"{path}: payload truncated at byte {size}, expected {expected}"
            )
        if size > expected:
            raise DataError(
                f"{path}: trailing bytes after declared payload (byte {expected})"
            )
        fh.seek(payload_start)
        payload = fh.read(header.payload_bytes)
    data = np.frombuffer(payload, dtype="<c16").astype(np.complex128)
    frames = data.reshape(header.num_reps_total, header.num_antennas, header.num_freq)
    if not np.all(np.isfinite(frames.view(np.float64))):
        raise DataError(f"{path}: payload contains non-finite values")
    return header, np.ascontiguousarray(frames.transpose(1, 0, 2))


def ingest(path, window_seconds: float = 10.0):
    """Split a measurement into FrameSets of round(window_seconds / T_rep)
    repetitions each; a trailing partial window is discarded.

    Returns (MeasurementHeader, window RadarConfig, list[FrameSet]).
    """
    if window_seconds <= 0.0:
        raise DataError("window_seconds must be positive")
    header, frames = read_measurement(path)
    m_window = int(round(window_seconds / header.rep_interval))
    if m_window < 2:
        raise DataError(
            f"{path}: window of {window_seconds} s holds fewer than 2 repetitions"
        )
    n_windows = header.num_reps_total // m_window
    if n_windows == 0:
        raise DataError(
            f"{path}: file holds {header.num_reps_total} repetitions, "
            f"one window needs {m_window}"
        )
    config = header.window_config(m_window)
    windows = [
        FrameSet(config, frames[:, i * m_window : (i + 1) * m_window, :])
        for i in range(n_windows)
    ]
    return header, config, windows


def ingest_info(path, window_seconds: float = 10.0) -> dict:
    """Validate a file and summarize its contents without keeping the data."""
    header, frames = read_measurement(path)
    m_window = int(round(window_seconds / header.rep_interval))
    return {
        "num_antennas": header.num_antennas,
        "num_freq": header.num_freq,
        "num_reps_total": header.num_reps_total,
        "freq_spacing": header.freq_spacing,
        "carrier": header.carrier,
        "rep_interval": header.rep_interval,
        "device": header.device,
        "occupied": header.occupied,
        "duration_seconds": header.num_reps_total * header.rep_interval,
        "windows": header.num_reps_total // max(m_window, 1),
        "window_reps": m_window,
        "mean_power": float(np.mean(np.abs(frames) ** 2)),
    }
