"""Mono WAV input/output and the preprocessing applied before quantization."""

from __future__ import annotations

import logging
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

__all__ = ["Signal", "load_wav", "save_wav", "peak_normalize", "truncate", "BIT_DEPTHS"]

log = logging.getLogger(__name__)

# "16", "24", "32" are PCM integer, "f32"/"f64" IEEE float
BIT_DEPTHS = ("16", "24", "32", "f32", "f64")


@dataclass(frozen=True)
class Signal:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64)
        if x.ndim != 1:
            raise ValueError("Signal is mono; pass a 1-D array")
        if x.size == 0:
            raise ValueError("empty signal")
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite samples")
        object.__setattr__(self, "samples", x)

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def load_wav(path: str | Path) -> Signal:
    """Read the first channel of a PCM or float WAV file as float64 in [-1, 1]."""
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except Exception as exc:  # scipy raises ValueError for many encodings
        raise ValueError(f"cannot read {path}: {exc}") from exc
    if data.ndim == 2:
        data = data[:, 0]
    if data.size == 0:
        raise ValueError(f"{path}: empty signal")
    if data.dtype == np.int16:
        x = data / 2.0**15
    elif data.dtype == np.int32:
        # scipy left-justifies 24-bit PCM into int32, so one scale serves both
        x = data / 2.0**31
    elif data.dtype in (np.float32, np.float64):
        x = data.astype(np.float64)
    else:
        raise ValueError(f"{path}: unsupported sample format {data.dtype}")
    return Signal(np.asarray(x, dtype=np.float64), int(rate))


def _write_pcm24(path, x, rate):
    ints = np.round(x * 2.0**23).clip(-(2**23), 2**23 - 1).astype("<i4")
    raw = ints.view(np.uint8).reshape(-1, 4)[:, :3].tobytes()
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(3)
        fh.setframerate(rate)
        fh.writeframes(raw)


def save_wav(s: Signal, path: str | Path, bit_depth: str = "f64") -> None:
    """Write a mono WAV file.

    Samples outside [-1, 1] are clipped with a warning.  Integer depths round
    to the nearest code, so the round-trip error is at most half an LSB.
    """
    bit_depth = str(bit_depth)
    if bit_depth not in BIT_DEPTHS:
        raise ValueError(f"bit depth must be one of {BIT_DEPTHS}")
    x = s.samples
    if np.any(np.abs(x) > 1.0):
        log.warning("clipping %d samples outside [-1, 1]", int(np.sum(np.abs(x) > 1.0)))
        x = np.clip(x, -1.0, 1.0)
    if bit_depth == "f64":
        wavfile.write(path, s.sample_rate, x.astype(np.float64))
    elif bit_depth == "f32":
        wavfile.write(path, s.sample_rate, x.astype(np.float32))
    elif bit_depth == "16":
        wavfile.write(path, s.sample_rate, np.round(x * 2.0**15).clip(-(2**15), 2**15 - 1).astype(np.int16))
    elif bit_depth == "32":
        wavfile.write(path, s.sample_rate, np.round(x * 2.0**31).clip(-(2**31), 2**31 - 1).astype(np.int32))
    else:
        _write_pcm24(path, x, s.sample_rate)


def peak_normalize(s: Signal) -> tuple[Signal, float]:
    """Scale to unit peak; returns the signal and the applied gain."""
    peak = np.max(np.abs(s.samples))
    if peak == 0.0:
        return s, 1.0
    # divide rather than multiply by 1/peak so the peak maps to exactly 1.0
    return Signal(s.samples / peak, s.sample_rate), 1.0 / peak


def truncate(s: Signal, seconds: float) -> Signal:
    """Keep the first ``floor(seconds * rate)`` samples."""
    if not seconds > 0:
        raise ValueError("duration must be positive")
    n = int(np.floor(seconds * s.sample_rate))
    if n >= len(s):
        return s
    return Signal(s.samples[:n], s.sample_rate)
