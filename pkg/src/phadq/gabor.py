"""Discrete Gabor transform with a tight Hann window.

The transform of a real signal ``x`` of (padded) length ``L`` is the complex
grid

    c[m, n] = sum_l x[l] g[l - n a] exp(-2 pi i m l / M)

with periodic indexing, ``M`` frequency channels and hop ``a``.  This is the
frequency-invariant phase convention; ``phase="timeinv"`` drops the
``exp(-2 pi i m n a / M)`` modulation and references each frame's phase to
its own start instead.

Grids are returned as ``(M, N)`` arrays in Fortran order (each frame's
spectrum is contiguous); operators downstream preserve that layout.

Only the painless case ``win_len <= M`` is supported.  There the frame
operator is diagonal, so a single scalar rescaling of the Hann window at 75 %
overlap makes the frame Parseval-tight.
"""

from __future__ import annotations

import csv
import functools
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.fft as sp_fft

__all__ = [
    "GaborParams",
    "Window",
    "GaborFrame",
    "make_hann",
    "make_hann_derivative",
    "dgt",
    "dgt_adjoint",
    "frame_bounds",
    "pad_signal",
    "operator_norm",
    "dump_magnitudes_csv",
]

PHASE_CONVENTIONS = ("freqinv", "timeinv")


@dataclass(frozen=True)
class GaborParams:
    """Window length, hop and channel count of a DGT.

    ``padded_len`` is 0 until bound to a signal with :meth:`with_length`.
    """

    win_len: int = 8192
    hop: int = 2048
    channels: int = 16384
    padded_len: int = 0
    phase: str = "freqinv"

    def __post_init__(self):
        if self.win_len < 2 or self.hop < 1 or self.channels < 1:
            raise ValueError(f"invalid Gabor parameters: {self}")
        if self.phase not in PHASE_CONVENTIONS:
            raise ValueError(f"unknown phase convention {self.phase!r}")
        if self.padded_len and (self.padded_len % self.hop or self.padded_len % self.channels):
            raise ValueError("hop and channel count must both divide padded_len")

    @classmethod
    def from_overlap(cls, win_len: int, overlap: float, channels: int, **kw) -> "GaborParams":
        hop = int(round(win_len * (1.0 - overlap)))
        return cls(win_len=win_len, hop=hop, channels=channels, **kw)

    @property
    def n_frames(self) -> int:
        return self.padded_len // self.hop

    @property
    def shape(self) -> tuple[int, int]:
        return (self.channels, self.n_frames)

    @property
    def painless(self) -> bool:
        return self.win_len <= self.channels

    def with_length(self, length: int) -> "GaborParams":
        """Bind to a signal of ``length`` samples.

        The padded length is a multiple of both the hop and ``M``; only then
        does the frame-wise modulation agree with ``exp(-2 pi i m l / M)``
        on frames that wrap around the end of the signal.
        """
        if length < 1:
            raise ValueError("signal length must be positive")
        block = math.lcm(self.hop, self.channels)
        padded = max(length, self.win_len)
        padded = -(-padded // block) * block
        return replace(self, padded_len=padded)


@dataclass(frozen=True)
class Window:
    samples: np.ndarray
    kind: str = "hann"
    # multiplicative factor applied on top of the closed-form samples
    scale: float = 1.0

    def __len__(self):
        return len(self.samples)


def _check_win_len(win_len):
    if win_len < 2 or win_len % 2:
        raise ValueError(f"window length must be even and >= 2, got {win_len}")


def _tight_scale(win_len, hop, channels):
    k = np.arange(win_len)
    g = 0.5 * (1.0 - np.cos(2.0 * np.pi * k / win_len))
    overlap = _overlap_sum(g, hop)
    if np.ptp(overlap) > 1e-12 * overlap.max():
        warnings.warn("Hann overlap sum is not constant for this hop; frame is not tight")
    return 1.0 / np.sqrt(channels * overlap.mean())


def make_hann(win_len: int, hop: int | None = None, channels: int | None = None) -> Window:
    """Periodic Hann window ``0.5 (1 - cos(2 pi k / win_len))``.

    With ``hop`` and ``channels`` given, the window is scaled by a constant so
    that the resulting Gabor frame is Parseval-tight.
    """
    _check_win_len(win_len)
    k = np.arange(win_len)
    g = 0.5 * (1.0 - np.cos(2.0 * np.pi * k / win_len))
    scale = 1.0
    if hop is not None and channels is not None:
        scale = _tight_scale(win_len, hop, channels)
    return Window(g * scale, "hann", scale)


def make_hann_derivative(win_len: int, hop: int | None = None, channels: int | None = None) -> Window:
    """Sampled time derivative (per sample) of the periodic Hann window.

    Carries the same scale as :func:`make_hann` for identical arguments, so the
    ratio of the two transforms is scale free.
    """
    _check_win_len(win_len)
    k = np.arange(win_len)
    dg = (np.pi / win_len) * np.sin(2.0 * np.pi * k / win_len)
    scale = 1.0
    if hop is not None and channels is not None:
        scale = _tight_scale(win_len, hop, channels)
    return Window(dg * scale, "hann_derivative", scale)


def _overlap_sum(g, hop):
    """Hop-periodised sum of the squared window, one period of length ``hop``."""
    sq = np.zeros(hop * (-(-len(g) // hop)))
    sq[: len(g)] = g**2
    return sq.reshape(-1, hop).sum(axis=0)


@functools.lru_cache(maxsize=8)
def _frame_indices(p: GaborParams):
    starts = np.arange(p.n_frames) * p.hop
    idx = (starts[:, None] + np.arange(p.win_len)[None, :]) % p.padded_len
    idx.flags.writeable = False
    return idx


@functools.lru_cache(maxsize=8)
def _modulation(p: GaborParams):
    """``exp(-2 pi i m n a / M)`` laid out frame-major, shape ``(N, M)``."""
    # only M distinct values; index a table by (m n a) mod M to keep the phase exact
    n = np.arange(p.n_frames)[:, None]
    m = np.arange(p.channels)[None, :]
    table = np.exp(-2j * np.pi * np.arange(p.channels) / p.channels)
    out = table[(m * n * p.hop) % p.channels]
    out.flags.writeable = False
    return out


def _check(p: GaborParams, g: np.ndarray):
    if not p.padded_len:
        raise ValueError("GaborParams not bound to a signal length; call with_length()")
    if len(g) != p.win_len:
        raise ValueError(f"window has {len(g)} samples, expected {p.win_len}")
    if not p.painless:
        raise ValueError("window longer than the number of channels is not supported")


def dgt(x: np.ndarray, p: GaborParams, g: Window | np.ndarray) -> np.ndarray:
    """Analysis: real signal of length ``p.padded_len`` to an ``M x N`` complex grid."""
    g = np.asarray(getattr(g, "samples", g))
    _check(p, g)
    x = np.asarray(x)
    if x.shape != (p.padded_len,):
        raise ValueError(f"signal has shape {x.shape}, expected ({p.padded_len},)")
    frames = x[_frame_indices(p)] * g
    c = sp_fft.fft(frames, n=p.channels, axis=1)
    if p.phase == "freqinv":
        c *= _modulation(p)
    # frame-major storage, so the (M, N) view is Fortran-ordered
    return c.T


def dgt_adjoint(c: np.ndarray, p: GaborParams, g: Window | np.ndarray) -> np.ndarray:
    """Synthesis: exact adjoint of :func:`dgt` with respect to ``Re <., .>``.

    The signal domain is real, so only the real part of the complex synthesis
    is returned.
    """
    g = np.asarray(getattr(g, "samples", g))
    _check(p, g)
    if c.shape != p.shape:
        raise ValueError(f"grid has shape {c.shape}, expected {p.shape}")
    c = c.T
    if p.phase == "freqinv":
        c = c * np.conj(_modulation(p))
    # adjoint of an unnormalised length-M DFT is M * ifft
    frames = sp_fft.ifft(c, axis=1)[:, : p.win_len].real * p.channels
    frames *= g
    return np.bincount(
        _frame_indices(p).ravel(), weights=frames.ravel(), minlength=p.padded_len
    )


def frame_bounds(p: GaborParams, g: Window | np.ndarray) -> tuple[float, float]:
    """Lower and upper frame bounds in the painless case.

    The frame operator is diagonal with entries ``M * sum_n g[l - n a]^2``;
    its extreme values are the bounds.  ``A == 0`` means the system is not a
    frame and triggers a warning.
    """
    g = np.asarray(getattr(g, "samples", g))
    if not p.painless:
        raise ValueError("frame bounds are only available in the painless case")
    diag = p.channels * _overlap_sum(g, p.hop)
    lo, hi = float(diag.min()), float(diag.max())
    if lo <= 0.0:
        warnings.warn("lower frame bound is zero: not a frame")
    return lo, hi


def pad_signal(x: np.ndarray, p: GaborParams) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if len(x) > p.padded_len:
        raise ValueError("signal longer than padded length")
    out = np.zeros(p.padded_len)
    out[: len(x)] = x
    return out


@dataclass(frozen=True)
class GaborFrame:
    """Bound parameters plus the tight window and its derivative."""

    params: GaborParams
    window: Window = field(repr=False)
    window_deriv: Window = field(repr=False)

    @classmethod
    def build(cls, params: GaborParams, length: int | None = None) -> "GaborFrame":
        if length is not None:
            params = params.with_length(length)
        args = (params.win_len, params.hop, params.channels)
        return cls(params, make_hann(*args), make_hann_derivative(*args))

    def analyze(self, x):
        return dgt(x, self.params, self.window)

    def synthesize(self, c):
        return dgt_adjoint(c, self.params, self.window)


def operator_norm(apply, apply_adjoint, shape, n_iter=100, seed=0, dtype=float):
    """Estimate ``||A||`` by power iteration on ``A* A``."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(shape)
    if np.issubdtype(dtype, np.complexfloating):
        v = v + 1j * rng.standard_normal(shape)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(n_iter):
        w = apply_adjoint(apply(v))
        est = np.linalg.norm(w)
        v = w / est
    return float(np.sqrt(est))


def dump_magnitudes_csv(c: np.ndarray, path: str | Path) -> None:
    """Write ``m,n,|c|`` rows for inspection."""
    mag = np.abs(c)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "n", "magnitude"])
        for m, n in np.ndindex(mag.shape):
            w.writerow([m, n, repr(float(mag[m, n]))])
