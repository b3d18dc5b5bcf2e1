"""Instantaneous frequency, phase correction and the time-difference operator.

Grids are plain complex ``numpy`` arrays of shape ``(M, N)``.  The
instantaneous frequency ``omega`` is measured in channels (cycles per ``M``
samples); under the frequency-invariant DGT it comes out as the deviation of
the local frequency from the channel centre.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .gabor import GaborFrame, GaborParams, Window, dgt, dgt_adjoint, pad_signal

__all__ = [
    "if_scale_candidates",
    "CalibrationError",
    "PhaseCorrector",
    "estimate_if",
    "calibrate_if_scaling",
    "apply_phase_correction",
    "time_diff",
    "time_diff_adjoint",
    "analysis_operator",
    "analysis_adjoint",
    "penalty_ratio",
    "dump_omega_csv",
]

STATIONARITY_BOUND = 0.05


def if_scale_candidates(channels: int) -> dict[str, float]:
    """Unit conversions tried by :func:`calibrate_if_scaling`."""
    return {
        "1": 1.0,
        "M/(2pi)": channels / (2.0 * np.pi),
        "1/(2pi)": 1.0 / (2.0 * np.pi),
        "M": float(channels),
    }


class CalibrationError(RuntimeError):
    """No candidate scale makes a pure tone phase-stationary."""


def estimate_if(
    s: np.ndarray,
    p: GaborParams,
    g: Window,
    g_deriv: Window,
    scale: float,
    eps: float = 1e-10,
) -> np.ndarray:
    """Instantaneous frequency from the derivative-window quotient.

    ``omega = -scale * Im(G_{g'} s / G_g s)``.  Bins whose magnitude is below
    ``eps`` times the grid maximum get ``omega = 0``; an all-zero signal
    therefore yields an all-zero grid.
    """
    if len(g) != len(g_deriv):
        raise ValueError("window and derivative window differ in length")
    if eps <= 0:
        raise ValueError("eps must be positive")
    s = np.asarray(s, dtype=float)
    if len(s) != p.padded_len:
        s = pad_signal(s, p)
    c = dgt(s, p, g)
    mag = np.abs(c)
    omega = np.zeros(c.shape)
    peak = mag.max()
    if peak == 0.0:
        return omega
    keep = mag >= eps * peak
    cd = dgt(s, p, g_deriv)
    omega[keep] = -scale * np.imag(cd[keep] / c[keep])
    return omega


@dataclass(frozen=True)
class PhaseCorrector:
    """Cumulative phase ``2 pi a sum_{t<n} omega[m, t] / M`` for a fixed omega.

    The unit-modulus factors are computed once, since omega stays fixed for
    the whole inner solver loop.
    """

    cumulative_phase: np.ndarray
    factors: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        factors = np.asfortranarray(np.exp(-1j * self.cumulative_phase))
        object.__setattr__(self, "factors", factors)

    @classmethod
    def from_omega(cls, omega: np.ndarray, p: GaborParams) -> "PhaseCorrector":
        cum = np.zeros(omega.shape)
        cum[:, 1:] = np.cumsum(omega[:, :-1], axis=1)
        cum *= 2.0 * np.pi * p.hop / p.channels
        return cls(cum)


def apply_phase_correction(c: np.ndarray, pc: PhaseCorrector, adjoint: bool = False) -> np.ndarray:
    if c.shape != pc.cumulative_phase.shape:
        raise ValueError(f"grid shape {c.shape} does not match corrector {pc.cumulative_phase.shape}")
    f = pc.factors
    return c * (np.conj(f) if adjoint else f)


def time_diff(c: np.ndarray) -> np.ndarray:
    """``out[m, n] = c[m, n] - c[m, n + 1]``, no wrap-around."""
    if c.ndim != 2 or c.shape[1] < 2:
        raise ValueError("time difference needs at least two frames")
    return c[:, :-1] - c[:, 1:]


def time_diff_adjoint(d: np.ndarray) -> np.ndarray:
    if d.ndim != 2 or d.shape[1] < 1:
        raise ValueError("invalid difference grid")
    out = np.zeros((d.shape[0], d.shape[1] + 1), dtype=d.dtype, order="F")
    out[:, :-1] += d
    out[:, 1:] -= d
    return out


def analysis_operator(x: np.ndarray, pc: PhaseCorrector, p: GaborParams, g: Window) -> np.ndarray:
    """``D R G x``."""
    return time_diff(apply_phase_correction(dgt(x, p, g), pc))


def analysis_adjoint(d: np.ndarray, pc: PhaseCorrector, p: GaborParams, g: Window) -> np.ndarray:
    """``G* R* D* d``."""
    return dgt_adjoint(apply_phase_correction(time_diff_adjoint(d), pc, adjoint=True), p, g)


def penalty_ratio(x: np.ndarray, omega: np.ndarray, frame: GaborFrame) -> float:
    """``||D R G x||_1 / ||D G x||_1``; small for phase-stationary content."""
    p = frame.params
    c = frame.analyze(x)
    pc = PhaseCorrector.from_omega(omega, p)
    num = np.abs(time_diff(apply_phase_correction(c, pc))).sum()
    den = np.abs(time_diff(c)).sum()
    return float(num / den)


def _calibration_signal(p: GaborParams, amplitude: float):
    M = p.channels
    # the tone must be periodic over the padded length, so use a multiple of lcm(M, hop)
    period = np.lcm(M, p.hop)
    length = period * max(1, -(-4 * p.win_len // period))
    q = p.with_length(length)
    l = np.arange(q.padded_len)
    return q, amplitude * np.cos(2.0 * np.pi * (M // 4) * l / M)


def calibrate_if_scaling(
    p: GaborParams, g: Window, g_deriv: Window, amplitude: float = 1.0
) -> float:
    """Pick the unit conversion that makes a pure tone's corrected phase flat.

    A unit-amplitude cosine at channel ``M/4`` is analysed and each candidate
    scale is tried; the one with the smallest penalty ratio wins if it is
    below 0.05.

    Raises
    ------
    CalibrationError
        If no candidate meets the bound, which points at a phase-convention
        mismatch in the transform.
    """
    q, x = _calibration_signal(p, amplitude)
    c = dgt(x, q, g)
    cd = dgt(x, q, g_deriv)
    mag = np.abs(c)
    keep = mag >= 1e-10 * mag.max()
    raw = np.zeros(c.shape)
    raw[keep] = -np.imag(cd[keep] / c[keep])
    den = np.abs(time_diff(c)).sum()
    ratios = {}
    for name, scale in if_scale_candidates(p.channels).items():
        corrected = apply_phase_correction(c, PhaseCorrector.from_omega(scale * raw, q))
        ratios[name] = np.abs(time_diff(corrected)).sum() / den
    best = min(ratios, key=ratios.get)
    if not ratios[best] <= STATIONARITY_BOUND:
        raise CalibrationError(
            f"no instantaneous-frequency scale achieves ratio <= {STATIONARITY_BOUND}: "
            + ", ".join(f"{k}={v:.3g}" for k, v in ratios.items())
        )
    return if_scale_candidates(p.channels)[best]


def dump_omega_csv(omega: np.ndarray, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "n", "omega"])
        for m, n in np.ndindex(omega.shape):
            w.writerow([m, n, repr(float(omega[m, n]))])
