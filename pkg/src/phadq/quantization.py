"""Mid-riser uniform quantizer and the consistency box around its output."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "QuantSpec",
    "FeasibleSet",
    "quantize_midriser",
    "project_gamma",
    "prox_sqdist",
    "sqdist",
    "feasibility_violation",
]


@dataclass(frozen=True)
class QuantSpec:
    wordlength: int

    def __post_init__(self):
        if not 2 <= int(self.wordlength) <= 16:
            raise ValueError(f"word length must lie in 2..16, got {self.wordlength}")

    @property
    def delta(self) -> float:
        # power of two, exact in binary floating point
        return 2.0 ** (1 - int(self.wordlength))


def quantize_midriser(s: np.ndarray, q: QuantSpec) -> np.ndarray:
    """Round to the nearest odd multiple of ``delta / 2``.

    Inputs outside ``[-1, 1]`` are clipped first (with a warning).  The output
    is kept inside ``[-1 + delta/2, 1 - delta/2]`` so that full-scale samples
    land on the outermost level.
    """
    s = np.asarray(s, dtype=float)
    if np.any(np.abs(s) > 1.0):
        warnings.warn("samples outside [-1, 1] clipped before quantization")
        s = np.clip(s, -1.0, 1.0)
    d = q.delta
    out = d * (np.floor(s / d) + 0.5)
    return np.clip(out, -1.0 + d / 2, 1.0 - d / 2)


@dataclass(frozen=True)
class FeasibleSet:
    """Closed box ``|y - yq| <= delta / 2``.

    Samples where ``mask`` is False (e.g. transform padding) are unconstrained.
    """

    yq: np.ndarray
    delta: float
    mask: np.ndarray | None = None

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.mask is not None and np.shape(self.mask) != np.shape(self.yq):
            raise ValueError("mask and yq differ in shape")

    @classmethod
    def from_quantized(cls, yq, q: QuantSpec) -> "FeasibleSet":
        return cls(np.asarray(yq, dtype=float), q.delta)

    @property
    def lower(self) -> np.ndarray:
        lo = self.yq - self.delta / 2
        return lo if self.mask is None else np.where(self.mask, lo, -np.inf)

    @property
    def upper(self) -> np.ndarray:
        hi = self.yq + self.delta / 2
        return hi if self.mask is None else np.where(self.mask, hi, np.inf)

    def padded(self, length: int) -> "FeasibleSet":
        """Extend to ``length`` samples with unconstrained zeros."""
        n = len(self.yq)
        if length < n:
            raise ValueError("cannot pad to a shorter length")
        if length == n:
            return self
        yq = np.zeros(length)
        yq[:n] = self.yq
        mask = np.zeros(length, dtype=bool)
        mask[:n] = True if self.mask is None else self.mask
        return FeasibleSet(yq, self.delta, mask)


def _check_len(x, f):
    if np.shape(x) != np.shape(f.yq):
        raise ValueError(f"length mismatch: {np.shape(x)} vs {np.shape(f.yq)}")


def project_gamma(x: np.ndarray, f: FeasibleSet) -> np.ndarray:
    _check_len(x, f)
    return np.clip(x, f.lower, f.upper)


def prox_sqdist(x: np.ndarray, f: FeasibleSet, alpha: float) -> np.ndarray:
    """Proximal operator of ``alpha/2 * dist(., F)^2``."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return (alpha * project_gamma(x, f) + x) / (1.0 + alpha)


def sqdist(x: np.ndarray, f: FeasibleSet) -> float:
    r = x - project_gamma(x, f)
    return float(r @ r)


def feasibility_violation(x: np.ndarray, f: FeasibleSet) -> float:
    """Largest distance of any sample from its quantization interval."""
    _check_len(x, f)
    over = np.maximum(x - f.upper, f.lower - x)
    return float(max(0.0, over.max(initial=0.0)))
