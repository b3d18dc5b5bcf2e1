"""Signal-to-distortion ratio and best-iterate selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SDR_CAP_DB", "sdr", "best_iterate", "EvalResult"]

SDR_CAP_DB = 300.0


def sdr(reference: np.ndarray, estimate: np.ndarray) -> float:
    """Whole-signal SDR in dB, ``20 log10(||ref|| / ||ref - est||)``.

    Returns ``SDR_CAP_DB`` for a zero residual.
    """
    reference = np.asarray(reference, dtype=float)
    estimate = np.asarray(estimate, dtype=float)
    if reference.shape != estimate.shape:
        raise ValueError(f"length mismatch: {reference.shape} vs {estimate.shape}")
    ref_norm = np.linalg.norm(reference)
    if ref_norm == 0.0:
        raise ValueError("SDR undefined for an all-zero reference")
    res_norm = np.linalg.norm(reference - estimate)
    if res_norm == 0.0:
        return SDR_CAP_DB
    return float(min(SDR_CAP_DB, 20.0 * np.log10(ref_norm / res_norm)))


def best_iterate(trace) -> tuple[int, float]:
    """Iteration with the highest recorded SDR; ties go to the earliest.

    ``trace`` is a :class:`~phadq.solver.SolverTrace` or any object with
    ``iters`` and ``sdr`` sequences.
    """
    vals = [v for v in trace.sdr if v is not None and np.isfinite(v)]
    if not vals or len(vals) != len(trace.sdr):
        raise ValueError("trace has no SDR entries; run the solver with a reference")
    i = int(np.argmax(trace.sdr))  # first maximum
    return int(trace.iters[i]), float(trace.sdr[i])


@dataclass(frozen=True)
class EvalResult:
    method: str
    wordlength: int
    sdr_db: float
    sdr_input_db: float
    best_iter: int

    @property
    def delta_db(self) -> float:
        return self.sdr_db - self.sdr_input_db
