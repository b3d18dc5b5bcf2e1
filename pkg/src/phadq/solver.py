"""Primal-dual dequantization solvers.

All solvers share one Chambolle-Pock loop::

    q <- clip_lam(q + sigma K x)
    u <- p - tau K* q
    p' <- prox(u)                   # projection, or prox of the squared distance
    x <- p' + rho (p' - p);  p <- p'

with ``x = p = yq`` and ``q = 0`` at start.  ``K = D R G`` for the
phase-aware variants and ``K = G`` for the sparsity baseline.  The returned
signal is the last ``p``.
"""

from __future__ import annotations

import csv
import functools
import logging
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .gabor import GaborFrame, GaborParams, make_hann, make_hann_derivative, pad_signal
from .metrics import sdr
from .phase import (
    PhaseCorrector,
    apply_phase_correction,
    calibrate_if_scaling,
    estimate_if,
    time_diff,
    time_diff_adjoint,
)
from .quantization import FeasibleSet, feasibility_violation, project_gamma, sqdist

__all__ = [
    "LAMBDA_TABLE",
    "CP_BASELINE_ITERS",
    "SolverConfig",
    "SolverTrace",
    "soft_threshold",
    "clip",
    "lambda_for_wordlength",
    "if_scale_for",
    "degraded_omega",
    "oracle_omega",
    "bphadq_run",
    "uphadq_run",
    "cp_sparse_baseline",
]

log = logging.getLogger(__name__)

# penalty weight per word length (bits per sample)
LAMBDA_TABLE = {2: 1e-1, 3: 1e-1, 4: 1e-3, 5: 1e-2, 6: 1e-3, 7: 1e-4, 8: 1e-4}
CP_BASELINE_ITERS = 500

VARIANTS = ("consistent", "inconsistent")
IF_SOURCES = ("degraded", "oracle", "update_every_k")


@dataclass(frozen=True)
class SolverConfig:
    lam: float
    tau: float = 1.0
    sigma: float = 1.0
    rho: float = 1.0 / 3.0
    max_iters: int = 200
    variant: str = "consistent"
    if_source: str = "degraded"
    k_update: int = 10
    record_every: int = 1
    # None: calibrate from the Gabor parameters on first use
    if_scale: float | None = None

    def __post_init__(self):
        if not (self.lam > 0 and self.tau > 0 and self.sigma > 0):
            raise ValueError("lam, tau and sigma must be positive")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")
        if self.max_iters < 1 or self.k_update < 1 or self.record_every < 1:
            raise ValueError("max_iters, k_update and record_every must be >= 1")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.if_source not in IF_SOURCES:
            raise ValueError(f"if_source must be one of {IF_SOURCES}")


@dataclass
class SolverTrace:
    iters: list[int] = field(default_factory=list)
    objective: list[float] = field(default_factory=list)
    feasibility: list[float] = field(default_factory=list)
    sdr: list[float | None] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)
    # iterations after which omega was re-estimated
    if_updates: list[int] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    COLUMNS = ("iter", "objective", "feasibility", "sdr", "seconds")

    def __len__(self):
        return len(self.iters)

    def to_csv(self, path: str | Path) -> None:
        """Write the trace; ``meta`` goes into leading ``# key=value`` lines."""
        with open(path, "w", newline="") as fh:
            for k, v in self.meta.items():
                fh.write(f"# {k}={v}\n")
            if self.if_updates:
                fh.write(f"# if_updates={' '.join(map(str, self.if_updates))}\n")
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for row in zip(self.iters, self.objective, self.feasibility, self.sdr, self.seconds):
                w.writerow(["" if v is None else repr(v) for v in row])

    @classmethod
    def from_csv(cls, path: str | Path) -> "SolverTrace":
        tr = cls()
        with open(path, newline="") as fh:
            lines = fh.read().splitlines()
        body = []
        for line in lines:
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                if key == "if_updates":
                    tr.if_updates = [int(v) for v in val.split()]
                else:
                    tr.meta[key] = val
            else:
                body.append(line)
        for row in csv.DictReader(body):
            tr.iters.append(int(row["iter"]))
            tr.objective.append(float(row["objective"]))
            tr.feasibility.append(float(row["feasibility"]))
            tr.sdr.append(float(row["sdr"]) if row["sdr"] else None)
            tr.seconds.append(float(row["seconds"]))
        return tr


def soft_threshold(z: np.ndarray, t: float) -> np.ndarray:
    """Complex soft thresholding ``z * max(0, 1 - t/|z|)``."""
    if t < 0:
        raise ValueError("threshold must be non-negative")
    mag = np.abs(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = np.where(mag > t, 1.0 - t / mag, 0.0)
    return z * gain


def clip(z: np.ndarray, t: float) -> np.ndarray:
    """Radial projection onto ``|z| <= t``; equals ``z - soft_threshold(z, t)``."""
    if t < 0:
        raise ValueError("threshold must be non-negative")
    # written as the residual of soft thresholding so the two sum to z exactly
    return z - soft_threshold(z, t)


def lambda_for_wordlength(w: int) -> float:
    if w not in LAMBDA_TABLE:
        lo, hi = min(LAMBDA_TABLE), max(LAMBDA_TABLE)
        nearest = lo if w < lo else hi
        warnings.warn(f"no tabulated lambda for {w} bits, using the {nearest}-bit value")
        w = nearest
    return LAMBDA_TABLE[w]


@functools.lru_cache(maxsize=16)
def _calibrated(win_len, hop, channels, phase):
    p = GaborParams(win_len, hop, channels, phase=phase)
    return calibrate_if_scaling(
        p, make_hann(win_len, hop, channels), make_hann_derivative(win_len, hop, channels)
    )


def if_scale_for(params: GaborParams, cfg: SolverConfig | None = None) -> float:
    if cfg is not None and cfg.if_scale is not None:
        return cfg.if_scale
    return _calibrated(params.win_len, params.hop, params.channels, params.phase)


def degraded_omega(yq: np.ndarray, frame: GaborFrame, scale: float) -> np.ndarray:
    """Instantaneous frequency of a (padded or unpadded) signal."""
    return estimate_if(pad_signal(yq, frame.params), frame.params, frame.window, frame.window_deriv, scale)


def oracle_omega(clean: np.ndarray, frame: GaborFrame, scale: float) -> np.ndarray:
    """Instantaneous frequency of the clean original."""
    return degraded_omega(clean, frame, scale)


class _PhaseAwareOperator:
    def __init__(self, frame: GaborFrame, omega: np.ndarray):
        if omega.shape != frame.params.shape:
            raise ValueError(f"omega has shape {omega.shape}, expected {frame.params.shape}")
        self.frame = frame
        self.set_omega(omega)

    def set_omega(self, omega):
        self.pc = PhaseCorrector.from_omega(omega, self.frame.params)

    @property
    def dual_shape(self):
        m, n = self.frame.params.shape
        return (m, n - 1)

    norm_bound = 2.0

    def __call__(self, x):
        return time_diff(apply_phase_correction(self.frame.analyze(x), self.pc))

    def adjoint(self, d):
        return self.frame.synthesize(apply_phase_correction(time_diff_adjoint(d), self.pc, adjoint=True))


class _GaborOperator:
    norm_bound = 1.0

    def __init__(self, frame: GaborFrame):
        self.frame = frame
        self.dual_shape = frame.params.shape

    def __call__(self, x):
        return self.frame.analyze(x)

    def adjoint(self, c):
        return self.frame.synthesize(c)


def _check_steps(cfg, op):
    bound = cfg.tau * cfg.sigma * op.norm_bound**2
    if bound >= 1.0:
        warnings.warn(
            f"tau*sigma*||K||^2 may reach {bound:g} >= 1; convergence is not guaranteed",
            stacklevel=3,
        )


def _primal_dual(
    f: FeasibleSet,
    frame: GaborFrame,
    cfg: SolverConfig,
    op,
    variant: str,
    reference: np.ndarray | None,
    after_iter: Callable[[int, np.ndarray], None] | None = None,
):
    n0 = len(f.yq)
    fp = f.padded(frame.params.padded_len)
    if reference is not None:
        reference = np.asarray(reference, dtype=float)
        if reference.shape != f.yq.shape:
            raise ValueError("reference and quantized signal differ in length")
    _check_steps(cfg, op)

    tau, sigma, rho, lam = cfg.tau, cfg.sigma, cfg.rho, cfg.lam
    p = fp.yq.copy()
    x = p.copy()
    q = np.zeros(op.dual_shape, dtype=complex, order="F")
    trace = SolverTrace()
    t0 = time.perf_counter()

    for i in range(1, cfg.max_iters + 1):
        q = clip(q + sigma * op(x), lam)
        u = p - tau * op.adjoint(q)
        if variant == "consistent":
            p_new = project_gamma(u, fp)
        else:
            p_new = (tau * project_gamma(u, fp) + u) / (tau + 1.0)
        x = p_new + rho * (p_new - p)
        p = p_new
        if not np.all(np.isfinite(p)):
            raise FloatingPointError(f"non-finite primal iterate at iteration {i}")

        if i % cfg.record_every == 0 or i == cfg.max_iters:
            obj = lam * float(np.abs(op(p)).sum())
            if variant == "inconsistent":
                obj += 0.5 * sqdist(p, fp)
            trace.iters.append(i)
            trace.objective.append(obj)
            trace.feasibility.append(feasibility_violation(p[:n0], f))
            trace.sdr.append(None if reference is None else sdr(reference, p[:n0]))
            trace.seconds.append(time.perf_counter() - t0)
        if after_iter is not None:
            after_iter(i, p)

    trace.meta.update(
        {k: v for k, v in asdict(cfg).items() if k != "if_scale"},
        variant=variant,
        win_len=frame.params.win_len,
        hop=frame.params.hop,
        channels=frame.params.channels,
    )
    return p[:n0].copy(), trace


def _bound_frame(frame_or_params, n):
    if isinstance(frame_or_params, GaborFrame):
        frame = frame_or_params
        if frame.params.padded_len < n:
            raise ValueError("frame is bound to a shorter signal")
        return frame
    return GaborFrame.build(frame_or_params, length=n)


def bphadq_run(
    f: FeasibleSet,
    frame: GaborFrame | GaborParams,
    cfg: SolverConfig,
    omega: np.ndarray | None = None,
    reference: np.ndarray | None = None,
):
    """Phase-aware dequantization with a fixed instantaneous frequency.

    Parameters
    ----------
    f : FeasibleSet
        Quantized observation and its step.
    frame : GaborFrame or GaborParams
        Transform; bare parameters are bound to the signal length.
    cfg : SolverConfig
        ``cfg.variant`` selects the hard constraint or the squared-distance
        penalty.
    omega : ndarray, optional
        Instantaneous frequency on the transform grid.  Estimated from the
        quantized signal when omitted.
    reference : ndarray, optional
        Clean signal; enables per-iteration SDR in the trace.

    Returns
    -------
    (ndarray, SolverTrace)
    """
    frame = _bound_frame(frame, len(f.yq))
    scale = if_scale_for(frame.params, cfg)
    if omega is None:
        omega = degraded_omega(f.yq, frame, scale)
    op = _PhaseAwareOperator(frame, omega)
    out, trace = _primal_dual(f, frame, cfg, op, cfg.variant, reference)
    trace.meta["if_scale"] = repr(scale)
    return out, trace


def uphadq_run(
    f: FeasibleSet,
    frame: GaborFrame | GaborParams,
    cfg: SolverConfig,
    reference: np.ndarray | None = None,
):
    """Phase-aware dequantization that re-estimates omega every ``k_update`` iterations.

    The dual variable and the relaxed primal carry over across updates.
    """
    frame = _bound_frame(frame, len(f.yq))
    scale = if_scale_for(frame.params, cfg)
    op = _PhaseAwareOperator(frame, degraded_omega(f.yq, frame, scale))
    updates = []

    def refresh(i, p):
        if i % cfg.k_update == 0 and i < cfg.max_iters:
            op.set_omega(estimate_if(p, frame.params, frame.window, frame.window_deriv, scale))
            updates.append(i)

    out, trace = _primal_dual(f, frame, cfg, op, cfg.variant, reference, after_iter=refresh)
    trace.if_updates = updates
    trace.meta["if_scale"] = repr(scale)
    return out, trace


def cp_sparse_baseline(
    f: FeasibleSet,
    frame: GaborFrame | GaborParams,
    cfg: SolverConfig,
    reference: np.ndarray | None = None,
):
    """Consistent analysis-sparsity dequantization, ``min lam ||G x||_1`` over the box."""
    frame = _bound_frame(frame, len(f.yq))
    return _primal_dual(f, frame, cfg, _GaborOperator(frame), "consistent", reference)
