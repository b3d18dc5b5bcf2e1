"""Phase-aware dequantization of uniformly quantized audio."""

from .gabor import GaborFrame, GaborParams, dgt, dgt_adjoint, make_hann, make_hann_derivative
from .metrics import best_iterate, sdr
from .phase import PhaseCorrector, calibrate_if_scaling, estimate_if
from .quantization import FeasibleSet, QuantSpec, feasibility_violation, project_gamma, quantize_midriser
from .signal_io import Signal, load_wav, peak_normalize, save_wav, truncate
from .solver import (
    SolverConfig,
    SolverTrace,
    bphadq_run,
    cp_sparse_baseline,
    lambda_for_wordlength,
    oracle_omega,
    uphadq_run,
)

__version__ = "0.1.0"
