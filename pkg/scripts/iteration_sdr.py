"""SDR per iteration for the phase-aware variants on a synthetic vibrato tone.

Writes one trace CSV per method plus ``iteration_sdr.csv`` (one column per
method), ready for any plotting tool.

    python3 scripts/iteration_sdr.py --out-dir runs/iter --wordlength 4
"""

import argparse
import warnings
from pathlib import Path

import numpy as np

from phadq.experiment import ExperimentConfig, cmd_trace_plotdata, restore_signal
from phadq.metrics import best_iterate, sdr
from phadq.quantization import QuantSpec, quantize_midriser

METHODS = ("bphadq_consistent", "bphadq_inconsistent", "uphadq", "oracle")


def vibrato(seconds=1.0, sr=44100, f0=660.0, depth=8.0, rate=5.0):
    t = np.arange(int(seconds * sr)) / sr
    phase = 2 * np.pi * f0 * t + (depth / rate) * np.sin(2 * np.pi * rate * t)
    x = np.cos(phase) + 0.4 * np.cos(2 * phase + 0.5) + 0.2 * np.cos(3 * phase + 1.3)
    return x / np.abs(x).max()


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default="runs/iteration_sdr")
    ap.add_argument("--wordlength", "-w", type=int, default=4)
    ap.add_argument("--preset", default="desk", choices=("desk", "full"))
    ap.add_argument("--iters", type=int, default=200)
    ap.add_argument("--seconds", type=float, default=1.0)
    args = ap.parse_args(argv)
    warnings.filterwarnings("ignore", message="tau\\*sigma")

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    clean = vibrato(args.seconds)
    quant = QuantSpec(args.wordlength)
    yq = quantize_midriser(clean, quant)
    exp = ExperimentConfig(preset=args.preset, iters=args.iters, record_every=1)
    print(f"input SDR {sdr(clean, yq):.2f} dB")

    paths = []
    for method in METHODS:
        _, trace = restore_signal(method, yq, quant, exp.gabor_params, exp.solver_config(method, args.wordlength), clean)
        path = out / f"{method}_trace.csv"
        trace.to_csv(path)
        paths.append(path)
        it, best = best_iterate(trace)
        print(f"{method:20s} final {trace.sdr[-1]:.2f} dB, best {best:.2f} dB at iteration {it}")
    cmd_trace_plotdata(paths, out / "iteration_sdr.csv")
    print(f"wrote {out / 'iteration_sdr.csv'}")


if __name__ == "__main__":
    main()
