"""Command line entry point: ``phadq {quantize,restore,sweep,trace-plotdata}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .experiment import METHODS, PRESETS, ExperimentConfig, cmd_quantize, cmd_restore, cmd_sweep, cmd_trace_plotdata


def _solver_flags(p):
    p.add_argument("--lambda", dest="lam", type=float, help="penalty weight (default: per word length)")
    p.add_argument("--tau", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--iters", type=int, help="iterations (default 200, 500 for cp_baseline)")
    p.add_argument("--k-update", dest="k_update", type=int, help="U-PHADQ refresh interval")
    p.add_argument("--preset", choices=sorted(PRESETS))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phadq", description="Phase-aware audio dequantization")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    q = sub.add_parser("quantize", help="peak-normalize and quantize a WAV file")
    q.add_argument("input")
    q.add_argument("output")
    q.add_argument("--wordlength", "-w", type=int, required=True)
    q.add_argument("--seconds", type=float, help="keep only the first N seconds")

    r = sub.add_parser("restore", help="dequantize a quantized WAV file")
    r.add_argument("input")
    r.add_argument("--sidecar", help="JSON written by 'quantize' (default: next to input)")
    r.add_argument("--method", choices=METHODS, default="bphadq_consistent")
    r.add_argument("--wordlength", "-w", type=int)
    r.add_argument("--reference", help="clean WAV; required for the oracle method")
    r.add_argument("--out-dir", default="restored")
    _solver_flags(r)

    s = sub.add_parser("sweep", help="run methods x word lengths over input files")
    s.add_argument("inputs", nargs="*", help="WAV files or directories")
    s.add_argument("--config", help="flat key = value file; flags override it")
    s.add_argument("--wordlength", "-w", type=int, action="append", dest="wordlengths")
    s.add_argument("--method", choices=METHODS, action="append", dest="methods")
    s.add_argument("--out-dir")
    s.add_argument("--seconds", type=float)
    s.add_argument("--jobs", type=int)
    _solver_flags(s)

    t = sub.add_parser("trace-plotdata", help="merge trace CSVs into one SDR-per-iteration table")
    t.add_argument("traces", nargs="+")
    t.add_argument("--output", "-o", required=True)
    t.add_argument("--labels", help="comma separated column names")
    return parser


def _overrides(args, keys):
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "quantize":
            meta = cmd_quantize(args.input, args.wordlength, args.output, args.seconds)
            print(json.dumps(meta))
        elif args.command == "restore":
            extra = _overrides(args, ("lam", "tau", "sigma", "rho", "iters", "k_update"))
            res = cmd_restore(
                args.input,
                args.method,
                args.out_dir,
                sidecar=args.sidecar,
                wordlength=args.wordlength,
                reference=args.reference,
                preset=args.preset or "desk",
                **extra,
            )
            print(json.dumps({k: v for k, v in res.items() if k not in ("config", "gabor")}))
        elif args.command == "sweep":
            keys = ("wordlengths", "methods", "out_dir", "seconds", "jobs", "preset",
                    "lam", "tau", "sigma", "rho", "iters", "k_update")
            over = _overrides(args, keys)
            if args.inputs:
                over["inputs"] = args.inputs
            if args.config:
                exp = ExperimentConfig.from_file(args.config, **over)
            else:
                exp = ExperimentConfig.from_mapping(over)
            rows = cmd_sweep(exp)
            failed = sum(r["status"] != "ok" for r in rows)
            print(f"{len(rows)} rows written to {exp.out_dir}/results.csv ({failed} failed)")
        elif args.command == "trace-plotdata":
            labels = args.labels.split(",") if args.labels else None
            cmd_trace_plotdata(args.traces, args.output, labels)
    except (OSError, ValueError) as exc:
        print(f"phadq: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
