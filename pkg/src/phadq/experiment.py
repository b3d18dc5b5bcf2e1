"""Batch dequantization experiments: quantize, restore, sweep, collect traces."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .gabor import GaborFrame, GaborParams
from .metrics import best_iterate, sdr
from .quantization import FeasibleSet, QuantSpec, feasibility_violation, quantize_midriser
from .signal_io import Signal, load_wav, peak_normalize, save_wav, truncate
from .solver import (
    CP_BASELINE_ITERS,
    SolverConfig,
    SolverTrace,
    bphadq_run,
    cp_sparse_baseline,
    if_scale_for,
    lambda_for_wordlength,
    oracle_omega,
    uphadq_run,
)

__all__ = [
    "PRESETS",
    "METHODS",
    "RESULT_COLUMNS",
    "ExperimentConfig",
    "restore_signal",
    "prepare_input",
    "cmd_quantize",
    "cmd_restore",
    "cmd_sweep",
    "cmd_trace_plotdata",
]

log = logging.getLogger(__name__)

PRESETS = {
    "desk": {"win_len": 512, "hop": 128, "channels": 1024, "seconds": 1.0, "record_every": 1},
    "full": {"win_len": 8192, "hop": 2048, "channels": 16384, "seconds": 7.0, "record_every": 10},
}
METHODS = ("bphadq_consistent", "bphadq_inconsistent", "uphadq", "oracle", "cp_baseline")

RESULT_COLUMNS = (
    "file", "method", "wordlength", "sdr_in", "sdr_out", "delta", "best_iter",
    "sdr_final", "iters_run", "seconds", "status",
)
AVERAGE_COLUMNS = ("method", "wordlength", "n", "sdr_in", "sdr_out", "delta", "best_iter")
# hardware dependent, excluded from reproducibility comparisons
WALL_TIME_COLUMNS = ("seconds",)


@dataclass
class ExperimentConfig:
    inputs: list[str] = field(default_factory=list)
    out_dir: str = "results"
    wordlengths: list[int] = field(default_factory=lambda: list(range(2, 9)))
    methods: list[str] = field(default_factory=lambda: list(METHODS))
    preset: str = "desk"
    win_len: int | None = None
    hop: int | None = None
    channels: int | None = None
    seconds: float | None = None
    lam: float | None = None
    tau: float = 1.0
    sigma: float = 1.0
    rho: float = 1.0 / 3.0
    iters: int | None = None
    k_update: int = 10
    record_every: int | None = None
    jobs: int = 1
    # recorded with the results; nothing in the pipeline draws random numbers
    seed: int = 0

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; choose from {sorted(PRESETS)}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown method(s) {bad}; choose from {METHODS}")

    def validate(self):
        if not self.inputs or not self.wordlengths or not self.methods:
            raise ValueError("need at least one input, one word length and one method")

    @property
    def gabor_params(self) -> GaborParams:
        pre = PRESETS[self.preset]
        return GaborParams(
            win_len=self.win_len or pre["win_len"],
            hop=self.hop or pre["hop"],
            channels=self.channels or pre["channels"],
        )

    @property
    def excerpt_seconds(self) -> float:
        return self.seconds if self.seconds is not None else PRESETS[self.preset]["seconds"]

    def solver_config(self, method: str, wordlength: int) -> SolverConfig:
        iters = self.iters or (CP_BASELINE_ITERS if method == "cp_baseline" else 200)
        return SolverConfig(
            lam=self.lam if self.lam is not None else lambda_for_wordlength(wordlength),
            tau=self.tau,
            sigma=self.sigma,
            rho=self.rho,
            max_iters=iters,
            variant="inconsistent" if method == "bphadq_inconsistent" else "consistent",
            if_source={"uphadq": "update_every_k", "oracle": "oracle"}.get(method, "degraded"),
            k_update=self.k_update,
            record_every=self.record_every or PRESETS[self.preset]["record_every"],
        )

    def input_files(self) -> list[Path]:
        files = []
        for item in self.inputs:
            path = Path(item)
            if path.is_dir():
                files.extend(sorted(path.glob("*.wav")))
            else:
                files.append(path)
        return files

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "ExperimentConfig":
        """Read a flat ``key = value`` file; keyword overrides win."""
        values = {}
        for raw in Path(path).read_text().splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise ValueError(f"{path}: expected key = value, got {raw!r}")
            values[key.strip().replace("-", "_")] = val.strip()
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_mapping(values)

    @classmethod
    def from_mapping(cls, values: dict) -> "ExperimentConfig":
        kwargs = {}
        types = {f.name: f for f in dataclasses.fields(cls)}
        for key, val in values.items():
            if key == "lambda":
                key = "lam"
            if key not in types:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(key, val)
        return cls(**kwargs)


def _coerce(key, val):
    if not isinstance(val, str):
        return val
    if key in ("inputs", "methods"):
        return [v.strip() for v in val.split(",") if v.strip()]
    if key == "wordlengths":
        out = []
        for part in val.split(","):
            lo, _, hi = part.strip().partition("-")
            out.extend(range(int(lo), int(hi) + 1) if hi else [int(lo)])
        return out
    if key in ("out_dir", "preset"):
        return val
    if key in ("lam", "tau", "sigma", "rho", "seconds"):
        return float(val)
    return int(val)


def restore_signal(
    method: str,
    yq: np.ndarray,
    quant: QuantSpec,
    params: GaborParams,
    cfg: SolverConfig,
    reference: np.ndarray | None = None,
):
    """Run one restoration method on a quantized signal.

    ``reference`` is required for ``oracle`` and otherwise only feeds the
    per-iteration SDR of the trace.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    f = FeasibleSet.from_quantized(yq, quant)
    frame = GaborFrame.build(params, length=len(yq))
    if method == "oracle":
        if reference is None:
            raise ValueError("oracle requires reference")
        omega = oracle_omega(reference, frame, if_scale_for(frame.params, cfg))
        x, trace = bphadq_run(f, frame, cfg, omega, reference)
    elif method == "uphadq":
        x, trace = uphadq_run(f, frame, cfg, reference)
    elif method == "cp_baseline":
        x, trace = cp_sparse_baseline(f, frame, cfg, reference)
    else:
        x, trace = bphadq_run(f, frame, cfg, None, reference)
    trace.meta["method"] = method
    trace.meta["wordlength"] = quant.wordlength
    return x, trace


def prepare_input(path, seconds: float | None) -> tuple[Signal, float]:
    """Load, cut to the excerpt length and peak-normalize."""
    s = load_wav(path)
    if seconds is not None:
        s = truncate(s, seconds)
    return peak_normalize(s)


def _sidecar_path(wav: Path) -> Path:
    return wav.with_suffix(".json")


def cmd_quantize(input_path, wordlength: int, output_path, seconds: float | None = None) -> dict:
    """Write the quantized WAV (64-bit float, levels exact) plus a JSON sidecar."""
    quant = QuantSpec(wordlength)
    s, gain = prepare_input(input_path, seconds)
    yq = quantize_midriser(s.samples, quant)
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    save_wav(Signal(yq, s.sample_rate), output_path, "f64")
    meta = {
        "source": str(input_path),
        "wordlength": quant.wordlength,
        "delta": quant.delta,
        "gain": gain,
        "sample_rate": s.sample_rate,
        "length": len(yq),
    }
    _sidecar_path(output_path).write_text(json.dumps(meta, indent=2) + "\n")
    return meta


def cmd_restore(
    input_path,
    method: str,
    out_dir,
    sidecar=None,
    wordlength: int | None = None,
    reference=None,
    preset: str = "desk",
    **overrides,
) -> dict:
    """Restore a quantized WAV; writes ``<stem>_<method>.wav``, a trace CSV and a result JSON."""
    input_path = Path(input_path)
    side = {}
    side_path = Path(sidecar) if sidecar else _sidecar_path(input_path)
    if side_path.exists():
        side = json.loads(side_path.read_text())
    w = wordlength or side.get("wordlength")
    if w is None:
        raise ValueError("word length unknown: pass --wordlength or provide a sidecar")
    if method == "oracle" and reference is None:
        raise ValueError("oracle requires reference")
    quant = QuantSpec(int(w))
    yq_sig = load_wav(input_path)
    ref = None
    if reference is not None:
        rs = load_wav(reference)
        rs = Signal(rs.samples[: len(yq_sig)], rs.sample_rate)
        if "gain" in side:
            ref = rs.samples * side["gain"]
        else:
            ref = peak_normalize(rs)[0].samples
        if len(ref) != len(yq_sig):
            raise ValueError("reference is shorter than the quantized signal")

    exp = ExperimentConfig(inputs=[str(input_path)], preset=preset, methods=[method], **overrides)
    cfg = exp.solver_config(method, quant.wordlength)
    t0 = time.perf_counter()
    x, trace = restore_signal(method, yq_sig.samples, quant, exp.gabor_params, cfg, ref)
    elapsed = time.perf_counter() - t0

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{input_path.stem}_{method}"
    save_wav(Signal(np.clip(x, -1.0, 1.0), yq_sig.sample_rate), out_dir / f"{stem}.wav", "f64")
    trace.to_csv(out_dir / f"{stem}_trace.csv")
    result = {
        "input": str(input_path),
        "method": method,
        "wordlength": quant.wordlength,
        "delta": quant.delta,
        "config": dataclasses.asdict(cfg),
        "gabor": dataclasses.asdict(exp.gabor_params),
        "feasibility_violation": feasibility_violation(x, FeasibleSet.from_quantized(yq_sig.samples, quant)),
        "iters_run": cfg.max_iters,
        "seconds": elapsed,
    }
    if ref is not None:
        best_it, best_sdr = best_iterate(trace)
        result.update(
            sdr_in=sdr(ref, yq_sig.samples),
            sdr_final=sdr(ref, x),
            best_iter=best_it,
            sdr_best=best_sdr,
        )
    (out_dir / f"{stem}_result.json").write_text(json.dumps(result, indent=2) + "\n")
    return result


def _run_cell(args):
    exp, path, method, w = args
    row = {"file": Path(path).name, "method": method, "wordlength": w}
    t0 = time.perf_counter()
    try:
        s, _ = prepare_input(path, exp.excerpt_seconds)
        clean = s.samples
        quant = QuantSpec(w)
        yq = quantize_midriser(clean, quant)
        cfg = exp.solver_config(method, w)
        x, trace = restore_signal(method, yq, quant, exp.gabor_params, cfg, clean)
        best_it, best_sdr = best_iterate(trace)
        sdr_in = sdr(clean, yq)
        trace_dir = Path(exp.out_dir) / "traces"
        trace_dir.mkdir(parents=True, exist_ok=True)
        trace.to_csv(trace_dir / f"{Path(path).stem}_{method}_w{w}.csv")
        row.update(
            sdr_in=sdr_in,
            sdr_out=best_sdr,
            delta=best_sdr - sdr_in,
            best_iter=best_it,
            sdr_final=sdr(clean, x),
            iters_run=cfg.max_iters,
            status="ok",
        )
    except Exception as exc:  # recorded per row; the sweep goes on
        log.exception("cell %s/%s/w=%d failed", path, method, w)
        row["status"] = f"error: {type(exc).__name__}: {exc}".replace("\n", " ")
    row["seconds"] = time.perf_counter() - t0
    return row


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def cmd_sweep(exp: ExperimentConfig) -> list[dict]:
    """Run every (file, method, word length) cell; write ``results.csv`` and ``averages.csv``."""
    exp.validate()
    files = exp.input_files()
    cells = [(exp, str(f), m, w) for f in files for m in exp.methods for w in exp.wordlengths]
    if exp.jobs > 1:
        with ProcessPoolExecutor(max_workers=exp.jobs) as pool:
            rows = list(pool.map(_run_cell, cells))
    else:
        rows = [_run_cell(c) for c in cells]
    rows.sort(key=lambda r: (r["file"], r["method"], r["wordlength"]))

    out = Path(exp.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "results.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RESULT_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in RESULT_COLUMNS])
    with open(out / "averages.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(AVERAGE_COLUMNS)
        for r in _averages(rows):
            w.writerow([_fmt(r[c]) for c in AVERAGE_COLUMNS])
    return rows


def _averages(rows):
    groups = {}
    for r in rows:
        if r["status"] == "ok":
            groups.setdefault((r["method"], r["wordlength"]), []).append(r)
    out = []
    for (method, wl), grp in sorted(groups.items()):
        avg = {"method": method, "wordlength": wl, "n": len(grp)}
        for c in ("sdr_in", "sdr_out", "delta", "best_iter"):
            avg[c] = float(np.mean([g[c] for g in grp]))
        out.append(avg)
    return out


def cmd_trace_plotdata(trace_paths, output, labels=None) -> list[str]:
    """Merge traces into one CSV: ``iteration`` plus one SDR column per trace.

    Column names come from ``labels``, else the trace's recorded method, else
    the file stem.  Returns the header.
    """
    if not trace_paths:
        raise ValueError("no traces given")
    traces, names = [], []
    for i, path in enumerate(trace_paths):
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(path)
        tr = SolverTrace.from_csv(path)
        traces.append(tr)
        name = labels[i] if labels else tr.meta.get("method", path.stem)
        if name in names:
            name = path.stem
        names.append(name)
    iters = sorted(set().union(*(t.iters for t in traces)))
    lookup = [dict(zip(t.iters, t.sdr)) for t in traces]
    header = ["iteration", *names]
    with open(output, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for it in iters:
            w.writerow([it, *(_fmt(lk.get(it)) for lk in lookup)])
    return header
