"""Command-line front end: ``consensus-lab {analyze,simulate,sweep,compare,regress}``.

Exit codes: 0 success (unstable runs included), 1 other failure,
2 unreadable or invalid input, 3 disconnected graph, 4 stepsize out of range.
"""
from __future__ import annotations

import argparse
import json
import os
import re
import sys
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np

from . import delay_analysis, harness
from .consensus import Algorithm, AlgorithmConfig, RunTrace, format_float, run
from .errors import (
    ConfigMismatch,
    ConsensusLabError,
    DisconnectedGraph,
    GraphError,
    LengthMismatch,
    StepsizeOutOfRange,
)
from .graph import Graph, is_connected, laplacian, load_graph
from .spectral import Spectrum, eigendecompose

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_PARSE = 2
EXIT_DISCONNECTED = 3
EXIT_STEPSIZE = 4

_DELTA_RE = re.compile(r"^\s*([0-9.eE+-]+)\s*/\s*(lambda_?n|lambdan|ln)\s*$", re.IGNORECASE)


class InputError(ConsensusLabError):
    pass


def parse_delta(text: str | None, spectrum: Spectrum, default_scale: float) -> float:
    """Stepsize from ``"0.2"`` or a multiple of ``1/lambda_N`` such as ``"1/lambdaN"``."""
    if text is None:
        return default_scale / spectrum.lambda_max
    m = _DELTA_RE.match(text)
    try:
        if m:
            return float(m.group(1)) / spectrum.lambda_max
        return float(text)
    except ValueError:
        raise InputError(f"cannot parse stepsize {text!r}") from None


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise InputError(f"expected a comma-separated list of integers, got {text!r}") from None


def read_inputs(spec: str, n: int) -> np.ndarray:
    """Agent inputs from a file (numbers separated by commas or whitespace) or inline CSV."""
    path = Path(spec)
    text = path.read_text(encoding="utf-8") if path.is_file() else spec
    tokens = [t for t in re.split(r"[,\s]+", text.strip()) if t]
    try:
        values = np.array([float(t) for t in tokens])
    except ValueError:
        raise InputError(f"inputs must be numbers: {spec!r}") from None
    if values.shape != (n,):
        raise LengthMismatch(f"expected {n} inputs, got {values.size}")
    return values


def write_atomic(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False, default=_json_default) + "\n"


def _json_default(v):
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not JSON serializable: {type(v).__name__}")


def _clean(obj):
    """Replace non-finite floats by None so output stays strict JSON."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    return obj


def trace_to_json(trace: RunTrace) -> str:
    return dump_json(_clean({
        "k": list(range(trace.states.shape[0])),
        "x": trace.states.tolist(),
        "e": trace.errors.tolist(),
    }))


def write_trace(out: Path, stem: str, trace: RunTrace, fmt: str) -> Path:
    if fmt == "json":
        return write_atomic(out / f"{stem}.json", trace_to_json(trace))
    return write_atomic(out / f"{stem}.csv", trace.to_csv())


def _load_connected(path: str) -> tuple[Graph, Spectrum]:
    try:
        g = load_graph(path)
    except FileNotFoundError:
        raise InputError(f"graph file not found: {path}") from None
    if not is_connected(g):
        raise DisconnectedGraph(f"graph in {path} is not connected")
    return g, eigendecompose(laplacian(g))


def _check_delta(delta: float, spectrum: Spectrum) -> None:
    if not (delta > 0 and delta * spectrum.lambda_max < 2.0):
        raise StepsizeOutOfRange(
            f"stepsize {delta!r} outside (0, 2/lambda_N) = (0, {2.0 / spectrum.lambda_max:.17g})")


def _plot(path: Path, series: dict, title: str) -> None:
    from .plotting import plot_error_traces

    plot_error_traces({k: np.asarray(v, dtype=float) for k, v in series.items()}, path, title=title)


# ------------------------------------------------------------------ commands

def cmd_analyze(args) -> int:
    g, spectrum = _load_connected(args.graph)
    delta = parse_delta(args.delta, spectrum, 1.0)
    _check_delta(delta, spectrum)
    report = delay_analysis.analyze(spectrum, delta, max_delay=args.max_delay)
    payload = report.to_dict()
    payload["lambda2"] = spectrum.lambda2
    payload["lambda_n"] = spectrum.lambda_max
    out = Path(args.out)
    write_atomic(out / "report.json", dump_json(payload))
    print(f"d_bar={report.d_bar} d_accel={report.d_accel} r_0={report.r_d[0]:.17g}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    g, spectrum = _load_connected(args.graph)
    inputs = read_inputs(args.inputs, g.n)
    kind = Algorithm(args.algorithm)
    delta = None
    if kind in (Algorithm.PLAIN, Algorithm.DELAYED, Algorithm.NAG_C):
        delta = parse_delta(args.delta, spectrum, 1.0)
        _check_delta(delta, spectrum)
    cfg = AlgorithmConfig.for_graph(kind, g, delta=delta, d=args.delay, spectrum=spectrum)
    trace = run(cfg, g, inputs, args.rounds, spectrum=spectrum)
    out = Path(args.out)
    write_trace(out, "trace", trace, args.format)
    summary = harness.summarize(trace, spectrum=spectrum)
    write_atomic(out / "summary.json", dump_json(_clean(summary)))
    if args.plot:
        _plot(out / "trace.png", {cfg.label(): trace.errors}, f"{cfg.label()} consensus error")
    print(f"{cfg.label()}: final e={format_float(trace.errors[-1])} unstable={summary['unstable']}")
    return EXIT_OK


def _write_sweep(out: Path, name: str, result: harness.SweepResult, fmt: str,
                 plot: bool, title: str, extra: dict) -> None:
    for cell in result.cells:
        write_trace(out, f"trace_{cell.label}", cell.trace, fmt)
    payload = result.to_dict()
    payload.update(extra)
    write_atomic(out / f"{name}.json", dump_json(_clean(payload)))
    if plot:
        _plot(out / f"{name}.png", {c.label: c.trace.errors for c in result.cells}, title)


def cmd_sweep(args) -> int:
    g, spectrum = _load_connected(args.graph)
    inputs = read_inputs(args.inputs, g.n)
    delta = parse_delta(args.delta, spectrum, harness.DELAY_EXPERIMENT_SCALE)
    _check_delta(delta, spectrum)
    delays = parse_int_list(args.delays)
    if any(d < 0 for d in delays):
        raise InputError("delays must be >= 0")
    result = harness.delay_sweep(g, delta, delays, inputs, args.rounds, workers=args.workers,
                                 spectrum=spectrum)
    factors = {c.label: c.empirical_factor for c in result.cells}
    ordering = sorted((c for c in result.cells if c.empirical_factor is not None),
                      key=lambda c: c.empirical_factor)
    extra = {
        "delta": delta,
        "d_bar": delay_analysis.admissible_delay(spectrum, delta),
        "ordering_empirical": [c.label for c in ordering],
        "ordering_analytic": [c.label for c in sorted(result.cells, key=lambda c: c.analytic_r_d)],
    }
    _write_sweep(Path(args.out), "sweep", result, args.format, args.plot,
                 "effect of delay on e(k)", extra)
    print(" ".join(f"{k}={format_float(v) if v is not None else 'nan'}" for k, v in factors.items()))
    return EXIT_OK


def cmd_compare(args) -> int:
    g, spectrum = _load_connected(args.graph)
    inputs = read_inputs(args.inputs, g.n)
    delayed_delta = parse_delta(args.delta, spectrum, harness.DELAY_EXPERIMENT_SCALE)
    _check_delta(delayed_delta, spectrum)
    result = harness.compare_algorithms(g, inputs, args.rounds, delay=args.delay,
                                        delayed_delta=delayed_delta, workers=args.workers,
                                        spectrum=spectrum)
    reached = [c for c in result.cells if c.rounds_to_tolerance is not None]
    fastest = min(reached, key=lambda c: c.rounds_to_tolerance).label if reached else None
    extra = {"fastest": fastest, "lambda2": spectrum.lambda2, "lambda_n": spectrum.lambda_max}
    _write_sweep(Path(args.out), "compare", result, args.format, args.plot,
                 "accelerated consensus comparison", extra)
    print(" ".join(f"{c.label}={c.rounds_to_tolerance}" for c in result.cells))
    return EXIT_OK


def _read_partition(path: str, rows: int, n: int) -> np.ndarray:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read partition {path}: {exc}") from None
    if not isinstance(data, list) or len(data) != rows:
        raise InputError(f"partition must be a list of {rows} agent indices")
    part = np.asarray(data, dtype=int) - 1  # 1-based on disk
    if part.min() < 0 or part.max() >= n:
        raise InputError(f"partition indices must lie in 1..{n}")
    return part


def cmd_regress(args) -> int:
    g, spectrum = _load_connected(args.graph)
    out = Path(args.out)
    if args.dataset:
        try:
            x, y = harness.load_dataset(args.dataset)
        except (OSError, ValueError, StopIteration) as exc:
            raise InputError(f"cannot read dataset: {exc}") from None
        seed = None
    else:
        seed = harness.resolve_seed(args.seed)
        x, y = harness.synthetic_dataset(rows=args.rows, seed=seed, b=args.intercept)
        write_atomic(out / "dataset.csv", harness.dataset_to_csv(x, y))
    if args.partition:
        part = _read_partition(args.partition, x.size, g.n)
    else:
        part = harness.round_robin_partition(x.size, g.n)
    problem = harness.RegressionProblem(x, y, part, g.n, b=args.intercept)

    if args.delays is not None:
        delta = parse_delta(args.delta, spectrum, harness.DELAY_EXPERIMENT_SCALE)
        _check_delta(delta, spectrum)
        configs = harness.delay_configs(delta, parse_int_list(args.delays))
        title = "regression error, effect of delay"
    else:
        delayed_delta = parse_delta(args.delta, spectrum, harness.DELAY_EXPERIMENT_SCALE)
        _check_delta(delayed_delta, spectrum)
        configs = harness.comparison_configs(g, spectrum, args.delay, delayed_delta)
        if args.algorithm != "all":
            configs = [c for c in configs if c.kind.value == args.algorithm]
        title = "regression error, algorithm comparison"
    traces = harness.regression_comparison(problem, g, args.rounds, configs, spectrum=spectrum)
    results = {}
    for label, rt in traces.items():
        write_atomic(out / f"estimates_{label}.csv", rt.to_csv())
        results[label] = {
            "final_estimates": rt.estimates[-1].tolist(),
            "final_max_deviation": rt.final_max_deviation,
            "final_error": float(rt.errors[-1]),
        }
    payload = {
        "centralized_slope": problem.centralized_slope(),
        "intercept": args.intercept,
        "rows": int(x.size),
        "seed": seed,
        "results": results,
    }
    write_atomic(out / "regression.json", dump_json(_clean(payload)))
    if args.plot:
        _plot(out / "regress.png", {k: v.errors for k, v in traces.items()}, title)
    worst = max(r["final_max_deviation"] for r in results.values())
    print(f"a={format_float(problem.centralized_slope())} max deviation={format_float(worst)}")
    return EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="consensus-lab",
                                     description="Accelerated average consensus toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--graph", required=True, help="graph JSON file (1-based edges)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="trace file format")
    delta_help = "stepsize, a number or a multiple of 1/lambda_N such as '1/lambdaN'"

    p = sub.add_parser("analyze", parents=[common], help="delay stability/acceleration report")
    p.add_argument("--delta", required=True, help=delta_help)
    p.add_argument("--max-delay", type=int, default=64, help="cap on the r_d table")
    p.set_defaults(func=cmd_analyze)

    def add_run_flags(p, rounds: int, inputs_required: bool = True):
        p.add_argument("--rounds", type=int, default=rounds)
        if inputs_required:
            p.add_argument("--inputs", required=True, help="file or inline list, e.g. 1,2,3,4,5")
        p.add_argument("--plot", action="store_true", help="also render a PNG of e(k)")
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("simulate", parents=[common], help="run one consensus algorithm")
    p.add_argument("--algorithm", choices=[a.value for a in Algorithm], default="plain")
    p.add_argument("--delta", help=delta_help + " (default 1/lambdaN)")
    p.add_argument("--delay", type=int, default=1)
    add_run_flags(p, 200)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", parents=[common], help="delayed consensus over several delays")
    p.add_argument("--delta", help=delta_help + " (default 0.125/lambdaN)")
    p.add_argument("--delays", default="0,1,5,10")
    add_run_flags(p, 2000)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", parents=[common], help="compare the five algorithms")
    p.add_argument("--delta", help="stepsize of the delayed run (default 0.125/lambdaN)")
    p.add_argument("--delay", type=int, default=5)
    add_run_flags(p, 2000)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("regress", parents=[common], help="distributed slope regression")
    p.add_argument("--dataset", help="CSV with header x,y (default: synthetic)")
    p.add_argument("--partition", help="JSON list of 1-based agent indices, one per row")
    p.add_argument("--seed", type=int, help="synthetic data seed (env CONSENSUS_LAB_SEED)")
    p.add_argument("--rows", type=int, default=50, help="synthetic dataset size")
    p.add_argument("--intercept", type=float, default=harness.DEFAULT_INTERCEPT)
    p.add_argument("--algorithm", choices=["all"] + [a.value for a in Algorithm], default="all")
    p.add_argument("--delays", help="run delayed consensus for these delays instead")
    p.add_argument("--delta", help="stepsize of delayed runs (default 0.125/lambdaN)")
    p.add_argument("--delay", type=int, default=5)
    add_run_flags(p, 1000, inputs_required=False)
    p.set_defaults(func=cmd_regress)
    return parser


def _validate(args) -> None:
    if getattr(args, "rounds", 0) < 0:
        raise InputError("--rounds must be >= 0")
    if getattr(args, "delay", 1) < 1 and args.command in ("simulate", "compare", "regress"):
        raise InputError("--delay must be >= 1")
    if getattr(args, "workers", 1) < 1:
        raise InputError("--workers must be >= 1")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _validate(args)
        return args.func(args)
    except DisconnectedGraph as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DISCONNECTED
    except StepsizeOutOfRange as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STEPSIZE
    except (GraphError, InputError, LengthMismatch, ConfigMismatch, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConsensusLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
