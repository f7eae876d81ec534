"""Experiment orchestration: factor estimation, delay sweeps, algorithm
comparisons and the two-consensus linear-regression workload."""
from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from . import delay_analysis
from .consensus import (
    Algorithm,
    AlgorithmConfig,
    RunTrace,
    format_float,
    run,
    squared_error_log,
)
from .errors import InsufficientData, LengthMismatch
from .graph import Graph, laplacian
from .spectral import Spectrum, eigendecompose

# Points below this fraction of the initial disagreement are treated as rounding noise.
NOISE_REL = 1e-12
MIN_ROUNDS = 50
MIN_FIT_POINTS = 8
DEFAULT_TOLERANCE = 1e-8
DEFAULT_INTERCEPT = 4.267
DEFAULT_SEED = 2002
SEED_ENV = "CONSENSUS_LAB_SEED"
# Stepsize scale (times 1/lambda_N) for delay experiments: small enough that
# d=5 is stable on every graph, since delta*lambda <= 1/8 < 2cos(5pi/11).
DELAY_EXPERIMENT_SCALE = 0.125


class DecayFit(NamedTuple):
    factor: float
    noise_limited: bool
    points: int


def fit_decay(norms: Sequence[float], tail_fraction: float = 0.5) -> DecayFit:
    """Least-squares geometric rate of a decaying positive sequence.

    Only the stretch before the sequence sinks under ``NOISE_REL`` times its
    starting value is used; the fit covers the last ``tail_fraction`` of it.
    """
    norms = np.asarray(norms, dtype=float)
    if not 0.0 < tail_fraction < 1.0:
        raise ValueError("tail_fraction must lie in (0, 1)")
    if norms.size < MIN_ROUNDS:
        raise InsufficientData(f"need at least {MIN_ROUNDS} rounds, got {norms.size}")
    start_norm = norms[0] if norms[0] > 0 else norms.max()
    if not start_norm > 0:
        return DecayFit(0.0, True, 0)
    above = np.flatnonzero(norms > NOISE_REL * start_norm)
    end = int(above[-1]) if above.size else 0
    if end + 1 < MIN_FIT_POINTS:
        return DecayFit(0.0, True, end + 1)
    begin = int(round((1.0 - tail_fraction) * end))
    begin = min(begin, end + 1 - MIN_FIT_POINTS)
    ks = np.arange(begin, end + 1, dtype=float)
    window = norms[begin:end + 1]
    if np.any(~np.isfinite(window)):
        return DecayFit(math.inf, False, window.size)
    logs = np.log(np.maximum(window, np.finfo(float).tiny))
    slope = np.polyfit(ks, logs, 1)[0]
    return DecayFit(float(math.exp(slope)), end < norms.size - 1, window.size)


def estimate_factor(trace: RunTrace | Sequence[float], tail_fraction: float = 0.5) -> float:
    """Empirical asymptotic convergence factor of a run (or of a raw norm sequence).

    Returns 0.0 when the run reaches rounding noise too early to fit.
    """
    norms = trace.disagreement() if isinstance(trace, RunTrace) else trace
    return fit_decay(norms, tail_fraction).factor


def rounds_to_tolerance(trace: RunTrace, tol: float = DEFAULT_TOLERANCE) -> int | None:
    """First round after which every agent stays within ``tol`` of the average."""
    dev = np.abs(trace.states - trace.average).max(axis=1)
    bad = np.flatnonzero(~(dev < tol))
    if bad.size == 0:
        return 0
    if bad[-1] == trace.rounds:
        return None
    return int(bad[-1]) + 1


def summarize(trace: RunTrace, spectrum: Spectrum | None = None,
              g: Graph | None = None) -> dict:
    """JSON-ready summary: final error, empirical factor, rounds and flags."""
    flags = dict(trace.flags)
    factor = None
    if trace.rounds + 1 >= MIN_ROUNDS and not flags.get("diverged"):
        fit = fit_decay(trace.disagreement())
        factor = fit.factor
        flags["converged_to_noise"] = fit.points < MIN_FIT_POINTS
    unstable = bool(flags.get("diverged"))
    cfg = trace.config
    if spectrum is None and g is not None:
        spectrum = eigendecompose(laplacian(g))
    analytic = None
    if spectrum is not None and spectrum.n > 1 and cfg.kind in (Algorithm.PLAIN, Algorithm.DELAYED):
        cf = delay_analysis.convergence_factor(spectrum, cfg.delta, cfg.d)
        analytic = cf.r
        unstable = unstable or not cf.stable
    if factor is not None and factor >= 1.0:
        unstable = True
    flags["unstable"] = unstable
    return {
        "algorithm": cfg.label(),
        "delta": cfg.delta,
        "d": cfg.d,
        "rounds": trace.rounds,
        "final_error": float(trace.errors[-1]),
        "final_max_deviation": float(np.abs(trace.states[-1] - trace.average).max()),
        "empirical_factor": factor,
        "analytic_factor": analytic,
        "rounds_to_tolerance": rounds_to_tolerance(trace),
        "unstable": unstable,
        "flags": flags,
    }


@dataclass
class SweepCell:
    label: str
    config: AlgorithmConfig
    empirical_factor: float | None
    analytic_r_d: float | None
    rounds_to_tolerance: int | None
    stable: bool
    trace: RunTrace

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "algorithm": self.config.kind.value,
            "delta": self.config.delta,
            "d": self.config.d,
            "empirical_factor": self.empirical_factor,
            "analytic_r_d": self.analytic_r_d,
            "rounds_to_tolerance": self.rounds_to_tolerance,
            "stable": self.stable,
            "final_error": float(self.trace.errors[-1]),
        }


@dataclass
class SweepResult:
    axis: list
    cells: list[SweepCell] = field(default_factory=list)

    def cell(self, label: str) -> SweepCell:
        for c in self.cells:
            if c.label == label:
                return c
        raise KeyError(label)

    def to_dict(self) -> dict:
        return {"axis": list(self.axis), "cells": [c.to_dict() for c in self.cells]}


def _run_cell(args) -> SweepCell:
    config, g, inputs, rounds, spectrum = args
    trace = run(config, g, inputs, rounds, spectrum=spectrum)
    analytic = None
    stable = not trace.flags["diverged"]
    if config.kind in (Algorithm.PLAIN, Algorithm.DELAYED) and spectrum.n > 1:
        cf = delay_analysis.convergence_factor(spectrum, config.delta, config.d)
        analytic = cf.r
        stable = stable and cf.stable
    factor = None
    if not trace.flags["diverged"] and trace.rounds + 1 >= MIN_ROUNDS:
        factor = estimate_factor(trace)
    return SweepCell(label=config.label(), config=config, empirical_factor=factor,
                     analytic_r_d=analytic, rounds_to_tolerance=rounds_to_tolerance(trace),
                     stable=stable, trace=trace)


def _run_cells(jobs: list, workers: int) -> list[SweepCell]:
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_cell, jobs))
    return [_run_cell(j) for j in jobs]


def delay_sweep(g: Graph, delta: float, delays: Sequence[int], inputs: Sequence[float],
                rounds: int, workers: int = 1, spectrum: Spectrum | None = None) -> SweepResult:
    """One delayed run per delay plus the delay-free baseline, annotated with analytic ``r_d``."""
    spectrum = spectrum or eigendecompose(laplacian(g))
    axis = sorted({0, *(int(d) for d in delays)})
    jobs = []
    for d in axis:
        if d == 0:
            cfg = AlgorithmConfig(Algorithm.PLAIN, delta=delta)
        else:
            cfg = AlgorithmConfig(Algorithm.DELAYED, delta=delta, d=d)
        jobs.append((cfg, g, inputs, rounds, spectrum))
    cells = _run_cells(jobs, workers)
    # The baseline is labelled like the other cells of the delay axis.
    cells[0].label = "delayed_d0"
    return SweepResult(axis=axis, cells=cells)


def comparison_configs(g: Graph, spectrum: Spectrum, delay: int = 5,
                       delayed_delta: float | None = None) -> list[AlgorithmConfig]:
    ln = spectrum.lambda_max
    if delayed_delta is None:
        delayed_delta = DELAY_EXPERIMENT_SCALE / ln
    return [
        AlgorithmConfig.for_graph(Algorithm.PLAIN, g, spectrum=spectrum),
        AlgorithmConfig.for_graph(Algorithm.DELAYED, g, delta=delayed_delta, d=delay,
                                  spectrum=spectrum),
        AlgorithmConfig.for_graph(Algorithm.NAG_C, g, spectrum=spectrum),
        AlgorithmConfig.for_graph(Algorithm.NAG_SC, g, spectrum=spectrum),
        AlgorithmConfig.for_graph(Algorithm.TM, g, spectrum=spectrum),
    ]


def compare_algorithms(g: Graph, inputs: Sequence[float], rounds: int, delay: int = 5,
                       delayed_delta: float | None = None, workers: int = 1,
                       spectrum: Spectrum | None = None) -> SweepResult:
    """Run all five engines with parameters taken from the graph spectrum.

    Plain and NAG-C use ``1/lambda_N``; the delayed run uses
    ``delayed_delta`` (default ``1/(8 lambda_N)``), where delay 5 is stable.
    """
    spectrum = spectrum or eigendecompose(laplacian(g))
    configs = comparison_configs(g, spectrum, delay, delayed_delta)
    cells = _run_cells([(c, g, inputs, rounds, spectrum) for c in configs], workers)
    return SweepResult(axis=[c.label() for c in configs], cells=cells)


# --------------------------------------------------------------------- regression

@dataclass
class RegressionProblem:
    """Slope fit ``y ~ a x + b`` with known intercept, sharded over agents.

    ``partition[m]`` is the agent that owns data row ``m``.
    """

    x: np.ndarray
    y: np.ndarray
    partition: np.ndarray
    n_agents: int
    b: float = DEFAULT_INTERCEPT

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.partition = np.asarray(self.partition, dtype=int)
        if self.x.shape != self.y.shape or self.x.ndim != 1:
            raise LengthMismatch("x and y must be equal-length vectors")
        if self.partition.shape != self.x.shape:
            raise LengthMismatch("partition must assign every data row to an agent")
        if self.partition.size and (self.partition.min() < 0 or self.partition.max() >= self.n_agents):
            raise LengthMismatch(f"partition entries must lie in 0..{self.n_agents - 1}")

    def references(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-agent numerator ``sum x(y-b)`` and denominator ``sum x^2`` of the slope."""
        r1 = np.zeros(self.n_agents)
        r2 = np.zeros(self.n_agents)
        np.add.at(r1, self.partition, self.x * (self.y - self.b))
        np.add.at(r2, self.partition, self.x**2)
        return r1, r2

    def centralized_slope(self) -> float:
        den = float(np.sum(self.x**2))
        if den == 0:
            raise ZeroDivisionError("sum of x^2 is zero")
        return float(np.sum(self.x * (self.y - self.b))) / den


def round_robin_partition(rows: int, n_agents: int) -> np.ndarray:
    return np.arange(rows) % n_agents


def block_partition(rows: int, n_agents: int) -> np.ndarray:
    """Contiguous shards: rows ``0..m/n-1`` to agent 0 and so on."""
    return (np.arange(rows) * n_agents) // rows


def resolve_seed(seed: int | None = None) -> int:
    if seed is not None:
        return int(seed)
    env = os.environ.get(SEED_ENV)
    return int(env) if env else DEFAULT_SEED


def synthetic_dataset(rows: int = 50, seed: int | None = None, slope: float = 1.5,
                      b: float = DEFAULT_INTERCEPT, noise: float = 3.0,
                      x_range: tuple[float, float] = (5.0, 25.0)) -> tuple[np.ndarray, np.ndarray]:
    """Seeded ``y = slope*x + b + N(0, noise^2)`` with ``x`` uniform on ``x_range``."""
    rng = np.random.default_rng(resolve_seed(seed))
    x = rng.uniform(*x_range, size=rows)
    y = slope * x + b + rng.normal(0.0, noise, size=rows)
    return x, y


def load_dataset(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read a two-column ``x,y`` CSV with a header row."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip().lower() for h in next(reader)]
        if header[:2] != ["x", "y"]:
            raise ValueError(f"{path}: expected header 'x,y', got {','.join(header)}")
        xs, ys = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            if len(row) < 2:
                raise ValueError(f"{path}:{lineno}: expected two columns")
            xs.append(float(row[0]))
            ys.append(float(row[1]))
    return np.array(xs), np.array(ys)


def dataset_to_csv(x: Sequence[float], y: Sequence[float]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y"])
    for a, b in zip(x, y):
        w.writerow([format_float(a), format_float(b)])
    return buf.getvalue()


@dataclass
class RegressionTrace:
    """Per-round slope estimates ``eta1/eta2`` of every agent."""

    config: AlgorithmConfig
    slope: float
    estimates: np.ndarray
    errors: np.ndarray
    numerator: RunTrace
    denominator: RunTrace

    @property
    def final_max_deviation(self) -> float:
        return float(np.nanmax(np.abs(self.estimates[-1] - self.slope)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        n = self.estimates.shape[1]
        w.writerow(["k"] + [f"a_{i + 1}" for i in range(n)] + ["e"])
        for k, (row, e) in enumerate(zip(self.estimates, self.errors)):
            w.writerow([k] + [format_float(v) for v in row] + [format_float(e)])
        return buf.getvalue()


def solve_regression(problem: RegressionProblem, g: Graph, config: AlgorithmConfig,
                     rounds: int, spectrum: Spectrum | None = None) -> RegressionTrace:
    """Run the numerator and denominator consensus problems in lockstep.

    Cells where an agent's denominator estimate is exactly zero hold NaN.
    """
    if problem.n_agents != g.n:
        raise LengthMismatch(f"problem has {problem.n_agents} agents, graph has {g.n}")
    r1, r2 = problem.references()
    slope = problem.centralized_slope()
    num = run(config, g, r1, rounds, spectrum=spectrum)
    den = run(config, g, r2, rounds, spectrum=spectrum)
    k = min(num.states.shape[0], den.states.shape[0])
    eta1, eta2 = num.states[:k], den.states[:k]
    with np.errstate(divide="ignore", invalid="ignore"):
        est = np.where(eta2 != 0, eta1 / np.where(eta2 != 0, eta2, 1.0), np.nan)
    errors = np.array([
        math.nan if np.any(np.isnan(row)) else squared_error_log(row, slope) for row in est
    ])
    return RegressionTrace(config=config, slope=slope, estimates=est, errors=errors,
                           numerator=num, denominator=den)


def regression_comparison(problem: RegressionProblem, g: Graph, rounds: int,
                          configs: Sequence[AlgorithmConfig],
                          spectrum: Spectrum | None = None) -> dict[str, RegressionTrace]:
    spectrum = spectrum or eigendecompose(laplacian(g))
    return {c.label(): solve_regression(problem, g, c, rounds, spectrum=spectrum) for c in configs}


def delay_configs(delta: float, delays: Sequence[int]) -> list[AlgorithmConfig]:
    out = []
    for d in sorted({0, *(int(v) for v in delays)}):
        if d == 0:
            out.append(AlgorithmConfig(Algorithm.PLAIN, delta=delta))
        else:
            out.append(AlgorithmConfig(Algorithm.DELAYED, delta=delta, d=d))
    return out

