"""Round-based average-consensus engines.

Five synchronous iterations over a fixed graph, all driven by the Laplacian
``L`` (so each agent only reads its own buffers and its neighbours'):

* ``plain``   ``x(k+1) = (I - delta L) x(k)``
* ``delayed`` ``x(k+1) = x(k) - delta L x(k-d)``, zero history before k=0
* ``nagc``    Nesterov momentum with the ``(k+1)/(k+3)`` schedule
* ``nagsc``   Nesterov momentum for strongly convex costs
* ``tm``      Triple Momentum

The momentum methods minimize ``x^T L x / 2`` restricted to the
disagreement subspace, where ``lambda_2`` and ``lambda_N`` play the roles of
the strong-convexity and smoothness constants.
"""
from __future__ import annotations

import csv
import io
import math
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import ConfigMismatch, DisconnectedGraph, LengthMismatch, StepsizeOutOfRange
from .graph import Graph, is_connected, laplacian
from .spectral import Spectrum, eigendecompose

DIVERGENCE_LIMIT = 1e150
LOG_FLOOR = -745.0


class Algorithm(str, Enum):
    PLAIN = "plain"
    DELAYED = "delayed"
    NAG_C = "nagc"
    NAG_SC = "nagsc"
    TM = "tm"


def nag_sc_parameters(lambda2: float, lambda_n: float) -> tuple[float, float]:
    """``(alpha, beta)`` for the strongly convex Nesterov iteration."""
    s2, sn = math.sqrt(lambda2), math.sqrt(lambda_n)
    return 1.0 / lambda_n, (sn - s2) / (sn + s2)


def tm_rho(lambda2: float, lambda_n: float) -> float:
    return 1.0 - math.sqrt(lambda2 / lambda_n)


def tm_parameters(lambda2: float, lambda_n: float) -> tuple[float, float, float, float]:
    """``(alpha, beta, gamma, delta)`` of Triple Momentum with ``rho = 1 - sqrt(lambda2/lambdaN)``."""
    rho = tm_rho(lambda2, lambda_n)
    return (
        (1.0 + rho) / lambda_n,
        rho**2 / (2.0 - rho),
        rho**2 / ((1.0 + rho) * (2.0 - rho)),
        rho**2 / (1.0 - rho**2),
    )


@dataclass(frozen=True)
class AlgorithmConfig:
    kind: Algorithm
    delta: float | None = None
    d: int = 0
    lambda2: float | None = None
    lambda_n: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Algorithm(self.kind))

    @classmethod
    def for_graph(cls, kind: Algorithm | str, g: Graph, delta: float | None = None,
                  d: int | None = None, spectrum: Spectrum | None = None) -> "AlgorithmConfig":
        """Fill spectral parameters from the graph; ``delta`` defaults to ``1/lambda_N``."""
        kind = Algorithm(kind)
        if spectrum is None:
            spectrum = eigendecompose(laplacian(g))
        l2, ln = spectrum.lambda2, spectrum.lambda_max
        if g.n == 1:
            l2 = ln = 1.0  # L = 0; any positive placeholders leave x unchanged
        if kind in (Algorithm.PLAIN, Algorithm.DELAYED, Algorithm.NAG_C) and delta is None:
            delta = 1.0 / ln
        if kind is Algorithm.DELAYED:
            d = 1 if d is None else d
        else:
            d = 0
        if kind in (Algorithm.NAG_SC, Algorithm.TM):
            delta = None
        return cls(kind=kind, delta=delta, d=d, lambda2=l2, lambda_n=ln)

    def momentum(self) -> tuple[float, ...]:
        if self.kind is Algorithm.NAG_SC:
            return nag_sc_parameters(self.lambda2, self.lambda_n)
        if self.kind is Algorithm.TM:
            return tm_parameters(self.lambda2, self.lambda_n)
        return ()

    def validate(self, spectrum: Spectrum) -> None:
        kind = self.kind
        ln = spectrum.lambda_max
        if kind in (Algorithm.PLAIN, Algorithm.DELAYED, Algorithm.NAG_C):
            if self.delta is None:
                raise ConfigMismatch(f"{kind.value} needs a stepsize")
            if not self.delta > 0 or (ln > 0 and not self.delta * ln < 2.0):
                raise StepsizeOutOfRange(
                    f"stepsize {self.delta!r} outside (0, 2/lambda_N) for lambda_N={ln!r}")
        if kind is Algorithm.DELAYED and self.d < 1:
            raise ConfigMismatch(f"delayed consensus needs d >= 1, got {self.d}")
        if kind in (Algorithm.NAG_SC, Algorithm.TM):
            l2, lmax = self.lambda2, self.lambda_n
            if l2 is None or lmax is None:
                raise ConfigMismatch(f"{kind.value} needs lambda2 and lambda_n")
            if not 0 < l2 <= lmax:
                raise ConfigMismatch(f"need 0 < lambda2 <= lambda_n, got {l2}, {lmax}")
            if spectrum.n > 1:
                for given, actual in ((l2, spectrum.lambda2), (lmax, ln)):
                    if abs(given - actual) > 1e-8 * max(1.0, abs(actual)):
                        raise ConfigMismatch(
                            f"spectral parameter {given!r} does not match graph value {actual!r}")

    def label(self) -> str:
        if self.kind is Algorithm.DELAYED:
            return f"delayed_d{self.d}"
        return self.kind.value


@dataclass(frozen=True)
class ConsensusState:
    """Snapshot after round ``k``; ``memory`` layout depends on the algorithm.

    plain   ()
    delayed (x(k-d), ..., x(k-1))         oldest first, zeros before k=0
    nagc    (y(k),)
    nagsc   (x(k-1),)
    tm      (xi(k-1), xi(k))              x is the read-out of these
    """

    config: AlgorithmConfig
    lap: np.ndarray
    k: int
    x: np.ndarray
    memory: tuple[np.ndarray, ...]
    average: float


def init(config: AlgorithmConfig, g: Graph, inputs: Sequence[float],
         spectrum: Spectrum | None = None) -> ConsensusState:
    inputs = np.asarray(inputs, dtype=float)
    if inputs.shape != (g.n,):
        raise LengthMismatch(f"expected {g.n} inputs, got shape {inputs.shape}")
    if not is_connected(g):
        raise DisconnectedGraph("consensus requires a connected graph")
    lap = laplacian(g)
    if spectrum is None:
        spectrum = eigendecompose(lap)
    config.validate(spectrum)
    x = inputs.copy()
    kind = config.kind
    if kind is Algorithm.DELAYED:
        memory = tuple(np.zeros(g.n) for _ in range(config.d))
    elif kind is Algorithm.NAG_C:
        memory = (inputs.copy(),)
    elif kind is Algorithm.NAG_SC:
        memory = (inputs.copy(),)
    elif kind is Algorithm.TM:
        memory = (inputs.copy(), inputs.copy())
    else:
        memory = ()
    return ConsensusState(config=config, lap=lap, k=0, x=x, memory=memory,
                          average=float(inputs.mean()))


def step(state: ConsensusState) -> ConsensusState:
    """Advance one synchronous round; every agent reads round-k buffers only."""
    cfg, lap, x, k = state.config, state.lap, state.x, state.k
    kind = cfg.kind
    if kind is Algorithm.PLAIN:
        x_new = x - cfg.delta * (lap @ x)
        memory = ()
    elif kind is Algorithm.DELAYED:
        window = state.memory + (x,)
        x_new = x - cfg.delta * (lap @ window[0])
        memory = window[1:]
    elif kind is Algorithm.NAG_C:
        (y,) = state.memory
        y_new = x - cfg.delta * (lap @ x)
        x_new = y_new + ((k + 1) / (k + 3)) * (y_new - y)
        memory = (y_new,)
    elif kind is Algorithm.NAG_SC:
        alpha, beta = cfg.momentum()
        (x_prev,) = state.memory
        y = (1.0 + beta) * x - beta * x_prev
        x_new = y - alpha * (lap @ y)
        memory = (x,)
    else:
        alpha, beta, gamma, delta_tm = cfg.momentum()
        xi_prev, xi = state.memory
        y = (1.0 + gamma) * xi - gamma * xi_prev
        xi_new = (1.0 + beta) * xi - beta * xi_prev - alpha * (lap @ y)
        x_new = (1.0 + delta_tm) * xi_new - delta_tm * xi
        memory = (xi, xi_new)
    return replace(state, k=k + 1, x=x_new, memory=memory)


def squared_error_log(x: np.ndarray, target: float) -> float:
    """``log sum_i (x_i - target)^2`` clamped below at -745."""
    s = float(np.sum((x - target) ** 2))
    if s == 0.0:
        return LOG_FLOOR
    if not math.isfinite(s):
        return math.inf
    return max(LOG_FLOOR, math.log(s))


@dataclass
class RunTrace:
    """States ``x(0..K)`` of one run plus the log squared error per round."""

    config: AlgorithmConfig
    inputs: np.ndarray
    states: np.ndarray
    errors: np.ndarray
    flags: dict[str, bool] = field(default_factory=dict)

    @property
    def average(self) -> float:
        return float(np.mean(self.inputs))

    @property
    def rounds(self) -> int:
        return self.states.shape[0] - 1

    @property
    def n(self) -> int:
        return self.states.shape[1]

    def disagreement(self) -> np.ndarray:
        """Euclidean norm of ``x(k) - mean(inputs) * 1`` per round."""
        return np.linalg.norm(self.states - self.average, axis=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k"] + [f"x_{i + 1}" for i in range(self.n)] + ["e"])
        for k, (row, e) in enumerate(zip(self.states, self.errors)):
            w.writerow([k] + [format_float(v) for v in row] + [format_float(e)])
        return buf.getvalue()

    @staticmethod
    def parse_csv(text: str) -> tuple[np.ndarray, np.ndarray]:
        rows = list(csv.reader(io.StringIO(text)))
        body = np.array([[float(v) for v in r] for r in rows[1:]])
        if body.size == 0:
            return np.empty((0, len(rows[0]) - 2)), np.empty(0)
        return body[:, 1:-1], body[:, -1]


def format_float(v: float) -> str:
    return "%.17g" % v


def run(config: AlgorithmConfig, g: Graph, inputs: Sequence[float], rounds: int,
        spectrum: Spectrum | None = None) -> RunTrace:
    """Run ``rounds`` synchronous rounds and record every state.

    A run that exceeds 1e150 in magnitude is cut short and flagged
    ``diverged``; divergence is never raised as an error.
    """
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    state = init(config, g, inputs, spectrum=spectrum)
    states = [state.x]
    diverged = False
    for _ in range(rounds):
        state = step(state)
        if not np.all(np.isfinite(state.x)) or np.abs(state.x).max() > DIVERGENCE_LIMIT:
            diverged = True
            break
        states.append(state.x)
    arr = np.vstack(states)
    avg = state.average
    errors = np.array([squared_error_log(row, avg) for row in arr])
    return RunTrace(config=config, inputs=np.asarray(inputs, dtype=float), states=arr,
                    errors=errors, flags={"diverged": diverged})


def diagonalize(trace_states: np.ndarray, spectrum: Spectrum) -> np.ndarray:
    """Modal coordinates ``z(k) = T^T x(k)`` for every recorded round."""
    return trace_states @ spectrum.vectors
