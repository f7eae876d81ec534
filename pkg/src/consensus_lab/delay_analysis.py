"""Convergence certification for Laplacian consensus with outdated feedback.

Every disagreement mode ``i`` of ``x(k+1) = x(k) - delta L x(k-d)`` evolves as
the scalar recursion ``z(k+1) = z(k) - c z(k-d)`` with ``c = delta*lambda_i``,
whose characteristic polynomial is ``s^(d+1) - s^d + c``. All certificates
here reduce to facts about the roots of that polynomial.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateModeWarning,
    MarginalStability,
    NoRoot,
    StepsizeOutOfRange,
)
from .spectral import Spectrum, poly_roots_delay

MARGIN = 1e-12
D_BAR_CAP = 10**6
# Tolerance on d-hat sitting exactly on an integer (root on the unit circle).
D_HAT_TOL = 1e-9
PHI_TOL = 1e-15


def _modes(spectrum: Spectrum | Sequence[float]) -> np.ndarray:
    """Nonzero eigenvalues; a bare sequence is taken as the nonzero part already."""
    if isinstance(spectrum, Spectrum):
        return np.asarray(spectrum.nonzero, dtype=float)
    modes = np.atleast_1d(np.asarray(spectrum, dtype=float))
    if modes.size == 0 or np.any(modes <= 0):
        raise ValueError("mode eigenvalues must be positive")
    return modes


def _check_stepsize(modes: np.ndarray, delta: float) -> None:
    if not (delta > 0 and delta * modes.max() < 2.0):
        raise StepsizeOutOfRange(
            f"stepsize {delta!r} outside (0, 2/lambda_N) = (0, {2.0 / modes.max():.17g})")


def table1(d: int) -> float:
    """``d^d / (d+1)^(d+1)``, the gain at which the dominant root is smallest."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return d**d / (d + 1) ** (d + 1)


def mode_factor(delta_lambda: float, d: int) -> float:
    """Largest root modulus of ``s^(d+1) - s^d + delta_lambda``."""
    if d == 0:
        return abs(1.0 - delta_lambda)
    return poly_roots_delay(delta_lambda, d).max_modulus


def stability_check(spectrum: Spectrum | Sequence[float], delta: float, d: int) -> bool:
    """True iff every mode's characteristic roots lie strictly inside the unit circle.

    Raises :class:`MarginalStability` when some root is within 1e-12 of the
    circle, since the strict inequality cannot be decided at that tolerance.
    """
    if not delta > 0:
        raise StepsizeOutOfRange(f"stepsize must be positive, got {delta}")
    if d < 0:
        raise ValueError("delay must be >= 0")
    worst = max(mode_factor(delta * lam, d) for lam in _modes(spectrum))
    if abs(worst - 1.0) <= MARGIN:
        raise MarginalStability(f"root modulus {worst!r} is on the unit circle (d={d})")
    return worst < 1.0


def d_hat(delta_lambda: float) -> float:
    """Real-valued delay at which a mode with gain ``delta_lambda`` loses stability."""
    if delta_lambda <= 0:
        return math.inf
    return 0.5 * (math.pi / (2.0 * math.asin(delta_lambda / 2.0)) - 1.0)


def admissible_delay(spectrum: Spectrum | Sequence[float], delta: float) -> int:
    """Largest delay for which the delayed iteration is asymptotically stable.

    A mode is stable exactly for ``d < d_hat(delta*lambda_i)``, so the
    network bound is the largest integer strictly below the smallest
    ``d_hat``. Values beyond ``D_BAR_CAP`` are reported as ``D_BAR_CAP``
    (see :func:`admissible_delay_unbounded`).
    """
    modes = _modes(spectrum)
    _check_stepsize(modes, delta)
    worst = min(d_hat(delta * lam) for lam in modes)
    if worst > D_BAR_CAP:
        return D_BAR_CAP
    return max(0, math.ceil(worst - D_HAT_TOL) - 1)


def admissible_delay_unbounded(spectrum: Spectrum | Sequence[float], delta: float) -> bool:
    modes = _modes(spectrum)
    return min(d_hat(delta * lam) for lam in modes) > D_BAR_CAP


def phi_solve(x: float, d: int) -> float:
    """Solve ``sin(d phi) / sin((d+1) phi) = 1/x`` for ``phi`` in ``(0, pi/(d+1))``.

    The ratio increases from ``d/(d+1)`` to infinity on that interval, so a
    solution exists iff ``1/x > d/(d+1)``; it is found by bisection.
    """
    if d < 1:
        raise ValueError("phi_solve needs d >= 1")
    if not x > 0:
        raise NoRoot(f"x must be positive, got {x}")
    target = 1.0 / x
    if not target > d / (d + 1):
        raise NoRoot(f"ratio target {target!r} is not above d/(d+1) = {d / (d + 1)!r}")

    def g(phi: float) -> float:
        # sign-equivalent to ratio - target, bounded near the pole
        return math.sin(d * phi) - target * math.sin((d + 1) * phi)

    lo, hi = 0.0, math.pi / (d + 1)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi) or hi - lo < PHI_TOL:
            break
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    phi = 0.5 * (lo + hi)
    if not 0.0 < phi < math.pi / (d + 1) or abs(g(phi)) > 1e-12:
        raise NoRoot(f"bisection failed (residual {g(phi)!r})")
    return phi


def mode_accelerates(delta_lambda: float, d: int) -> bool:
    """Closed-form test that delay ``d`` shrinks this mode's factor below ``|1 - delta_lambda|``.

    ``d`` must beat both ``|1-c|/(1-|1-c|)`` and the log-ratio bound, where the
    angle solves ``sin(d phi)/sin((d+1) phi) = |1-c|`` (the disk radius).
    """
    r = abs(1.0 - delta_lambda)
    if r >= 1.0:
        return False
    if r <= MARGIN:
        # Both bounds tend to 0 as |1-c| -> 0: the mode converges in one step at d=0.
        return False
    if not d < r / (1.0 - r):
        return False
    try:
        phi = phi_solve(1.0 / r, d)
    except NoRoot:
        return False
    bound = math.log(delta_lambda / math.sqrt(r * r + 1.0 - 2.0 * r * math.cos(phi))) / math.log(r)
    return d < bound


def acceleration_delay_bound(spectrum: Spectrum | Sequence[float], delta: float,
                             cap: int | None = None) -> int:
    """Largest ``d`` such that every ``1..d`` is certified to beat the delay-free factor.

    Scans ``d = 1, 2, ...`` until some mode fails :func:`mode_accelerates`,
    stopping at the admissible delay (or ``cap``). Returns 0 when ``d = 1``
    already fails.
    """
    modes = _modes(spectrum)
    _check_stepsize(modes, delta)
    gains = delta * modes
    if np.any(np.abs(1.0 - gains) <= MARGIN):
        warnings.warn("a mode has delta*lambda == 1; its delay-free factor is 0 and no "
                      "delay can beat it", DegenerateModeWarning, stacklevel=2)
        return 0
    limit = admissible_delay(modes, delta)
    if cap is not None:
        limit = min(limit, cap)
    d = 0
    while d < limit and all(mode_accelerates(c, d + 1) for c in gains):
        d += 1
    return d


@dataclass(frozen=True)
class ConvergenceFactor:
    r: float
    t: float
    stable: bool


def convergence_time(r: float) -> float:
    """Rounds needed to shrink the disagreement by 1/e; infinite when r >= 1."""
    if r >= 1.0:
        return math.inf
    if r == 0.0:
        return 0.0
    return 1.0 / math.log(1.0 / r)


def convergence_factor(spectrum: Spectrum | Sequence[float], delta: float, d: int) -> ConvergenceFactor:
    modes = _modes(spectrum)
    r = max(mode_factor(delta * lam, d) for lam in modes)
    return ConvergenceFactor(r=r, t=convergence_time(r), stable=r < 1.0 - MARGIN)


def kuruklis_region_check(c: float, d: int, a_inv: float) -> bool:
    """Whether every root of ``s^(d+1) - s^d + c`` lies in ``|s| < 1/|a_inv|``.

    Closed-form predicate; independent of any root computation.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    a = abs(a_inv)
    if not 0 < a < (d + 1) / d:
        return False
    phi = phi_solve(a, d)
    lower = (a - 1.0) / a ** (d + 1)
    upper = math.sqrt(a * a + 1.0 - 2.0 * a * math.cos(phi)) / a ** (d + 1)
    return lower < c < upper


def monotone_flag(spectrum: Spectrum | Sequence[float], delta: float, d_accel: int) -> bool:
    """``d^d/(d+1)^(d+1) < delta*lambda_i`` for all modes and all ``d`` in ``1..max(1, d_accel)``."""
    smallest_gain = delta * _modes(spectrum).min()
    return all(table1(d) < smallest_gain for d in range(1, max(1, d_accel) + 1))


@dataclass
class DelayReport:
    delta: float
    eigenvalues: list[float]
    r_d: dict[int, float]
    t_d: dict[int, float]
    d_bar: int
    d_bar_unbounded: bool
    d_accel: int
    monotone_flag: bool
    accel_delays_verified: list[int] = field(default_factory=list)

    @property
    def lambdas(self) -> list[float]:
        return self.eigenvalues[1:]

    def to_dict(self) -> dict:
        def num(v: float):
            return None if not math.isfinite(v) else v

        return {
            "delta": self.delta,
            "eigenvalues": list(self.eigenvalues),
            "lambdas": list(self.lambdas),
            "r_d": {str(d): num(v) for d, v in self.r_d.items()},
            "t_d": {str(d): num(v) for d, v in self.t_d.items()},
            "d_bar": self.d_bar,
            "d_bar_unbounded": self.d_bar_unbounded,
            "d_accel": self.d_accel,
            "monotone_flag": self.monotone_flag,
            "accel_delays_verified": list(self.accel_delays_verified),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DelayReport":
        def num(v):
            return math.inf if v is None else float(v)

        return cls(
            delta=float(data["delta"]),
            eigenvalues=[float(v) for v in data["eigenvalues"]],
            r_d={int(k): num(v) for k, v in data["r_d"].items()},
            t_d={int(k): num(v) for k, v in data["t_d"].items()},
            d_bar=int(data["d_bar"]),
            d_bar_unbounded=bool(data["d_bar_unbounded"]),
            d_accel=int(data["d_accel"]),
            monotone_flag=bool(data["monotone_flag"]),
            accel_delays_verified=[int(v) for v in data.get("accel_delays_verified", [])],
        )


def analyze(spectrum: Spectrum, delta: float, delays: Iterable[int] | None = None,
            max_delay: int = 64) -> DelayReport:
    """Full delay report; the r_d table covers ``0..min(d_bar, max_delay)`` by default."""
    modes = _modes(spectrum)
    _check_stepsize(modes, delta)
    d_bar = admissible_delay(spectrum, delta)
    if delays is None:
        delays = range(0, min(d_bar, max_delay) + 1)
    delays = sorted(set(int(d) for d in delays))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateModeWarning)
        d_accel = acceleration_delay_bound(spectrum, delta, cap=max_delay)
    r_d: dict[int, float] = {}
    t_d: dict[int, float] = {}
    for d in delays:
        cf = convergence_factor(spectrum, delta, d)
        r_d[d] = cf.r
        t_d[d] = cf.t
    r0 = r_d[0] if 0 in r_d else convergence_factor(spectrum, delta, 0).r
    verified = [d for d in delays if d >= 1 and r_d[d] < r0]
    eig = spectrum.eigenvalues if isinstance(spectrum, Spectrum) else np.concatenate([[0.0], modes])
    return DelayReport(
        delta=float(delta),
        eigenvalues=[float(v) for v in eig],
        r_d=r_d,
        t_d=t_d,
        d_bar=d_bar,
        d_bar_unbounded=admissible_delay_unbounded(spectrum, delta),
        d_accel=d_accel,
        monotone_flag=monotone_flag(spectrum, delta, d_accel),
        accel_delays_verified=verified,
    )
