import math
import warnings

import mpmath as mp
import numpy as np
import pytest

from conftest import ORACLE_R_D
from consensus_lab.delay_analysis import (
    DelayReport,
    acceleration_delay_bound,
    admissible_delay,
    admissible_delay_unbounded,
    analyze,
    convergence_factor,
    convergence_time,
    d_hat,
    kuruklis_region_check,
    mode_accelerates,
    mode_factor,
    monotone_flag,
    phi_solve,
    stability_check,
    table1,
)
from consensus_lab.errors import (
    DegenerateModeWarning,
    MarginalStability,
    NoRoot,
    StepsizeOutOfRange,
)


def mp_max_modulus(c, d):
    mp.mp.dps = 30
    coeffs = [1, -1] + [0] * (d - 1) + [c]
    return float(max(abs(z) for z in mp.polyroots(coeffs, maxsteps=400, extraprec=200)))


@pytest.mark.parametrize("scale", sorted(ORACLE_R_D))
def test_admissible_delay_matches_oracle(spec5, scale):
    delta = scale / spec5.lambda_max
    expected = ORACLE_R_D[scale]
    assert admissible_delay(spec5, delta) == len(expected) - 1
    for d, r in enumerate(expected):
        assert convergence_factor(spec5, delta, d).r == pytest.approx(r, abs=1e-10)
    try:
        assert not stability_check(spec5, delta, len(expected))
    except MarginalStability:
        # at delta = 1/lambda_N the top mode has gain 1: roots exactly on the circle
        assert scale == 1.0


def test_admissible_delay_single_mode():
    # d_hat(0.1) = 15.2...; d = 15 is the last stable delay
    assert d_hat(0.1) == pytest.approx(15.2, abs=0.1)
    assert admissible_delay([1.0], 0.1) == 15
    assert stability_check([1.0], 0.1, 15)
    assert not stability_check([1.0], 0.1, 16)


def test_admissible_delay_tiny_gain_is_capped():
    assert admissible_delay([1.0], 1e-12) == 10**6
    assert admissible_delay_unbounded([1.0], 1e-12)
    assert not admissible_delay_unbounded([1.0], 0.1)


def test_stepsize_validation(spec5):
    with pytest.raises(StepsizeOutOfRange):
        admissible_delay(spec5, 2.0 / spec5.lambda_max)
    with pytest.raises(StepsizeOutOfRange):
        stability_check(spec5, 0.0, 1)


def test_marginal_raises():
    # s^2 - s + 1 has its roots on the unit circle
    with pytest.raises(MarginalStability):
        stability_check([1.0], 1.0, 1)


def test_d_hat_boundary_is_exact():
    for d in range(1, 7):
        c = 2 * math.sin(math.pi / (2 * (2 * d + 1)))
        assert d_hat(c) == pytest.approx(d, abs=1e-12)
        assert mp_max_modulus(c, d) == pytest.approx(1.0, abs=1e-12)


def test_table1_values():
    assert table1(1) == 0.25
    assert table1(3) == 27 / 256
    with pytest.raises(ValueError):
        table1(0)


def test_mode_factor_d0():
    assert mode_factor(0.3, 0) == pytest.approx(0.7)
    assert mode_factor(1.7, 0) == pytest.approx(0.7)


def test_phi_solve():
    assert phi_solve(0.9, 1) == pytest.approx(math.acos(0.45), abs=1e-12)
    for d in (1, 3, 6):
        for x in (0.3, 0.8, 1.0, 1.1):
            if 1 / x <= d / (d + 1):
                continue
            phi = phi_solve(x, d)
            assert 0 < phi < math.pi / (d + 1)
            assert math.sin(d * phi) / math.sin((d + 1) * phi) == pytest.approx(1 / x, rel=1e-9)
    with pytest.raises(NoRoot):
        phi_solve(1.5, 2)


@pytest.mark.parametrize("d", [1, 2, 4])
def test_kuruklis_region_matches_roots(d):
    disagreements = 0
    for a in (0.6, 0.9, 1.0, 1.05, 1.15):
        if not a < (d + 1) / d:
            continue
        for c in np.linspace(0.01, 1.2, 25):
            inside = mp_max_modulus(c, d) < 1 / a
            if abs(mp_max_modulus(c, d) - 1 / a) < 1e-9:
                continue
            disagreements += kuruklis_region_check(c, d, a) != inside
    assert disagreements == 0


def test_mode_accelerates_is_sound():
    # whenever the closed-form test says "accelerates", the roots agree
    certified = 0
    for c in np.linspace(0.02, 0.98, 49):
        for d in range(1, 9):
            if mode_accelerates(c, d):
                certified += 1
                assert mp_max_modulus(c, d) < abs(1 - c)
    assert certified > 20


def test_acceleration_bound(spec5):
    assert acceleration_delay_bound(spec5, 0.125 / spec5.lambda_max) == 4
    assert acceleration_delay_bound(spec5, 0.5 / spec5.lambda_max) == 0
    with pytest.warns(DegenerateModeWarning):
        assert acceleration_delay_bound(spec5, 1.0 / spec5.lambda_max) == 0


def test_monotone_flag(spec5):
    assert monotone_flag([4.0], 0.1, 2)
    assert not monotone_flag(spec5, 0.125 / spec5.lambda_max, 4)


def test_convergence_time():
    assert convergence_time(math.exp(-1)) == pytest.approx(1.0)
    assert convergence_time(1.0) == math.inf
    assert convergence_time(0.0) == 0.0


def test_analyze_report(spec5):
    delta = 0.125 / spec5.lambda_max
    rep = analyze(spec5, delta)
    assert rep.d_bar == 12 and rep.d_accel == 4
    assert sorted(rep.r_d) == list(range(13))
    assert rep.accel_delays_verified == [1, 2, 3, 4, 5, 6, 7]
    assert len(rep.lambdas) == 4
    again = DelayReport.from_dict(rep.to_dict())
    assert again == rep


def test_analyze_explicit_delays(spec5):
    rep = analyze(spec5, 1.0 / spec5.lambda_max, delays=[0, 1, 3])
    assert rep.d_bar == 0
    assert rep.r_d[1] == pytest.approx(1.0, abs=1e-12) and rep.t_d[1] == math.inf
    assert rep.r_d[3] > 1
    d = DelayReport.from_dict(rep.to_dict())
    assert d.t_d[3] == math.inf
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        analyze(spec5, 1.0 / spec5.lambda_max)
