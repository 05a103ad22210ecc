import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from noisyhybrid.analysis import (
    FitModel,
    collapse_cost,
    data_collapse,
    extrapolate_thermo,
    fit_scaling,
    power_profile_rss,
)
from noisyhybrid.analysis import _group_by_size

Q = np.array([1 / 64, 1 / 48, 1 / 32, 1 / 24, 1 / 16, 1 / 8])


def test_thermo_exact():
    L = np.array([32, 64, 128])
    r = extrapolate_thermo(L, 3 + 5 / L)
    assert abs(r.s_inf - 3) < 1e-9 and abs(r.c - 5) < 1e-9 and r.rss < 1e-20
    r = extrapolate_thermo(L, np.full(3, 2.0))
    assert abs(r.s_inf - 2) < 1e-12 and abs(r.c) < 1e-9


@given(st.floats(-10, 10), st.floats(-50, 50), st.lists(st.integers(4, 512), min_size=2, max_size=6, unique=True))
def test_thermo_exact_on_any_line(s, c, sizes):
    L = np.array(sizes, dtype=float)
    r = extrapolate_thermo(L, s + c / L)
    assert abs(r.s_inf - s) < 1e-6 and abs(r.c - c) < 1e-6
    assert r.rss < 1e-12


def test_thermo_noisy():
    rng = np.random.default_rng(0)
    L = np.array([16, 32, 64, 128, 256])
    hits = 0
    for _ in range(200):
        y = 3 + 5 / L + rng.normal(0, 0.01, L.size)
        r = extrapolate_thermo(L, y, np.full(L.size, 0.01))
        hits += abs(r.s_inf - 3) <= 3 * r.s_inf_stderr
    assert hits >= 190


def test_thermo_errors():
    with pytest.raises(ValueError):
        extrapolate_thermo([32], [1.0])
    with pytest.raises(ValueError):
        extrapolate_thermo([32, 32], [1.0, 2.0])


def test_fit_examples():
    s = 2 * Q ** (-1 / 3)
    r = fit_scaling(Q, s, FitModel.POWER_FIXED_THIRD)
    assert abs(r.a - 2) < 1e-9 and abs(r.b) < 1e-9 and r.rss < 1e-20
    r = fit_scaling(Q, s, "powfree")
    assert abs(r.exponent + 1 / 3) < 1e-6
    assert abs(r.a - 2) < 1e-5
    np.testing.assert_allclose(r.predict(Q), s, rtol=1e-6)


def test_power_beats_log_on_wide_window():
    q = np.geomspace(1 / 256, 1 / 4, 12)
    s = 2 * q ** (-1 / 3)
    pow13 = fit_scaling(q, s, "pow13")
    log = fit_scaling(q, s, "log")
    assert pow13.rss < log.rss


@given(st.floats(0.5, 5), st.floats(-3, 3), st.floats(0.15, 0.55))
def test_powfree_recovers_exponent(a, b, e):
    s = a * Q ** (-e) + b
    r = fit_scaling(Q, s, "powfree")
    assert abs(r.exponent + e) < 1e-5


@given(st.integers(0, 2**32 - 1))
def test_profile_consistency(seed):
    rng = np.random.default_rng(seed)
    s = 2 * Q ** (-1 / 3) + rng.normal(0, 0.1, Q.size)
    se = rng.uniform(0.05, 0.2, Q.size)
    pow13 = fit_scaling(Q, s, "pow13", stderr=se)
    assert abs(power_profile_rss(Q, s, 1 / 3, se) - pow13.rss) < 1e-9


def test_qmax_window_and_errors():
    q = np.append(Q, [0.25, 0.5])
    s = np.append(2 * Q ** (-1 / 3), [100.0, -100.0])
    r = fit_scaling(q, s, "pow13", q_max=1 / 8)
    assert r.q.size == 6 and r.rss < 1e-20
    with pytest.raises(ValueError):
        fit_scaling([0.0, 0.1, 0.2], [1, 2, 3], "log")
    with pytest.raises(ValueError):
        fit_scaling([0.1, 0.1, 0.1, 0.1], [1, 2, 3, 4], "pow13")
    with pytest.raises(ValueError):
        fit_scaling(Q[:3], [1, 2, 3], "powfree")


def test_zero_stderr_falls_back_to_equal_weights():
    s = 2 * Q ** (-1 / 3) + np.linspace(0, 0.1, Q.size)
    a = fit_scaling(Q, s, "pow13", stderr=np.zeros(Q.size))
    b = fit_scaling(Q, s, "pow13")
    assert a.a == b.a and a.rss == b.rss


def test_fitters_are_deterministic():
    rng = np.random.default_rng(1)
    s = Q ** (-0.3) + rng.normal(0, 0.01, Q.size)
    assert fit_scaling(Q, s, "powfree").exponent == fit_scaling(Q, s, "powfree").exponent


def synthetic(qc=0.035, nu=0.94, sizes=(32, 64, 128, 256), q=np.linspace(0.01, 0.06, 11)):
    L = np.repeat(sizes, q.size).astype(float)
    qq = np.tile(q, len(sizes))
    return L, qq, np.tanh((qq - qc) * L ** (1 / nu))


def test_collapse_recovers_parameters():
    L, q, g = synthetic()
    r = data_collapse(L, q, g, (0.02, 0.05), (0.5, 1.5))
    assert abs(r.q_c - 0.035) <= 0.005 and abs(r.nu - 0.94) <= 0.05


def test_collapse_invariant_under_common_size_scaling():
    L, q, g = synthetic()
    a = data_collapse(L, q, g, (0.02, 0.05), (0.5, 1.5))
    b = data_collapse(3 * L, q, g, (0.02, 0.05), (0.5, 1.5))
    assert abs(a.q_c - b.q_c) < 1e-4


def test_collapse_cost_minimal_at_truth():
    L, q, g = synthetic()
    groups = _group_by_size(L, q, g)
    n_knots = 9
    best = collapse_cost(groups, 0.035, 0.94, n_knots)
    for dq in (-0.01, -0.006, 0.006, 0.01):
        for dn in (-0.1, -0.06, 0.0, 0.06, 0.1):
            assert best <= collapse_cost(groups, 0.035 + dq, 0.94 + dn, n_knots)
    for dn in (-0.1, -0.06, 0.06, 0.1):
        assert best <= collapse_cost(groups, 0.035, 0.94 + dn, n_knots)


def test_collapse_errors():
    L, q, g = synthetic(sizes=(64,))
    with pytest.raises(ValueError):
        data_collapse(L, q, g, (0.02, 0.05), (0.5, 1.5))
    L, q, g = synthetic()
    with pytest.raises(ValueError):
        data_collapse(L, q, g, (0.0, 0.05), (0.5, 1.5))
    with pytest.raises(ValueError):
        data_collapse(L, q, g, (0.02, 0.05), (1.5, 0.5))
