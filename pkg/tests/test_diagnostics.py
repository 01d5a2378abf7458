import numpy as np
import pytest

from vkglab.checks import frozen_field
from vkglab.diagnostics import (LedgerRow, bootstrap_monitor, f_infinity_check, fit_decay_exponent,
                                forward_trajectories, ledger_csv, period_average, richardson_limit,
                                scattering_limits)
from vkglab.errors import DomainError, InsufficientDataError, WrapError
from vkglab.config import RunConfig
from vkglab.run import build_grid, initial_distribution


def test_fit_recovers_power_law():
    t = np.linspace(1, 50, 500)
    rep = fit_decay_exponent(t, 3.0 * t ** -0.7, (5, 40), quantity="rho", norm_name="Linf")
    assert rep.exponent == pytest.approx(-0.7, abs=1e-12)
    assert np.exp(rep.intercept) == pytest.approx(3.0, rel=1e-12)
    assert rep.residual < 1e-12
    assert rep.to_csv().startswith("quantity,norm,t0,t1,exponent")


def test_period_average_removes_oscillation():
    t = np.linspace(0.01, 60, 6000)
    vals = t ** -0.5 * (1 + 0.5 * np.cos(t))
    rep = fit_decay_exponent(t, vals, (10, 50), period=2 * np.pi)
    raw = fit_decay_exponent(t, vals, (10, 50))
    assert abs(rep.exponent + 0.5) < abs(raw.exponent + 0.5)
    assert abs(rep.exponent + 0.5) < 0.01
    # the window holds a whole number of samples, not of periods: residue <= dt / period
    avg = period_average(t, np.cos(t), 2 * np.pi)
    assert np.max(np.abs(avg[(t > 5) & (t < 55)])) < 0.01 / (2 * np.pi)


def test_fit_errors():
    t = np.linspace(1, 10, 100)
    with pytest.raises(InsufficientDataError):
        fit_decay_exponent(t, t ** -1.0, (5, 2))
    with pytest.raises(InsufficientDataError):
        fit_decay_exponent(t, t ** -1.0, (2, 9), t_wrap=8)
    with pytest.raises(InsufficientDataError):
        fit_decay_exponent(t[::40], t[::40] ** -1.0, (1, 10))
    with pytest.raises(DomainError):
        fit_decay_exponent(t, np.sin(t), (1, 10))


def test_richardson_exact_for_single_tail():
    t = 2.0 ** np.arange(5)
    seq = 4.0 + 3.0 * t ** -1.5
    assert np.allclose(richardson_limit(seq, 1.5), 4.0, atol=1e-14)


def test_scattering_frozen_field_is_exact():
    field = frozen_field()
    x, v = np.array([[0.5], [-1.0]]), np.array([[0.2], [-0.4]])
    dt = 0.02
    times = np.arange(0, 401) * dt
    X, V = forward_trajectories(field, x, v, times, dt)
    rep = scattering_limits(times, X, V, x, v, t0=0.5, levels=5, tail=0.5)
    assert np.array_equal(rep.v_infinity, V[100])
    assert rep.error_bar == 0.0
    assert rep.velocity_defect[-1] == 0.0
    assert len(rep.table()) == len(times)


def test_scattering_errors():
    times = np.arange(0, 11) * 1.0
    X = V = np.zeros((11, 1, 1))
    with pytest.raises(InsufficientDataError):
        scattering_limits(times, X, V, [[0.0]], [[0.0]], t0=1.0, levels=2, tail=0.5)
    with pytest.raises(InsufficientDataError):
        scattering_limits(times, X, V, [[0.0]], [[0.0]], t0=1.5, levels=3, tail=0.5)
    with pytest.raises(InsufficientDataError):
        scattering_limits(times, X, V, [[0.0]], [[0.0]], t0=1.0, levels=3, tail=0.5, mode="corrected")
    with pytest.raises(ValueError):
        scattering_limits(times, X, V, [[0.0]], [[0.0]], t0=1.0, levels=3, tail=0.5, mode="other")


def test_f_infinity_wrap_and_order():
    cfg = RunConfig(horizon=2.0)
    dist = initial_distribution(cfg, build_grid(cfg))
    field = frozen_field()
    with pytest.raises(WrapError):
        f_infinity_check(dist, [[38.0]], [[2.0]], field, 1.0, 4.0, 0.05)
    with pytest.raises(ValueError):
        f_infinity_check(dist, [[0.0]], [[0.0]], field, 2.0, 1.0, 0.05)


def test_ledger_csv_format():
    rows = [LedgerRow("S", "decay", np.inf, 1, -0.0, 0.5, "ok"), LedgerRow("E", "x", 2.0, 0, 0.25, None, "skipped")]
    text = ledger_csv(rows).splitlines()
    assert text[0] == "quantity,inequality,p,order,exponent,epsilon,status"
    assert text[1] == "S,decay,inf,1,0,0.5,ok"
    assert text[2] == "E,x,2,0,0.25,,skipped"


def test_bootstrap_rows_on_reference(reference_split):
    rows = bootstrap_monitor(reference_split, list(range(0, 1501, 50)))
    by_name = {(r.quantity, r.inequality, r.p, r.order): r for r in rows}
    assert all(r.status == "ok" for r in rows)
    # exponents follow the dimension-adjusted transport and dispersion rates
    assert by_name[("S", "S+dS decay", np.inf, 1)].exponent == -1.0
    assert by_name[("E_osc+", "oscillatory decay", np.inf, 0)].exponent == -0.5
    # the remainder is carried exactly by the profiles
    assert by_name[("E_r", "remainder decay", np.inf, 0)].epsilon < 1e-14
    # small data: decay constants of order the initial amplitude
    assert by_name[("S", "S+dS decay", np.inf, 1)].epsilon < 10 * 1e-3
    assert by_name[("E_osc+", "oscillatory decay", np.inf, 0)].epsilon < 10 * 1e-3


def test_reference_scattering_regression(reference_scattering):
    rep = reference_scattering.report
    assert rep.mode == "corrected"
    assert rep.error_bar < 1e-3
    assert rep.fitted_exponent == pytest.approx(-0.5147347466607329, abs=1e-6)
    # the f_inf defect is set by the V_inf error times t, so it does not shrink with t
    defects = [d for _, _, d in reference_scattering.finf]
    assert defects == pytest.approx([2.1892679391074133e-06, 6.814311585238574e-07, 1.220626324301957e-06,
                                     2.055730504712161e-06], rel=1e-5)
