import numpy as np
import pytest

from vkglab.errors import DimensionError
from vkglab.kg import (SIGNS, GreenSymbols, accumulate_profiles, bracket, duhamel_step, dt_green_hat,
                       electric_field, green_hat, initial_state, kg_energy, oscillatory_field,
                       propagate_homogeneous, quadrature_nodes)
from vkglab.run import gaussian
from vkglab.spectral import BoxGrid, SpectralField, from_spectral, to_spectral


@pytest.fixture
def grid():
    return BoxGrid(1, 20.0, 128)


def remainder_max(state):
    g = state.grid
    osc = sum(oscillatory_field(state, s).coeffs for s in SIGNS)
    osc_vals = from_spectral(SpectralField(g, osc, real=False, vector=True)).real
    return float(np.max(np.abs(from_spectral(electric_field(state)).reshape(osc_vals.shape) - osc_vals)))


def test_green_symbol_closed_forms():
    k = np.array([0.0, 0.5, 3.0])
    assert np.allclose(bracket(k), np.sqrt(1 + k ** 2))
    t = 1.3
    assert np.allclose(green_hat(t, k), np.sin(t * np.sqrt(1 + k ** 2)) / np.sqrt(1 + k ** 2))
    assert np.all(green_hat(0.0, k) == 0.0)
    assert np.all(dt_green_hat(0.0, k) == 1.0)


def test_green_splits_into_oscillatory_parts(grid):
    sym = GreenSymbols(grid)
    for t in (0.0, 0.7, 13.0):
        assert np.max(np.abs(sym.osc(t, 1) + sym.osc(t, -1) - sym.green(t))) < 1e-15


def test_homogeneous_matches_closed_form(grid):
    # each mode solves phi'' + <k>^2 phi = 0
    phi0 = to_spectral(gaussian(grid, 1.0, 1.0), grid)
    state = initial_state(grid, phi0, np.zeros(grid.shape))
    t = 0.0
    for _ in range(37):
        state = propagate_homogeneous(state, 0.1)
        t += 0.1
    expect = phi0.coeffs[0] * np.cos(t * grid.bracket)
    assert np.max(np.abs(state.phi_hat.coeffs[0] - expect)) < 1e-14
    assert state.time == pytest.approx(t)


def test_energy_conserved(grid):
    state = initial_state(grid, gaussian(grid, 1.0, 1.0), gaussian(grid, 0.2, 2.0))
    e0 = kg_energy(state)
    for _ in range(500):
        state = propagate_homogeneous(state, 0.05)
    assert abs(kg_energy(state) - e0) / e0 < 1e-12


def test_propagate_rejects_negative_step(grid):
    state = initial_state(grid, np.zeros(grid.shape), np.zeros(grid.shape))
    with pytest.raises(ValueError):
        propagate_homogeneous(state, -0.1)
    assert propagate_homogeneous(state, 0.0) is state


def test_initial_profiles_reproduce_field(grid):
    state = initial_state(grid, gaussian(grid, 0.5, 1.2), gaussian(grid, -0.3, 0.7))
    assert remainder_max(state) < 1e-14
    for _ in range(30):
        state = propagate_homogeneous(state, 0.2)
    assert remainder_max(state) < 1e-14


def test_initial_state_at_later_time(grid):
    state = initial_state(grid, gaussian(grid, 0.5, 1.2), np.zeros(grid.shape), time=3.0)
    assert remainder_max(state) < 1e-14


def test_duhamel_step_against_static_source(grid):
    # for a time-independent source rho the exact solution is -(1 - cos(t<k>)) rho / <k>^2
    rho = to_spectral(gaussian(grid, 1e-2, 1.0), grid)
    state = initial_state(grid, np.zeros(grid.shape), np.zeros(grid.shape))
    for _ in range(100):
        state = duhamel_step(state, lambda s: rho, 0.05, rule="gauss", order=6)
    t = state.time
    expect = -(1 - np.cos(t * grid.bracket)) / grid.bracket ** 2 * rho.coeffs[0]
    assert np.max(np.abs(state.phi_hat.coeffs[0] - expect)) < 1e-14
    assert remainder_max(state) < 1e-15 + 1e-10 * np.max(np.abs(from_spectral(electric_field(state))))


def test_duhamel_trapezoid_second_order(grid):
    rho_fn = lambda s: to_spectral(gaussian(grid, 1e-2 * np.cos(0.7 * s), 1.0), grid)
    ref = initial_state(grid, np.zeros(grid.shape), np.zeros(grid.shape))
    for _ in range(40):
        ref = duhamel_step(ref, rho_fn, 0.05, rule="gauss", order=8)
    errs = []
    for steps in (10, 20):
        st = initial_state(grid, np.zeros(grid.shape), np.zeros(grid.shape))
        dt = 2.0 / steps
        for n in range(steps):
            st = duhamel_step(st, [rho_fn(n * dt), rho_fn((n + 1) * dt)], dt)
        errs.append(np.max(np.abs(st.phi_hat.coeffs - ref.phi_hat.coeffs)))
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_zero_source_equals_homogeneous(grid):
    state = initial_state(grid, gaussian(grid, 0.5, 1.0), gaussian(grid, 0.1, 1.0))
    zero = np.zeros(grid.shape)
    a, b = state, state
    for _ in range(50):
        a = duhamel_step(a, [zero, zero], 0.1)
        b = propagate_homogeneous(b, 0.1)
    assert np.max(np.abs(a.phi_hat.coeffs - b.phi_hat.coeffs)) < 1e-12
    assert np.max(np.abs(a.dtphi_hat.coeffs - b.dtphi_hat.coeffs)) < 1e-12


def test_accumulate_profiles_leaves_time(grid):
    state = initial_state(grid, np.zeros(grid.shape), np.zeros(grid.shape))
    flux = [np.ones((1,) + grid.shape), np.ones((1,) + grid.shape)]
    out = accumulate_profiles(state, flux, 0.1)
    assert out.time == state.time
    assert np.any(out.bplus_hat.coeffs != 0)


def test_quadrature_rules():
    for rule in ("trapezoid", "simpson", "gauss"):
        nodes, w = quadrature_nodes(rule, 1.0, 0.5)
        assert np.sum(w) == pytest.approx(0.5)
        assert np.all((nodes >= 1.0) & (nodes <= 1.5))
    with pytest.raises(ValueError):
        quadrature_nodes("midpoint", 0.0, 1.0)


def test_wrong_sample_count_or_grid(grid):
    state = initial_state(grid, np.zeros(grid.shape), np.zeros(grid.shape))
    with pytest.raises(ValueError):
        duhamel_step(state, [np.zeros(grid.shape)], 0.1)
    other = BoxGrid(1, 20.0, 64)
    with pytest.raises(DimensionError):
        duhamel_step(state, [np.zeros(other.shape)] * 2, 0.1)
