import numpy as np
import pytest

from vkglab.errors import DimensionError, MissingHistoryError, StencilError, SupportViolationError
from vkglab.spectral import BoxGrid, from_spectral, to_spectral
from vkglab.transport import (AnalyticField, FieldHistory, InitialData, VelocityLattice, bump_profile,
                              deposit_density, drift, evaluate_f, evaluate_initial, forward_flow, gather_field,
                              grid_distribution, integrate_characteristics, jacobians, kick,
                              particle_distribution, relativistic_velocity, stencil_probes, velocity_jacobian,
                              zero_field)


@pytest.fixture
def setup_1d():
    grid = BoxGrid(1, 20.0, 128)
    lat = VelocityLattice(1, 1.5, 64)
    data = InitialData(1, 1e-3, x_width=1.0, v_support=1.0)
    return grid, lat, data


def test_relativistic_velocity():
    assert relativistic_velocity(np.float64(1.0)) == pytest.approx(1 / np.sqrt(2))
    v = np.array([[3.0, 4.0]])
    assert np.allclose(relativistic_velocity(v), v / np.sqrt(26.0))
    assert np.all(np.linalg.norm(relativistic_velocity(np.random.default_rng(0).normal(size=(50, 3)) * 10),
                                 axis=1) < 1)


def test_velocity_jacobian_matches_differences():
    v = np.array([0.3, -0.7])
    jac = velocity_jacobian(v)
    h = 1e-6
    fd = np.stack([(relativistic_velocity(v + h * e) - relativistic_velocity(v - h * e)) / (2 * h)
                   for e in np.eye(2)], axis=1)
    assert np.allclose(jac, fd, atol=1e-9)


def test_bump_profile():
    assert bump_profile(np.array([0.0]))[0] == 1.0
    assert np.all(bump_profile(np.array([1.0, 1.5])) == 0.0)


def test_initial_data_velocity_mass():
    data = InitialData(1, 1.0, v_support=1.0)
    v = np.linspace(-1, 1, 20001)
    assert data.velocity_mass() == pytest.approx(np.trapezoid(bump_profile(np.abs(v)), v), rel=1e-8)


def test_grid_distribution_mass(setup_1d):
    grid, lat, data = setup_1d
    dist = grid_distribution(grid, lat, data)
    expect = 1e-3 * np.sqrt(2 * np.pi) * data.velocity_mass()
    assert dist.total_mass() == pytest.approx(expect, rel=1e-6)


def test_support_checks(setup_1d):
    grid, _, data = setup_1d
    with pytest.raises(SupportViolationError):
        grid_distribution(grid, VelocityLattice(1, 1.0, 64), data)
    with pytest.raises(DimensionError):
        grid_distribution(BoxGrid(3, 10.0, 8), VelocityLattice(3, 1.5, 8), InitialData(3, 1.0))


def test_drift_is_exact_free_streaming(setup_1d):
    grid, lat, data = setup_1d
    dist = grid_distribution(grid, lat, data)
    moved = drift(dist, 3.0)
    x = np.moveaxis(grid.mesh(), 0, -1)[:, None, :]
    v = np.moveaxis(lat.mesh(), 0, -1)[None, :, :]
    expect = data(x - relativistic_velocity(v) * 3.0, v)
    assert np.max(np.abs(moved.values - expect)) < 1e-12
    assert moved.time == 3.0


def test_kick_shifts_velocity(setup_1d):
    # a non-lattice shift of a compact (non-analytic) bump converges fast but not to roundoff
    grid, _, data = setup_1d
    errors = []
    for nv in (128, 256):
        lat = VelocityLattice(1, 1.5, nv)
        out = kick(grid_distribution(grid, lat, data), np.full((1,) + grid.shape, 0.1), 1.0)
        x = np.moveaxis(grid.mesh(), 0, -1)[:, None, :]
        v = np.moveaxis(lat.mesh(), 0, -1)[None, :, :]
        errors.append(np.max(np.abs(out.values - data(x, v - 0.1))) / data.amplitude)
    assert errors[1] < 1e-6
    assert errors[1] < errors[0] / 50


def test_kick_by_lattice_multiple_is_exact(setup_1d):
    grid, lat, data = setup_1d
    dist = grid_distribution(grid, lat, data)
    out = kick(dist, np.full((1,) + grid.shape, 3 * lat.dv), 1.0)
    assert np.max(np.abs(out.values - np.roll(dist.values, 3, axis=1))) < 1e-17


def test_deposit_density_gaussian(setup_1d):
    grid, lat, data = setup_1d
    rho = deposit_density(grid_distribution(grid, lat, data))
    lattice_mass = np.sum(bump_profile(np.abs(lat.axis))) * lat.dv
    expect = 1e-3 * np.exp(-0.5 * grid.axis ** 2) * lattice_mass
    assert np.max(np.abs(from_spectral(rho) - expect)) < 1e-17
    assert lattice_mass == pytest.approx(data.velocity_mass(), rel=1e-5)


def test_deposit_detects_lattice_escape(setup_1d):
    grid, lat, data = setup_1d
    dist = grid_distribution(grid, lat, data)
    shoved = kick(dist, np.full((1,) + grid.shape, 0.45), 1.0)
    with pytest.raises(SupportViolationError):
        deposit_density(shoved)


def test_particle_deposit_mass_and_gather():
    grid = BoxGrid(2, 10.0, 32)
    data = InitialData(2, 1.0, x_width=1.0, v_support=1.0)
    dist = particle_distribution(grid, data, 4096, seed=1)
    rho = deposit_density(dist)
    mass = grid.volume * rho.coeffs[0][0, 0].real
    assert mass == pytest.approx(dist.weights.sum(), rel=1e-12)
    field = to_spectral(np.stack([np.full(grid.shape, 2.0), np.full(grid.shape, -1.0)]), grid, vector=True)
    samples = gather_field(dist, field)
    assert np.allclose(samples, [2.0, -1.0])


def test_particle_sampling_deterministic():
    grid = BoxGrid(1, 10.0, 64)
    data = InitialData(1, 1.0)
    a = particle_distribution(grid, data, 1000, seed=4)
    b = particle_distribution(grid, data, 1000, seed=4)
    assert np.array_equal(a.positions, b.positions) and np.array_equal(a.weights, b.weights)


def test_free_characteristics():
    x = np.array([[0.5], [-1.0]])
    v = np.array([[0.3], [-0.8]])
    bundle = integrate_characteristics(zero_field(1), x, v, 5.0, 1.0, 0.1)
    X0, V0 = bundle.foot()
    assert np.allclose(X0, x - relativistic_velocity(v) * 4.0, atol=1e-13)
    assert np.array_equal(V0, v)
    assert bundle.s == pytest.approx(1.0)


def test_characteristics_constant_force():
    # uniform force: V(s) = v - a (t - s), rk4 is exact for the velocity
    field = AnalyticField(lambda tau, p: np.full((p.shape[0], 1), 0.2))
    bundle = integrate_characteristics(field, [[0.0]], [[0.5]], 2.0, 0.0, 0.05)
    assert bundle.foot()[1][0, 0] == pytest.approx(0.1, abs=1e-13)
    X, V = forward_flow(field, bundle.foot()[0], bundle.foot()[1], 0.0, 2.0, 0.05)
    assert np.allclose(X, [[0.0]], atol=1e-8) and np.allclose(V, [[0.5]], atol=1e-12)


def test_characteristic_errors():
    with pytest.raises(ValueError):
        integrate_characteristics(zero_field(1), [[0.0]], [[0.0]], 1.0, 2.0, 0.1)
    with pytest.raises(DimensionError):
        integrate_characteristics(zero_field(1), [[0.0]], [[0.0, 1.0]], 1.0, 0.0, 0.1)
    hist = FieldHistory(BoxGrid(1, 10.0, 16), 0.1)
    with pytest.raises(MissingHistoryError):
        integrate_characteristics(hist, [[0.0]], [[0.0]], 1.0, 0.0, 0.1)


def test_field_history_interpolates_linearly():
    grid = BoxGrid(1, 10.0, 16)
    hist = FieldHistory(grid, 0.5, coupling=2.0)
    for value in (0.0, 1.0):
        e = to_spectral(np.full((1,) + grid.shape, value), grid, vector=True)
        zero = to_spectral(np.zeros(grid.shape), grid)
        hist.append(e, e, e, zero)
    assert hist.t_end == 0.5
    assert hist(0.25, np.array([[0.3]]))[0, 0] == pytest.approx(1.0)
    assert hist.index(0.5) == 1
    with pytest.raises(MissingHistoryError):
        hist.index(0.3)
    with pytest.raises(MissingHistoryError):
        hist(0.7, np.array([[0.0]]))


def test_evaluate_f_free_streaming(setup_1d):
    grid, lat, data = setup_1d
    dist = grid_distribution(grid, lat, data)
    x, v = np.array([[0.4], [1.0]]), np.array([[0.2], [-0.5]])
    got = evaluate_f(dist, 2.0, x, v, field=zero_field(1), dtau=0.1)
    assert np.allclose(got, data(x - 2.0 * relativistic_velocity(v), v), atol=1e-7)
    assert evaluate_initial(dist, [[0.0]], [[1.2]])[0] == 0.0


def test_stencil_layout_and_jacobian_identity():
    px, pv = stencil_probes([[0.0, 0.0]], [[0.1, 0.2]], 1e-3)
    assert px.shape == (17, 2)
    bundle = integrate_characteristics(zero_field(2), px, pv, 3.0, 0.0, 0.1)
    rep = jacobians(bundle, 1e-3)
    assert np.max(np.abs(rep.det_dX_dx - 1)) < 1e-12
    assert np.max(np.abs(rep.det_flow - 1)) < 1e-9
    with pytest.raises(StencilError):
        stencil_probes([[0.0]], [[0.0]], 0.0)
    with pytest.raises(StencilError):
        jacobians(integrate_characteristics(zero_field(2), px[:5], pv[:5], 1.0, 0.0, 0.1), 1e-3)
