import numpy as np
import pytest

from vkglab.config import RunConfig
from vkglab.errors import SupportViolationError
from vkglab.kg import propagate_homogeneous
from vkglab.run import NORM_COLUMNS, initial_field, run
from vkglab.transport import drift

SMALL = dict(half_length=20.0, points=128, velocity_points=128)


def test_no_particles_reduces_to_free_klein_gordon():
    cfg = RunConfig(amplitude=0.0, horizon=4.0, phi0_amplitude=0.01, **SMALL)
    res = run(cfg, record_duhamel=False)
    state = initial_field(cfg, res.grid)
    for _ in range(cfg.steps):
        state = propagate_homogeneous(state, cfg.dt)
    assert np.max(np.abs(res.state.phi_hat.coeffs - state.phi_hat.coeffs)) < 1e-12
    assert np.max(np.abs(res.state.dtphi_hat.coeffs - state.dtphi_hat.coeffs)) < 1e-12


def test_zero_coupling_is_free_streaming():
    cfg = RunConfig(coupling=0.0, horizon=3.0, **SMALL)
    res = run(cfg, record_duhamel=False)
    expect = drift(res.initial_dist, cfg.horizon)
    assert np.max(np.abs(res.dist.values - expect.values)) < 1e-16


def test_strang_splitting_second_order():
    finals = []
    for dt in (0.1, 0.05, 0.025):
        cfg = RunConfig(dt=dt, horizon=2.0, amplitude=0.2, phi1_amplitude=0.05, **SMALL)
        res = run(cfg, record_duhamel=False)
        finals.append((res.history.efield[-1], res.dist.values))
    for part in (0, 1):
        ratio = (np.max(np.abs(finals[0][part] - finals[1][part]))
                 / np.max(np.abs(finals[1][part] - finals[2][part])))
        assert 3.5 <= ratio <= 4.5


def test_mass_conserved_in_grid_mode():
    res = run(RunConfig(horizon=4.0, amplitude=0.05, half_length=20.0, points=128), record_duhamel=False)
    mass = np.array(res.norms)[:, 1]
    assert np.max(np.abs(mass - mass[0])) / mass[0] < 1e-12


def test_coarse_velocity_lattice_is_flagged():
    # spectral kicks ring at the lattice edge once the lattice is too coarse for the bump
    with pytest.raises(SupportViolationError):
        run(RunConfig(horizon=4.0, amplitude=0.05, **SMALL), record_duhamel=False)


def test_particle_mode_runs_in_three_dimensions():
    cfg = RunConfig(dimension=3, half_length=16.0, points=16, dt=0.2, horizon=1.0, mode="particle",
                    particles=2048, phi1_width=1.0)
    res = run(cfg)
    assert res.recorder is None
    mass = np.array(res.norms)[:, 1]
    assert np.all(mass == mass[0])
    assert len(res.history) == cfg.steps + 1


def test_norm_rows_and_series():
    res = run(RunConfig(horizon=1.0, cadence=0.5, **SMALL))
    assert len(res.norms[0]) == len(NORM_COLUMNS)
    t, e = res.series("E_Linf")
    assert t[-1] == pytest.approx(1.0) and np.all(e >= 0)
    assert res.snapshots == pytest.approx([0.0, 0.5, 1.0])
    assert res.recorder is not None and len(res.recorder) == 51


def test_coupled_remainder_stays_at_roundoff(reference_run):
    data = np.array(reference_run.norms)
    er = data[:, NORM_COLUMNS.index("Er_Linf")]
    e = data[:, NORM_COLUMNS.index("E_Linf")]
    assert er[0] == 0.0
    assert np.max(er[1:] / e[1:]) < 1e-10
