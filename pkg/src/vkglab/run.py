"""Strang-split time loop for the coupled Vlasov-Klein-Gordon system.

Each step of length dt:

1. half drift of the distribution, deposit rho at the midpoint;
2. field at the midpoint from a half Duhamel step, kick with the force;
3. half drift, deposit rho at the end of the step;
4. full Duhamel step of (phi, d_t phi, B+, B-) with the endpoint densities.

The loop owns every piece of mutable state; archives are written as the run
proceeds and never rewritten.
"""

from __future__ import annotations

import logging
import time as clock
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .archive import ArchiveWriter
from .config import RunConfig
from .kg import FieldState, SIGNS, duhamel_step, electric_field, initial_state, kg_energy, oscillatory_field
from .oscillation import DuhamelRecorder, duhamel_decoupling_check
from .spectral import BoxGrid, SpectralField, from_spectral, lp_norm_samples
from .transport import (Distribution, FieldHistory, InitialData, VelocityLattice, deposit_density,
                        drift, gather_field, grid_distribution, kick, particle_distribution)

log = logging.getLogger(__name__)

NORM_COLUMNS = ["time", "mass", "kg_energy",
                "rho_L1", "rho_L2", "rho_Linf",
                "E_L2", "E_Linf",
                "Eosc_L2", "Eosc_Linf",
                "Er_L2", "Er_Linf",
                "phi_L2", "phi_Linf"]


@dataclass
class RunResult:
    config: RunConfig
    grid: BoxGrid
    history: FieldHistory
    dist: Distribution
    initial_dist: Distribution
    state: FieldState
    norms: list[list[float]]
    recorder: Optional[DuhamelRecorder] = None
    snapshots: list[float] = field(default_factory=list)
    wall_seconds: float = 0.0

    def series(self, column: str) -> tuple[np.ndarray, np.ndarray]:
        data = np.array(self.norms)
        return data[:, 0], data[:, NORM_COLUMNS.index(column)]


def gaussian(grid: BoxGrid, amplitude: float, width: float) -> np.ndarray:
    r2 = np.sum(grid.mesh() ** 2, axis=0)
    return amplitude * np.exp(-0.5 * r2 / width ** 2)


def build_grid(config: RunConfig) -> BoxGrid:
    return BoxGrid(config.dimension, config.half_length, config.points)


def initial_data(config: RunConfig) -> InitialData:
    return InitialData(config.dimension, config.amplitude, config.x_width, config.v_support, config.drift)


def initial_distribution(config: RunConfig, grid: BoxGrid) -> Distribution:
    data = initial_data(config)
    if config.mode == "grid":
        lattice = VelocityLattice(config.dimension, config.vmax, config.velocity_points)
        return grid_distribution(grid, lattice, data)
    return particle_distribution(grid, data, config.particles, config.seed)


def initial_field(config: RunConfig, grid: BoxGrid) -> FieldState:
    phi0 = gaussian(grid, config.phi0_amplitude, config.phi0_width)
    phi1 = gaussian(grid, config.phi1_amplitude, config.phi1_width)
    return initial_state(grid, phi0, phi1)


def _force_samples(dist: Distribution, efield: SpectralField, coupling: float) -> np.ndarray:
    if dist.mode == "particle":
        return coupling * gather_field(dist, efield)
    return coupling * from_spectral(efield).reshape((dist.dimension,) + dist.grid.shape)


def _norm_row(t: float, dist: Distribution, state: FieldState, rho: SpectralField) -> list[float]:
    g = state.grid
    cv = g.cell_volume
    e = electric_field(state)
    osc = sum(oscillatory_field(state, s).coeffs for s in SIGNS)
    # E_osc_+ + E_osc_- is real; drop the roundoff imaginary part
    osc_vals = from_spectral(SpectralField(g, osc, real=False, vector=True)).real
    e_vals = from_spectral(e).reshape(osc_vals.shape)
    r_vals = e_vals - osc_vals
    rho_vals = from_spectral(rho)
    phi_vals = from_spectral(state.phi_hat)
    row = [t, dist.total_mass(), kg_energy(state)]
    row += [lp_norm_samples(rho_vals, p, cv, False) for p in (1.0, 2.0, np.inf)]
    for vals in (e_vals, osc_vals, r_vals):
        row += [lp_norm_samples(vals, p, cv, True) for p in (2.0, np.inf)]
    row += [lp_norm_samples(phi_vals, p, cv, False) for p in (2.0, np.inf)]
    return row


def run(config: RunConfig, out: str | Path | None = None, record_duhamel: bool | None = None) -> RunResult:
    """Integrate to the horizon; write an archive to ``out`` when given."""
    config.validate()
    started = clock.perf_counter()
    grid = build_grid(config)
    dist = initial_distribution(config, grid)
    dist0 = dist
    state = initial_field(config, grid)
    dt, c = config.dt, config.coupling
    if record_duhamel is None:
        record_duhamel = config.mode == "grid"
    recorder = DuhamelRecorder(grid, dist.lattice) if record_duhamel and dist.mode == "grid" else None

    writer = ArchiveWriter(out, config) if out is not None else None
    history = FieldHistory(grid, dt, 0.0, coupling=c)
    rho = deposit_density(dist)
    norms = []
    snaps = []

    def record(step: int):
        efield = electric_field(state)
        history.append(efield, state.bplus_hat, state.bminus_hat, rho)
        norms.append(_norm_row(state.time, dist, state, rho))
        if recorder is not None:
            recorder.record(state.time, dist, efield * c)
        if step % config.cadence_steps == 0:
            snaps.append(state.time)
            if writer is not None:
                real = np.concatenate([from_spectral(state.phi_hat)[None], from_spectral(state.dtphi_hat)[None],
                                       from_spectral(efield).reshape((-1,) + grid.shape),
                                       from_spectral(rho)[None]])
                writer.snapshot("state", step, state.time, real)
                prof = np.concatenate([state.bplus_hat.coeffs, state.bminus_hat.coeffs])
                writer.snapshot("profiles", step, state.time, prof)

    record(0)
    for step in range(1, config.steps + 1):
        half = drift(dist, 0.5 * dt)
        rho_mid = deposit_density(half)
        mid_state = duhamel_step(state, [rho, rho_mid], 0.5 * dt)
        kicked = kick(half, _force_samples(half, electric_field(mid_state), c), dt)
        dist = drift(kicked, 0.5 * dt)
        rho_new = deposit_density(dist)
        state = duhamel_step(state, [rho, rho_new], dt)
        # keep node times exact multiples of dt
        state = FieldState(grid, step * dt, state.phi_hat, state.dtphi_hat, state.bplus_hat, state.bminus_hat)
        rho = rho_new
        record(step)

    elapsed = clock.perf_counter() - started
    result = RunResult(config, grid, history, dist, dist0, state, norms, recorder, snaps, elapsed)
    if writer is not None:
        writer.table("norms.csv", NORM_COLUMNS, norms)
        writer.history(history)
        if recorder is not None and len(recorder) > 1:
            writer.table("duhamel.csv", *duhamel_table(recorder, snaps))
        if dist.mode == "grid":
            writer.array("distribution_final.npy", dist.values)
        else:
            writer.array("particles_final.npy",
                         np.concatenate([dist.positions, dist.velocities, dist.weights[:, None]], axis=1))
        writer.close()
    log.info("run finished in %.1f s", elapsed)
    return result


def duhamel_table(recorder: DuhamelRecorder, times) -> tuple[list[str], list[list[float]]]:
    times = [t for t in times if t > 0]
    rep = duhamel_decoupling_check(recorder, times)
    rows = [[t, res[+1], res[-1]] for t, res in rep.rows()]
    return ["time", "relative_residual_plus", "relative_residual_minus"], rows
