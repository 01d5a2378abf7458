"""Kinetic transport: characteristics, distribution updates and densities.

Two interchangeable representations of f are supported.  In grid mode f is
sampled on the product of the spatial box and a periodic velocity lattice and
moved by Strang-split spectral shifts (d <= 2).  In particle mode f is a set of
weighted samples pushed by the same splitting and deposited with a quadratic
(TSC) shape (d <= 3).  Characteristics are integrated backward with RK4
through a stored or analytic field.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy import ndimage
from scipy.integrate import trapezoid
from scipy.stats import qmc

from . import kernels
from .errors import (DimensionError, MissingHistoryError, StencilError,
                     SupportViolationError)
from .spectral import BoxGrid, SpectralField, evaluate_at, from_spectral, to_spectral

log = logging.getLogger(__name__)


def relativistic_velocity(v):
    """v / sqrt(1 + |v|^2); the last axis holds components for arrays of rank >= 1."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim == 0:
        return v / np.sqrt(1.0 + v * v)
    return v / np.sqrt(1.0 + np.sum(v * v, axis=-1, keepdims=True))


def velocity_jacobian(v) -> np.ndarray:
    """Jacobian of v -> v_hat: (I - v_hat v_hat^T) / <v>, shape (..., d, d)."""
    v = np.atleast_1d(np.asarray(v, dtype=np.float64))
    br = np.sqrt(1.0 + np.sum(v * v, axis=-1))[..., None, None]
    vh = relativistic_velocity(v)
    eye = np.eye(v.shape[-1])
    return (eye - vh[..., :, None] * vh[..., None, :]) / br


def bump_profile(r: np.ndarray) -> np.ndarray:
    """Smooth compact bump exp(1 - 1/(1 - r^2)) on r < 1, peak value 1."""
    r = np.asarray(r, dtype=np.float64)
    out = np.zeros_like(r)
    inside = r < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return out


@dataclass(frozen=True)
class InitialData:
    """f0(x, v) = amplitude * exp(-|x|^2 / (2 w^2)) * bump(|v - drift| / R_v)."""

    dimension: int
    amplitude: float
    x_width: float = 1.5
    v_support: float = 2.0
    drift: float = 0.0

    @property
    def x_support(self) -> float:
        # Gaussian tails below 4e-6 of the peak are treated as outside the support
        return 5.0 * self.x_width

    def __call__(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Evaluate at points; x, v have shape (..., d)."""
        x = np.asarray(x, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        r2 = np.sum(x * x, axis=-1)
        vv = v.copy()
        vv[..., 0] -= self.drift
        rv = np.sqrt(np.sum(vv * vv, axis=-1)) / self.v_support
        return self.amplitude * np.exp(-0.5 * r2 / self.x_width ** 2) * bump_profile(rv)

    def velocity_mass(self, n: int = 4001) -> float:
        """Integral of bump(|v|/R_v) over velocity space (1-D or radial quadrature)."""
        r = np.linspace(0.0, self.v_support, n)
        prof = bump_profile(r / self.v_support)
        if self.dimension == 1:
            return 2.0 * trapezoid(prof, r)
        shell = 2.0 * np.pi * r if self.dimension == 2 else 4.0 * np.pi * r * r
        return float(trapezoid(prof * shell, r))


@dataclass(frozen=True)
class VelocityLattice:
    """Periodic velocity lattice v_j = -V_max + j dv, dv = 2 V_max / N_v."""

    dimension: int
    vmax: float
    points: int

    @property
    def dv(self) -> float:
        return 2.0 * self.vmax / self.points

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.dimension

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.vmax + self.dv * np.arange(self.points)

    def mesh(self) -> np.ndarray:
        return np.stack(np.meshgrid(*([self.axis] * self.dimension), indexing="ij"))

    @cached_property
    def eta_axis(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.points, d=self.dv)


@dataclass(frozen=True)
class Distribution:
    """Grid-mode values (shape ``x_shape + v_shape``) or weighted particles."""

    mode: str
    grid: BoxGrid
    initial: InitialData
    time: float = 0.0
    lattice: Optional[VelocityLattice] = None
    values: Optional[np.ndarray] = None
    f0_values: Optional[np.ndarray] = None
    positions: Optional[np.ndarray] = None
    velocities: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None

    @property
    def dimension(self) -> int:
        return self.grid.dimension

    def total_mass(self) -> float:
        if self.mode == "grid":
            cell = self.grid.cell_volume * self.lattice.dv ** self.dimension
            return kernels.det_sum(self.values) * cell
        return kernels.det_sum(self.weights)


def grid_distribution(grid: BoxGrid, lattice: VelocityLattice, data: InitialData) -> Distribution:
    if grid.dimension > 2:
        raise DimensionError("grid mode is limited to d <= 2; use particles in 3-D")
    if lattice.dimension != grid.dimension:
        raise DimensionError("velocity lattice dimension differs from the box")
    d = grid.dimension
    xm = np.moveaxis(grid.mesh(), 0, -1)        # x_shape + (d,)
    vm = np.moveaxis(lattice.mesh(), 0, -1)     # v_shape + (d,)
    x = xm.reshape(xm.shape[:-1] + (1,) * d + (d,))
    v = vm.reshape((1,) * d + vm.shape[:-1] + (d,))
    vals = data(x, v)
    margin = lattice.vmax - (data.v_support + abs(data.drift))
    if margin <= 0:
        raise SupportViolationError("velocity lattice does not contain the data support")
    vals.setflags(write=False)
    return Distribution("grid", grid, data, 0.0, lattice=lattice, values=vals, f0_values=vals)


def particle_distribution(grid: BoxGrid, data: InitialData, count: int, seed: int = 0) -> Distribution:
    """Scrambled Sobol samples of the support box, weighted by f0."""
    d = grid.dimension
    sampler = qmc.Sobol(d=2 * d, scramble=True, seed=seed)
    m = int(np.ceil(np.log2(max(count, 2))))
    u = sampler.random_base2(m)[:count]
    xs, vs = data.x_support, data.v_support
    pos = (2.0 * u[:, :d] - 1.0) * xs
    vel = (2.0 * u[:, d:] - 1.0) * vs
    vel[:, 0] += data.drift
    box = (2.0 * xs) ** d * (2.0 * vs) ** d
    w = data(pos, vel) * box / count
    return Distribution("particle", grid, data, 0.0, positions=pos, velocities=vel, weights=w)


def _fft_shift(values: np.ndarray, axes: tuple[int, ...], phase: np.ndarray) -> np.ndarray:
    spec = np.fft.fftn(values, axes=axes)
    return np.fft.ifftn(spec * phase, axes=axes).real


def drift(dist: Distribution, tau: float) -> Distribution:
    """Free transport x -> x + v_hat tau over a time ``tau``."""
    d = dist.dimension
    if dist.mode == "particle":
        pos = dist.positions + relativistic_velocity(dist.velocities) * tau
        return replace(dist, positions=pos, time=dist.time + tau)
    grid, lat = dist.grid, dist.lattice
    vh = relativistic_velocity(np.moveaxis(lat.mesh(), 0, -1))     # v_shape + (d,)
    phase = np.zeros(grid.shape + lat.shape)
    for ax in range(d):
        kx = grid.k_axis.reshape((1,) * ax + (-1,) + (1,) * (2 * d - ax - 1))
        phase = phase + kx * vh[..., ax].reshape((1,) * d + lat.shape)
    vals = _fft_shift(dist.values, tuple(range(d)), np.exp(-1j * phase * tau))
    return replace(dist, values=vals, time=dist.time + tau)


def kick(dist: Distribution, efield: np.ndarray, tau: float) -> Distribution:
    """Velocity update v -> v + E(x) tau with E given on the x grid (grid mode)
    or at particle positions (particle mode), shape ``(d, ...)`` or ``(P, d)``."""
    d = dist.dimension
    if dist.mode == "particle":
        return replace(dist, velocities=dist.velocities + np.asarray(efield) * tau)
    grid, lat = dist.grid, dist.lattice
    e = np.asarray(efield).reshape((d,) + grid.shape)
    phase = np.zeros(grid.shape + lat.shape)
    for ax in range(d):
        eta = lat.eta_axis.reshape((1,) * (d + ax) + (-1,) + (1,) * (d - ax - 1))
        phase = phase + e[ax].reshape(grid.shape + (1,) * d) * eta
    vals = _fft_shift(dist.values, tuple(range(d, 2 * d)), np.exp(-1j * phase * tau))
    return replace(dist, values=vals)


def cutoff_filter(grid: BoxGrid, fraction: float = 2.0 / 3.0) -> np.ndarray:
    """Sharp spectral mask keeping |k_i| <= fraction * k_Nyquist on every axis."""
    keep = np.abs(grid.k_axis) <= fraction * grid.k_nyquist + 1e-12
    masks = np.meshgrid(*([keep] * grid.dimension), indexing="ij")
    return np.logical_and.reduce(masks).astype(np.float64)


def deposit_density(dist: Distribution, weight: Callable | None = None,
                    support_tol: float = 1e-6) -> SpectralField:
    """Velocity moment of f against ``weight(v)`` (default 1) as a spectral field."""
    grid = dist.grid
    d = grid.dimension
    if dist.mode == "grid":
        lat = dist.lattice
        vals = dist.values
        peak = float(np.max(np.abs(vals)))
        edge = [np.take(vals, [0, 1, -2, -1], axis=d + ax) for ax in range(d)]
        if peak > 0 and max(float(np.max(np.abs(e))) for e in edge) > support_tol * peak:
            raise SupportViolationError("distribution reaches the velocity lattice boundary")
        if weight is not None:
            wv = np.asarray(weight(np.moveaxis(lat.mesh(), 0, -1)), dtype=np.float64)
            vals = vals * wv.reshape((1,) * d + lat.shape)
        rho = np.sum(vals, axis=tuple(range(d, 2 * d))) * lat.dv ** d
        return to_spectral(rho, grid)
    w = dist.weights
    if weight is not None:
        w = w * np.asarray(weight(dist.velocities), dtype=np.float64)
    flat = kernels.tsc_deposit(dist.positions, w, grid.points, grid.dx, -grid.half_length)
    rho = flat.reshape(grid.shape) / grid.cell_volume
    # shape-function deposits are mode-by-mode smoothed at 2/3 Nyquist
    spec = to_spectral(rho, grid)
    return spec.with_coeffs(spec.coeffs * cutoff_filter(grid))


def gather_field(dist: Distribution, efield: SpectralField) -> np.ndarray:
    """Field at particle positions with the same TSC shape as the deposit."""
    samples = from_spectral(efield).reshape(efield.components, -1)
    g = dist.grid
    return kernels.tsc_gather(samples, dist.positions, g.points, g.dx, -g.half_length)


# -- field sources for characteristics -----------------------------------------

class AnalyticField:
    """Closed-form field E(tau, points) -> (P, d), valid for all times."""

    def __init__(self, fn: Callable[[float, np.ndarray], np.ndarray], dimension: int = 1):
        self.fn = fn
        self.dimension = dimension

    def covers(self, t0: float, t1: float) -> bool:
        return True

    def __call__(self, tau: float, points: np.ndarray) -> np.ndarray:
        out = np.asarray(self.fn(tau, points), dtype=np.float64)
        return out.reshape(points.shape[0], self.dimension)


def zero_field(dimension: int = 1) -> AnalyticField:
    return AnalyticField(lambda tau, p: np.zeros((p.shape[0], dimension)), dimension)


class FieldHistory:
    """Electric field, profiles and density stored at uniform step times.

    Values between stored steps are linear in time; spatial evaluation uses the
    exact trigonometric interpolant.
    """

    def __init__(self, grid: BoxGrid, dt: float, t0: float = 0.0, coupling: float = 1.0):
        self.grid = grid
        self.coupling = float(coupling)
        self.dimension = grid.dimension
        self.dt = float(dt)
        self.t0 = float(t0)
        self.efield: list[np.ndarray] = []
        self.bplus: list[np.ndarray] = []
        self.bminus: list[np.ndarray] = []
        self.rho: list[np.ndarray] = []

    def append(self, efield: SpectralField, bplus: SpectralField, bminus: SpectralField,
               rho: SpectralField):
        self.efield.append(efield.coeffs)
        self.bplus.append(bplus.coeffs)
        self.bminus.append(bminus.coeffs)
        self.rho.append(rho.coeffs)

    def __len__(self):
        return len(self.efield)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self))

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (len(self) - 1)

    def covers(self, t0: float, t1: float) -> bool:
        tol = 1e-9 * max(1.0, abs(self.t_end))
        return len(self) > 0 and min(t0, t1) >= self.t0 - tol and max(t0, t1) <= self.t_end + tol

    def index(self, tau: float) -> int:
        """Index of the stored step closest to ``tau`` (must be a node)."""
        i = int(round((tau - self.t0) / self.dt))
        if i < 0 or i >= len(self) or abs(self.t0 + i * self.dt - tau) > 1e-9 * max(1.0, abs(tau)):
            raise MissingHistoryError(f"time {tau} is not a stored step")
        return i

    def _bracket(self, tau: float):
        if not self.covers(tau, tau):
            raise MissingHistoryError(f"no stored field at time {tau:.6g}")
        u = (tau - self.t0) / self.dt
        i = min(max(int(np.floor(u + 1e-9)), 0), len(self) - 1)
        frac = u - i
        if i == len(self) - 1 or abs(frac) < 1e-9:
            return i, i, 0.0
        return i, i + 1, frac

    def coeffs_at(self, tau: float, which: str = "efield") -> np.ndarray:
        series = getattr(self, which)
        i, j, frac = self._bracket(tau)
        if frac == 0.0:
            return series[i]
        return (1.0 - frac) * series[i] + frac * series[j]

    def field_at(self, tau: float) -> SpectralField:
        return SpectralField(self.grid, self.coeffs_at(tau), real=True, vector=True)

    def rho_at(self, tau: float) -> SpectralField:
        return SpectralField(self.grid, self.coeffs_at(tau, "rho"), real=True)

    def __call__(self, tau: float, points: np.ndarray) -> np.ndarray:
        """Force on particles: the coupling times the interpolated field."""
        return self.coupling * evaluate_at(self.field_at(tau), points)


# -- characteristics -----------------------------------------------------------

@dataclass
class CharacteristicBundle:
    """Trajectories through probes (x, v) at terminal time t.

    ``times`` runs from t down to s; ``X[i]``, ``V[i]`` are X_{times[i],t} and
    V_{times[i],t}, shape (P, d).
    """

    x: np.ndarray
    v: np.ndarray
    t: float
    times: np.ndarray
    X: np.ndarray
    V: np.ndarray
    stencil_h: Optional[float] = None

    @property
    def s(self) -> float:
        return float(self.times[-1])

    def at(self, tau: float) -> tuple[np.ndarray, np.ndarray]:
        i = int(np.argmin(np.abs(self.times - tau)))
        if abs(self.times[i] - tau) > 1e-9 * max(1.0, abs(tau)):
            raise MissingHistoryError(f"bundle has no stored time {tau}")
        return self.X[i], self.V[i]

    def foot(self) -> tuple[np.ndarray, np.ndarray]:
        return self.X[-1], self.V[-1]


def _rk4_flow(field, x, v, t_from: float, t_to: float, dtau: float, store: bool = True):
    if dtau <= 0:
        raise ValueError("dtau must be positive")
    span = t_to - t_from
    nsteps = max(int(np.ceil(abs(span) / dtau - 1e-9)), 0)
    h = span / nsteps if nsteps else 0.0
    X = np.array(x, dtype=np.float64, copy=True)
    V = np.array(v, dtype=np.float64, copy=True)
    times = [t_from]
    Xs, Vs = [X.copy()], [V.copy()]
    box = getattr(field, "grid", None)
    for n in range(nsteps):
        t0 = t_from + n * h
        k1x = relativistic_velocity(V)
        k1v = field(t0, X)
        k2x = relativistic_velocity(V + 0.5 * h * k1v)
        k2v = field(t0 + 0.5 * h, X + 0.5 * h * k1x)
        k3x = relativistic_velocity(V + 0.5 * h * k2v)
        k3v = field(t0 + 0.5 * h, X + 0.5 * h * k2x)
        k4x = relativistic_velocity(V + h * k3v)
        k4v = field(t0 + h, X + h * k3x)
        X = X + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
        V = V + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
        if store or n == nsteps - 1:
            times.append(t_from + (n + 1) * h)
            Xs.append(X.copy())
            Vs.append(V.copy())
    if box is not None and np.any(np.abs(X) > box.half_length):
        log.info("characteristics left the box; the field is evaluated periodically")
    return np.array(times), np.array(Xs), np.array(Vs)


def integrate_characteristics(field, x, v, t: float, s: float, dtau: float,
                              store: bool = True) -> CharacteristicBundle:
    """Backward RK4 solve of dX/dtau = V_hat, dV/dtau = E from tau = t down to s."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    v = np.atleast_2d(np.asarray(v, dtype=np.float64))
    if x.shape != v.shape:
        raise DimensionError("probe positions and velocities differ in shape")
    if s > t:
        raise ValueError("backward characteristics need s <= t")
    if not field.covers(s, t):
        raise MissingHistoryError(f"field history does not cover [{s}, {t}]")
    times, X, V = _rk4_flow(field, x, v, t, s, dtau, store)
    return CharacteristicBundle(x, v, t, times, X, V)


def forward_flow(field, x, v, s: float, t: float, dtau: float):
    """Forward RK4 solve from s to t; returns final (X, V)."""
    if not field.covers(s, t):
        raise MissingHistoryError(f"field history does not cover [{s}, {t}]")
    _, X, V = _rk4_flow(field, np.atleast_2d(x), np.atleast_2d(v), s, t, dtau, store=False)
    return X[-1], V[-1]


def evaluate_initial(dist: Distribution, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """f0 at arbitrary (x, v): cubic splines of the lattice samples in grid
    mode, the closed form otherwise."""
    data = dist.initial
    x = np.atleast_2d(x)
    v = np.atleast_2d(v)
    outside = np.sqrt(np.sum((v - np.r_[data.drift, np.zeros(v.shape[1] - 1)]) ** 2, axis=1)) >= data.v_support
    if dist.mode != "grid":
        return np.where(outside, 0.0, data(x, v))
    lat, grid = dist.lattice, dist.grid
    beyond = np.any(np.abs(v) >= lat.vmax, axis=1)
    if np.any(beyond & ~outside):
        raise SupportViolationError("characteristic foot leaves the velocity lattice inside the support")
    d = grid.dimension
    coords = [(x[:, ax] + grid.half_length) / grid.dx for ax in range(d)]
    coords += [(v[:, ax] + lat.vmax) / lat.dv for ax in range(d)]
    vals = ndimage.map_coordinates(dist.f0_values, np.array(coords), order=3, mode="grid-wrap")
    return np.where(outside | beyond, 0.0, vals)


def evaluate_f(dist: Distribution, t: float, x, v, bundle: CharacteristicBundle | None = None,
               field=None, dtau: float | None = None) -> np.ndarray:
    """f(t, x, v) = f0 at the foot of the backward characteristic."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    v = np.atleast_2d(np.asarray(v, dtype=np.float64))
    if t == 0:
        return evaluate_initial(dist, x, v)
    if bundle is None:
        if field is None:
            raise MissingHistoryError("need a characteristic bundle or a field to trace back")
        bundle = integrate_characteristics(field, x, v, t, 0.0, dtau or 0.01, store=False)
    if abs(bundle.s) > 1e-12 or abs(bundle.t - t) > 1e-12:
        raise MissingHistoryError("bundle does not connect time t to time 0")
    X0, V0 = bundle.foot()
    return evaluate_initial(dist, X0, V0)


# -- Jacobians -------------------------------------------------------------------

def stencil_probes(base_x, base_v, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Probe lattice: each base point followed by +-h, +-2h offsets along every
    x and then every v coordinate (1 + 8d probes per base)."""
    if h <= 0:
        raise StencilError("stencil spacing must be positive")
    bx = np.atleast_2d(np.asarray(base_x, dtype=np.float64))
    bv = np.atleast_2d(np.asarray(base_v, dtype=np.float64))
    d = bx.shape[1]
    xs, vs = [], []
    for px, pv in zip(bx, bv):
        xs.append(px)
        vs.append(pv)
        for which in range(2 * d):
            e = np.zeros(d)
            e[which % d] = 1.0
            for off in (h, -h, 2 * h, -2 * h):
                if which < d:
                    xs.append(px + off * e)
                    vs.append(pv)
                else:
                    xs.append(px)
                    vs.append(pv + off * e)
    return np.array(xs), np.array(vs)


@dataclass
class JacobianReport:
    dX_dx: np.ndarray
    dX_dv: np.ndarray
    dV_dx: np.ndarray
    dV_dv: np.ndarray
    det_dX_dx: np.ndarray
    det_dX_dx_error: np.ndarray
    det_flow: np.ndarray
    det_flow_error: np.ndarray


def jacobians(bundle: CharacteristicBundle, h: float) -> JacobianReport:
    """Central-difference Jacobians at every stored time of a stencil bundle.

    Arrays have shape (times, bases, d, d); error estimates are |D_h - D_2h| / 3
    applied to the determinants.
    """
    if h <= 0:
        raise StencilError("stencil spacing must be positive")
    nt, P, d = bundle.X.shape
    per = 1 + 8 * d
    if P % per:
        raise StencilError(f"{P} probes do not form stencils of {per}")
    nb = P // per
    X = bundle.X.reshape(nt, nb, per, d)
    V = bundle.V.reshape(nt, nb, per, d)
    J1 = np.empty((nt, nb, 2 * d, 2 * d))
    J2 = np.empty_like(J1)
    for which in range(2 * d):
        o = 1 + 4 * which
        for arr, rows in ((X, slice(0, d)), (V, slice(d, 2 * d))):
            J1[:, :, rows, which] = (arr[:, :, o] - arr[:, :, o + 1]) / (2 * h)
            J2[:, :, rows, which] = (arr[:, :, o + 2] - arr[:, :, o + 3]) / (4 * h)
    # Richardson combination removes the O(h^2) term
    J = (4.0 * J1 - J2) / 3.0
    detx1 = np.linalg.det(J1[:, :, :d, :d])
    detx2 = np.linalg.det(J2[:, :, :d, :d])
    detf1 = np.linalg.det(J1)
    detf2 = np.linalg.det(J2)
    return JacobianReport(
        dX_dx=J[:, :, :d, :d], dX_dv=J[:, :, :d, d:], dV_dx=J[:, :, d:, :d], dV_dv=J[:, :, d:, d:],
        det_dX_dx=(4 * detx1 - detx2) / 3, det_dX_dx_error=np.abs(detx1 - detx2) / 3,
        det_flow=(4 * detf1 - detf2) / 3, det_flow_error=np.abs(detf1 - detf2) / 3,
    )
