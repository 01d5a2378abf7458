"""Oscillation extraction along characteristics.

The force field is split as E = E_osc_+ + E_osc_- + E_r with
E_osc_pm(t, k) = exp(lambda_pm t) B_pm(t, k).  Integrating the oscillatory
parts by parts along a trajectory introduces the resolvent multipliers

    phi_pm_j(k, v) = (lambda_pm(k) + i k . v_hat)^(-j),

and the collective fields E_osc_j_pm = phi_pm_j applied to E_osc_pm.  This
module evaluates those objects at probe points and measures how well the
resulting velocity and position decompositions, and the decoupling of the
space-time Green convolution, hold on a discrete run.

Signs follow from integrating the backward characteristic equations by parts;
the residual checks below pin them down numerically.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import DependencyError, MissingHistoryError, OrderingError
from .kg import SIGNS
from .spectral import BoxGrid, SpectralField, apply_multiplier, from_spectral
from .transport import (CharacteristicBundle, Distribution, FieldHistory,
                        relativistic_velocity, velocity_jacobian)


# -- resolvent kernels -------------------------------------------------------------

def resolvent_denominator(grid: BoxGrid, sign: int, v) -> np.ndarray:
    """omega_pm(k, v) = lambda_pm(k) + i k . v_hat on the grid."""
    vh = relativistic_velocity(np.atleast_1d(np.asarray(v, dtype=float)))
    kv = np.tensordot(vh, grid.k_vectors, axes=(0, 0))
    return sign * 1j * grid.bracket + 1j * kv


@dataclass(frozen=True)
class ResolventKernel:
    """Multiplier (lambda_pm + i k.v_hat)^(-order) at a fixed velocity.

    With ``series_order`` set, the j = 1 factor is replaced by the truncated
    geometric expansion in powers of k.v_hat / <k>.
    """

    sign: int
    order: int
    velocity: tuple
    series_order: Optional[int] = None

    def __post_init__(self):
        if self.sign not in SIGNS or self.order < 1:
            raise ValueError("sign must be +1 or -1 and order >= 1")
        object.__setattr__(self, "velocity", tuple(np.atleast_1d(np.asarray(self.velocity, float))))

    @property
    def speed_ratio(self) -> float:
        """A0 = |v_hat|, the ratio of the geometric expansion."""
        return float(np.linalg.norm(relativistic_velocity(np.array(self.velocity))))

    def first_order_symbol(self, grid: BoxGrid) -> np.ndarray:
        if self.series_order is None:
            return 1.0 / resolvent_denominator(grid, self.sign, self.velocity)
        vh = relativistic_velocity(np.array(self.velocity))
        ratio = np.tensordot(vh, grid.k_vectors, axes=(0, 0)) / grid.bracket
        q = -self.sign * ratio
        total = np.zeros(grid.shape, dtype=np.complex128)
        term = np.ones(grid.shape)
        for _ in range(self.series_order + 1):
            total += term
            term = term * q
        return -self.sign * 1j / grid.bracket * total

    def symbol(self, grid: BoxGrid) -> np.ndarray:
        return self.first_order_symbol(grid) ** self.order

    def min_denominator(self, grid: BoxGrid) -> float:
        return float(np.min(np.abs(resolvent_denominator(grid, self.sign, self.velocity))))


def resolvent_apply(kernel: ResolventKernel, f: SpectralField) -> SpectralField:
    """Apply the resolvent multiplier; the output is complex in general."""
    out = apply_multiplier(f, kernel.symbol(f.grid))
    return out.with_coeffs(out.coeffs, real=False)


def series_tail_bound(a0: float, order: int) -> float:
    """Geometric bound A0^(N+1) / (1 - A0) on the truncated expansion."""
    return a0 ** (order + 1) / (1.0 - a0)


def keyint_check(k, v, t: float, sign: int, x=None) -> float:
    """|quadrature of E_osc along x + v_hat tau - closed form| for one mode.

    The mode is exp(i k.x + lambda_pm(k) tau); the closed form is
    (E_osc(t, x + v_hat t) - E_osc(0, x)) / omega.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    x = np.zeros_like(k) if x is None else np.atleast_1d(np.asarray(x, dtype=float))
    vh = relativistic_velocity(v)
    lam = sign * 1j * np.sqrt(1.0 + k @ k)
    omega = lam + 1j * (k @ vh)
    if t == 0:
        return 0.0
    phase0 = np.exp(1j * (k @ x))
    integrand = lambda tau: phase0 * np.exp(omega * tau)
    cycles = abs(omega.imag) * t / (2 * np.pi)
    with warnings.catch_warnings():
        # quadpack reports roundoff once it is already below the tolerance
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        lhs, _ = integrate.quad(integrand, 0.0, t, complex_func=True, epsabs=1e-14, epsrel=1e-13,
                                limit=max(200, int(20 * cycles)))
    rhs = (phase0 * np.exp(omega * t) - phase0) / omega
    return float(abs(lhs - rhs))


# -- field split -----------------------------------------------------------------

class OscillatorySplit:
    """Force field, its oscillatory parts and remainder at stored steps.

    ``coupling`` scales the stored field into the force that moves particles;
    every part of the split and the flux F = grad rho is scaled alike.
    """

    def __init__(self, history: FieldHistory, coupling: float | None = None):
        self.history = history
        self.grid = history.grid
        self.coupling = float(history.coupling if coupling is None else coupling)

    @property
    def times(self) -> np.ndarray:
        return self.history.times

    def index(self, tau: float) -> int:
        return self.history.index(tau)

    def field_coeffs(self, n: int) -> np.ndarray:
        return self.coupling * self.history.efield[n]

    def osc_coeffs(self, n: int, sign: int) -> np.ndarray:
        b = self.history.bplus[n] if sign > 0 else self.history.bminus[n]
        return self.coupling * np.exp(sign * 1j * self.grid.bracket * self.times[n]) * b

    def remainder_coeffs(self, n: int) -> np.ndarray:
        return self.field_coeffs(n) - self.osc_coeffs(n, +1) - self.osc_coeffs(n, -1)

    def flux_coeffs(self, n: int) -> np.ndarray:
        return self.coupling * self.grid.gradient_symbol * self.history.rho[n]

    def osc_field(self, n: int, sign: int) -> SpectralField:
        return SpectralField(self.grid, self.osc_coeffs(n, sign), real=False, vector=True)

    def remainder(self, n: int) -> SpectralField:
        c = self.remainder_coeffs(n)
        return SpectralField(self.grid, c, real=True, vector=True).real_part()

    def field(self, n: int) -> SpectralField:
        return SpectralField(self.grid, self.field_coeffs(n), real=True, vector=True)


def split_field(history: FieldHistory, coupling: float | None = None) -> OscillatorySplit:
    if len(history) == 0:
        raise DependencyError("empty field history")
    return OscillatorySplit(history, coupling)


# -- probe evaluation ------------------------------------------------------------

def probe_phases(grid: BoxGrid, points: np.ndarray) -> np.ndarray:
    """exp(i k.x) for every probe and grid mode, shape (P, N^d); Nyquist as cosine."""
    pts = np.atleast_2d(points)
    ny = grid.mode_numbers == -(grid.points // 2)
    out = None
    for ax in range(grid.dimension):
        arg = np.outer(pts[:, ax], grid.k_axis)
        ph = np.exp(1j * arg)
        ph[:, ny] = np.cos(arg[:, ny])
        out = ph if out is None else (out[:, :, None] * ph[:, None, :]).reshape(pts.shape[0], -1)
    return out


def _probe_denominators(grid: BoxGrid, sign: int, V: np.ndarray) -> np.ndarray:
    """omega_pm(k, V_p) per probe, shape (P, N^d)."""
    vh = relativistic_velocity(V)
    kflat = grid.k_vectors.reshape(grid.dimension, -1)
    return sign * 1j * grid.bracket.reshape(1, -1) + 1j * (vh @ kflat)


def probe_sum(coeffs: np.ndarray, phases: np.ndarray, sym: Optional[np.ndarray] = None) -> np.ndarray:
    """sum_k sym_p(k) c_m(k) exp(i k.x_p), shape (P, m)."""
    c = coeffs.reshape(coeffs.shape[0], -1)
    if sym is None:
        return phases @ c.T
    return (phases * sym) @ c.T


class ProbeEvaluator:
    """Collective fields and transport sources at one stored step and probe set."""

    def __init__(self, split: OscillatorySplit, n: int, X: np.ndarray, V: np.ndarray):
        self.split, self.n = split, n
        self.X, self.V = np.atleast_2d(X), np.atleast_2d(V)
        self.grid = split.grid
        self.phases = probe_phases(self.grid, self.X)
        self._omega = {s: _probe_denominators(self.grid, s, self.V) for s in SIGNS}

    def force(self) -> np.ndarray:
        return probe_sum(self.split.field_coeffs(self.n), self.phases).real

    def remainder(self) -> np.ndarray:
        return probe_sum(self.split.remainder_coeffs(self.n), self.phases).real

    def collective(self, sign: int, order: int) -> np.ndarray:
        """E_osc_order_pm at the probes (complex)."""
        return probe_sum(self.split.osc_coeffs(self.n, sign), self.phases, self._omega[sign] ** (-order))

    def collective_sum(self, order: int) -> np.ndarray:
        return sum(self.collective(s, order) for s in SIGNS).real

    def source_term(self, order: int) -> np.ndarray:
        """sum_pm a_pm phi_pm_order * F at the probes."""
        g = self.grid
        total = 0.0
        for s in SIGNS:
            amp = (-s * 1j / (2.0 * g.bracket)).reshape(1, -1)
            total = total + probe_sum(self.split.flux_coeffs(self.n), self.phases,
                                      amp * self._omega[s] ** (-order))
        return total.real

    def gradient_term(self, order: int) -> np.ndarray:
        """sum_pm (grad_v v_hat E) . grad_x E_osc_order_pm at the probes."""
        g = self.grid
        w = np.einsum("pij,pj->pi", velocity_jacobian(self.V), self.force())
        kflat = g.k_vectors.reshape(g.dimension, -1)
        ikw = 1j * (w @ kflat)
        total = 0.0
        for s in SIGNS:
            total = total + probe_sum(self.split.osc_coeffs(self.n, s), self.phases,
                                      ikw * self._omega[s] ** (-order))
        return total.real


def qtr_eval(split: Optional[OscillatorySplit], n: int, X, V, nonlinear: bool = True) -> dict:
    """Transport source of the velocity decomposition at step ``n``.

    Q_tr = -sum a phi_1 * F + sum (grad_v v_hat E) . grad E_osc_2 + E_r.
    """
    if split is None:
        raise DependencyError("the transport source needs an oscillatory split")
    pe = ProbeEvaluator(split, n, X, V)
    parts = {
        "source": -pe.source_term(1),
        "nonlinear": pe.gradient_term(2) if nonlinear else np.zeros_like(pe.X),
        "remainder": pe.remainder(),
    }
    parts["total"] = parts["source"] + parts["nonlinear"] + parts["remainder"]
    return parts


def qtr1_eval(split: Optional[OscillatorySplit], n: int, X, V, nonlinear: bool = True) -> dict:
    """Second transport source: sum a phi_2 * F - 2 sum (grad_v v_hat E) . grad E_osc_3."""
    if split is None:
        raise DependencyError("the transport source needs an oscillatory split")
    pe = ProbeEvaluator(split, n, X, V)
    parts = {
        "source": pe.source_term(2),
        "nonlinear": -2.0 * pe.gradient_term(3) if nonlinear else np.zeros_like(pe.X),
    }
    parts["total"] = parts["source"] + parts["nonlinear"]
    return parts


def _bundle_indices(split: OscillatorySplit, bundle: CharacteristicBundle) -> list[int]:
    try:
        return [split.index(float(tau)) for tau in bundle.times]
    except MissingHistoryError as exc:
        raise MissingHistoryError(f"bundle times are not stored field steps: {exc}") from None


def _cumulative_from_top(times: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Trapezoid integral of g from times[m] up to times[0] (times descending)."""
    h = (times[:-1] - times[1:]).reshape((-1,) + (1,) * (g.ndim - 1))
    incr = 0.5 * h * (g[:-1] + g[1:])
    return np.concatenate([np.zeros_like(g[:1]), np.cumsum(incr, axis=0)])


# -- velocity decomposition ------------------------------------------------------------

@dataclass
class VelocityDecomposition:
    s: np.ndarray                 # lower times, descending from t
    t: float
    V: np.ndarray                 # V_{s,t}, shape (ns, P, d)
    v: np.ndarray
    V_osc_tt: np.ndarray          # (P, d)
    V_osc_st: np.ndarray          # (ns, P, d)
    V_tr: np.ndarray              # (ns, P, d)
    residual: np.ndarray          # (ns, P, d)
    q_tr: np.ndarray              # (ns, P, d) along the trajectory

    def at(self, s: float) -> int:
        i = int(np.argmin(np.abs(self.s - s)))
        if abs(self.s[i] - s) > 1e-9 * max(1.0, abs(s)):
            raise MissingHistoryError(f"no decomposition at s = {s}")
        return i

    def max_residual(self, s: float | None = None) -> float:
        r = self.residual if s is None else self.residual[self.at(s)]
        return float(np.max(np.abs(r)))


def velocity_decomposition(bundle: CharacteristicBundle, split: OscillatorySplit,
                           nonlinear: bool = True) -> VelocityDecomposition:
    """All parts of V_{s,t} = v - V_osc_tt + V_osc_st + V_tr for every s in the bundle."""
    if split is None:
        raise DependencyError("velocity decomposition needs an oscillatory split")
    idx = _bundle_indices(split, bundle)
    v = bundle.v
    osc_st, q = [], []
    for n, X, V in zip(idx, bundle.X, bundle.V):
        pe = ProbeEvaluator(split, n, X, V)
        osc_st.append(pe.collective_sum(1))
        q.append(-pe.source_term(1) + (pe.gradient_term(2) if nonlinear else 0.0) + pe.remainder())
    osc_st = np.array(osc_st)
    q = np.array(q)
    v_tr = -_cumulative_from_top(bundle.times, q)
    osc_tt = osc_st[0]
    resid = bundle.V - v[None] + osc_tt[None] - osc_st - v_tr
    return VelocityDecomposition(bundle.times.copy(), bundle.t, bundle.V, v, osc_tt, osc_st,
                                 v_tr, resid, q)


# -- straightening decomposition ---------------------------------------------------------

@dataclass
class StraighteningDecomposition:
    s: np.ndarray
    t: float
    psi_hat: np.ndarray           # (x - X_s) / (t - s)
    psi_hat_quadrature: np.ndarray
    psi_osc: np.ndarray
    psi_tr: np.ndarray
    psi_q: np.ndarray
    residual: np.ndarray
    bracket_ratio: np.ndarray     # (1 - |psi_hat|^2) / (1 - |v_hat|^2)

    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residual)))

    def straight_defect(self) -> float:
        return float(np.max(np.abs(self.psi_hat - self.psi_hat_quadrature)))


def straightening_decomposition(bundle: CharacteristicBundle, split: OscillatorySplit,
                                s: float | None = None, t: float | None = None,
                                nonlinear: bool = True) -> StraighteningDecomposition:
    """Velocity-average decomposition of the straightened trajectory.

    Rows correspond to the bundle's lower times; the row s = t is the
    continuous extension (all parts zero).
    """
    if split is None:
        raise DependencyError("straightening decomposition needs an oscillatory split")
    t = bundle.t if t is None else t
    if s is not None and s > t:
        raise OrderingError("need s <= t")
    if abs(t - bundle.t) > 1e-12:
        raise MissingHistoryError("bundle terminal time differs from t")
    idx = _bundle_indices(split, bundle)
    times = bundle.times
    x, v = bundle.x, bundle.v
    vh = relativistic_velocity(v)
    jac = velocity_jacobian(v)
    osc1, osc2, q, q1 = [], [], [], []
    for n, X, V in zip(idx, bundle.X, bundle.V):
        pe = ProbeEvaluator(split, n, X, V)
        osc1.append(pe.collective_sum(1))
        osc2.append(pe.collective_sum(2))
        grad2 = pe.gradient_term(2) if nonlinear else 0.0
        grad3 = pe.gradient_term(3) if nonlinear else 0.0
        q.append(-pe.source_term(1) + grad2 + pe.remainder())
        q1.append(pe.source_term(2) - 2.0 * grad3)
    osc2, q, q1 = np.array(osc2), np.array(q), np.array(q1)
    taus = times.reshape(-1, 1, 1)
    span = (t - times).reshape(-1, 1, 1)
    safe = np.where(span > 0, span, 1.0)
    int_q = _cumulative_from_top(times, q)
    int_tq = _cumulative_from_top(times, taus * q)
    int_q1 = _cumulative_from_top(times, q1)
    vhat_tau = relativistic_velocity(bundle.V)
    vq = vhat_tau - vh[None] - np.einsum("pij,spj->spi", jac, bundle.V - v[None])
    int_vq = _cumulative_from_top(times, vq)
    int_vhat = _cumulative_from_top(times, vhat_tau)
    zero = span == 0
    psi_hat = np.where(zero, vh[None], (x[None] - bundle.X) / safe)
    psi_quad = np.where(zero, vh[None], int_vhat / safe)
    psi_osc = np.where(zero, 0.0, (osc2[0][None] - osc2) / safe)
    psi_tr = np.where(zero, 0.0, -(int_tq - taus * int_q + int_q1) / safe)
    psi_q = np.where(zero, 0.0, int_vq / safe)
    v_osc_tt = np.array(osc1[0])
    lin = -v_osc_tt[None] + psi_osc + psi_tr
    model = vh[None] + np.einsum("pij,spj->spi", jac, lin) + psi_q
    resid = np.where(zero, 0.0, psi_hat - model)
    ratio = (1.0 - np.sum(psi_hat ** 2, axis=-1)) / (1.0 - np.sum(vh ** 2, axis=-1))[None]
    out = StraighteningDecomposition(times.copy(), t, psi_hat, psi_quad, psi_osc, psi_tr,
                                     psi_q, resid, ratio)
    if s is not None:
        i = int(np.argmin(np.abs(times - s)))
        if abs(times[i] - s) > 1e-9 * max(1.0, abs(s)):
            raise MissingHistoryError(f"bundle has no time {s}")
        sl = slice(i, i + 1)
        out = StraighteningDecomposition(times[sl], t, psi_hat[sl], psi_quad[sl], psi_osc[sl],
                                         psi_tr[sl], psi_q[sl], resid[sl], ratio[sl])
    return out


# -- Green convolution decoupling -------------------------------------------------------

class DuhamelRecorder:
    """Records the Eulerian ingredients of the decoupling identity each step.

    For a weight phi(v) it stores, per time node, the source S = int f phi dv,
    S1_pm = int phi_pm_1 * f phi dv and S2_pm = int grad_v(phi_pm_1 phi) * (E f) dv
    in Fourier space (grid-mode distributions only).
    """

    def __init__(self, grid: BoxGrid, lattice, weight: Callable | None = None):
        self.grid, self.lattice = grid, lattice
        d = grid.dimension
        vm = np.moveaxis(lattice.mesh(), 0, -1)                      # v_shape + (d,)
        vflat = vm.reshape(-1, d)
        self.phi = np.ones(vflat.shape[0]) if weight is None else np.asarray(weight(vflat), float)
        eps = 1e-6
        dphi = np.zeros_like(vflat)
        if weight is not None:
            for ax in range(d):
                e = np.zeros(d)
                e[ax] = eps
                dphi[:, ax] = (np.asarray(weight(vflat + e)) - np.asarray(weight(vflat - e))) / (2 * eps)
        kflat = grid.k_vectors.reshape(d, -1)                         # (d, K)
        vh = relativistic_velocity(vflat)                             # (Nv, d)
        jac = velocity_jacobian(vflat)                                # (Nv, d, d)
        self.sym1, self.sym2 = {}, {}
        for s in SIGNS:
            omega = s * 1j * grid.bracket.reshape(1, -1) + 1j * (vh @ kflat)     # (Nv, K)
            self.sym1[s] = self.phi[:, None] / omega
            # grad_v(phi / omega) = grad phi / omega - phi (i k . grad_v v_hat) / omega^2
            dom = 1j * np.einsum("vij,ik->vjk", jac, kflat)                       # (Nv, d, K)
            self.sym2[s] = dphi[:, :, None] / omega[:, None, :] - \
                self.phi[:, None, None] * dom / omega[:, None, :] ** 2
        self.dv_volume = lattice.dv ** d
        self.times: list[float] = []
        self.source: list[np.ndarray] = []
        self.s1 = {s: [] for s in SIGNS}
        self.s2 = {s: [] for s in SIGNS}
        self.s0 = {}

    def _x_transform(self, vals: np.ndarray) -> np.ndarray:
        """Fourier coefficients in x for every velocity, shape (Nv_total, K)."""
        g = self.grid
        d = g.dimension
        spec = np.fft.fftn(vals, axes=tuple(range(d))) * (g.sign_pattern.reshape(g.shape + (1,) * d)
                                                          / g.points ** d)
        return spec.reshape(g.points ** d, -1).T

    def record(self, time: float, dist: Distribution, force: SpectralField):
        """Store the ingredients at one time node (``force`` is the coupled field)."""
        if dist.mode != "grid":
            raise DependencyError("the decoupling check needs a grid-mode distribution")
        g = self.grid
        d = g.dimension
        fk = self._x_transform(dist.values)                              # (Nv, K)
        e = from_spectral(force).reshape((d,) + g.shape)
        efk = np.stack([self._x_transform(dist.values * e[ax].reshape(g.shape + (1,) * d))
                        for ax in range(d)], axis=1)                     # (Nv, d, K)
        dv = self.dv_volume
        self.times.append(float(time))
        self.source.append(np.sum(fk * self.phi[:, None], axis=0) * dv)
        for s in SIGNS:
            s1 = np.sum(fk * self.sym1[s], axis=0) * dv
            s2 = np.sum(efk * self.sym2[s], axis=(0, 1)) * dv
            self.s1[s].append(s1)
            self.s2[s].append(s2)
            if len(self.times) == 1:
                self.s0[s] = s1.copy()

    def __len__(self):
        return len(self.times)


@dataclass
class DuhamelReport:
    times: np.ndarray
    lhs_norm: dict
    residual: dict                 # sign -> relative residual per time

    def max_relative(self) -> float:
        return float(max(np.max(r) for r in self.residual.values()))

    def rows(self):
        for i, t in enumerate(self.times):
            yield t, {s: float(self.residual[s][i]) for s in SIGNS}


def duhamel_decoupling_check(recorder: DuhamelRecorder, output_times) -> DuhamelReport:
    """Compare G_osc *_{t,x} S with the boundary, transport and nonlinear terms.

    G_osc * S = G_osc(t) * S0 - a S1(t) + G_osc *_{t,x} S2, each space-time
    convolution by the trapezoid rule on the recorded nodes.
    """
    if len(recorder) < 2:
        raise DependencyError("need at least two recorded steps")
    g = recorder.grid
    times = np.array(recorder.times)
    dt = np.diff(times)
    if np.any(np.abs(dt - dt[0]) > 1e-9 * max(1.0, abs(dt[0]))):
        raise DependencyError("recorder steps must be uniform")
    br = g.bracket.reshape(-1)
    src = np.array(recorder.source)
    out_t, lhs_n, res = [], {s: [] for s in SIGNS}, {s: [] for s in SIGNS}
    for tout in output_times:
        m = int(round((tout - times[0]) / dt[0]))
        if m < 1 or m >= len(times) or abs(times[m] - tout) > 1e-9 * max(1.0, tout):
            raise DependencyError(f"time {tout} is not a recorded node")
        w = np.full(m + 1, dt[0])
        w[0] = w[-1] = 0.5 * dt[0]
        out_t.append(times[m])
        for s in SIGNS:
            lam = s * 1j * br
            amp = -s * 1j / (2.0 * br)
            kern = np.exp(lam[None, :] * (times[m] - times[:m + 1, None])) * amp[None, :]
            lhs = np.sum(w[:, None] * kern * src[:m + 1], axis=0)
            s2 = np.array(recorder.s2[s][:m + 1])
            rhs = (np.exp(lam * (times[m] - times[0])) * amp * recorder.s0[s]
                   - amp * recorder.s1[s][m]
                   + np.sum(w[:, None] * kern * s2, axis=0))
            ln = np.sqrt(np.sum(np.abs(lhs) ** 2))
            lhs_n[s].append(ln)
            res[s].append(np.sqrt(np.sum(np.abs(lhs - rhs) ** 2)) / ln if ln > 0 else 0.0)
    return DuhamelReport(np.array(out_t), {s: np.array(v) for s, v in lhs_n.items()},
                         {s: np.array(v) for s, v in res.items()})
