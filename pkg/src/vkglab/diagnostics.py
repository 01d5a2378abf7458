"""Decay fits, scattering limits and the bootstrap-norm monitor."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, InsufficientDataError, ResolutionError, WrapError
from .kg import SIGNS
from .oscillation import OscillatorySplit
from .spectral import (NormSpec, SpectralField, _multi_indices, norm, partial,
                       sobolev_weight_check)
from .transport import Distribution, _rk4_flow, evaluate_f, relativistic_velocity


# -- power-law fits ---------------------------------------------------------------

@dataclass
class DecayReport:
    quantity: str
    norm: str
    times: np.ndarray
    values: np.ndarray
    window: tuple[float, float]
    exponent: float
    intercept: float
    residual: float
    averaged_period: Optional[float] = None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["quantity", "norm", "t0", "t1", "exponent", "intercept", "residual", "period"])
        w.writerow([self.quantity, self.norm, f"{self.window[0]:.17g}", f"{self.window[1]:.17g}",
                    f"{self.exponent:.17g}", f"{self.intercept:.17g}", f"{self.residual:.17g}",
                    "" if self.averaged_period is None else f"{self.averaged_period:.17g}"])
        w.writerow([])
        w.writerow(["time", "value"])
        for t, v in zip(self.times, self.values):
            w.writerow([f"{t:.17g}", f"{v:.17g}"])
        return buf.getvalue()


def period_average(times: np.ndarray, values: np.ndarray, period: float) -> np.ndarray:
    """Centred moving average over one period (trapezoid on the samples).

    Points closer than half a period to either end keep a one-sided window.
    """
    out = np.empty_like(values, dtype=float)
    for i, t in enumerate(times):
        lo, hi = t - 0.5 * period, t + 0.5 * period
        sel = (times >= lo) & (times <= hi)
        ts, vs = times[sel], values[sel]
        out[i] = np.trapezoid(vs, ts) / (ts[-1] - ts[0]) if len(ts) > 1 else vs[0]
    return out


def fit_decay_exponent(times, values, window: tuple[float, float], *, quantity: str = "",
                       norm_name: str = "", period: float | None = None,
                       t_wrap: float | None = None, min_per_decade: float = 8.0) -> DecayReport:
    """Least-squares slope of log(value) against log(t) inside ``window``.

    With ``period`` the series is first replaced by its moving average over
    one oscillation period (samples outside the window feed the average).
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    t0, t1 = map(float, window)
    if not 0 < t0 < t1:
        raise InsufficientDataError(f"fit window {window} must satisfy 0 < t0 < t1")
    if t_wrap is not None and t1 >= t_wrap:
        raise InsufficientDataError(f"fit window ends at {t1} beyond the wrap time {t_wrap}")
    if period:
        y = period_average(t, y, period)
    sel = (t >= t0 - 1e-12) & (t <= t1 + 1e-12)
    ts, ys = t[sel], y[sel]
    if np.any(ys <= 0) or not np.all(np.isfinite(ys)):
        raise DomainError("decay fits need positive finite values")
    decades = math.log10(t1 / t0)
    if len(ts) < 3 or len(ts) < min_per_decade * decades:
        raise InsufficientDataError(f"{len(ts)} samples over {decades:.2f} decades is too sparse")
    A = np.vstack([np.log(ts), np.ones_like(ts)]).T
    coef, *_ = np.linalg.lstsq(A, np.log(ys), rcond=None)
    res = np.log(ys) - A @ coef
    return DecayReport(quantity, norm_name, t, np.asarray(values, dtype=float), (t0, t1),
                       float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(res ** 2))), period)


# -- scattering --------------------------------------------------------------------

def richardson_limit(seq: np.ndarray, tail: float) -> np.ndarray:
    """Extrapolated limits from successive pairs of a doubling-time sequence.

    Row m uses levels m-1 and m under a tail ~ t^(-tail).
    """
    factor = 2.0 ** tail - 1.0
    return seq[1:] + (seq[1:] - seq[:-1]) / factor


@dataclass
class ScatteringReport:
    x: np.ndarray
    v: np.ndarray
    level_times: np.ndarray
    v_infinity: np.ndarray
    error_bar: float
    level_estimates: np.ndarray
    tail_exponent: float
    mode: str
    times: np.ndarray
    velocity_defect: np.ndarray      # sup_p |V(t) - V_inf|
    position_defect: np.ndarray      # sup_p |X(t) - x - t V_hat_inf|
    fitted_exponent: Optional[float] = None

    def table(self):
        return list(zip(self.times, self.velocity_defect, self.position_defect))


def forward_trajectories(field, x, v, times: np.ndarray, dtau: float):
    """Forward RK4 trajectories from time 0, sampled at ``times`` (multiples of dtau)."""
    x = np.atleast_2d(np.asarray(x, float))
    v = np.atleast_2d(np.asarray(v, float))
    tend = float(np.max(times))
    ts, X, V = _rk4_flow(field, x, v, 0.0, tend, dtau, store=True)
    idx = [int(np.argmin(np.abs(ts - t))) for t in times]
    if max(abs(ts[i] - t) for i, t in zip(idx, times)) > 1e-9 * max(1.0, tend):
        raise InsufficientDataError("requested times are not integrator nodes")
    return X[idx], V[idx]


def scattering_limits(times, X: np.ndarray, V: np.ndarray, x, v, *, t0: float, levels: int,
                      tail: float, mode: str = "raw", oscillatory: Optional[np.ndarray] = None,
                      fit_window: tuple[float, float] | None = None,
                      period: float | None = None) -> ScatteringReport:
    """V_inf by Richardson extrapolation over t_m = t0 2^m, m = 0..levels-1.

    ``X``, ``V`` are forward trajectories sampled at ``times`` (shape (nt, P, d)).
    In ``corrected`` mode the extrapolated sequence is V - oscillatory, where
    ``oscillatory`` holds the sum of the first collective fields along the
    trajectory; it vanishes in the limit but removes the slow oscillating tail.
    """
    if levels < 3:
        raise InsufficientDataError("need at least three extrapolation levels")
    times = np.asarray(times, float)
    lvl_t = t0 * 2.0 ** np.arange(levels)
    idx = []
    for tl in lvl_t:
        i = int(np.argmin(np.abs(times - tl)))
        if abs(times[i] - tl) > 1e-9 * max(1.0, tl):
            raise InsufficientDataError(f"level time {tl} is not sampled")
        idx.append(i)
    seq = V[idx]
    if mode == "corrected":
        if oscillatory is None:
            raise InsufficientDataError("corrected mode needs the oscillatory velocity part")
        seq = seq - oscillatory[idx]
    elif mode != "raw":
        raise ValueError(f"unknown scattering mode {mode!r}")
    est = richardson_limit(seq, tail)
    v_inf = est[-1]
    err = float(np.max(np.abs(est[-1] - est[-2])))
    vdef = np.max(np.linalg.norm(V - v_inf[None], axis=-1), axis=-1)
    vh_inf = relativistic_velocity(v_inf)
    x = np.atleast_2d(x)
    pdef = np.max(np.linalg.norm(X - x[None] - times[:, None, None] * vh_inf[None], axis=-1), axis=-1)
    rep = ScatteringReport(x, np.atleast_2d(v), lvl_t, v_inf, err, est, tail, mode, times, vdef, pdef)
    if fit_window is not None:
        rep.fitted_exponent = fit_decay_exponent(times, vdef, fit_window, quantity="V-Vinf",
                                                 norm_name="Linf", period=period).exponent
    return rep


def f_infinity_check(dist: Distribution, x, v_inf, field, t: float, t_prime: float,
                     dtau: float) -> float:
    """sup_p |f(t, x + t V_hat_inf, V_inf) - f(t', x + t' V_hat_inf, V_inf)|."""
    if not 0 <= t < t_prime:
        raise ValueError("need 0 <= t < t'")
    x = np.atleast_2d(np.asarray(x, float))
    v_inf = np.atleast_2d(np.asarray(v_inf, float))
    vh = relativistic_velocity(v_inf)
    L = dist.grid.half_length
    vals = []
    for tt in (t, t_prime):
        pts = x + tt * vh
        if np.any(np.abs(pts) >= L):
            raise WrapError(f"shifted probes leave the box at t = {tt}")
        vals.append(evaluate_f(dist, tt, pts, v_inf, field=field, dtau=dtau) if tt > 0
                    else evaluate_f(dist, 0.0, pts, v_inf))
    return float(np.max(np.abs(vals[0] - vals[1])))


# -- bootstrap monitor -------------------------------------------------------------

@dataclass
class LedgerRow:
    quantity: str
    inequality: str
    p: float
    order: int
    exponent: float
    epsilon: Optional[float]
    status: str


def _bracket_t(t):
    return np.sqrt(1.0 + np.asarray(t, float) ** 2)


def bootstrap_monitor(split: OscillatorySplit, indices: Sequence[int] | None = None,
                      alpha0: int = 8, p_values=(1.0, 2.0, np.inf)) -> list[LedgerRow]:
    """Smallest epsilon validating each dimension-adjusted decay inequality.

    Rows whose norms need unresolved derivative orders are marked ``skipped``.
    """
    g = split.grid
    d = g.dimension
    if indices is None:
        indices = range(len(split.history))
    indices = list(indices)
    times = split.times[indices]
    rows: list[LedgerRow] = []

    def source(n):
        return SpectralField(g, split.history.rho[n], real=True)

    def osc(n, s):
        return split.osc_field(n, s)

    def rem(n):
        return split.remainder(n)

    def ratio_row(name, ineq, p, order, expo, fn):
        try:
            vals = np.array([fn(n) for n in indices])
        except ResolutionError:
            rows.append(LedgerRow(name, ineq, p, order, expo, None, "skipped"))
            return
        weights = _bracket_t(times) ** expo
        rows.append(LedgerRow(name, ineq, p, order, expo, float(np.max(vals / weights)), "ok"))

    def dnorm(f, order, p):
        # sum over derivatives of exactly this total order
        if order > 0:
            sobolev_weight_check(f, order)
        return sum(norm(partial(f, multi), NormSpec("L", p=p))
                   for multi in _multi_indices(d, order) if sum(multi) == order)

    for p in p_values:
        inv = 0.0 if np.isinf(p) else 1.0 / p
        transport = -d * (1.0 - inv)
        ratio_row("S", "S+dS decay", p, 1, transport, lambda n: dnorm(source(n), 0, p) + dnorm(source(n), 1, p))
        ratio_row("E_r", "remainder decay", p, 0, transport, lambda n: dnorm(rem(n), 0, p))
        if p >= 2:
            for s in SIGNS:
                ratio_row(f"E_osc{'+' if s > 0 else '-'}", "oscillatory decay", p, 0,
                          -d * (0.5 - inv), lambda n, s=s: dnorm(osc(n, s), 0, p))
        for a in range(1, alpha0):
            delta = a / (alpha0 - 1)
            ratio_row("S+E_r", "higher derivative decay", p, a, transport + delta,
                      lambda n, a=a: dnorm(source(n), a, p) + dnorm(rem(n), a, p))
    for a in range(1, alpha0):
        delta = a / (alpha0 - 1)
        ratio_row("E_r", "top derivative L2", 2.0, a + 1, -d / 2 + delta,
                  lambda n, a=a: dnorm(rem(n), a + 1, 2.0))
    delta1 = 1.0 / (alpha0 - 1)
    for s in SIGNS:
        tag = "+" if s > 0 else "-"
        ratio_row(f"E_osc{tag}", "H^alpha0 bound", 2.0, alpha0, 0.0,
                  lambda n, s=s: norm(osc(n, s), NormSpec("H", s=alpha0)))
    ratio_row("E_osc+E_r+S", "H^(alpha0+1) growth", 2.0, alpha0 + 1, delta1,
              lambda n: sum(norm(osc(n, s), NormSpec("H", s=alpha0 + 1)) for s in SIGNS)
              + norm(rem(n), NormSpec("H", s=alpha0 + 1)) + norm(source(n), NormSpec("H", s=alpha0)))
    return rows


def ledger_csv(rows: list[LedgerRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["quantity", "inequality", "p", "order", "exponent", "epsilon", "status"])
    for r in rows:
        w.writerow([r.quantity, r.inequality, "inf" if np.isinf(r.p) else f"{r.p:g}", r.order,
                    f"{r.exponent + 0.0:.6g}", "" if r.epsilon is None else f"{r.epsilon:.17g}", r.status])
    return buf.getvalue()
