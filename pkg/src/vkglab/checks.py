"""Self-check suites runnable from the command line.

Each suite returns a list of :class:`CheckResult`; a suite passes when every
entry does.  Suites are small enough to finish in well under a minute.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import RunConfig
from .diagnostics import forward_trajectories, f_infinity_check, scattering_limits
from .kg import GreenSymbols, SIGNS, dt_green_hat, green_hat, initial_state, kg_energy, propagate_homogeneous
from .oscillation import (duhamel_decoupling_check, keyint_check, split_field, straightening_decomposition,
                          velocity_decomposition)
from .run import build_grid, gaussian, initial_distribution, run
from .spectral import BoxGrid, bernstein_ratios, partition_defect, resolved_shells, to_spectral
from .transport import AnalyticField, integrate_characteristics


@dataclass
class CheckResult:
    suite: str
    name: str
    value: float
    limit: float
    relation: str = "<="

    @property
    def passed(self) -> bool:
        if self.relation == "<=":
            return self.value <= self.limit
        if self.relation == ">=":
            return self.value >= self.limit
        lo, hi = self.limit
        return lo <= self.value <= hi


def _random_smooth(grid: BoxGrid, rng: np.random.Generator) -> np.ndarray:
    """Random real field with a Gaussian-damped spectrum."""
    c = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    c *= np.exp(-0.5 * (grid.k_norm / (0.3 * grid.k_nyquist)) ** 2)
    vals = np.fft.ifftn(c).real
    return vals / np.max(np.abs(vals))


def suite_green() -> list[CheckResult]:
    out = []
    g = BoxGrid(1, 20.0, 128)
    k = g.k_norm
    out.append(CheckResult("green", "G(0,k)", float(np.max(np.abs(green_hat(0.0, k)))), 1e-14))
    out.append(CheckResult("green", "dtG(0,k)-1", float(np.max(np.abs(dt_green_hat(0.0, k) - 1.0))), 1e-14))
    sym = GreenSymbols(g)
    worst = 0.0
    for t in np.linspace(0.0, 50.0, 11):
        total = sym.osc(t, +1) + sym.osc(t, -1)
        worst = max(worst, float(np.max(np.abs(total - sym.green(t)))))
    out.append(CheckResult("green", "G - Gosc+ - Gosc-", worst, 1e-14))
    state = initial_state(g, gaussian(g, 1.0, 1.0), gaussian(g, 0.5, 2.0))
    e0 = kg_energy(state)
    for _ in range(1000):
        state = propagate_homogeneous(state, 0.05)
    out.append(CheckResult("green", "energy drift (1000 steps)", abs(kg_energy(state) - e0) / e0, 1e-10))
    return out


def suite_bernstein() -> list[CheckResult]:
    rng = np.random.default_rng(7)
    out = []
    for d, n in ((1, 256), (2, 64)):
        g = BoxGrid(d, 10.0, n)
        out.append(CheckResult("bernstein", f"partition defect d={d}", partition_defect(g), 1e-12))
        worst = 0.0
        for _ in range(10):
            h = to_spectral(_random_smooth(g, rng), g)
            for j in resolved_shells(g):
                worst = max(worst, bernstein_ratios(h, j)["l2_ratio"])
        out.append(CheckResult("bernstein", f"max L2 shell ratio d={d}", worst, 2.0))
    return out


def suite_keyint(draws: int = 100, seed: int = 11) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(draws):
        d = int(rng.integers(1, 4))
        k = rng.uniform(-4.0, 4.0, d)
        v = rng.uniform(-3.0, 3.0, d)
        x = rng.uniform(-5.0, 5.0, d)
        t = float(rng.uniform(0.0, 25.0))
        worst = max(worst, keyint_check(k, v, t, int(rng.choice(SIGNS)), x))
    return [CheckResult("keyint", f"max residual over {draws} draws", worst, 1e-10)]


def _probes(n: int = 8, seed: int = 3):
    rng = np.random.default_rng(seed)
    return rng.uniform(-2.0, 2.0, (n, 1)), rng.uniform(-0.8, 0.8, (n, 1))


def suite_decomp(horizon: float = 5.0) -> list[CheckResult]:
    x, v = _probes()
    res = []
    for dt in (0.04, 0.02):
        r = run(RunConfig(dt=dt, horizon=horizon), record_duhamel=False)
        split = split_field(r.history)
        bundle = integrate_characteristics(r.history, x, v, horizon, 0.0, dt)
        res.append((velocity_decomposition(bundle, split).max_residual(),
                    straightening_decomposition(bundle, split).max_residual()))
    return [CheckResult("decomp", "velocity residual ratio", res[0][0] / res[1][0], (3.5, 4.5), "in"),
            CheckResult("decomp", "straightening residual ratio", res[0][1] / res[1][1], (3.5, 4.5), "in")]


def suite_duhamel(horizon: float = 4.0) -> list[CheckResult]:
    worst = []
    for dt, nv in ((0.02, 256), (0.01, 512)):
        r = run(RunConfig(dt=dt, velocity_points=nv, horizon=horizon))
        worst.append(duhamel_decoupling_check(r.recorder, [1.0, 2.0, horizon]).max_relative())
    return [CheckResult("duhamel", "relative residual (base)", worst[0], 0.05),
            CheckResult("duhamel", "refinement gain", worst[0] / worst[1], 1.8, ">=")]


def frozen_field(amplitude: float = 0.05, switch_off: float = 2.0) -> AnalyticField:
    """Smooth spatial profile switched off linearly at ``switch_off``."""
    def fn(tau, pts):
        ramp = max(0.0, 1.0 - tau / switch_off)
        return amplitude * ramp * np.sin(0.5 * pts[:, :1]) * np.exp(-0.02 * pts[:, :1] ** 2)
    return AnalyticField(fn, 1)


def suite_scatter() -> list[CheckResult]:
    cfg = RunConfig(horizon=16.0)
    field = frozen_field()
    x, v = _probes()
    dt = 0.02
    times = np.arange(0, 801) * dt
    X, V = forward_trajectories(field, x, v, times, dt)
    rep = scattering_limits(times, X, V, x, v, t0=1.0, levels=5, tail=0.5)
    frozen = V[int(round(2.0 / dt))]
    dist = initial_distribution(cfg, build_grid(cfg))
    finf = f_infinity_check(dist, x, rep.v_infinity, field, 4.0, 8.0, dt)
    return [CheckResult("scatter", "V_inf - V(T)", float(np.max(np.abs(rep.v_infinity - frozen))), 0.0),
            CheckResult("scatter", "f_inf defect (frozen field)", finf, 1e-12)]


SUITES: dict[str, Callable[[], list[CheckResult]]] = {
    "green": suite_green,
    "bernstein": suite_bernstein,
    "keyint": suite_keyint,
    "decomp": suite_decomp,
    "duhamel": suite_duhamel,
    "scatter": suite_scatter,
}


def results_csv(results: list[CheckResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["suite", "check", "value", "limit", "status"])
    for r in results:
        limit = f"[{r.limit[0]:g}, {r.limit[1]:g}]" if r.relation == "in" else f"{r.relation} {r.limit:g}"
        w.writerow([r.suite, r.name, f"{r.value:.6e}", limit, "PASS" if r.passed else "FAIL"])
    return buf.getvalue()
