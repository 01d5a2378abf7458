"""Post-processing of a finished run: decay fits, decompositions, scattering.

Every study takes the stored field history; nothing here mutates a run.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .archive import Archive, _write_new, csv_text
from .config import RunConfig
from .diagnostics import (DecayReport, ScatteringReport, bootstrap_monitor, f_infinity_check,
                          fit_decay_exponent, forward_trajectories, ledger_csv, scattering_limits)
from .errors import VKGError
from .oscillation import (OscillatorySplit, ProbeEvaluator, split_field, straightening_decomposition,
                          velocity_decomposition)
from .run import build_grid, initial_distribution
from .transport import FieldHistory, integrate_characteristics, jacobians, stencil_probes

KG_PERIOD = 2.0 * np.pi
OSCILLATORY_QUANTITIES = ("E", "Eosc", "phi")


def probe_set(config: RunConfig, count: int | None = None, seed_offset: int = 0):
    """Deterministic probes inside the bulk of the initial support."""
    rng = np.random.default_rng(config.seed + seed_offset)
    n = config.probes if count is None else count
    d = config.dimension
    x = rng.uniform(-2.0 * config.x_width, 2.0 * config.x_width, (n, d))
    direction = rng.normal(size=(n, d))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = 0.8 * config.v_support * rng.uniform(size=(n, 1)) ** (1.0 / d)
    v = direction * radius
    v[:, 0] += config.drift
    return x, v


def level_times(config: RunConfig, levels: int = 5) -> tuple[float, int]:
    """First level t0 of the doubling sequence t0 2^m ending at or before the horizon."""
    unit = config.dt * 2 ** (levels - 1)
    t0 = np.floor(config.horizon / unit + 1e-9) * config.dt
    return float(t0), levels


def decay_window(config: RunConfig) -> tuple[float, float]:
    return config.horizon / 3.0, min(config.horizon, config.t_wrap - config.dt)


def series_period(quantity: str) -> float | None:
    return KG_PERIOD if quantity in OSCILLATORY_QUANTITIES else None


def decay_study(times, columns: dict[str, np.ndarray], config: RunConfig,
                window: tuple[float, float] | None = None) -> list[DecayReport]:
    window = window or decay_window(config)
    out = []
    for name, values in columns.items():
        quantity, norm_name = name.rsplit("_", 1)
        try:
            out.append(fit_decay_exponent(times, values, window, quantity=quantity, norm_name=norm_name,
                                          period=series_period(quantity), t_wrap=config.t_wrap))
        except VKGError:
            continue
    return out


@dataclass
class ScatteringStudy:
    report: ScatteringReport
    finf: list[tuple[float, float, float]]       # (t, t', defect)


def oscillatory_velocity(split: OscillatorySplit, X: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Sum of the first collective fields along a trajectory stored at every step."""
    return np.array([ProbeEvaluator(split, n, X[n], V[n]).collective_sum(1) for n in range(len(X))])


def scattering_study(config: RunConfig, history: FieldHistory, x=None, v=None, levels: int = 5,
                     mode: str = "corrected") -> ScatteringStudy:
    if x is None:
        x, v = probe_set(config)
    times = history.times
    X, V = forward_trajectories(history, x, v, times, config.dt)
    split = split_field(history)
    osc = oscillatory_velocity(split, X, V) if mode == "corrected" else None
    t0, m = level_times(config, levels)
    t_last = t0 * 2 ** (m - 1)
    rep = scattering_limits(times, X, V, x, v, t0=t0, levels=m, tail=config.dimension / 2.0, mode=mode,
                            oscillatory=osc, fit_window=(config.horizon / 3.0, t_last), period=KG_PERIOD)
    dist0 = initial_distribution(config, build_grid(config))
    finf = []
    for t in rep.level_times[:-1]:
        try:
            finf.append((float(t), float(2 * t), f_infinity_check(dist0, x, rep.v_infinity, history,
                                                                  float(t), float(2 * t), config.dt)))
        except VKGError:
            continue
    return ScatteringStudy(rep, finf)


def decomposition_study(config: RunConfig, history: FieldHistory, x=None, v=None, t: float | None = None):
    """Rows (s, velocity residual, straightening residual, |V_tr|, bracket-ratio range)."""
    if x is None:
        x, v = probe_set(config)
    t = history.t_end if t is None else t
    bundle = integrate_characteristics(history, x, v, t, 0.0, config.dt)
    split = split_field(history)
    vd = velocity_decomposition(bundle, split)
    sd = straightening_decomposition(bundle, split)
    stride = max(config.cadence_steps, 1)
    rows = []
    for i in range(0, len(bundle.times), stride):
        rows.append((float(bundle.times[i]), float(np.max(np.abs(vd.residual[i]))),
                     float(np.max(np.abs(sd.residual[i]))), float(np.max(np.abs(vd.V_tr[i]))),
                     float(np.min(sd.bracket_ratio[i])), float(np.max(sd.bracket_ratio[i]))))
    return vd, sd, rows


def jacobian_study(config: RunConfig, history: FieldHistory, x=None, v=None, h: float = 1e-3):
    if x is None:
        x, v = probe_set(config)
    px, pv = stencil_probes(x, v, h)
    bundle = integrate_characteristics(history, px, pv, history.t_end, 0.0, config.dt)
    rep = jacobians(bundle, h)
    stride = max(config.cadence_steps, 1)
    rows = [(float(bundle.times[i]), float(np.max(np.abs(rep.det_dX_dx[i] - 1.0))),
             float(np.max(rep.det_dX_dx_error[i])), float(np.max(np.abs(rep.det_flow[i] - 1.0))))
            for i in range(0, len(bundle.times), stride)]
    return rep, rows


def write_report(archive_dir: str | Path, out_dir: str | Path | None = None) -> Path:
    """Compute every study for an archive and write plot-ready CSV files."""
    arc = Archive(archive_dir)
    cfg = arc.config
    out = Path(out_dir) if out_dir is not None else arc.root / "report"
    history = arc.history()
    split = split_field(history)

    header, data = arc.norms()
    times = data[:, 0]
    cols = {h: data[:, i] for i, h in enumerate(header) if "_L" in h}
    fits = decay_study(times, cols, cfg)
    _write_new(out / "decay.csv", csv_text(
        ["quantity", "norm", "t0", "t1", "exponent", "residual", "period"],
        [(f.quantity, f.norm, f.window[0], f.window[1], f.exponent, f.residual,
          "" if f.averaged_period is None else f.averaged_period) for f in fits]))

    cadence = list(range(0, len(history), cfg.cadence_steps))
    ledger = bootstrap_monitor(split, cadence, alpha0=cfg.alpha0)
    _write_new(out / "ledger.csv", ledger_csv(ledger))

    study = scattering_study(cfg, history)
    rep = study.report
    _write_new(out / "scattering.csv", csv_text(
        ["time", "velocity_defect", "position_defect"],
        [(float(t), float(rep.velocity_defect[history.index(t)]),
          float(rep.position_defect[history.index(t)])) for t in rep.level_times]))
    _write_new(out / "scattering_trace.csv", csv_text(
        ["time", "velocity_defect", "position_defect"],
        [(float(t), float(a), float(b)) for t, a, b in rep.table()]))
    _write_new(out / "v_infinity.csv", csv_text(
        ["probe"] + [f"x{i}" for i in range(cfg.dimension)] + [f"v{i}" for i in range(cfg.dimension)]
        + [f"vinf{i}" for i in range(cfg.dimension)],
        [(i, *map(float, rep.x[i]), *map(float, rep.v[i]), *map(float, rep.v_infinity[i]))
         for i in range(len(rep.x))]))
    _write_new(out / "f_infinity.csv", csv_text(["t", "t_prime", "defect"], study.finf))
    _write_new(out / "scattering_summary.csv", csv_text(
        ["mode", "tail_exponent", "error_bar", "fitted_exponent"],
        [(rep.mode, rep.tail_exponent, rep.error_bar,
          "" if rep.fitted_exponent is None else rep.fitted_exponent)]))

    _, _, drows = decomposition_study(cfg, history)
    _write_new(out / "decomposition.csv", csv_text(
        ["s", "velocity_residual", "straightening_residual", "transport_velocity", "bracket_ratio_min",
         "bracket_ratio_max"], drows))
    _, jrows = jacobian_study(cfg, history)
    _write_new(out / "jacobian.csv", csv_text(
        ["time", "det_dX_dx_deviation", "det_error_estimate", "det_flow_deviation"], jrows))
    return out
