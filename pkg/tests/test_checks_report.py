import csv

import numpy as np
import pytest

from vkglab.checks import CheckResult, SUITES, results_csv, suite_bernstein, suite_scatter
from vkglab.config import RunConfig
from vkglab.report import (decay_window, level_times, oscillatory_velocity, probe_set, series_period,
                           write_report)
from vkglab.errors import ArchiveError


def test_check_result_relations():
    assert CheckResult("s", "a", 1.0, 2.0).passed
    assert CheckResult("s", "a", 1.0, 0.5, ">=").passed
    assert not CheckResult("s", "a", 1.0, 2.0, ">=").passed
    assert CheckResult("s", "a", 4.0, (3.5, 4.5), "in").passed
    assert not CheckResult("s", "a", 5.0, (3.5, 4.5), "in").passed
    text = results_csv([CheckResult("s", "a", 4.0, (3.5, 4.5), "in")])
    assert "[3.5, 4.5]" in text and text.strip().endswith("PASS")


def test_suite_registry():
    assert set(SUITES) == {"green", "bernstein", "keyint", "decomp", "duhamel", "scatter"}


def test_fast_suites_pass():
    for suite in (suite_bernstein, suite_scatter):
        assert all(r.passed for r in suite())


def test_level_times_fit_horizon():
    t0, m = level_times(RunConfig())
    assert t0 == pytest.approx(1.86) and m == 5
    assert t0 * 2 ** (m - 1) <= 30.0
    assert decay_window(RunConfig()) == (10.0, 30.0)
    assert series_period("Eosc") == pytest.approx(2 * np.pi)
    assert series_period("rho") is None


def test_probe_set_inside_support():
    cfg = RunConfig()
    x, v = probe_set(cfg)
    assert x.shape == (64, 1)
    assert np.all(np.abs(x) <= 2.0) and np.all(np.abs(v) <= 0.8)
    x2, v2 = probe_set(cfg)
    assert np.array_equal(x, x2) and np.array_equal(v, v2)


def test_oscillatory_velocity_shape(reference_split):
    X = np.zeros((3, 2, 1))
    V = np.zeros((3, 2, 1))
    assert oscillatory_velocity(reference_split, X, V).shape == (3, 2, 1)


def test_write_report(reference_run, tmp_path):
    out = write_report(reference_run.archive, tmp_path / "report")
    names = {p.name for p in out.iterdir()}
    assert names == {"decay.csv", "ledger.csv", "scattering.csv", "scattering_trace.csv", "v_infinity.csv",
                     "f_infinity.csv", "scattering_summary.csv", "decomposition.csv", "jacobian.csv"}
    with open(out / "decay.csv", newline="") as fh:
        fits = {(r["quantity"], r["norm"]): float(r["exponent"]) for r in csv.DictReader(fh)}
    assert fits[("rho", "Linf")] == pytest.approx(-0.99, abs=0.05)
    with open(out / "scattering.csv", newline="") as fh:
        defects = [float(r["velocity_defect"]) for r in csv.DictReader(fh)]
    assert len(defects) == 5 and all(np.diff(defects) < 0)
    with pytest.raises(ArchiveError):
        write_report(reference_run.archive, out)
