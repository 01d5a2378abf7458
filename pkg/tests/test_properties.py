"""Property tests for the invariants every module relies on."""

from fractions import Fraction

import numpy as np
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from vkglab import _fallback
from vkglab.archive import as_complex, decode_snapshot, encode_snapshot
from vkglab.config import RunConfig, parse_config
from vkglab.diagnostics import fit_decay_exponent, richardson_limit
from vkglab.kg import GreenSymbols, initial_state, kg_energy, propagate_homogeneous
from vkglab.oscillation import keyint_check
from vkglab.spectral import (BoxGrid, apply_multiplier, dyadic_bump, from_spectral, norm, partition_defect,
                             to_spectral)
from vkglab.transport import relativistic_velocity

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
grids = st.builds(BoxGrid, st.integers(1, 2), st.floats(1.0, 50.0), st.sampled_from([8, 16, 32]))


@st.composite
def grid_and_samples(draw):
    g = draw(grids)
    vals = draw(arrays(np.float64, g.shape, elements=finite))
    return g, vals


@given(grid_and_samples())
def test_transform_round_trip(data):
    g, vals = data
    back = from_spectral(to_spectral(vals, g))
    assert np.allclose(back, vals, atol=1e-10 * (1 + np.max(np.abs(vals))))


@given(grid_and_samples())
def test_parseval(data):
    g, vals = data
    f = to_spectral(vals, g)
    lhs = np.sum(vals ** 2) * g.cell_volume
    assert np.isclose(g.volume * np.sum(np.abs(f.coeffs) ** 2), lhs, rtol=1e-10, atol=1e-10)


@given(grid_and_samples(), st.floats(-1e3, 1e3), st.sampled_from(["L1", "L2", "Linf"]))
def test_norm_homogeneity(data, scale, which):
    g, vals = data
    f = to_spectral(vals, g)
    assert np.isclose(norm(f * scale, which), abs(scale) * norm(f, which), rtol=1e-10, atol=1e-9)


@given(grid_and_samples(), grid_and_samples())
def test_triangle_inequality(a, b):
    g, va = a
    vb = np.resize(b[1], g.shape)
    fa, fb = to_spectral(va, g), to_spectral(vb, g)
    assert norm(fa + fb, "L2") <= norm(fa, "L2") + norm(fb, "L2") + 1e-9


@given(grids)
def test_partition_of_unity(g):
    assert partition_defect(g) < 1e-12


@given(st.floats(1e-3, 1e4), st.integers(-6, 14))
def test_bump_bounded(k, j):
    b = dyadic_bump(np.array([k]), j)[0]
    assert 0.0 <= b <= 1.0


@given(grids, st.floats(0.0, 100.0))
def test_green_split(g, t):
    sym = GreenSymbols(g)
    assert np.max(np.abs(sym.osc(t, 1) + sym.osc(t, -1) - sym.green(t))) < 1e-14


@settings(max_examples=25)
@given(st.floats(0.01, 2.0), st.integers(1, 50))
def test_energy_invariant(dt, steps):
    g = BoxGrid(1, 10.0, 64)
    x = g.axis
    state = initial_state(g, np.exp(-x ** 2), 0.3 * np.exp(-0.5 * (x - 1) ** 2))
    e0 = kg_energy(state)
    for _ in range(steps):
        state = propagate_homogeneous(state, dt)
    assert abs(kg_energy(state) - e0) <= 1e-12 * e0


@given(arrays(np.float64, st.integers(1, 3), elements=st.floats(-1e6, 1e6)))
def test_relativistic_speed_below_one(v):
    assert np.linalg.norm(relativistic_velocity(v[None])) < 1.0


@settings(max_examples=30, deadline=None)
@given(st.floats(-4, 4), st.floats(-3, 3), st.floats(0, 25), st.sampled_from([1, -1]))
def test_keyint(k, v, t, sign):
    assert keyint_check([k], [v], t, sign) <= 1e-10


@given(st.floats(-3.0, -0.05), st.floats(1e-3, 1e3), st.floats(1.0, 5.0))
def test_fit_recovers_exponent(gamma, amplitude, t0):
    t = np.linspace(t0, 20 * t0, 200)
    rep = fit_decay_exponent(t, amplitude * t ** gamma, (2 * t0, 15 * t0))
    assert abs(rep.exponent - gamma) < 1e-6


@given(finite, finite, st.floats(0.25, 3.0))
def test_richardson_exact_on_single_tail(limit, coeff, tail):
    t = 2.0 ** np.arange(5)
    est = richardson_limit(limit + coeff * t ** -tail, tail)
    assert np.allclose(est, limit, atol=1e-9 * (1 + abs(limit) + abs(coeff)))


@given(st.integers(1, 2), st.sampled_from([64, 128, 256]), st.floats(0.005, 0.05), st.integers(0, 2 ** 31),
       st.sampled_from(["grid", "particle"]))
def test_config_round_trip(dimension, points, dt, seed, mode):
    cfg = RunConfig(dimension=dimension, points=points, dt=dt, horizon=100 * dt, cadence=10 * dt, seed=seed,
                    mode=mode, particles=100 if mode == "particle" else 0)
    assert parse_config(cfg.to_text()) == cfg


@given(st.integers(1, 3), st.integers(1, 3), st.floats(-1e6, 1e6), st.booleans())
def test_snapshot_round_trip(d, m, time, cplx):
    rng = np.random.default_rng(d * 10 + m)
    shape = (m,) + (4,) * d
    data = rng.normal(size=shape) + (1j * rng.normal(size=shape) if cplx else 0)
    snap = decode_snapshot(encode_snapshot(data, time))
    assert snap.time == time and snap.points == (4,) * d
    assert np.array_equal(as_complex(snap) if cplx else snap.data, data)


@given(st.lists(st.floats(-1e12, 1e12), min_size=1, max_size=200))
def test_neumaier_sum_accuracy(values):
    a = np.array(values)
    exact = float(sum(map(Fraction, values)))
    assert abs(_fallback.neumaier_sum(a) - exact) <= 1e-14 * np.sum(np.abs(a)) + 1e-300


@given(st.integers(1, 3), st.integers(1, 200), st.integers(0, 1000))
def test_deposit_conserves_weight(d, count, seed):
    rng = np.random.default_rng(seed)
    pos = rng.uniform(-20, 20, (count, d))
    w = rng.uniform(0, 1, count)
    total = _fallback.tsc_deposit(pos, w, 8, 2.5, -10.0).sum()
    assert np.isclose(total, w.sum(), rtol=1e-12)


@given(grid_and_samples())
def test_hermitian_symbol_keeps_real(data):
    g, vals = data
    out = apply_multiplier(to_spectral(vals, g), 1.0 / g.bracket)
    assert out.real
