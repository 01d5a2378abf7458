"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Both backends visit particles in the same order and accumulate each cell
sequentially, so deposits and gathers agree bit for bit.
"""

import itertools
import math

import numpy as np


def neumaier_sum(a):
    # fsum is exactly rounded; the compiled kernel is compensated, so the two
    # agree to the last ulp or so, and each is deterministic on its own.
    return math.fsum(np.asarray(a, dtype=np.float64))


def _tsc(xi, n):
    r = np.floor(xi + 0.5)
    delta = xi - r
    i0 = r.astype(np.int64)
    w = np.stack([0.5 * (0.5 - delta) * (0.5 - delta),
                  0.75 - delta * delta,
                  0.5 * (0.5 + delta) * (0.5 + delta)], axis=-1)
    idx = np.stack([(i0 - 1) % n, i0 % n, (i0 + 1) % n], axis=-1)
    return idx, w


def _stencil(pos, n, dx, origin, lead=None):
    # weights multiply left to right, starting from ``lead`` when given
    npart, d = pos.shape
    per_axis = [_tsc((pos[:, ax] - origin) / dx, n) for ax in range(d)]
    cells, weights = [], []
    for combo in itertools.product(range(3), repeat=d):
        cell = np.zeros(npart, dtype=np.int64)
        ww = None
        for ax, c in enumerate(combo):
            idx, w = per_axis[ax]
            cell = cell * n + idx[:, c]
            if ww is None:
                ww = w[:, c] if lead is None else lead * w[:, c]
            else:
                ww = ww * w[:, c]
        cells.append(cell)
        weights.append(ww)
    return cells, weights


def tsc_deposit(pos, weights, n, dx, origin):
    pos = np.ascontiguousarray(pos, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    npart, d = pos.shape
    cells, ws = _stencil(pos, n, dx, origin, lead=weights)
    # particle-major ordering keeps per-cell accumulation in particle order
    flat_cells = np.stack(cells, axis=1).ravel()
    flat_w = np.stack(ws, axis=1).ravel()
    return np.bincount(flat_cells, weights=flat_w, minlength=n ** d).astype(np.float64)


def tsc_gather(field, pos, n, dx, origin):
    field = np.ascontiguousarray(field, dtype=np.float64)
    pos = np.ascontiguousarray(pos, dtype=np.float64)
    cells, ws = _stencil(pos, n, dx, origin)
    out = np.zeros((pos.shape[0], field.shape[0]))
    for cell, w in zip(cells, ws):
        out += w[:, None] * field[:, cell].T
    return out
