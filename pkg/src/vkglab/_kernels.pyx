# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled particle/reduction kernels; mirrored by ``_fallback``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()


def neumaier_sum(const double[::1] a):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef double s = 0.0, c = 0.0, t, x
    for i in range(n):
        x = a[i]
        t = s + x
        if (s if s >= 0 else -s) >= (x if x >= 0 else -x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        s = t
    return s + c


cdef inline void _tsc(double xi, Py_ssize_t n, Py_ssize_t* idx, double* w) nogil:
    cdef double r = floor(xi + 0.5)
    cdef double delta = xi - r
    cdef Py_ssize_t i0 = <Py_ssize_t>r
    w[0] = 0.5 * (0.5 - delta) * (0.5 - delta)
    w[1] = 0.75 - delta * delta
    w[2] = 0.5 * (0.5 + delta) * (0.5 + delta)
    idx[0] = (i0 - 1) % n
    idx[1] = i0 % n
    idx[2] = (i0 + 1) % n
    if idx[0] < 0:
        idx[0] += n
    if idx[1] < 0:
        idx[1] += n
    if idx[2] < 0:
        idx[2] += n


def tsc_deposit(const double[:, ::1] pos, const double[::1] weights,
                Py_ssize_t n, double dx, double origin):
    """Scatter weights onto a periodic grid with the quadratic (TSC) shape.

    Returns a flat array of length ``n**d`` in C order holding the weight
    sum per cell (not yet divided by the cell volume).
    """
    cdef Py_ssize_t npart = pos.shape[0], d = pos.shape[1]
    cdef Py_ssize_t p, a, b, c, ax
    cdef Py_ssize_t idx[3][3]
    cdef double w[3][3]
    cdef double wp
    cdef Py_ssize_t cells = 1
    for ax in range(d):
        cells *= n
    out_arr = np.zeros(cells, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for p in range(npart):
            for ax in range(d):
                _tsc((pos[p, ax] - origin) / dx, n, &idx[ax][0], &w[ax][0])
            wp = weights[p]
            if d == 1:
                for a in range(3):
                    out[idx[0][a]] += wp * w[0][a]
            elif d == 2:
                for a in range(3):
                    for b in range(3):
                        out[idx[0][a] * n + idx[1][b]] += wp * w[0][a] * w[1][b]
            else:
                for a in range(3):
                    for b in range(3):
                        for c in range(3):
                            out[(idx[0][a] * n + idx[1][b]) * n + idx[2][c]] += (
                                wp * w[0][a] * w[1][b] * w[2][c])
    return out_arr


def tsc_gather(const double[:, ::1] field, const double[:, ::1] pos,
               Py_ssize_t n, double dx, double origin):
    """Interpolate ``field`` (shape ``(m, n**d)``) to particle positions."""
    cdef Py_ssize_t npart = pos.shape[0], d = pos.shape[1], m = field.shape[0]
    cdef Py_ssize_t p, a, b, c, ax, comp, cell
    cdef Py_ssize_t idx[3][3]
    cdef double w[3][3]
    cdef double ww
    out_arr = np.zeros((npart, m), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    with nogil:
        for p in range(npart):
            for ax in range(d):
                _tsc((pos[p, ax] - origin) / dx, n, &idx[ax][0], &w[ax][0])
            if d == 1:
                for a in range(3):
                    for comp in range(m):
                        out[p, comp] += w[0][a] * field[comp, idx[0][a]]
            elif d == 2:
                for a in range(3):
                    for b in range(3):
                        cell = idx[0][a] * n + idx[1][b]
                        ww = w[0][a] * w[1][b]
                        for comp in range(m):
                            out[p, comp] += ww * field[comp, cell]
            else:
                for a in range(3):
                    for b in range(3):
                        for c in range(3):
                            cell = (idx[0][a] * n + idx[1][b]) * n + idx[2][c]
                            ww = w[0][a] * w[1][b] * w[2][c]
                            for comp in range(m):
                                out[p, comp] += ww * field[comp, cell]
    return out_arr
