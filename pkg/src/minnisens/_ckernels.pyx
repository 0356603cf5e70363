# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels; same signatures and results as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt, INFINITY, NAN

from ._pykernels import SEGMENT_TABLE

cnp.import_array()


cdef inline double _positive_root(double a, double b, double c) nogil:
    cdef double disc = sqrt(b * b + 4.0 * a * c)
    if b >= 0:
        return 2.0 * c / (b + disc)
    return (disc - b) / (2.0 * a)


def bias_points(double mu_obs, double frac_missing, double pi0, gamma1, beta1):
    cdef cnp.ndarray[double, ndim=1] g = np.ascontiguousarray(gamma1, dtype=float).ravel()
    cdef cnp.ndarray[double, ndim=1] bt = np.ascontiguousarray(beta1, dtype=float).ravel()
    if g.shape[0] != bt.shape[0]:
        raise ValueError("gamma1 and beta1 must have the same length")
    shape = np.shape(gamma1)
    cdef Py_ssize_t n = g.shape[0], k
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n)
    cdef double pm = frac_missing, mc = 1.0 - mu_obs
    cdef double eg, x, w, eb, y
    with nogil:
        for k in range(n):
            eg = exp(g[k])
            x = _positive_root(eg * pm, (pm - pi0) * eg + pm + pi0 - 1.0, 1.0 - pm)
            w = pi0 / (pi0 + eg * (1.0 + x) / (1.0 + x * eg) * (1.0 - pi0))
            eb = exp(bt[k])
            y = _positive_root(eb * mc, (mc - w) * eb + mc + w - 1.0, 1.0 - mc)
            out[k] = (1.0 - pi0) * (y * eb) / (1.0 + y * eb) + pi0 * y / (1.0 + y) - mu_obs
    return out.reshape(shape)


def grid_min_difference(double threshold, double ed_lo, double ed_hi,
                        double rd_lo, double rd_hi, Py_ssize_t n):
    cdef Py_ssize_t i, j
    cdef double e, r, d2
    cdef double best_e = NAN, best_r = NAN, best = INFINITY
    cdef double he = (ed_hi - ed_lo) / (n - 1), hr = (rd_hi - rd_lo) / (n - 1)
    # node coordinates match numpy.linspace, including the exact upper endpoint
    with nogil:
        for i in range(n):
            e = ed_hi if i == n - 1 else ed_lo + i * he
            for j in range(n):
                r = rd_hi if j == n - 1 else rd_lo + j * hr
                if e * r >= threshold:
                    d2 = e * e + r * r
                    if d2 < best:
                        best, best_e, best_r = d2, e, r
    return best_e, best_r, best


def grid_min_ratio(double threshold, double er_lo, double er_hi,
                   double rr_lo, double rr_hi, Py_ssize_t n):
    cdef Py_ssize_t i, j
    cdef double e, r, fe, d2
    cdef double best_e = NAN, best_r = NAN, best = INFINITY
    cdef double he = (er_hi - er_lo) / (n - 1), hr = (rr_hi - rr_lo) / (n - 1)
    cdef cnp.ndarray[double, ndim=1] rr = np.linspace(rr_lo, rr_hi, n)
    cdef cnp.ndarray[double, ndim=1] fr = (rr - 1.0) / rr
    with nogil:
        for i in range(n):
            e = er_hi if i == n - 1 else er_lo + i * he
            fe = (e - 1.0) / e
            for j in range(n):
                if fe * fr[j] >= threshold:
                    r = rr[j]
                    d2 = (e - 1.0) * (e - 1.0) + (r - 1.0) * (r - 1.0)
                    if d2 < best:
                        best, best_e, best_r = d2, e, r
    return best_e, best_r, best


cdef inline long long _edge_id(Py_ssize_t i, Py_ssize_t j, int edge, Py_ssize_t ncols):
    if edge == 0:
        return 2 * (i * ncols + j)
    if edge == 1:
        return 2 * (i * ncols + j + 1) + 1
    if edge == 2:
        return 2 * ((i + 1) * ncols + j)
    return 2 * (i * ncols + j) + 1


def marching_segments(field, double level):
    cdef cnp.ndarray[double, ndim=2] f = np.ascontiguousarray(field, dtype=float)
    cdef Py_ssize_t nrows = f.shape[0], ncols = f.shape[1], i, j
    cdef int case, center
    out = []
    if nrows < 2 or ncols < 2:
        return np.zeros((0, 2), dtype=np.int64)
    for i in range(nrows - 1):
        for j in range(ncols - 1):
            case = ((f[i, j] >= level) * 1 + (f[i, j + 1] >= level) * 2
                    + (f[i + 1, j + 1] >= level) * 4 + (f[i + 1, j] >= level) * 8)
            if case == 0 or case == 15:
                continue
            center = (f[i, j] + f[i, j + 1] + f[i + 1, j + 1] + f[i + 1, j]) / 4.0 >= level
            for ea, eb in SEGMENT_TABLE[case][center]:
                out.append((_edge_id(i, j, ea, ncols), _edge_id(i, j, eb, ncols)))
    if not out:
        return np.zeros((0, 2), dtype=np.int64)
    return np.array(out, dtype=np.int64)
