# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled group-convolution kernel.

For every output point x the sum  sum_y fw(y) g(y^-1 x)  is accumulated, with
g evaluated by multilinear interpolation on its uniform grid (zero outside).
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()

cdef enum:
    MAXDIM = 8


cdef inline double _interp(const double[::1] g, const double* z, const double[::1] origin,
                           const double[::1] spacing, const long[::1] shape,
                           const long[::1] strides, int dim) noexcept nogil:
    cdef long base[MAXDIM]
    cdef double frac[MAXDIM]
    cdef int k, corner
    cdef double u, w, acc = 0.0
    cdef long idx
    for k in range(dim):
        u = (z[k] - origin[k]) / spacing[k]
        if u < 0.0 or u > shape[k] - 1:
            return 0.0
        base[k] = <long>floor(u)
        if base[k] >= shape[k] - 1:
            base[k] = shape[k] - 2
        frac[k] = u - base[k]
    for corner in range(1 << dim):
        w = 1.0
        idx = 0
        for k in range(dim):
            if (corner >> k) & 1:
                w *= frac[k]
                idx += (base[k] + 1) * strides[k]
            else:
                w *= 1.0 - frac[k]
                idx += base[k] * strides[k]
        if w != 0.0:
            acc += w * g[idx]
    return acc


def convolve_at(int heisenberg, int n, const double[:, ::1] ys, const double[::1] fw_re,
                const double[::1] fw_im, const double[::1] g_re, const double[::1] g_im,
                const double[::1] origin, const double[::1] spacing, const long[::1] shape,
                const double[:, ::1] xs):
    """Return ``sum_y fw(y) g(y^-1 x)`` for each row ``x`` of ``xs``.

    ``heisenberg`` selects the law (t, x, y | z) with ``n`` pairs; otherwise
    the group is abelian.
    """
    cdef int dim = ys.shape[1]
    cdef Py_ssize_t npts = xs.shape[0], ny = ys.shape[0], i, j
    cdef int k
    cdef double z[MAXDIM]
    cdef double gr, gi, sym
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_re = np.zeros(npts)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_im = np.zeros(npts)
    cdef double[::1] ore = out_re, oim = out_im
    cdef long[::1] strides = np.empty(dim, dtype=np.int_)
    if dim > MAXDIM:
        raise ValueError(f"at most {MAXDIM} dimensions supported")
    strides[dim - 1] = 1
    for k in range(dim - 2, -1, -1):
        strides[k] = strides[k + 1] * shape[k + 1]
    with nogil:
        for i in range(npts):
            for j in range(ny):
                for k in range(dim):
                    z[k] = xs[i, k] - ys[j, k]
                if heisenberg:
                    # y^-1 = -y; central term of (-y) . x
                    sym = 0.0
                    for k in range(n):
                        sym = sym + ys[j, 1 + n + k] * xs[i, 1 + k] - ys[j, 1 + k] * xs[i, 1 + n + k]
                    z[0] = z[0] + 0.5 * sym
                gr = _interp(g_re, z, origin, spacing, shape, strides, dim)
                gi = _interp(g_im, z, origin, spacing, shape, strides, dim)
                ore[i] += fw_re[j] * gr - fw_im[j] * gi
                oim[i] += fw_re[j] * gi + fw_im[j] * gr
    return out_re + 1j * out_im
