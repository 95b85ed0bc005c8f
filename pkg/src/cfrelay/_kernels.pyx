# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Monte-Carlo projection kernel.

Same contract as ``cfrelay._kernels_py.projections``. Complex arrays are read
through float64 views with a trailing (real, imag) axis, and the sums over
APs and antennas are fused so h = h_hat + h_err etc. are never materialized.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def projections(h_hat, h_err, g_hat, g_err, s_A, s_B):
    cdef Py_ssize_t R = h_hat.shape[0]
    cdef Py_ssize_t M = h_hat.shape[1]
    cdef Py_ssize_t W = h_hat.shape[2]
    cdef Py_ssize_t N = h_hat.shape[3]

    cdef const double[:, :, :, :, ::1] hh = _as_real(h_hat)
    cdef const double[:, :, :, :, ::1] he = _as_real(h_err)
    cdef const double[:, :, :, :, ::1] gh = _as_real(g_hat)
    cdef const double[:, :, :, :, ::1] ge = _as_real(g_err)
    cdef const double[:, ::1] sa = np.ascontiguousarray(s_A, dtype=np.float64)
    cdef const double[:, ::1] sb = np.ascontiguousarray(s_B, dtype=np.float64)

    out = np.zeros((6, R, W, W, 2), dtype=np.float64)
    noise_arr = np.zeros((R, W), dtype=np.float64)
    cdef double[:, :, :, :, ::1] o = out
    cdef double[:, ::1] nz = noise_arr

    cdef Py_ssize_t r, m, i, j, n
    cdef double vr, vi, hr, hi, gr, gi, ar, ai, br, bi, wa, wb
    cdef double acc

    with nogil:
        for r in range(R):
            for m in range(M):
                for i in range(W):
                    # receive-side quantities of user pair i at AP m
                    acc = 0.0
                    for n in range(N):
                        vr = hh[r, m, i, n, 0] + gh[r, m, i, n, 0]
                        vi = hh[r, m, i, n, 1] + gh[r, m, i, n, 1]
                        acc = acc + vr * vr + vi * vi
                    nz[r, i] += acc
                    for j in range(W):
                        wa = sa[m, j]
                        wb = sb[m, j]
                        for n in range(N):
                            # v_i conj times h_j, g_j  (MAC)
                            vr = hh[r, m, i, n, 0] + gh[r, m, i, n, 0]
                            vi = hh[r, m, i, n, 1] + gh[r, m, i, n, 1]
                            hr = hh[r, m, j, n, 0] + he[r, m, j, n, 0]
                            hi = hh[r, m, j, n, 1] + he[r, m, j, n, 1]
                            gr = gh[r, m, j, n, 0] + ge[r, m, j, n, 0]
                            gi = gh[r, m, j, n, 1] + ge[r, m, j, n, 1]
                            o[0, r, i, j, 0] += vr * hr + vi * hi
                            o[0, r, i, j, 1] += vr * hi - vi * hr
                            o[1, r, i, j, 0] += vr * gr + vi * gi
                            o[1, r, i, j, 1] += vr * gi - vi * gr

                            # precoders of pair j seen through the channels of pair i (BC)
                            ar = hh[r, m, j, n, 0] * wb
                            ai = hh[r, m, j, n, 1] * wb
                            br = gh[r, m, j, n, 0] * wa
                            bi = gh[r, m, j, n, 1] * wa
                            hr = hh[r, m, i, n, 0] + he[r, m, i, n, 0]
                            hi = hh[r, m, i, n, 1] + he[r, m, i, n, 1]
                            gr = gh[r, m, i, n, 0] + ge[r, m, i, n, 0]
                            gi = gh[r, m, i, n, 1] + ge[r, m, i, n, 1]
                            o[2, r, i, j, 0] += ar * hr + ai * hi
                            o[2, r, i, j, 1] += ar * hi - ai * hr
                            o[3, r, i, j, 0] += br * hr + bi * hi
                            o[3, r, i, j, 1] += br * hi - bi * hr
                            o[4, r, i, j, 0] += br * gr + bi * gi
                            o[4, r, i, j, 1] += br * gi - bi * gr
                            o[5, r, i, j, 0] += ar * gr + ai * gi
                            o[5, r, i, j, 1] += ar * gi - ai * gr

    c = out.view(np.complex128)[..., 0]
    return c[0], c[1], c[2], c[3], c[4], c[5], noise_arr


def _as_real(x):
    x = np.ascontiguousarray(x, dtype=np.complex128)
    return x.view(np.float64).reshape(x.shape + (2,))
