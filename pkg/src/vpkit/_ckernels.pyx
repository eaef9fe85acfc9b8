# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels in ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, fabs, sqrt

cnp.import_array()

NAME = "cython"


def support_radius(amax, speed, double tol):
    cdef double[::1] a = np.ascontiguousarray(amax, dtype=np.float64)
    cdef double[::1] sp = np.ascontiguousarray(speed, dtype=np.float64)
    cdef Py_ssize_t k, m = a.shape[0]
    cdef double best = 0.0
    cdef bint found = False
    for k in range(m):
        if a[k] > tol and (not found or sp[k] > best):
            best = sp[k]
            found = True
    return best if found else 0.0


def trig_eval(coef, waves, points):
    """Last axis contracted for a block of points at once (one BLAS product), the
    remaining axes per point in compiled loops."""
    coef = np.asarray(coef, dtype=np.complex128)
    pts_arr = np.ascontiguousarray(np.atleast_2d(np.asarray(points, dtype=np.float64)))
    cdef double[:, ::1] pts = pts_arr
    cdef Py_ssize_t d = pts.shape[1], m = pts.shape[0]
    cdef Py_ssize_t[8] nk
    cdef Py_ssize_t ax, p, j, r, size, total = 1
    for ax in range(d):
        nk[ax] = coef.shape[ax]
        total *= nk[ax]
    cdef Py_ssize_t last = nk[d - 1]
    cdef Py_ssize_t rest = total // last
    cdef Py_ssize_t maxn = max(coef.shape)
    wv = np.zeros((d, maxn))
    for ax in range(d):
        wv[ax, :nk[ax]] = np.asarray(waves[ax], dtype=np.float64)
    cdef double[:, :, ::1] cr
    cdef double[:, :, ::1] ci
    cmat = coef.reshape(rest, last).T
    w_last = np.asarray(waves[d - 1], dtype=np.float64)
    out = np.empty(m, dtype=np.complex128)
    cdef cnp.complex128_t[::1] o = out
    cdef double[::1] ar = np.empty(rest)
    cdef double[::1] ai = np.empty(rest)
    cdef double[:, ::1] br
    cdef double[:, ::1] bi
    cdef double sr, si, xr, xi, pr, pim
    cdef Py_ssize_t k, base, lo, hi, blk = max(1, (1 << 20) // max(rest + d * maxn, 1))
    for lo in range(0, m, blk):
        hi = min(m, lo + blk)
        part = np.exp(1j * np.outer(pts_arr[lo:hi, d - 1], w_last)) @ cmat
        br = np.ascontiguousarray(part.real)
        bi = np.ascontiguousarray(part.imag)
        # phase tables for the remaining axes, vectorised over the block
        ang = pts_arr[lo:hi, :d - 1, None] * wv[None, :d - 1, :]
        cr = np.ascontiguousarray(np.cos(ang))
        ci = np.ascontiguousarray(np.sin(ang))
        for p in range(lo, hi):
            for r in range(rest):
                ar[r] = br[p - lo, r]
                ai[r] = bi[p - lo, r]
            size = rest
            ax = d - 2
            while ax >= 0:
                k = nk[ax]
                size = size // k
                for r in range(size):
                    base = r * k
                    sr = 0.0
                    si = 0.0
                    for j in range(k):
                        xr = ar[base + j]
                        xi = ai[base + j]
                        pr = cr[p - lo, ax, j]
                        pim = ci[p - lo, ax, j]
                        sr += xr * pr - xi * pim
                        si += xr * pim + xi * pr
                    ar[r] = sr
                    ai[r] = si
                ax -= 1
            o[p] = ar[0] + 1j * ai[0]
    return out


def cancellation_sums(left, right, ehat, mu, xi_idx, Py_ssize_t nx):
    cdef cnp.complex128_t[:, ::1] L = np.ascontiguousarray(left, dtype=np.complex128)
    cdef cnp.complex128_t[:, ::1] Rt = np.ascontiguousarray(right, dtype=np.complex128)
    cdef cnp.complex128_t[:, ::1] E = np.ascontiguousarray(ehat, dtype=np.complex128)
    cdef double[:, ::1] M = np.ascontiguousarray(mu, dtype=np.float64)
    cdef long long[:, ::1] X = np.ascontiguousarray(xi_idx, dtype=np.int64)
    cdef Py_ssize_t nmu = L.shape[0], nxi = L.shape[1], n = X.shape[1]
    cdef Py_ssize_t a, b, k, dd, diff, stride, off
    cdef double sr = 0.0, si = 0.0, sabs = 0.0
    cdef double cpr, cpi, rr, ri, lr, li, inr, ini, inabs, cabs
    cdef cnp.ndarray[cnp.int64_t, ndim=2] dtab = np.empty((nxi, nxi), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] D = dtab
    for a in range(nxi):
        for b in range(nxi):
            off = 0
            stride = 1
            for dd in range(n - 1, -1, -1):
                diff = (X[a, dd] - X[b, dd]) % nx
                if diff < 0:
                    diff += nx
                off += diff * stride
                stride *= nx
            D[a, b] = off
    for k in range(nmu):
        for a in range(nxi):
            lr = L[k, a].real
            li = L[k, a].imag
            if lr == 0.0 and li == 0.0:
                continue
            inr = 0.0
            ini = 0.0
            inabs = 0.0
            for b in range(nxi):
                off = D[a, b]
                cpr = 0.0
                cpi = 0.0
                for dd in range(n):
                    cpr += M[k, dd] * E[dd, off].real
                    cpi += M[k, dd] * E[dd, off].imag
                rr = Rt[k, b].real
                ri = Rt[k, b].imag
                inr += cpr * rr - cpi * ri
                ini += cpr * ri + cpi * rr
                cabs = sqrt(cpr * cpr + cpi * cpi)
                inabs += cabs * sqrt(rr * rr + ri * ri)
            # conj(l) * i * inner
            sr += lr * (-ini) + li * inr
            si += lr * inr - li * (-ini)
            sabs += sqrt(lr * lr + li * li) * inabs
    return complex(sr, si), sabs
