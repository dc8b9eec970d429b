# cython: language_level=3
"""Compiled hot kernels; see ``_pykernels`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, sqrt, INFINITY

cnp.import_array()

ctypedef double complex cplx

cdef int CONVERGED = 0
cdef int MAX_ITER = 1
cdef int STALLED = 2
cdef int MAX_DILUTIONS = 40


cdef inline double creal(cplx z) noexcept nogil:
    return z.real


cdef inline cplx conj(cplx z) noexcept nogil:
    return z.real - 1j * z.imag


cdef double loglik(const double[::1] counts, const cplx[:, :, ::1] eff,
                   const cplx* rho, double* p) noexcept nogil:
    cdef Py_ssize_t k
    cdef double ll = 0.0
    for k in range(counts.shape[0]):
        # Tr(E rho) for Hermitian 2x2 blocks
        p[k] = creal(eff[k, 0, 0] * rho[0] + eff[k, 0, 1] * rho[2]
                     + eff[k, 1, 0] * rho[1] + eff[k, 1, 1] * rho[3])
        if counts[k] > 0:
            if p[k] <= 0:
                return -INFINITY
            ll += counts[k] * log(p[k])
    return ll


cdef inline void sandwich(const cplx* a, const cplx* rho, cplx* out) noexcept nogil:
    # out = a rho a^dagger, normalized and hermitized
    cdef cplx t0 = a[0] * rho[0] + a[1] * rho[2]
    cdef cplx t1 = a[0] * rho[1] + a[1] * rho[3]
    cdef cplx t2 = a[2] * rho[0] + a[3] * rho[2]
    cdef cplx t3 = a[2] * rho[1] + a[3] * rho[3]
    cdef cplx o0 = t0 * conj(a[0]) + t1 * conj(a[1])
    cdef cplx o1 = t0 * conj(a[2]) + t1 * conj(a[3])
    cdef cplx o2 = t2 * conj(a[0]) + t3 * conj(a[1])
    cdef cplx o3 = t2 * conj(a[2]) + t3 * conj(a[3])
    cdef double tr = o0.real + o3.real
    cdef cplx off = 0.5 * (o1 + conj(o2)) / tr
    out[0] = o0.real / tr
    out[3] = o3.real / tr
    out[1] = off
    out[2] = conj(off)


def mle_rrr(counts, effects, rho0, double tol, long max_iter):
    cdef double[::1] c = np.ascontiguousarray(counts, dtype=np.float64)
    cdef cplx[:, :, ::1] eff = np.ascontiguousarray(effects, dtype=np.complex128)
    cdef Py_ssize_t K = c.shape[0], k
    cdef double[::1] p = np.empty(K)
    cdef double[::1] cp = np.empty(K)
    cdef double[::1] hist = np.empty(max_iter + 1)
    cdef cplx rho[4]
    cdef cplx cand[4]
    cdef cplx r[4]
    cdef cplx a[4]
    cdef double n = 0.0, w, ll, cll, eps, diff
    cdef long it = 0
    cdef int status = MAX_ITER, d, accepted
    cdef cplx[:, ::1] r0 = np.ascontiguousarray(rho0, dtype=np.complex128)

    rho[0] = r0[0, 0]; rho[1] = r0[0, 1]; rho[2] = r0[1, 0]; rho[3] = r0[1, 1]
    for k in range(K):
        n += c[k]
    with nogil:
        ll = loglik(c, eff, rho, &p[0])
        hist[0] = ll
        while it < max_iter:
            r[0] = 0; r[1] = 0; r[2] = 0; r[3] = 0
            for k in range(K):
                if c[k] > 0 and p[k] > 0:
                    w = c[k] / n / p[k]
                    r[0] += w * eff[k, 0, 0]
                    r[1] += w * eff[k, 0, 1]
                    r[2] += w * eff[k, 1, 0]
                    r[3] += w * eff[k, 1, 1]
            accepted = 0
            eps = INFINITY
            for d in range(MAX_DILUTIONS):
                if d == 0:
                    a[0] = r[0]; a[1] = r[1]; a[2] = r[2]; a[3] = r[3]
                else:
                    a[0] = 1 + eps * r[0]; a[1] = eps * r[1]
                    a[2] = eps * r[2]; a[3] = 1 + eps * r[3]
                sandwich(a, rho, cand)
                cll = loglik(c, eff, cand, &cp[0])
                if cll >= ll:
                    accepted = 1
                    break
                eps = 1.0 if d == 0 else 0.5 * eps
            if not accepted:
                status = STALLED
                break
            it += 1
            diff = 0.0
            for k in range(4):
                diff += (cand[k].real - rho[k].real) ** 2 + (cand[k].imag - rho[k].imag) ** 2
                rho[k] = cand[k]
            diff = sqrt(diff)
            for k in range(K):
                p[k] = cp[k]
            ll = cll
            hist[it] = ll
            if diff < tol:
                status = CONVERGED
                break
    out = np.array([[rho[0], rho[1]], [rho[2], rho[3]]], dtype=np.complex128)
    return out, it, np.asarray(hist[: it + 1]).copy(), status


def density_substep(rho_in, coins_in):
    cdef cplx[:, :, :, ::1] rho = np.ascontiguousarray(rho_in, dtype=np.complex128)
    cdef cplx[:, :, ::1] coins = np.ascontiguousarray(coins_in, dtype=np.complex128)
    cdef Py_ssize_t L = rho.shape[0], i, j, a, b, c, d, ii, jj
    out_arr = np.zeros((L, 2, L, 2), dtype=np.complex128)
    cdef cplx[:, :, :, ::1] out = out_arr
    cdef cplx t[2][2]
    cdef cplx s
    with nogil:
        for i in range(L):
            for j in range(L):
                # t = C_i rho_ij C_j^dagger
                for a in range(2):
                    for c in range(2):
                        s = 0
                        for b in range(2):
                            for d in range(2):
                                s = s + coins[i, a, b] * rho[i, b, j, d] * conj(coins[j, c, d])
                        t[a][c] = s
                for a in range(2):
                    ii = i + 1 if a == 0 else i - 1
                    if ii < 0 or ii >= L:
                        continue
                    for c in range(2):
                        jj = j + 1 if c == 0 else j - 1
                        if jj < 0 or jj >= L:
                            continue
                        out[ii, a, jj, c] = t[a][c]
    return out_arr


def damp_offdiagonal(rho_in, double visibility):
    out_arr = np.array(rho_in, dtype=np.complex128, order="C")
    cdef cplx[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t L = out.shape[0], i, j, a, c
    with nogil:
        for i in range(L):
            for j in range(L):
                if i != j:
                    for a in range(2):
                        for c in range(2):
                            out[i, a, j, c] = out[i, a, j, c] * visibility
    return out_arr
