# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel for repeated product-formula application of 1-sparse pieces.

Mirrors _one_sparse_py.apply_plan; see that module for the packed-array
layout.  Keep the two implementations in lockstep.
"""

from libc.math cimport cos, sin


def apply_plan(double complex[::1] psi,
               long long[::1] diag_ptr, long long[::1] diag_idx,
               double[::1] diag_h,
               long long[::1] pair_ptr, long long[::1] pair_lo,
               long long[::1] pair_hi,
               double[::1] pair_absa, double complex[::1] pair_u,
               long long[::1] step_term, double[::1] step_s,
               long long reps):
    cdef Py_ssize_t rep, si, t, j
    cdef Py_ssize_t nsteps = step_term.shape[0]
    cdef double s, hs, th, c, sn
    cdef double complex u, a_lo, a_hi, ph

    for rep in range(reps):
        for si in range(nsteps):
            t = <Py_ssize_t> step_term[si]
            s = step_s[si]
            for j in range(<Py_ssize_t> diag_ptr[t], <Py_ssize_t> diag_ptr[t + 1]):
                hs = diag_h[j] * s
                ph = cos(hs) - 1j * sin(hs)
                psi[<Py_ssize_t> diag_idx[j]] = psi[<Py_ssize_t> diag_idx[j]] * ph
            for j in range(<Py_ssize_t> pair_ptr[t], <Py_ssize_t> pair_ptr[t + 1]):
                th = pair_absa[j] * s
                c = cos(th)
                sn = sin(th)
                u = pair_u[j]
                a_lo = psi[<Py_ssize_t> pair_lo[j]]
                a_hi = psi[<Py_ssize_t> pair_hi[j]]
                psi[<Py_ssize_t> pair_lo[j]] = c * a_lo - 1j * u * sn * a_hi
                psi[<Py_ssize_t> pair_hi[j]] = c * a_hi - 1j * u.conjugate() * sn * a_lo
