# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels.  Semantics are defined by ``steinchain._fallback``."""
import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport fabs, log1p
from libc.stdlib cimport free, malloc
from numpy.random cimport bitgen_t

cnp.import_array()


def closed_form_table(lo, hi):
    cdef const double[::1] lo_v = np.ascontiguousarray(lo, dtype=np.float64)
    cdef const double[::1] hi_v = np.ascontiguousarray(hi, dtype=np.float64)
    cdef Py_ssize_t n = lo_v.shape[0] + 1
    E = np.zeros((n, n))
    cdef double[:, ::1] Ev = E
    cdef Py_ssize_t a, j
    cdef double acc
    with nogil:
        for a in range(n):
            acc = 0.0
            for j in range(a + 1, n):
                acc = acc + lo_v[j - 1]
                Ev[a, j] = acc
            acc = 0.0
            for j in range(a - 1, -1, -1):
                acc = acc + hi_v[j]
                Ev[a, j] = acc
    return E


cdef void _gth_block(const double *a, const double *c, const double *kappa,
                     Py_ssize_t m, double *p, double *r, double *u) noexcept nogil:
    cdef Py_ssize_t k
    cdef double e_prev = 0.0, p_prev = 1.0, r_prev = 0.0, w, e
    for k in range(m):
        w = a[k] / p_prev
        e = kappa[k] + w * e_prev
        p[k] = c[k] + e
        r[k] = 1.0 + w * r_prev
        e_prev = e
        p_prev = p[k]
        r_prev = r[k]
    u[m - 1] = r[m - 1] / p[m - 1]
    for k in range(m - 2, -1, -1):
        u[k] = (r[k] + c[k] * u[k + 1]) / p[k]


def gth_hitting_table(birth, death):
    cdef const double[::1] b = np.ascontiguousarray(birth, dtype=np.float64)
    cdef const double[::1] d = np.ascontiguousarray(death, dtype=np.float64)
    cdef Py_ssize_t n = b.shape[0]
    E = np.zeros((n, n))
    cdef double[:, ::1] Ev = E
    cdef double *work = <double *> malloc(6 * n * sizeof(double))
    if work == NULL:
        raise MemoryError()
    cdef double *a = work
    cdef double *c = work + n
    cdef double *kappa = work + 2 * n
    cdef double *p = work + 3 * n
    cdef double *r = work + 4 * n
    cdef double *u = work + 5 * n
    cdef Py_ssize_t j, k, m
    try:
        with nogil:
            for j in range(n):
                if j > 0:
                    for k in range(j):
                        a[k] = d[k]
                        c[k] = b[k]
                        kappa[k] = 0.0
                    kappa[j - 1] = c[j - 1]
                    c[j - 1] = 0.0
                    _gth_block(a, c, kappa, j, p, r, u)
                    for k in range(j):
                        Ev[k, j] = u[k]
                if j < n - 1:
                    m = n - 1 - j
                    for k in range(m):
                        a[k] = d[j + 1 + k]
                        c[k] = b[j + 1 + k]
                        kappa[k] = 0.0
                    kappa[0] = a[0]
                    a[0] = 0.0
                    _gth_block(a, c, kappa, m, p, r, u)
                    for k in range(m):
                        Ev[j + 1 + k, j] = u[k]
    finally:
        free(work)
    return E


def deviation_scan(E, pi):
    cdef const double[:, ::1] Ev = np.ascontiguousarray(E, dtype=np.float64)
    cdef const double[::1] w = np.ascontiguousarray(pi, dtype=np.float64)
    cdef Py_ssize_t n = Ev.shape[0]
    cdef Py_ssize_t i, k, j, bi = 0, bk = 0
    cdef double s, best = 0.0
    adjacent = np.zeros(max(n - 1, 0))
    cdef double[::1] adj = adjacent
    with nogil:
        for i in range(n):
            for k in range(i + 1, n):
                s = 0.0
                for j in range(n):
                    s = s + w[j] * fabs(Ev[i, j] - Ev[k, j])
                if k == i + 1:
                    adj[i] = s
                if s > best:
                    best = s
                    bi = i
                    bk = k
    return best, int(bi), int(bk), adjacent


def simulate_hitting(bitgen, exit_rate, jump_ptr, jump_to, jump_cum, Py_ssize_t start,
                     target, Py_ssize_t n_samples):
    cdef const double[::1] rate = np.ascontiguousarray(exit_rate, dtype=np.float64)
    cdef const cnp.int64_t[::1] ptr = np.ascontiguousarray(jump_ptr, dtype=np.int64)
    cdef const cnp.int64_t[::1] to = np.ascontiguousarray(jump_to, dtype=np.int64)
    cdef const double[::1] cum = np.ascontiguousarray(jump_cum, dtype=np.float64)
    cdef const cnp.uint8_t[::1] absorbing = np.ascontiguousarray(target, dtype=np.uint8)
    capsule = bitgen.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("invalid bit generator capsule")
    cdef bitgen_t *rng = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")
    out = np.zeros(n_samples)
    cdef double[::1] ov = out
    cdef Py_ssize_t s, x, k, last
    cdef double t, u
    with bitgen.lock, nogil:
        for s in range(n_samples):
            x = start
            t = 0.0
            while not absorbing[x]:
                u = rng.next_double(rng.state)
                t = t + (-log1p(-u) / rate[x])
                u = rng.next_double(rng.state)
                k = ptr[x]
                last = ptr[x + 1] - 1
                while k < last and u >= cum[k]:
                    k = k + 1
                x = to[k]
            ov[s] = t
    return out
