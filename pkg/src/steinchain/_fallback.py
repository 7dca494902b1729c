"""Pure-Python/NumPy implementations of the hot kernels.

These define the reference semantics of :mod:`steinchain._core`; both modules
expose the same four functions and must agree to rounding (the Monte Carlo
kernel bit-for-bit, since both consume the same uniform stream).
"""
import math

import numpy as np

_BLOCK = 4096


def closed_form_table(lo, hi):
    """Fill ``E[i, j]`` from per-edge hitting increments.

    ``E[i, j] = lo[i] + ... + lo[j-1]`` for ``i < j`` and
    ``E[i, j] = hi[j] + ... + hi[i-1]`` for ``i > j``.  Each entry is a sum
    of positive terms accumulated from the target side, so no cancellation.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    n = lo.shape[0] + 1
    E = np.zeros((n, n))
    for a in range(n):
        if a < n - 1:
            E[a, a + 1:] = np.cumsum(lo[a:])
        if a > 0:
            E[a, :a] = np.cumsum(hi[:a][::-1])[::-1]
    return E


def _gth_block(a, c, kappa):
    # (a_k + c_k + kappa_k) u_k - a_k u_{k-1} - c_k u_{k+1} = 1, eliminated
    # with subtraction-free pivots p_k = c_k + e_k.
    m = len(a)
    p = [0.0] * m
    r = [0.0] * m
    e_prev = 0.0
    p_prev = 1.0
    r_prev = 0.0
    for k in range(m):
        w = a[k] / p_prev
        e = kappa[k] + w * e_prev
        p[k] = c[k] + e
        r[k] = 1.0 + w * r_prev
        e_prev, p_prev, r_prev = e, p[k], r[k]
    u = [0.0] * m
    u[m - 1] = r[m - 1] / p[m - 1]
    for k in range(m - 2, -1, -1):
        u[k] = (r[k] + c[k] * u[k + 1]) / p[k]
    return u


def gth_hitting_table(birth, death):
    """Expected hitting times of a birth-death chain by direct elimination.

    ``birth`` and ``death`` have length ``W + 1`` with ``birth[W] = 0`` and
    ``death[0] = 0``.  Column ``j`` solves the generator restricted to the
    states other than ``j``; that system splits into the blocks below and
    above ``j``, each a tridiagonal M-matrix.
    """
    b = [float(x) for x in birth]
    d = [float(x) for x in death]
    n = len(b)
    E = np.zeros((n, n))
    for j in range(n):
        if j > 0:
            a = [d[k] for k in range(j)]
            c = [b[k] for k in range(j)]
            kappa = [0.0] * j
            kappa[-1] = c[-1]
            c[-1] = 0.0
            E[:j, j] = _gth_block(a, c, kappa)
        if j < n - 1:
            a = [d[k] for k in range(j + 1, n)]
            c = [b[k] for k in range(j + 1, n)]
            kappa = [0.0] * (n - 1 - j)
            kappa[0] = a[0]
            a[0] = 0.0
            E[j + 1:, j] = _gth_block(a, c, kappa)
    return E


def deviation_scan(E, pi):
    """Worst pairwise pi-weighted L1 deviation between rows of ``E``.

    Returns ``(value, i, k, adjacent)`` where ``value`` is the maximum over
    ordered pairs of ``sum_j pi[j] |E[i, j] - E[k, j]|`` attained at
    ``(i, k)`` and ``adjacent[i]`` is the same sum for the pair ``(i, i+1)``.
    """
    E = np.asarray(E, dtype=float)
    pi = np.asarray(pi, dtype=float)
    n = E.shape[0]
    best, bi, bk = 0.0, 0, 0
    for i in range(n):
        s = np.abs(E[i] - E) @ pi
        k = int(np.argmax(s))
        if s[k] > best:
            best, bi, bk = float(s[k]), i, k
    adjacent = np.abs(E[:-1] - E[1:]) @ pi
    return best, bi, bk, adjacent


def simulate_hitting(bitgen, exit_rate, jump_ptr, jump_to, jump_cum, start, target, n_samples):
    """Simulate ``n_samples`` trajectories from ``start`` until ``target``.

    The jump chain of state ``s`` is stored CSR-style: neighbours
    ``jump_to[jump_ptr[s]:jump_ptr[s+1]]`` with cumulative jump
    probabilities ``jump_cum`` over the same slice.  Each step consumes two
    uniforms, first the holding time then the jump.
    """
    gen = np.random.Generator(bitgen)
    exit_rate = [float(x) for x in exit_rate]
    jump_ptr = [int(x) for x in jump_ptr]
    jump_to = [int(x) for x in jump_to]
    jump_cum = [float(x) for x in jump_cum]
    absorbing = [bool(x) for x in target]
    out = np.zeros(n_samples)
    buf = gen.random(_BLOCK).tolist()
    pos = 0
    for s in range(n_samples):
        x = start
        t = 0.0
        while not absorbing[x]:
            if pos == _BLOCK:
                buf = gen.random(_BLOCK).tolist()
                pos = 0
            u = buf[pos]
            pos += 1
            t += -math.log1p(-u) / exit_rate[x]
            if pos == _BLOCK:
                buf = gen.random(_BLOCK).tolist()
                pos = 0
            u = buf[pos]
            pos += 1
            k = jump_ptr[x]
            last = jump_ptr[x + 1] - 1
            while k < last and u >= jump_cum[k]:
                k += 1
            x = jump_to[k]
        out[s] = t
    return out
