"""Eigenvalues of birth-death generators to high relative accuracy.

A birth-death generator is reversible, so ``-L`` is similar to a symmetric
tridiagonal matrix ``S``.  The Dirichlet form gives the factorization
``S = C^T C`` with ``C`` bidiagonal, diagonal ``sqrt(b_k)`` and
off-diagonal ``-sqrt(d_{k+1})``.  The eigenvalues of ``S`` are the squared
singular values of ``C``, and those are the positive eigenvalues of the
zero-diagonal Golub-Kahan tridiagonal whose off-diagonal interleaves the
entries of ``C``.  Bisection on that matrix with an absolute tolerance at
the underflow threshold resolves every eigenvalue to nearly full relative
precision, including the tiny ones (~1e-50) that govern hitting times of
states deep in a tail.  A dense symmetric solver only gets them to within
``eps * ||S||`` in absolute terms.
"""
import numpy as np
from scipy.linalg.lapack import dstebz

_ABSTOL = 2.0 * np.finfo(float).tiny


def _positive_gk_eigenvalues(off, count):
    n = off.shape[0] + 1
    m, w, _, _, info = dstebz(np.zeros(n), off, 2, 0.0, 0.0, n - count + 1, n, _ABSTOL, b"E")
    if info != 0:
        raise RuntimeError(f"dstebz failed with info={info}")
    return np.sort(w[:m])


def killed_spectrum(birth, death, m):
    """Eigenvalues of ``-L`` restricted to ``{0, ..., m-1}`` (killed at ``m``)."""
    if m < 1:
        return np.zeros(0)
    off = np.empty(2 * m - 1)
    off[0::2] = np.sqrt(birth[:m])
    off[1::2] = np.sqrt(death[1:m])
    s = _positive_gk_eigenvalues(off, m)
    return s * s


def full_spectrum(birth, death):
    """All ``W + 1`` eigenvalues of ``-L`` on ``{0, ..., W}``, ascending."""
    W = birth.shape[0] - 1
    if W == 0:
        return np.zeros(1)
    off = np.empty(2 * W)
    off[0::2] = np.sqrt(birth[:W])
    off[1::2] = np.sqrt(death[1:W + 1])
    s = _positive_gk_eigenvalues(off, W + 1)
    # the smallest of these is the structural zero, computed as +-tiny
    s[0] = abs(s[0])
    return np.sort(s * s)


def killed_trace_profile(birth, death):
    """``F[m] = sum_k 1/lambda_k`` over the spectrum killed at ``m``, ``m = 0..W``.

    ``F[m]`` is the expected hitting time of ``m`` from ``0``.
    """
    W = birth.shape[0] - 1
    F = np.zeros(W + 1)
    for m in range(1, W + 1):
        F[m] = np.sum(1.0 / killed_spectrum(birth, death, m))
    return F
