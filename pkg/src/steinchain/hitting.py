"""Expected hitting times ``E_i(tau_j)`` and their discrete gradients.

Three independent routes are provided for birth-death chains:

* ``closed_form`` -- the birth-death sums
  ``E_i(tau_j) = sum_{k=i}^{j-1} pi([0,k]) / (b_k pi_k)`` for ``i < j`` and
  ``sum_{k=j}^{i-1} pi([k+1,N]) / (b_k pi_k)`` for ``i > j``;
* ``linear_solve`` -- for each target ``j``, solve the generator restricted
  to the other states against ``-1``;
* ``eigen_formula`` -- ``E_i(tau_j) = F(j) - F(i)`` for ``i < j`` with
  ``F(m)`` the sum of reciprocal eigenvalues of ``-L`` killed at ``m``; the
  ``i > j`` half uses the mirrored chain.

Dense :class:`~steinchain.generators.RateMatrix` chains only support the
linear solve.
"""
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import kernels
from ._tridiag import killed_spectrum, killed_trace_profile
from .generators import BirthDeathGenerator, RateMatrix

METHODS = ("closed_form", "linear_solve", "eigen_formula")


class ReducibleChainError(RuntimeError):
    """The restricted generator is singular: some state cannot reach the target."""


@dataclass(frozen=True, eq=False)
class HittingTimeTable:
    """``times[i, j] = E_i(tau_j)`` over the chain's window."""

    times: np.ndarray
    method: str

    def column(self, j):
        return self.times[:, j]

    def is_monotone(self, strict=True):
        """Birth-death shape: each column decreasing up to ``j`` and increasing after.

        With ``strict=False`` ties are accepted; they occur when an increment
        falls below the rounding unit of a large hitting time.
        """
        E = self.times
        n = E.shape[0]
        for j in range(n):
            down, up = np.diff(E[: j + 1, j]), np.diff(E[j:, j])
            if strict and (np.any(down >= 0) or np.any(up <= 0)):
                return False
            if np.any(down > 0) or np.any(up < 0):
                return False
        return True

    def to_csv(self, path_or_buf):
        n = self.times.shape[0]
        header = "i," + ",".join(f"j{j}" for j in range(n))
        rows = [f"{i}," + ",".join(repr(float(x)) for x in self.times[i]) for i in range(n)]
        text = "\n".join([header] + rows) + "\n"
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w") as fh:
                fh.write(text)


def _require_bd(gen):
    if not isinstance(gen, BirthDeathGenerator):
        raise TypeError("this route needs a birth-death generator")


def _has_family_tail(gen):
    return gen.pmf is not None and gen.truncation is not None and not gen.pmf.is_finite


def edge_terms(gen, untruncated=False):
    """Per-edge increments ``(lo, hi)`` of the closed-form hitting sums.

    ``lo[k] = pi([0,k]) / (b_k pi_k)`` and ``hi[k] = pi([k+1,N]) / (b_k pi_k)``.
    By default ``N`` is the top of the window, giving the hitting times of
    the reflected finite chain.  With ``untruncated=True`` on a truncated
    infinite family the exact family tail is used instead, giving hitting
    times of the infinite chain for states inside the window.
    """
    _require_bd(gen)
    b = gen.birth[:-1]
    if untruncated and _has_family_tail(gen):
        W = gen.window_upper
        k = np.arange(W)
        pi = gen.pmf.masses(W)[:-1]
        cdf = gen.pmf.cdf(k)
        tail = gen.pmf.tail(k)
    else:
        pi = gen.pi[:-1]
        cdf = gen.cdf[:-1]
        tail = gen.upper_tail[:-1]
    bp = b * pi
    return cdf / bp, tail / bp


def hit_bd_closed_form(gen, i, j, untruncated=False):
    """``E_i(tau_j)`` from the birth-death sums."""
    if i == j:
        return 0.0
    lo, hi = edge_terms(gen, untruncated)
    if i < j:
        return math.fsum(lo[i:j])
    return math.fsum(hi[j:i])


def closed_form_table(gen, untruncated=False):
    lo, hi = edge_terms(gen, untruncated)
    return HittingTimeTable(kernels.closed_form_table(lo, hi), "closed_form")


def _dense_table(Q):
    n = Q.shape[0]
    E = np.zeros((n, n))
    for j in range(n):
        keep = np.arange(n) != j
        A = Q[np.ix_(keep, keep)]
        rhs = -np.ones(n - 1)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
                lu = scipy.linalg.lu_factor(A, check_finite=False)
        except (ValueError, np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
            raise ReducibleChainError(f"target {j}: {exc}") from exc
        if np.any(np.diag(lu[0]) == 0):
            raise ReducibleChainError(f"target {j} is not reachable from every state")
        u = scipy.linalg.lu_solve(lu, rhs)
        u += scipy.linalg.lu_solve(lu, rhs - A @ u)  # one refinement step
        E[keep, j] = u
    return E


def linear_solve_table(gen):
    if isinstance(gen, BirthDeathGenerator):
        if gen.size > 1 and (np.any(gen.birth[:-1] <= 0) or np.any(gen.death[1:] <= 0)):
            raise ReducibleChainError("a zero interior rate disconnects the chain")
        return HittingTimeTable(kernels.gth_hitting_table(gen.birth, gen.death), "linear_solve")
    return HittingTimeTable(_dense_table(gen.q), "linear_solve")


def eigen_formula_table(gen):
    _require_bd(gen)
    W = gen.window_upper
    F = killed_trace_profile(gen.birth, gen.death)
    mir = gen.mirrored()
    G = killed_trace_profile(mir.birth, mir.death)
    E = np.zeros((W + 1, W + 1))
    iu = np.triu_indices(W + 1, 1)
    E[iu] = F[iu[1]] - F[iu[0]]
    il = np.tril_indices(W + 1, -1)
    # E_i(tau_j), i > j, is E'_{W-i}(tau_{W-j}) on the mirrored chain
    E[il] = G[W - il[1]] - G[W - il[0]]
    return HittingTimeTable(E, "eigen_formula")


def hitting_table(gen, method="linear_solve"):
    """Full table of ``E_i(tau_j)`` by the chosen route."""
    if method == "linear_solve":
        return linear_solve_table(gen)
    if method == "closed_form":
        return closed_form_table(gen)
    if method == "eigen_formula":
        return eigen_formula_table(gen)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def hit_eigen_formula(gen, i, j):
    """``E_i(tau_j)`` as a difference of reciprocal-eigenvalue sums."""
    _require_bd(gen)
    if i == j:
        return 0.0
    if i > j:
        W = gen.window_upper
        return hit_eigen_formula(gen.mirrored(), W - i, W - j)
    b, d = gen.birth, gen.death
    upper = np.sum(1.0 / killed_spectrum(b, d, j))
    lower = np.sum(1.0 / killed_spectrum(b, d, i)) if i > 0 else 0.0
    return float(upper - lower)


def hit_set_vector(gen, A):
    """``E_x(tau_A)`` for every state ``x``."""
    n = gen.size
    inA = np.zeros(n, dtype=bool)
    inA[list(A)] = True
    if not inA.any():
        raise ValueError("target set must be nonempty")
    out = np.zeros(n)
    if inA.all():
        return out
    Q = gen.q
    rest = ~inA
    try:
        out[rest] = np.linalg.solve(Q[np.ix_(rest, rest)], -np.ones(int(rest.sum())))
    except np.linalg.LinAlgError as exc:
        raise ReducibleChainError(str(exc)) from exc
    return out


def hit_set(gen, x, A):
    """``E_x(tau_A)`` by a linear solve on the complement of ``A``."""
    if x in set(A):
        return 0.0
    return float(hit_set_vector(gen, A)[x])


def hit_gradient(gen, j, untruncated=False):
    """``E_i(tau_j) - E_{i+1}(tau_j)`` for ``i = 0, ..., W-1``.

    Positive below ``j`` (``lo[i]``) and negative from ``j`` on (``-hi[i]``).
    """
    lo, hi = edge_terms(gen, untruncated)
    i = np.arange(lo.shape[0])
    return np.where(i < j, lo, -hi)


@dataclass(frozen=True)
class Summability:
    """Windowed value of ``sum_i pi(i) E_i(tau_0)`` and its convergence flag."""

    value: float
    converged: bool
    last_increment: float


def summability(gen, rtol=1e-10):
    """Existence check for the deviation kernel.

    Finite windows always converge.  For a truncated infinite family the
    partial sums use the untruncated hitting times and must have flattened
    out by the window's end (last increment below ``rtol`` of the sum).
    """
    if gen.size == 1:
        return Summability(0.0, True, 0.0)
    if isinstance(gen, RateMatrix):
        col = linear_solve_table(gen).column(0)
        return Summability(float(gen.pi @ col), True, 0.0)
    if _has_family_tail(gen):
        _, hi = edge_terms(gen, untruncated=True)
        e0 = np.concatenate([[0.0], np.cumsum(hi)])
        terms = gen.pmf.masses(gen.window_upper) * e0
        total = math.fsum(terms)
        last = float(terms[-1])
        return Summability(total, last <= rtol * max(total, np.finfo(float).tiny), last)
    _, hi = edge_terms(gen)
    e0 = np.concatenate([[0.0], np.cumsum(hi)])
    return Summability(math.fsum(gen.pi * e0), True, 0.0)
