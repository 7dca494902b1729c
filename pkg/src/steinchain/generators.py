"""Markov generators with a prescribed stationary law.

Two representations are used.  :class:`BirthDeathGenerator` stores the rate
vectors of a chain on ``{0, ..., W}``; :class:`RateMatrix` stores a dense
generator.  Infinite supports are cut to a finite window whose top state is
reflecting (no birth out of ``W``), which keeps the chain reversible with
respect to the renormalized window masses.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .distributions import ParameterError, Pmf, TruncatedPmf, make_pmf, truncate

GEN_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class BirthDeathGenerator:
    """Birth-death generator on ``{0, ..., W}``.

    ``birth[i]`` is the rate ``i -> i+1`` and ``death[i]`` the rate
    ``i -> i-1``; both arrays have length ``W + 1`` with ``birth[W] = 0`` and
    ``death[0] = 0``.  ``pi`` is the stationary law of this finite chain.
    ``pmf`` and ``truncation`` record the target it was built for, if any.
    """

    birth: np.ndarray
    death: np.ndarray
    pi: np.ndarray
    pmf: Pmf = None
    truncation: TruncatedPmf = None
    label: str = ""

    @property
    def size(self):
        return self.pi.shape[0]

    @property
    def window_upper(self):
        return self.size - 1

    @property
    def exit_rate(self):
        return self.birth + self.death

    @property
    def q(self):
        n = self.size
        Q = np.zeros((n, n))
        idx = np.arange(n)
        Q[idx[:-1], idx[1:]] = self.birth[:-1]
        Q[idx[1:], idx[:-1]] = self.death[1:]
        Q[idx, idx] = -self.exit_rate
        return Q

    @property
    def cdf(self):
        """``pi({0..k})`` on the window, from positive partial sums."""
        return np.cumsum(self.pi.astype(np.longdouble)).astype(float)

    @property
    def upper_tail(self):
        """``pi({k+1..W})`` on the window, from positive partial sums."""
        t = np.cumsum(self.pi[::-1].astype(np.longdouble))[::-1]
        return np.append(t[1:], 0.0).astype(float)

    def mirrored(self):
        """The same chain with states relabelled ``k -> W - k``."""
        return BirthDeathGenerator(
            self.death[::-1].copy(), self.birth[::-1].copy(), self.pi[::-1].copy(),
            None, None, f"mirror of {self.label}",
        )


@dataclass(frozen=True, eq=False)
class RateMatrix:
    """Dense generator ``q`` with stationary law ``pi``."""

    q: np.ndarray
    pi: np.ndarray
    reversible: bool = False
    pmf: Pmf = None
    label: str = ""

    @property
    def size(self):
        return self.pi.shape[0]

    @property
    def window_upper(self):
        return self.size - 1

    @property
    def exit_rate(self):
        return -np.diag(self.q).copy()


def _pad_rates(birth, death):
    birth = np.asarray(birth, dtype=float)
    death = np.asarray(death, dtype=float)
    if birth.shape != death.shape or birth.ndim != 1:
        raise ParameterError("rates", "birth and death must be vectors of equal length")
    return np.append(birth, 0.0), np.insert(death, 0, 0.0)


def stationary_from_rates(birth, death):
    """Stationary law of a birth-death chain from its rates (log-space product)."""
    lr = np.log(birth[:-1]) - np.log(death[1:])
    logw = np.concatenate([[0.0], np.cumsum(lr)])
    return np.exp(logw - logsumexp(logw))


def bd_from_rates(birth, death, pmf=None, label="custom rates"):
    """Birth-death chain on ``{0, ..., W}`` from ``b_0..b_{W-1}`` and ``d_1..d_W``.

    The stationary law comes from the rate recursion
    ``pi(k) ~ prod_{i<k} b_i / d_{i+1}``.
    """
    b, d = _pad_rates(birth, death)
    if np.any(~np.isfinite(b)) or np.any(~np.isfinite(d)):
        raise ParameterError("rates", "rates must be finite")
    if np.any(b[:-1] <= 0):
        raise ParameterError("birth", "interior birth rates must be positive")
    if np.any(d[1:] <= 0):
        raise ParameterError("death", "death rates must be positive")
    return BirthDeathGenerator(b, d, stationary_from_rates(b, d), pmf, None, label)


def canonical_bd(pmf, tol=1e-12, min_upper=None):
    """The birth-death chain with ``b_i = (i+1) pi(i+1)/pi(i)`` and ``d_i = i``.

    Infinite supports are truncated at tail mass ``tol``; ``min_upper``
    widens the window further when a caller needs specific states.
    """
    trunc = truncate(pmf, tol)
    W = trunc.window_upper
    if min_upper is not None and not pmf.is_finite and min_upper > W:
        W = int(min_upper)
        trunc = TruncatedPmf(pmf, W, float(pmf.tail(W)), False, tol)
    ratios = np.exp(pmf.log_ratios(W))
    idx = np.arange(W + 1, dtype=float)
    b = np.append((idx[:-1] + 1) * ratios, 0.0)
    d = idx.copy()
    pi = pmf.masses(W)
    if not np.all(pi > 0):
        raise ParameterError("pmf", "mass must be strictly positive on the window")
    pi = pi / pi.sum()
    return BirthDeathGenerator(b, d, pi, pmf, trunc, f"canonical chain for {pmf.describe()}")


def binomial_example_chain(n, p):
    """Birth-death chain ``b_i = p(n-i)``, ``d_i = (1-p) i`` (spectrum ``0..n``)."""
    pmf = make_pmf("binomial", n=n, p=p)
    i = np.arange(pmf.support_upper + 1, dtype=float)
    gen = bd_from_rates(p * (n - i[:-1]), (1 - p) * i[1:], pmf, f"binomial example chain n={n} p={p}")
    return gen


def bernoulli_laplace(n, r, relabel=True):
    """Bernoulli-Laplace urn chain on ``{0, ..., r}``.

    With ``relabel=False`` the rates are ``b_i = (r-i)(n-r-i)/(r(n-r))``,
    ``d_i = i^2/(r(n-r))``, whose stationary law is ``pi(i) = C(r,i) C(n-r,i)
    / C(n,r)``.  That is the hypergeometric law of :func:`make_pmf` reflected
    through ``i -> r - i``; the two coincide only when ``n = 2r``.  The
    default ``relabel=True`` returns the chain in the orientation whose
    stationary law is ``make_pmf("hypergeometric", n=n, r=r)``.  Both
    orientations have the same spectrum.
    """
    pmf = make_pmf("hypergeometric", n=n, r=r)
    i = np.arange(r + 1, dtype=float)
    scale = r * (n - r)
    b = (r - i) * (n - r - i) / scale
    d = i * i / scale
    if relabel:
        b, d = d[::-1], b[::-1]
        label = f"Bernoulli-Laplace chain n={n} r={r}"
    else:
        pmf = None
        label = f"Bernoulli-Laplace chain n={n} r={r} (urn labelling)"
    return bd_from_rates(b[:-1], d[1:], pmf, label)


def complete_graph_generator(n, rate=1.0):
    """Chain jumping from every state to every other at ``rate`` (uniform law)."""
    n = int(n)
    if n < 2:
        raise ParameterError("n", f"must be >= 2, got {n}")
    if not rate > 0:
        raise ParameterError("scale", f"must be > 0, got {rate!r}")
    q = np.full((n, n), float(rate))
    np.fill_diagonal(q, -(n - 1) * float(rate))
    return RateMatrix(q, np.full(n, 1.0 / n), True, make_pmf("uniform", n=n),
                      f"complete-graph chain n={n} rate={rate}")


def gwi_generator(r, p, tol=1e-12, min_upper=None):
    """Galton-Watson with immigration: ``b_i = p(r+i)``, ``d_i = i``."""
    return canonical_bd(make_pmf("negative_binomial", r=r, p=p), tol, min_upper)


def example_chain(pmf, scale=1.0, tol=1e-12):
    """The example chain used for each catalog family.

    Binomial and hypergeometric targets get their own example chains;
    uniform gets the complete-graph chain with jump rate ``scale``; the
    geometric and negative binomial examples coincide with the canonical
    chain.
    """
    f = pmf.family
    if f == "binomial":
        return binomial_example_chain(pmf.params["n"], pmf.params["p"])
    if f == "hypergeometric":
        return bernoulli_laplace(pmf.params["n"], pmf.params["r"])
    if f == "uniform":
        return complete_graph_generator(pmf.params["n"], scale)
    return canonical_bd(pmf, tol)


@dataclass
class ValidationReport:
    detailed_balance: float
    row_sum: float
    stationarity: float
    truncation: float
    tol: float

    @property
    def ok(self):
        return max(self.detailed_balance, self.row_sum, self.stationarity) <= self.tol


def validate(gen, tol=GEN_TOL):
    """Relative residuals of detailed balance, row sums and ``pi Q = 0``.

    ``truncation`` is the largest gap between the chain's stationary law and
    the family masses it was built from; it is bounded by the tail mass of
    the truncation and does not affect ``ok``.
    """
    Q = gen.q
    pi = gen.pi
    scale = max(float(np.max(np.abs(Q))), np.finfo(float).tiny)
    flux = pi[:, None] * Q
    db = float(np.max(np.abs(flux - flux.T))) / max(float(np.max(np.abs(flux))), np.finfo(float).tiny)
    rows = float(np.max(np.abs(Q.sum(axis=1)))) / scale
    stat = float(np.max(np.abs(pi @ Q))) / scale
    trunc = 0.0
    if gen.pmf is not None:
        m = gen.pmf.masses(gen.window_upper)
        trunc = float(np.max(np.abs(m - pi)))
    return ValidationReport(db, rows, stat, trunc, tol)


def is_reversible(gen, tol=GEN_TOL):
    if isinstance(gen, RateMatrix) and not gen.reversible:
        return False
    return validate(gen, tol).detailed_balance <= tol


def jump_structure(gen):
    """Exit rates and CSR jump-chain tables used by the trajectory kernels."""
    Q = gen.q
    n = Q.shape[0]
    rate = -np.diag(Q)
    ptr = [0]
    to = []
    cum = []
    for s in range(n):
        nbr = [k for k in range(n) if k != s and Q[s, k] > 0]
        if rate[s] > 0:
            c = np.cumsum([Q[s, k] for k in nbr]) / rate[s]
            c[-1] = 1.0
        else:
            nbr, c = [s], np.array([1.0])
        to.extend(nbr)
        cum.extend(c.tolist())
        ptr.append(len(to))
    exit_rate = np.where(rate > 0, rate, 1.0)
    return exit_rate, np.asarray(ptr, dtype=np.int64), np.asarray(to, dtype=np.int64), np.asarray(cum)


def make_chain(pmf, chain="canonical", scale=1.0, tol=1e-12):
    """Generator for ``pmf`` by chain choice (``canonical``/``paper-example``/``complete-graph``)."""
    if chain == "canonical" or (pmf.is_finite and pmf.support_upper == 0):
        return canonical_bd(pmf, tol)
    if chain == "paper-example":
        return example_chain(pmf, scale, tol)
    if chain == "complete-graph":
        if pmf.family != "uniform":
            raise ParameterError("chain", "complete-graph chain requires a uniform target")
        return complete_graph_generator(pmf.params["n"], scale)
    raise ParameterError("chain", f"unknown chain {chain!r}")
