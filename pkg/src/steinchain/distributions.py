"""Discrete target distributions on {0, ..., N}, N possibly infinite.

Masses are evaluated from multiplicative ratio recurrences accumulated in log
space, so large parameters (binomial n ~ 1e4) neither overflow nor
underflow before the final exponentiation.  Tails of the infinite families
are evaluated in closed form and never by summing a truncated series.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc, logsumexp

FAMILIES = ("uniform", "binomial", "geometric", "hypergeometric", "negative_binomial", "custom")


class ParameterError(ValueError):
    """A distribution or chain parameter lies outside its domain."""

    def __init__(self, name, message):
        super().__init__(f"{name}: {message}")
        self.name = name


def _check_prob(p):
    if p is None:
        raise ParameterError("p", "required")
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ParameterError("p", f"must satisfy 0 < p < 1, got {p!r}")
    return p


def _check_int(name, value, minimum):
    if value is None:
        raise ParameterError(name, "required")
    if int(value) != value:
        raise ParameterError(name, f"must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise ParameterError(name, f"must be >= {minimum}, got {value}")
    return value


@dataclass(frozen=True, eq=False)
class Pmf:
    """Probability mass function on ``{0, ..., support_upper}``.

    ``support_upper`` is ``math.inf`` for the geometric and negative binomial
    families.  Use :func:`make_pmf` or :func:`make_custom_pmf` to build one.
    """

    family: str
    params: dict
    support_upper: float
    _weights: np.ndarray = field(default=None, repr=False)

    @property
    def is_finite(self):
        return not math.isinf(self.support_upper)

    def _resolve_upper(self, upper):
        if upper is None:
            if not self.is_finite:
                raise ValueError("an explicit upper index is required for infinite support")
            return int(self.support_upper)
        upper = int(upper)
        if self.is_finite:
            upper = min(upper, int(self.support_upper))
        return upper

    def log_ratios(self, upper=None):
        """``log(mass(i+1) / mass(i))`` for ``i = 0, ..., upper - 1``."""
        upper = self._resolve_upper(upper)
        i = np.arange(upper, dtype=float)
        f, prm = self.family, self.params
        if f == "uniform":
            return np.zeros(upper)
        if f == "binomial":
            n, p = prm["n"], prm["p"]
            return np.log((n - i) / (i + 1)) + (math.log(p) - math.log1p(-p))
        if f == "geometric":
            return np.full(upper, math.log1p(-prm["p"]))
        if f == "hypergeometric":
            n, r = prm["n"], prm["r"]
            return 2.0 * np.log(r - i) - np.log(i + 1) - np.log(n - 2 * r + i + 1)
        if f == "negative_binomial":
            r, p = prm["r"], prm["p"]
            return math.log(p) + np.log((r + i) / (i + 1))
        w = self._weights
        return np.log(w[1:upper + 1]) - np.log(w[:upper])

    def _log_mass0(self):
        f, prm = self.family, self.params
        if f == "uniform":
            return -math.log(prm["n"])
        if f == "binomial":
            return prm["n"] * math.log1p(-prm["p"])
        if f == "geometric":
            return math.log(prm["p"])
        if f == "hypergeometric":
            n, r = prm["n"], prm["r"]
            k = np.arange(r, dtype=float)
            return float(np.sum(np.log((n - r - k) / (n - k))))
        if f == "negative_binomial":
            return prm["r"] * math.log1p(-prm["p"])
        return math.log(self._weights[0])

    def log_masses(self, upper=None):
        """Log masses on ``{0, ..., upper}`` (the whole support if finite)."""
        upper = self._resolve_upper(upper)
        if self.family == "geometric":
            p = self.params["p"]
            return math.log(p) + np.arange(upper + 1) * math.log1p(-p)
        out = np.empty(upper + 1)
        out[0] = self._log_mass0()
        out[1:] = out[0] + np.cumsum(self.log_ratios(upper))
        if self.is_finite and upper == int(self.support_upper):
            # absorb the drift of the accumulated recurrence
            out -= logsumexp(out)
        return out

    def masses(self, upper=None):
        return np.exp(self.log_masses(upper))

    def mass(self, i):
        i = np.asarray(i)
        top = int(np.max(i)) if i.size else 0
        if self.is_finite:
            top = min(top, int(self.support_upper))
        table = self.masses(max(top, 0))
        inside = (i >= 0) & (i <= top)
        out = np.where(inside, table[np.clip(i, 0, top)], 0.0)
        return out if out.ndim else float(out)

    def cdf(self, k):
        """``P(X <= k)``; accumulated in extended precision on finite supports."""
        k = np.asarray(k)
        if self.is_finite:
            N = int(self.support_upper)
            c = np.cumsum(self.masses().astype(np.longdouble)).astype(float)
            out = np.where(k < 0, 0.0, c[np.clip(k, 0, N)])
        elif self.family == "geometric":
            q = math.log1p(-self.params["p"])
            out = np.where(k < 0, 0.0, -np.expm1((k + 1) * q))
        else:
            r, p = self.params["r"], self.params["p"]
            out = np.where(k < 0, 0.0, betainc(r, np.maximum(k, 0) + 1, 1 - p))
        return out if out.ndim else float(out)

    def tail(self, k):
        """``P(X > k)``, never formed as ``1 - cdf`` for infinite families."""
        k = np.asarray(k)
        if self.is_finite:
            N = int(self.support_upper)
            m = self.masses().astype(np.longdouble)
            t = np.append(np.cumsum(m[::-1])[::-1][1:], 0.0).astype(float)
            out = np.where(k < 0, 1.0, t[np.clip(k, 0, N)])
        elif self.family == "geometric":
            q = math.log1p(-self.params["p"])
            out = np.where(k < 0, 1.0, np.exp((k + 1) * q))
        else:
            r, p = self.params["r"], self.params["p"]
            out = np.where(k < 0, 1.0, betainc(np.maximum(k, 0) + 1, r, p))
        return out if out.ndim else float(out)

    def mean(self):
        f, prm = self.family, self.params
        if f == "geometric":
            return (1 - prm["p"]) / prm["p"]
        if f == "negative_binomial":
            return prm["r"] * prm["p"] / (1 - prm["p"])
        m = self.masses()
        return float(np.arange(m.size) @ m)

    def describe(self):
        if self.family == "custom":
            return f"custom(N={int(self.support_upper)})"
        args = ", ".join(f"{k}={v}" for k, v in self.params.items() if k != "weights")
        return f"{self.family}({args})"


@dataclass(frozen=True, eq=False)
class TruncatedPmf:
    """A finite window ``{0, ..., window_upper}`` of a pmf.

    ``tail_mass`` is the probability beyond the window.  Window masses are
    the family masses unless ``renormalized``, in which case they sum to one.
    """

    pmf: Pmf
    window_upper: int
    tail_mass: float
    renormalized: bool = False
    tol: float = 0.0

    def masses(self):
        m = self.pmf.masses(self.window_upper)
        if self.renormalized:
            m = m / m.sum()
        return m

    @property
    def pi_min(self):
        return float(self.masses().min())


def make_pmf(family, **params):
    """Build a catalog distribution.

    Parameters are ``n`` for uniform (support ``{0, ..., n-1}``), ``n, p``
    for binomial, ``p`` for geometric (``mass(i) = (1-p)^i p``), ``n, r``
    for hypergeometric (``C(r,i) C(n-r,r-i) / C(n,r)`` on ``{0, ..., r}``)
    and ``r, p`` for negative binomial (``C(r+i-1,i) p^i (1-p)^r``).
    """
    if family == "uniform":
        n = _check_int("n", params.get("n"), 1)
        return Pmf("uniform", {"n": n}, n - 1)
    if family == "binomial":
        n = _check_int("n", params.get("n"), 1)
        p = _check_prob(params.get("p"))
        return Pmf("binomial", {"n": n, "p": p}, n)
    if family == "geometric":
        p = _check_prob(params.get("p"))
        return Pmf("geometric", {"p": p}, math.inf)
    if family == "hypergeometric":
        n = _check_int("n", params.get("n"), 2)
        r = _check_int("r", params.get("r"), 1)
        if 2 * r > n:
            raise ParameterError("r", f"must satisfy 0 < 2r <= n, got n={n}, r={r}")
        return Pmf("hypergeometric", {"n": n, "r": r}, r)
    if family == "negative_binomial":
        r = params.get("r")
        if r is None or not float(r) > 0:
            raise ParameterError("r", f"must be > 0, got {r!r}")
        p = _check_prob(params.get("p"))
        return Pmf("negative_binomial", {"r": float(r), "p": p}, math.inf)
    if family == "custom":
        return make_custom_pmf(params.get("weights"))
    raise ParameterError("family", f"unknown family {family!r}; expected one of {FAMILIES}")


def make_custom_pmf(weights):
    """Normalize nonnegative weights into a pmf on a contiguous ``{0, ..., N}``.

    Trailing zeros are dropped.  A zero before the last positive weight would
    make the birth-death chain reducible and is rejected.
    """
    if weights is None:
        raise ParameterError("weights", "required")
    w = np.asarray(list(weights), dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ParameterError("weights", "must be a nonempty list")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ParameterError("weights", "must be finite and nonnegative")
    positive = np.nonzero(w > 0)[0]
    if positive.size == 0:
        raise ParameterError("weights", "at least one weight must be positive")
    w = w[: positive[-1] + 1]
    if np.any(w == 0):
        zero = int(np.nonzero(w == 0)[0][0])
        raise ParameterError("weights", f"zero weight at index {zero} inside the support")
    w = w / math.fsum(w)
    return Pmf("custom", {"weights": tuple(w.tolist())}, w.size - 1, w)


def truncate(pmf, tol=1e-12, renormalize=False):
    """Smallest window ``{0, ..., k}`` whose tail mass is at most ``tol``.

    Finite supports are returned whole with zero tail mass.
    """
    if not tol > 0:
        raise ParameterError("tol", f"must be > 0, got {tol!r}")
    if pmf.is_finite:
        return TruncatedPmf(pmf, int(pmf.support_upper), 0.0, renormalize, tol)
    hi = 1
    while pmf.tail(hi) > tol:
        hi *= 2
    lo = -1  # tail(lo) > tol by convention
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pmf.tail(mid) <= tol:
            hi = mid
        else:
            lo = mid
    return TruncatedPmf(pmf, hi, float(pmf.tail(hi)), renormalize, tol)
