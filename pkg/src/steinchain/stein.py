"""Deviation kernel, Stein solutions and Stein-factor bounds.

Sign convention: ``f_h = D h`` with ``D = int_0^inf (P_t - Pi) dt``, so
``L f_h = pi(h) - h``.  Every bound below is on absolute values and does not
depend on this choice.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .generators import BirthDeathGenerator
from .hitting import edge_terms, hit_gradient, hitting_table, summability


@dataclass(frozen=True, eq=False)
class DeviationKernel:
    """``d[i, j] = D(i, j)`` over the window, with the stationary law it centres on."""

    d: np.ndarray
    pi: np.ndarray
    warning: str = None

    @property
    def trace(self):
        return math.fsum(np.diag(self.d))

    def row_sum_residual(self):
        return float(np.max(np.abs(self.d.sum(axis=1))))

    def left_null_residual(self):
        return float(np.max(np.abs(self.pi @ self.d)))

    def generator_residual(self, Q):
        """``max(|L D - (Pi - I)|, |D L - (Pi - I)|)`` entrywise."""
        n = self.pi.shape[0]
        target = np.tile(self.pi, (n, 1)) - np.eye(n)
        return float(max(np.max(np.abs(Q @ self.d - target)), np.max(np.abs(self.d @ Q - target))))

    def diagonal_dominates_columns(self, atol=0.0):
        """``D(i, j) <= D(j, j)`` for all ``i, j``."""
        return bool(np.all(self.d <= np.diag(self.d)[None, :] + atol))

    def to_csv(self, path_or_buf):
        n = self.d.shape[0]
        text = "i," + ",".join(f"j{j}" for j in range(n)) + "\n"
        text += "".join(f"{i}," + ",".join(repr(float(x)) for x in self.d[i]) + "\n" for i in range(n))
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w") as fh:
                fh.write(text)


def _default_table(gen):
    return hitting_table(gen, "closed_form" if isinstance(gen, BirthDeathGenerator) else "linear_solve")


def deviation_kernel(gen, table=None):
    """``D`` from expected hitting times.

    ``D(j, j) = pi(j) sum_i pi(i) E_i(tau_j)`` and
    ``D(i, j) = D(j, j) - pi(j) E_i(tau_j)``.
    """
    if table is None:
        table = _default_table(gen)
    E = table.times
    pi = gen.pi
    diag = pi * (pi @ E)
    d = diag[None, :] - E * pi[None, :]
    warning = None
    check = summability(gen)
    if not check.converged:
        warning = (f"sum_i pi(i) E_i(tau_0) has not converged at the window edge "
                   f"(last increment {check.last_increment:.3e})")
    return DeviationKernel(d, pi.copy(), warning)


def deviation_kernel_algebraic(gen):
    """``D = (Pi - Q)^{-1} - Pi``, a route that never touches hitting times."""
    n = gen.size
    Pi = np.tile(gen.pi, (n, 1))
    return DeviationKernel(np.linalg.inv(Pi - gen.q) - Pi, gen.pi.copy())


@dataclass(frozen=True, eq=False)
class SteinFactors:
    f: np.ndarray
    grad: np.ndarray
    h_tag: str = ""

    @property
    def sup_f(self):
        return float(np.max(np.abs(self.f)))

    @property
    def sup_grad(self):
        return float(np.max(np.abs(self.grad))) if self.grad.size else 0.0


def stein_solution(D, h, h_tag="h"):
    """``f_h = D h`` and its forward difference."""
    h = np.asarray(h, dtype=float)
    if h.shape != D.pi.shape:
        raise ValueError(f"h has shape {h.shape}, expected {D.pi.shape}")
    if not np.all(np.isfinite(h)):
        raise ValueError("h must be finite on the window")
    f = D.d @ h
    return SteinFactors(f, np.diff(f), h_tag)


def delta(n, j):
    h = np.zeros(n)
    h[j] = 1.0
    return h


def stein_gradient_closed_form(gen, j, untruncated=False):
    """``grad f_{delta_j}(i) = pi(j) (E_i(tau_j) - E_{i+1}(tau_j))`` for ``i < W``."""
    if untruncated and gen.truncation is not None and not gen.pmf.is_finite:
        weight = float(gen.pmf.mass(j))
    else:
        weight = float(gen.pi[j])
    return weight * hit_gradient(gen, j, untruncated)


def gradient_table(gen, table):
    """``G[i, j] = pi(j) (E_i(tau_j) - E_{i+1}(tau_j))``, shape ``(W, W+1)``."""
    E = table.times
    return (E[:-1] - E[1:]) * gen.pi[None, :]


def _signed_sup(row):
    pos = math.fsum(np.clip(row, 0, None))
    neg = math.fsum(np.clip(-row, 0, None))
    return max(pos, neg)


@dataclass(frozen=True)
class UniformClassSup:
    """Stein factors over ``h: X -> [0, 1]`` at one state ``i``.

    ``sup_f`` and ``sup_grad`` are exact (attained at an indicator);
    ``sum_abs_d`` and ``sum_abs_grad`` are the weaker absolute-value sums.
    ``sup_grad``/``sum_abs_grad`` are ``None`` at the top state.
    """

    i: int
    sup_f: float
    sum_abs_d: float
    two_t_av: float
    sup_grad: float = None
    sum_abs_grad: float = None


def uniform_class_sup(gen, i, D=None, table=None, t_av=None):
    if table is None:
        table = _default_table(gen)
    if D is None:
        D = deviation_kernel(gen, table)
    if t_av is None:
        t_av = D.trace
    row = D.d[i]
    sup_grad = sum_abs_grad = None
    if i < gen.size - 1:
        g = (table.times[i] - table.times[i + 1]) * gen.pi
        sup_grad = _signed_sup(g)
        sum_abs_grad = math.fsum(np.abs(g))
    return UniformClassSup(i, _signed_sup(row), math.fsum(np.abs(row)), 2.0 * t_av, sup_grad, sum_abs_grad)


def uniform_class_sups(gen, D=None, table=None, t_av=None):
    """:func:`uniform_class_sup` for every state."""
    if table is None:
        table = _default_table(gen)
    if D is None:
        D = deviation_kernel(gen, table)
    return [uniform_class_sup(gen, i, D, table, t_av) for i in range(gen.size)]


def gradient_sup_profile(gen, untruncated=False):
    """Exact ``sup_h |grad f_h(i)|`` and ``sum_j pi(j) |E_i tau_j - E_{i+1} tau_j|`` per edge.

    A birth-death gradient row is ``lo[i] pi(j)`` for ``j > i`` and
    ``-hi[i] pi(j)`` for ``j <= i``, so both quantities only need the mass
    above and below ``i``.  With ``untruncated=True`` a truncated infinite
    family uses its exact masses and tails, which gives the values for the
    infinite chain (``j`` ranging over all of ``N``).
    """
    lo, hi = edge_terms(gen, untruncated)
    k = np.arange(lo.shape[0])
    if untruncated and gen.truncation is not None and not gen.pmf.is_finite:
        above, below = gen.pmf.tail(k), gen.pmf.cdf(k)
    else:
        above, below = gen.upper_tail[:-1], gen.cdf[:-1]
    pos = np.asarray(lo * above, dtype=float)
    neg = np.asarray(hi * below, dtype=float)
    return np.maximum(pos, neg), pos + neg


def dirac_sup_norms(gen, D, table):
    """``(||f_{delta_j}||_inf, ||grad f_{delta_j}||_inf)`` for every ``j``."""
    sup_f = np.max(np.abs(D.d), axis=0)
    if gen.size > 1:
        sup_grad = gen.pi * np.max(np.abs(table.times[:-1] - table.times[1:]), axis=0)
    else:
        sup_grad = np.zeros(1)
    return sup_f, sup_grad


def remark_scan(D):
    """Pairs with ``|D(i, j)| > D(j, j)``; a diagnostic, never asserted."""
    diag = np.diag(D.d)
    hits = np.argwhere(np.abs(D.d) > diag[None, :])
    return [(int(i), int(j), float(D.d[i, j]), float(diag[j])) for i, j in hits]


@dataclass
class Inequality:
    """``lhs <= rhs``; ``certified`` lines count towards the overall verdict."""

    name: str
    lhs: float
    rhs: float
    certified: bool = True
    note: str = ""
    tol: float = 1e-9

    @property
    def slack(self):
        return self.rhs - self.lhs

    @property
    def passed(self):
        return self.lhs <= self.rhs + self.tol * max(1.0, abs(self.rhs))

    def to_dict(self):
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "slack": self.slack,
                "pass": self.passed, "certified": self.certified, "tol": self.tol, "note": self.note}


@dataclass
class SteinReport:
    label: str
    inequalities: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(q.passed for q in self.inequalities if q.certified)

    def failures(self):
        return [q for q in self.inequalities if q.certified and not q.passed]

    def to_dict(self):
        return {"chain": self.label, "passed": self.passed,
                "inequalities": [q.to_dict() for q in self.inequalities], **self.extras}


def _worst(lhs, rhs):
    k = int(np.argmin(np.asarray(rhs) - np.asarray(lhs)))
    return float(lhs[k]), float(rhs[k]), k


def certify_bounds(gen, params, D=None, table=None):
    """Check every Stein-factor inequality that has an explicit constant.

    ``params`` is a :class:`~steinchain.chainparams.ChainParams`.  The
    ``t_hit`` line has an unspecified constant and is reported as a pair.
    """
    if table is None:
        table = _default_table(gen)
    if D is None:
        D = deviation_kernel(gen, table)
    t_av = params.t_av
    t_mix = params.t_mix.get(0.25)
    report = SteinReport(gen.label)
    out = report.inequalities

    sup_f, sup_grad = dirac_sup_norms(gen, D, table)
    out.append(Inequality("max_j ||f_delta_j|| <= 2 t_av", float(sup_f.max()), 2 * t_av))
    out.append(Inequality("max_j ||grad f_delta_j|| <= t_dev", float(sup_grad.max()), params.t_dev))

    sups = uniform_class_sups(gen, D, table, t_av)
    exact = [s.sup_f for s in sups]
    l1 = [s.sum_abs_d for s in sups]
    lhs, rhs, k = _worst(exact, l1)
    out.append(Inequality("sup_h |f_h(i)| <= sum_j |D(i,j)|", lhs, rhs, note=f"worst i={k}"))
    lhs, rhs, k = _worst(l1, [2 * t_av] * len(l1))
    out.append(Inequality("sum_j |D(i,j)| <= 2 t_av", lhs, rhs, note=f"worst i={k}"))
    if gen.size > 1:
        g_exact = [s.sup_grad for s in sups[:-1]]
        g_l1 = [s.sum_abs_grad for s in sups[:-1]]
        lhs, rhs, k = _worst(g_exact, g_l1)
        out.append(Inequality("sup_h |grad f_h(i)| <= sum_j pi_j |E_i tau_j - E_i+1 tau_j|", lhs, rhs,
                              note=f"worst i={k}"))
        lhs, rhs, k = _worst(g_l1, [params.t_dev] * len(g_l1))
        out.append(Inequality("sum_j pi_j |E_i tau_j - E_i+1 tau_j| <= t_dev", lhs, rhs, note=f"worst i={k}"))

    out.append(Inequality("t_dev <= 10 t_sst", params.t_dev, 10 * params.t_sst,
                          note="t_sst = expected fastest strong stationary time (separation integral)"))
    out.append(Inequality("t_dev <= 10 t_stop", params.t_dev, 10 * params.t_stop,
                          note="t_stop = optimal stationary stopping time, max_ij -D(i,j)/pi(j)"))
    relax = params.t_rel * math.log(4.0 / params.pi_min)
    if t_mix is not None:
        out.append(Inequality("t_dev <= 5 t_mix(1/4)", params.t_dev, 5 * t_mix))
        out.append(Inequality("t_mix(1/4) <= t_rel log(4/pi_min)", t_mix, relax))
        out.append(Inequality("10 t_sst <= 5 t_mix(1/4)", 10 * params.t_sst, 5 * t_mix, certified=False,
                              note="ordering between the two intermediate bounds; not implied, reported only"))
    out.append(Inequality("t_dev <= 5 t_rel log(4/pi_min)", params.t_dev, 5 * relax))
    out.append(Inequality("trace D = t_av", abs(D.trace - t_av), 1e-8 * (1 + t_av), note="identity check"))

    alpha = params.alpha
    report.extras["t_hit_pair"] = {"alpha": alpha, "t_dev": params.t_dev,
                                   "t_hit": params.t_hit.get(alpha) if params.t_hit else None,
                                   "note": "C_alpha unspecified; inequality not certified"}
    report.extras["remark_scan"] = remark_scan(D)
    if D.warning:
        report.extras["existence_warning"] = D.warning
    return report
