"""Transition semigroup and the mixing-type parameters of a finite chain."""
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad_vec

from . import kernels
from .generators import BirthDeathGenerator
from .hitting import hitting_table
from .spectral import eigenvalues, t_av_eigentime, t_rel as _t_rel

POISSON_TAIL = 1e-17
T_HIT_GUARD = 15


def transition_matrix(gen, t):
    """``P_t = exp(tQ)`` by uniformization.

    With ``Lam = max_i |Q(i,i)|`` and ``K = I + Q/Lam``,
    ``P_t = sum_k Poisson(Lam t; k) K^k``.  The series is summed for
    ``t / 2^s`` with ``Lam t / 2^s <= 1`` and then squared ``s`` times, which
    keeps the Poisson weights away from underflow for large ``Lam t``.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    Q = gen.q
    n = Q.shape[0]
    lam = float(np.max(-np.diag(Q)))
    if t == 0 or lam == 0:
        return np.eye(n)
    s = max(0, math.ceil(math.log2(lam * t)))
    mu = lam * t / 2.0 ** s
    K = np.eye(n) + Q / lam
    weight = math.exp(-mu)
    term = np.eye(n)
    P = weight * term
    k = 0
    # for mu <= 1 the Poisson tail beyond k is below mu^(k+1) / (k+1)!
    while weight * mu / (k + 1) > POISSON_TAIL * math.exp(-mu):
        k += 1
        term = term @ K
        weight *= mu / k
        P += weight * term
    for _ in range(s):
        P = P @ P
    return P


def tv_worst(gen, t, P=None):
    """``max_i ||P_t(i, .) - pi||_TV``."""
    if P is None:
        P = transition_matrix(gen, t)
    return float(0.5 * np.max(np.sum(np.abs(P - gen.pi[None, :]), axis=1)))


def t_mix(gen, eps=0.25, rtol=1e-9, t_relax=None):
    """``inf{t : max_i ||P_t(i,.) - pi||_TV < eps}`` by bisection.

    Returns the upper end of the final bracket, a time at which the
    distance is verified to be below ``eps``.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if tv_worst(gen, 0.0) < eps or gen.size == 1:
        return 0.0
    if t_relax is None:
        t_relax = _t_rel(gen)
    hi = t_relax * math.log(1.0 / (eps * float(gen.pi.min()))) + 1.0
    if not tv_worst(gen, hi) < eps:
        raise RuntimeError("bisection bracket failed: distance still above eps at the relaxation bound")
    lo = 0.0
    while hi - lo > rtol * t_relax:
        mid = 0.5 * (lo + hi)
        if tv_worst(gen, mid) < eps:
            hi = mid
        else:
            lo = mid
    return hi


def separation_all(gen, t, P=None):
    """``sep_i(t) = max_j (1 - P_t(i,j)/pi(j))`` for every start ``i``."""
    if P is None:
        P = transition_matrix(gen, t)
    return np.max(1.0 - P / gen.pi[None, :], axis=1)


def separation(gen, i, t):
    return float(separation_all(gen, t)[i])


@dataclass(frozen=True)
class SstResult:
    value: float
    error: float
    horizon: float
    per_state: np.ndarray = field(repr=False, default=None)


def t_sst_detail(gen, rtol=1e-6, t_relax=None):
    """Worst-case expected fastest strong stationary time.

    ``E_i(T) = int_0^inf sep_i(t) dt``.  The integral runs to a horizon
    ``T*`` where the worst-case separation ``s = s(T*) < 1/2``;
    submultiplicativity then bounds the remainder by ``T* s / (1 - s)``,
    which is kept inside the error budget ``rtol * value``.
    """
    if gen.size == 1:
        return SstResult(0.0, 0.0, 0.0, np.zeros(1))
    if t_relax is None:
        t_relax = _t_rel(gen)
    T = t_relax * math.log(1e3)
    for attempt in range(40):
        s = float(np.max(separation_all(gen, T)))
        if s < 0.5:
            integral, err = quad_vec(lambda t: separation_all(gen, t), 0.0, T,
                                     epsabs=1e-13, epsrel=1e-11, norm="max", limit=20000)
            value = float(np.max(integral))
            tail = T * s / (1.0 - s)
            if tail + err <= rtol * value:
                return SstResult(value, tail + err, T, integral)
        T *= 1.5
    raise RuntimeError("separation integral did not converge")


def t_sst(gen, rtol=1e-6):
    return t_sst_detail(gen, rtol).value


def t_stop(gen, D=None, table=None):
    """Worst-case expected optimal stationary stopping time.

    From each start the optimal rule to stationarity has mean
    ``max_j (E_i tau_j - E_pi tau_j) = max_j -D(i,j)/pi(j)``.  The hitting
    table form is preferred: dividing ``D`` by a tiny ``pi(j)`` magnifies
    its rounding error.
    """
    if table is not None:
        E = table.times
        return float(np.max(E - (gen.pi @ E)[None, :]))
    if D is None:
        raise ValueError("either D or table is required")
    return float(np.max(-D.d / gen.pi[None, :]))


def t_dev(gen, table=None):
    """``max_{i,k} sum_j pi(j) |E_i(tau_j) - E_k(tau_j)|`` over ordered pairs."""
    if table is None:
        table = hitting_table(gen, "closed_form" if isinstance(gen, BirthDeathGenerator) else "linear_solve")
    if gen.size == 1:
        return 0.0
    return kernels.deviation_scan(table.times, gen.pi)[0]


def t_hit(gen, alpha=0.25, guard=T_HIT_GUARD):
    """``max over x and A with pi(A) >= alpha of E_x(tau_A)``, or ``None``.

    Exhaustive over subsets, so only windows of at most ``guard`` states are
    handled; larger chains return ``None`` rather than an approximation.
    Hitting times decrease as ``A`` grows, so only sets that stop
    qualifying when any element is removed are solved.
    """
    if not 0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 1/2)")
    n = gen.size
    if n > guard:
        return None
    pi = gen.pi
    Q = gen.q
    masks = np.arange(1, 2 ** n)
    bits = ((masks[:, None] >> np.arange(n)[None, :]) & 1).astype(bool)
    mass = bits @ pi
    qualifying = mass >= alpha
    # minimal: dropping any member falls below alpha
    drop = mass[:, None] - np.where(bits, pi[None, :], np.inf)
    minimal = qualifying & np.all(drop < alpha, axis=1)
    best = 0.0
    sel = bits[minimal]
    sizes = (~sel).sum(axis=1)
    for m in np.unique(sizes):
        if m == 0:
            continue
        group = sel[sizes == m]
        rest = np.array([np.nonzero(~row)[0] for row in group])
        A = Q[rest[:, :, None], rest[:, None, :]]
        u = np.linalg.solve(A, -np.ones((group.shape[0], m, 1)))
        best = max(best, float(u.max()))
    return best


@dataclass
class ChainParams:
    t_mix: dict
    t_rel: float
    t_av: float
    t_sst: float
    t_stop: float
    t_dev: float
    t_hit: dict
    pi_min: float
    alpha: float = 0.25
    t_sst_error: float = 0.0

    def to_dict(self):
        return {
            "t_mix": {repr(k): v for k, v in self.t_mix.items()},
            "t_rel": self.t_rel,
            "t_av": self.t_av,
            "t_sst": self.t_sst,
            "t_sst_error": self.t_sst_error,
            "t_stop": self.t_stop,
            "t_dev": self.t_dev,
            "t_hit": {repr(k): v for k, v in self.t_hit.items()},
            "pi_min": self.pi_min,
        }


def chain_params(gen, eps=(0.25,), alpha=0.25, table=None, spectrum=None, D=None):
    """All parameters of a finite reversible chain."""
    from .stein import deviation_kernel

    if table is None:
        table = hitting_table(gen, "closed_form" if isinstance(gen, BirthDeathGenerator) else "linear_solve")
    if spectrum is None:
        spectrum = eigenvalues(gen)
    if D is None:
        D = deviation_kernel(gen, table)
    tr = 1.0 / spectrum.gap if gen.size > 1 else 0.0
    eps = tuple(itertools.chain(eps))
    sst = t_sst_detail(gen, t_relax=tr) if gen.size > 1 else SstResult(0.0, 0.0, 0.0)
    return ChainParams(
        t_mix={e: t_mix(gen, e, t_relax=tr) for e in eps},
        t_rel=tr,
        t_av=t_av_eigentime(gen, spectrum),
        t_sst=sst.value,
        t_stop=t_stop(gen, D, table),
        t_dev=t_dev(gen, table),
        t_hit={alpha: t_hit(gen, alpha)},
        pi_min=float(gen.pi.min()),
        alpha=alpha,
        t_sst_error=sst.error,
    )
