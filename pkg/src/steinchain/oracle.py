"""Brute-force verification paths, independent of the main computations.

None of these share intermediate results with the routes they check: the
semigroup is integrated as an ODE, the deviation kernel as a time integral of
``expm``, the alpha-potential by a resolvent solve, hitting times by
simulation, and Stein sups by enumeration.
"""
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from numpy.polynomial.legendre import leggauss
from scipy.integrate import solve_ivp

from . import kernels
from .generators import jump_structure

BATCH = 10_000
ENUM_GUARD = 12


def semigroup_ode(gen, t, tol=1e-12):
    """``P_t`` by integrating ``dP/dt = P Q`` from ``P_0 = I``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if tol < 1e-12:
        raise ValueError("tol must be >= 1e-12")
    Q = gen.q
    n = Q.shape[0]
    if t == 0:
        return np.eye(n)
    sol = solve_ivp(lambda _, y: (y.reshape(n, n) @ Q).ravel(), (0.0, t), np.eye(n).ravel(),
                    method="DOP853", rtol=tol, atol=tol)
    if not sol.success:
        raise RuntimeError(f"ODE integration failed: {sol.message}")
    return sol.y[:, -1].reshape(n, n)


@dataclass(frozen=True, eq=False)
class NumericDeviation:
    d: np.ndarray
    horizon: float
    tail_bound: float


def deviation_numeric(gen, tol=1e-9, nodes=16, panels_per_stage=8, max_stages=80):
    """``D = int_0^inf (P_t - Pi) dt`` by Gauss-Legendre panels over ``expm``.

    Panels share one width within a stage, so the node propagators
    ``expm(s_k Q)`` are computed once per stage and ``P`` at every node is
    ``P_a expm(s_k Q)``.  The width doubles between stages.  Integration
    stops once the estimated tail ``dev(T) / rate`` drops below ``tol``,
    where ``dev(T) = max|P_T - Pi|`` and ``rate`` is the decay rate observed
    over the last stage.
    """
    Q = gen.q
    n = Q.shape[0]
    Pi = np.tile(gen.pi, (n, 1))
    if n == 1:
        return NumericDeviation(np.zeros((1, 1)), 0.0, 0.0)
    x, w = leggauss(nodes)
    width = 0.25 / float(np.max(-np.diag(Q)))
    total = np.zeros((n, n))
    a = 0.0
    Pa = np.eye(n)
    for _ in range(max_stages):
        props = [scipy.linalg.expm(0.5 * width * (1.0 + xk) * Q) for xk in x]
        step = scipy.linalg.expm(width * Q)
        dev_start = float(np.max(np.abs(Pa - Pi)))
        for _ in range(panels_per_stage):
            for Ek, wk in zip(props, w):
                total += (0.5 * width * wk) * (Pa @ Ek - Pi)
            Pa = Pa @ step
            a += width
        dev = float(np.max(np.abs(Pa - Pi)))
        if 0 < dev < dev_start:
            rate = math.log(dev_start / dev) / (panels_per_stage * width)
            tail = dev / rate
            if tail < tol:
                return NumericDeviation(total, a, tail)
        elif dev == 0:
            return NumericDeviation(total, a, 0.0)
        width *= 2.0
    raise RuntimeError(f"deviation integral not converged by t={a:.3g}; the spectral gap may be tiny")


def alpha_potential(gen, alpha, h):
    """``D^alpha h = int_0^inf e^{-alpha t} (P_t - Pi) h dt`` via the resolvent.

    Since ``(alpha - Q) 1 = alpha 1`` this equals ``(alpha - Q)^{-1}`` applied
    to the centred ``h - pi(h)``, which avoids subtracting two terms of size
    ``1/alpha``.
    """
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    h = np.asarray(h, dtype=float)
    n = gen.size
    return np.linalg.solve(alpha * np.eye(n) - gen.q, h - float(gen.pi @ h))


def alpha_potential_matrix(gen, alpha):
    """``D^alpha`` as a matrix, column ``j`` equal to ``D^alpha delta_j``."""
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    n = gen.size
    return np.linalg.solve(alpha * np.eye(n) - gen.q, np.eye(n) - np.tile(gen.pi, (n, 1)))


def _threads():
    env = os.environ.get("STEINCHAIN_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    samples: int


def mc_hitting(gen, i, j, samples=100_000, seed=None, threads=None):
    """Monte Carlo ``E_i(tau_j)`` with its standard error.

    Trajectories are split into batches of ``BATCH``; batch ``k`` draws from
    its own PCG64 stream spawned from ``seed``, so results do not depend on
    the thread count.
    """
    if seed is None:
        raise ValueError("an explicit seed is required")
    if samples < 1000:
        raise ValueError("samples must be >= 1000")
    if i == j:
        return McEstimate(0.0, 0.0, samples)
    exit_rate, ptr, to, cum = jump_structure(gen)
    sizes = [BATCH] * (samples // BATCH)
    if samples % BATCH:
        sizes.append(samples % BATCH)
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    target = np.zeros(gen.size, dtype=np.uint8)
    target[j] = 1

    def run(k):
        bitgen = np.random.PCG64(streams[k])
        return kernels.simulate_hitting(bitgen, exit_rate, ptr, to, cum, i, target, sizes[k])

    workers = min(threads or _threads(), len(sizes))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(k) for k in range(len(sizes))]
    x = np.concatenate(parts)
    return McEstimate(float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size)), x.size)


@dataclass(frozen=True)
class BruteSup:
    sup_f: float
    sup_grad: float = None


def brute_sup_over_h(D, grad_table, i, guard=ENUM_GUARD):
    """``sup |f_h(i)|`` and ``sup |grad f_h(i)|`` over all indicators ``h``.

    ``grad_table[i, j]`` is the gradient of ``f_{delta_j}`` at ``i`` (for
    example :func:`steinchain.stein.gradient_table`); with ``None`` the
    gradient is taken from differences of ``D``.  Since ``f_h`` is linear in
    ``h`` the sup over ``h: X -> [0, 1]`` is attained at a vertex of the
    cube, so enumerating the ``2^N`` indicators is exact.
    """
    d = D.d
    n = d.shape[0]
    if n > guard:
        raise ValueError(f"window of {n} states exceeds the enumeration guard {guard}")
    masks = np.arange(2 ** n)
    H = ((masks[:, None] >> np.arange(n)[None, :]) & 1).astype(float)
    sup_f = float(np.max(np.abs(H @ d[i])))
    sup_grad = None
    if i < n - 1:
        g = d[i + 1] - d[i] if grad_table is None else -np.asarray(grad_table)[i]
        sup_grad = float(np.max(np.abs(H @ g)))
    return BruteSup(sup_f, sup_grad)
