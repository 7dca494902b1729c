"""Spectra of reversible generators, relaxation time and the eigentime identity."""
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._tridiag import full_spectrum, killed_spectrum
from .generators import BirthDeathGenerator, is_reversible
from .hitting import hitting_table

ZERO_SNAP = 1e-10


class NonReversibleError(ValueError):
    pass


class ConditioningError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenvalues of ``-L`` in ascending order, with ``eigenvalues[0] == 0``."""

    eigenvalues: np.ndarray

    @property
    def gap(self):
        return float(self.eigenvalues[1]) if self.eigenvalues.size > 1 else math.inf

    @property
    def nonzero(self):
        return self.eigenvalues[1:]

    def to_csv(self, path_or_buf):
        text = "k,lambda\n" + "".join(f"{k},{float(v)!r}\n" for k, v in enumerate(self.eigenvalues))
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w") as fh:
                fh.write(text)


def symmetrized(gen):
    """``Pi^{1/2} (-Q) Pi^{-1/2}``; symmetric exactly when ``gen`` is reversible."""
    s = np.sqrt(gen.pi)
    S = -(s[:, None] * gen.q / s[None, :])
    return 0.5 * (S + S.T)


def eigenvalues(gen):
    """Spectrum of ``-L`` for a reversible generator."""
    if not is_reversible(gen):
        raise NonReversibleError(f"{gen.label or 'generator'} is not reversible")
    if isinstance(gen, BirthDeathGenerator):
        lam = full_spectrum(gen.birth, gen.death)
    else:
        lam = np.sort(scipy.linalg.eigvalsh(symmetrized(gen)))
    top = float(lam[-1])
    if lam.size > 1:
        if abs(lam[0]) > ZERO_SNAP * top:
            raise ConditioningError(f"smallest eigenvalue {lam[0]:.3e} is not numerically zero")
        lam = lam.copy()
        lam[0] = 0.0
        if lam[1] <= 0:
            raise ConditioningError("spectral gap is not positive; the chain may be reducible")
    return Spectrum(lam)


def restricted_eigenvalues(gen, m):
    """Eigenvalues of ``-L`` restricted to ``{0, ..., m-1}`` (killed on leaving)."""
    if not 1 <= m <= gen.size:
        raise ValueError(f"m must lie in [1, {gen.size}], got {m}")
    if isinstance(gen, BirthDeathGenerator):
        return killed_spectrum(gen.birth, gen.death, m)
    s = np.sqrt(gen.pi[:m])
    S = -(s[:, None] * gen.q[:m, :m] / s[None, :])
    return np.sort(scipy.linalg.eigvalsh(0.5 * (S + S.T)))


def t_rel(gen, spectrum=None):
    """Relaxation time ``1 / lambda_1``."""
    if spectrum is None:
        spectrum = eigenvalues(gen)
    return 1.0 / spectrum.gap


def t_av_eigentime(gen, spectrum=None):
    """``sum_{k>=1} 1 / lambda_k``."""
    if spectrum is None:
        spectrum = eigenvalues(gen)
    return math.fsum(1.0 / spectrum.nonzero)


def t_av_random_target(gen, table=None):
    """``sum_{i,j} pi(i) pi(j) E_i(tau_j)`` from a hitting-time table."""
    if gen.size == 1:
        return 0.0
    if table is None:
        table = hitting_table(gen, "closed_form" if isinstance(gen, BirthDeathGenerator) else "linear_solve")
    return float(gen.pi @ table.times @ gen.pi)


def random_target_profile(gen, table):
    """``sum_j pi(j) E_i(tau_j)`` for each start ``i`` (constant by the random target lemma)."""
    return table.times @ gen.pi
