import math

import numpy as np
import pytest

from steinchain.distributions import ParameterError, make_pmf
from steinchain.generators import (bd_from_rates, binomial_example_chain, canonical_bd, complete_graph_generator,
                                   gwi_generator)
from steinchain.hitting import (ReducibleChainError, closed_form_table, edge_terms, hit_bd_closed_form, hit_eigen_formula,
                                hit_gradient, hit_set, hit_set_vector, hitting_table, linear_solve_table,
                                summability)
from steinchain.spectral import restricted_eigenvalues

from conftest import BD_CATALOG, CATALOG


def _rel(a, b):
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


def test_geometric_half_e01():
    g = canonical_bd(make_pmf("geometric", p=0.5))
    assert hit_bd_closed_form(g, 0, 1) == pytest.approx(2.0, rel=1e-14)


def test_diagonal_zero(bd_chain):
    j = bd_chain.size // 2
    assert hit_bd_closed_form(bd_chain, j, j) == 0.0
    for m in ("closed_form", "linear_solve", "eigen_formula"):
        assert np.all(np.diag(hitting_table(bd_chain, m).times) == 0.0)


def test_geometric_e0j_formula():
    p = 0.3
    g = canonical_bd(make_pmf("geometric", p=p))
    q = 1 - p
    for j in (1, 5, 20):
        k = np.arange(j)
        ref = math.fsum((1 - q ** (k + 1)) / ((k + 1) * q ** (k + 1) * p))
        assert hit_bd_closed_form(g, 0, j, untruncated=True) == pytest.approx(ref, rel=1e-12)


def test_three_way_agreement(bd_chain):
    cf = hitting_table(bd_chain, "closed_form").times
    ls = hitting_table(bd_chain, "linear_solve").times
    ef = hitting_table(bd_chain, "eigen_formula").times
    assert _rel(ls, cf) < 1e-7
    assert _rel(ef, cf) < 1e-7


def test_linear_solve_complete_graph():
    E = hitting_table(complete_graph_generator(5)).times
    off = E[~np.eye(5, dtype=bool)]
    assert np.allclose(off, 1.0, rtol=1e-13)


def test_dense_and_tridiagonal_solvers_agree():
    g = canonical_bd(make_pmf("binomial", n=5, p=0.5))
    from steinchain.generators import RateMatrix
    dense = linear_solve_table(RateMatrix(g.q, g.pi, True)).times
    assert np.allclose(dense, closed_form_table(g).times, rtol=1e-10, atol=0)


def test_two_state_hitting():
    g = bd_from_rates([1.0], [1.0])
    assert hitting_table(g).times[0, 1] == pytest.approx(1.0, rel=1e-15)


def test_eigen_formula_single_edge():
    g = canonical_bd(make_pmf("geometric", p=0.5))
    assert hit_eigen_formula(g, 0, 1) == pytest.approx(1.0 / g.birth[0], rel=1e-14)


def test_eigen_formula_pointwise():
    g = binomial_example_chain(5, 0.3)
    assert hit_eigen_formula(g, 0, 5) == pytest.approx(hit_bd_closed_form(g, 0, 5), rel=1e-12)
    geo = canonical_bd(make_pmf("geometric", p=0.5))
    assert hit_eigen_formula(geo, 1, 3) == pytest.approx(hit_bd_closed_form(geo, 1, 3), rel=1e-7)
    assert hit_eigen_formula(geo, 7, 2) == pytest.approx(hit_bd_closed_form(geo, 7, 2), rel=1e-7)


def test_eigen_formula_deep_tail_accuracy():
    # hitting times ~1e11 at the window edge of geometric(0.2)
    g = BD_CATALOG["geometric-0.2"]
    W = g.window_upper
    assert hit_eigen_formula(g, 0, W) == pytest.approx(hit_bd_closed_form(g, 0, W), rel=1e-10)


def test_restricted_eigs_fill_identity():
    g = binomial_example_chain(3, 0.5)
    lam = restricted_eigenvalues(g, 2)
    A = -g.q[:2, :2]
    tr, det = np.trace(A), np.linalg.det(A)
    disc = math.sqrt(tr * tr - 4 * det)
    assert np.allclose(lam, [(tr - disc) / 2, (tr + disc) / 2], rtol=1e-13)
    assert np.allclose(restricted_eigenvalues(g, 1), [g.birth[0]], rtol=1e-15)


def test_monotone(bd_chain):
    table = hitting_table(bd_chain, "closed_form")
    assert table.is_monotone(strict=False)
    # strictness in exact arithmetic: every per-edge increment is positive
    lo, hi = edge_terms(bd_chain)
    assert np.all(lo > 0) and np.all(hi > 0)
    E = table.times
    if np.max(E) < 1e10:
        assert table.is_monotone()


def test_hit_set():
    g = complete_graph_generator(4)
    assert hit_set(g, 2, {0, 1}) == pytest.approx(0.5, rel=1e-14)
    assert hit_set(g, 0, {0, 1}) == 0.0
    E = hitting_table(g).times
    assert hit_set(g, 3, {1}) == pytest.approx(E[3, 1], rel=1e-14)
    assert np.all(hit_set_vector(g, range(4)) == 0.0)
    with pytest.raises(ValueError):
        hit_set_vector(g, [])


def test_reducible_detected():
    from steinchain.generators import RateMatrix
    q = np.array([[-1.0, 1.0, 0.0], [1.0, -1.0, 0.0], [0.0, 1.0, -1.0]])
    with pytest.raises(ReducibleChainError):
        linear_solve_table(RateMatrix(q, np.array([0.5, 0.5, 0.0])))
    with pytest.raises(ParameterError):
        bd_from_rates([1.0, 0.0], [1.0, 1.0])


def test_gradient_signs_and_table_differences(bd_chain):
    E = closed_form_table(bd_chain).times
    for j in {0, bd_chain.size // 2, bd_chain.size - 1}:
        gvec = hit_gradient(bd_chain, j)
        assert np.allclose(gvec, E[:-1, j] - E[1:, j], rtol=1e-10, atol=1e-10 * np.max(E[:, j]))
        i = np.arange(gvec.size)
        assert np.all(gvec[i < j] > 0) and np.all(gvec[i >= j] < 0)
        if j > 0:
            assert gvec[j - 1] == pytest.approx(E[j - 1, j], rel=1e-12)


def test_gradient_geometric_j0():
    p = 0.5
    g = canonical_bd(make_pmf("geometric", p=p))
    pi = g.pmf.masses(g.window_upper)
    i = np.arange(g.window_upper)
    ref = -g.pmf.tail(i) / (g.birth[:-1] * pi[:-1])
    assert np.allclose(hit_gradient(g, 0, untruncated=True), ref, rtol=1e-13)


def test_summability():
    assert summability(canonical_bd(make_pmf("binomial", n=10, p=0.5))).converged
    assert summability(canonical_bd(make_pmf("geometric", p=0.5))).converged
    single = canonical_bd(make_pmf("custom", weights=[1.0]))
    assert summability(single).value == 0.0


def test_summability_flags_short_window():
    # a window far too short for NB(2, 0.9): partial sums still growing
    g = gwi_generator(2, 0.9, tol=1e-2)
    assert not summability(g).converged


def test_random_target_lemma(chain):
    E = hitting_table(chain, "closed_form" if hasattr(chain, "birth") else "linear_solve").times
    prof = E @ chain.pi
    assert np.max(np.abs(prof - prof.mean())) <= 1e-8 * prof.mean()


def test_table_csv_roundtrip(tmp_path):
    t = hitting_table(CATALOG["binomial-example-30"])
    path = tmp_path / "e.csv"
    t.to_csv(path)
    back = np.loadtxt(path, delimiter=",", skiprows=1)[:, 1:]
    assert np.array_equal(back, t.times)
