import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from steinchain.chainparams import chain_params
from steinchain.distributions import make_pmf
from steinchain.generators import bd_from_rates, binomial_example_chain, canonical_bd, complete_graph_generator
from steinchain.hitting import hitting_table
from steinchain.oracle import brute_sup_over_h
from steinchain.stein import (Inequality, certify_bounds, delta, deviation_kernel, deviation_kernel_algebraic,
                              dirac_sup_norms, gradient_sup_profile, gradient_table, remark_scan,
                              stein_gradient_closed_form, stein_solution, uniform_class_sup,
                              uniform_class_sups)

from conftest import BD_CATALOG


def two_state():
    return bd_from_rates([1.0], [1.0])


def _table(g):
    return hitting_table(g, "closed_form" if hasattr(g, "birth") else "linear_solve")


def test_two_state_kernel():
    D = deviation_kernel(two_state())
    assert np.allclose(D.d, [[0.25, -0.25], [-0.25, 0.25]], atol=1e-15)


def test_two_state_solution():
    D = deviation_kernel(two_state())
    s = stein_solution(D, delta(2, 1))
    assert np.allclose(s.f, [-0.25, 0.25]) and np.allclose(s.grad, [0.5])
    assert s.sup_f == 0.25 and s.sup_grad == 0.5


def test_two_state_uniform_class():
    g = two_state()
    u = uniform_class_sup(g, 0)
    assert u.sup_f == pytest.approx(0.25) and u.sum_abs_d == pytest.approx(0.5) and u.two_t_av == pytest.approx(1.0)


def test_kernel_invariants(chain):
    D = deviation_kernel(chain)
    tav = D.trace
    assert D.row_sum_residual() <= 1e-8 * tav
    assert D.left_null_residual() <= 1e-8 * tav
    assert D.generator_residual(chain.q) <= 1e-8
    assert D.diagonal_dominates_columns(atol=1e-12 * tav)


def test_hitting_vs_algebraic(chain):
    D = deviation_kernel(chain)
    A = deviation_kernel_algebraic(chain)
    assert np.max(np.abs(D.d - A.d)) <= 1e-8 * (1 + D.trace)


def test_stein_equation_residual(chain):
    D = deviation_kernel(chain)
    n = chain.size
    for j in range(n):
        f = stein_solution(D, delta(n, j)).f
        r = chain.q @ f + delta(n, j) - chain.pi[j]
        assert np.max(np.abs(r)) <= 1e-8


def test_constant_h_gives_zero():
    g = binomial_example_chain(12, 0.4)
    D = deviation_kernel(g)
    assert np.max(np.abs(stein_solution(D, np.full(g.size, 3.0)).f)) < 1e-12


def test_solution_rejects_bad_h():
    D = deviation_kernel(two_state())
    with pytest.raises(ValueError):
        stein_solution(D, [1.0, np.inf])
    with pytest.raises(ValueError):
        stein_solution(D, [1.0])


def test_dirac_gradient_norm_via_hitting():
    g = canonical_bd(make_pmf("binomial", n=12, p=0.35))
    E = _table(g).times
    D = deviation_kernel(g)
    for j in range(g.size):
        s = stein_solution(D, delta(g.size, j))
        assert s.sup_grad == pytest.approx(g.pi[j] * np.max(np.abs(E[:-1, j] - E[1:, j])), rel=1e-9)


def test_closed_form_gradient_matches_differencing(bd_chain):
    D = deviation_kernel(bd_chain)
    scale = np.max(np.abs(D.d))
    for j in {0, bd_chain.size // 3, bd_chain.size - 1}:
        diff = np.diff(D.d[:, j])
        cf = stein_gradient_closed_form(bd_chain, j)
        # D(i+1,j) - D(i,j) = pi(j)(E_i - E_i+1)
        assert np.allclose(np.abs(cf), np.abs(diff), rtol=0, atol=1e-9 * max(1.0, scale))


def test_closed_form_gradient_geometric():
    p = 0.3
    q = 1 - p
    g = canonical_bd(make_pmf("geometric", p=p))
    j = 10
    cf = np.abs(stein_gradient_closed_form(g, j, untruncated=True))
    i = np.arange(j)
    assert np.allclose(cf[:j], q ** (j - i - 1) * (1 - q ** (i + 1)) / (i + 1), rtol=1e-12)
    tail = g.pmf.tail(j)
    assert cf[j] == pytest.approx(g.pmf.mass(j) * tail / (g.birth[j] * g.pmf.mass(j)), rel=1e-12)


def test_uniform_class_ordering(chain):
    D = deviation_kernel(chain)
    for u in uniform_class_sups(chain, D):
        assert u.sup_f <= u.sum_abs_d + 1e-12
        assert u.sum_abs_d <= u.two_t_av * (1 + 1e-9)
        if u.sup_grad is not None:
            assert u.sup_grad <= u.sum_abs_grad + 1e-12


def test_positive_part_equals_half_l1(chain):
    D = deviation_kernel(chain)
    for u in uniform_class_sups(chain, D):
        assert u.sup_f == pytest.approx(0.5 * u.sum_abs_d, rel=1e-9, abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.05, 1.0), min_size=2, max_size=10))
def test_brute_force_matches_formula(weights):
    g = canonical_bd(make_pmf("custom", weights=weights))
    table = _table(g)
    D = deviation_kernel(g, table)
    G = gradient_table(g, table)
    for u in uniform_class_sups(g, D, table):
        b = brute_sup_over_h(D, G, u.i)
        assert abs(b.sup_f - u.sup_f) <= 1e-12
        if u.sup_grad is not None:
            assert abs(b.sup_grad - u.sup_grad) <= 1e-12


def test_gradient_sup_profile_matches_rows():
    g = canonical_bd(make_pmf("hypergeometric", n=30, r=12))
    exact, l1 = gradient_sup_profile(g)
    sups = uniform_class_sups(g)
    assert np.allclose(exact, [u.sup_grad for u in sups[:-1]], rtol=1e-12)
    assert np.allclose(l1, [u.sum_abs_grad for u in sups[:-1]], rtol=1e-12)


def test_remark_scan_is_diagnostic():
    g = canonical_bd(make_pmf("custom", weights=[5, 1, 1, 1, 5]))
    hits = remark_scan(deviation_kernel(g))
    assert isinstance(hits, list)
    for i, j, dij, djj in hits:
        assert abs(dij) > djj


def test_complete_graph_kernel():
    n = 6
    g = complete_graph_generator(n)
    D = deviation_kernel(g)
    off = D.d[~np.eye(n, dtype=bool)]
    assert np.allclose(off, -1 / n ** 2, rtol=1e-12)
    assert np.allclose(np.diag(D.d), (n - 1) / n ** 2, rtol=1e-12)
    sup_f, sup_g = dirac_sup_norms(g, D, _table(g))
    assert np.allclose(sup_f, (n - 1) / n ** 2)
    assert np.allclose(sup_g, 1 / n)


def test_inequality_tolerance():
    assert Inequality("x", 1.0, 1.0).passed
    assert Inequality("x", 1.0 + 1e-10, 1.0).passed
    assert not Inequality("x", 1.0 + 1e-6, 1.0).passed
    assert Inequality("x", 1.0, 2.0).slack == 1.0


def test_certify_binomial_example_30():
    g = binomial_example_chain(30, 0.5)
    rep = certify_bounds(g, chain_params(g))
    assert rep.passed, [q.to_dict() for q in rep.failures()]
    names = {q.name for q in rep.inequalities}
    assert "t_dev <= 10 t_sst" in names and "t_dev <= 5 t_mix(1/4)" in names
    assert rep.extras["t_hit_pair"]["t_hit"] is None  # window above the enumeration guard


def test_certify_relaxation_line_binomial():
    n, p = 30, 0.5
    g = binomial_example_chain(n, p)
    sups = uniform_class_sups(g)
    bound = 5 * n * min(np.log(4 / (1 - p)), np.log(4 / p))
    assert max(u.sup_grad for u in sups[:-1]) <= bound


def test_existence_warning_propagates():
    from steinchain.generators import gwi_generator
    g = gwi_generator(2, 0.9, tol=1e-2)
    assert deviation_kernel(g).warning is not None


def test_kernel_csv(tmp_path):
    D = deviation_kernel(BD_CATALOG["custom-12"])
    D.to_csv(tmp_path / "d.csv")
    back = np.loadtxt(tmp_path / "d.csv", delimiter=",", skiprows=1)[:, 1:]
    assert np.array_equal(back, D.d)
