import numpy as np
import pytest

from steinchain import _fallback, kernels
from steinchain.generators import binomial_example_chain, complete_graph_generator, jump_structure
from steinchain.hitting import edge_terms

from conftest import BD_CATALOG

compiled = pytest.mark.skipif(kernels.BACKEND != "compiled", reason="compiled core not built")


@compiled
@pytest.mark.parametrize("name", sorted(BD_CATALOG))
def test_closed_form_and_gth_agree(name):
    from steinchain import _core
    g = BD_CATALOG[name]
    lo, hi = edge_terms(g)
    a, b = _core.closed_form_table(lo, hi), _fallback.closed_form_table(lo, hi)
    assert np.allclose(a, b, rtol=1e-14, atol=0)
    a, b = _core.gth_hitting_table(g.birth, g.death), _fallback.gth_hitting_table(g.birth, g.death)
    assert np.allclose(a, b, rtol=1e-12, atol=0)


@compiled
def test_deviation_scan_agrees():
    from steinchain import _core
    rng = np.random.default_rng(0)
    E = rng.random((30, 30)) * 10
    pi = rng.random(30)
    pi /= pi.sum()
    a, b = _core.deviation_scan(E, pi), _fallback.deviation_scan(E, pi)
    assert a[0] == pytest.approx(b[0], rel=1e-13) and a[1:3] == b[1:3]
    assert np.allclose(a[3], b[3], rtol=1e-13)


@compiled
@pytest.mark.parametrize("gen", [complete_graph_generator(5), binomial_example_chain(6, 0.5)])
def test_simulation_bit_identical(gen):
    from steinchain import _core
    structure = jump_structure(gen)
    target = np.zeros(gen.size, dtype=np.uint8)
    target[gen.size - 1] = 1
    a = _core.simulate_hitting(np.random.PCG64(11), *structure, 0, target, 3000)
    b = _fallback.simulate_hitting(np.random.PCG64(11), *structure, 0, target, 3000)
    assert np.array_equal(a, b)


def test_fallback_closed_form_small():
    # two-state chain, b0 = d1 = 1: E(0,1) = E(1,0) = 1
    lo, hi = np.array([1.0]), np.array([1.0])
    assert np.array_equal(_fallback.closed_form_table(lo, hi), [[0.0, 1.0], [1.0, 0.0]])


def test_backend_exported():
    import steinchain
    assert steinchain.BACKEND in ("compiled", "python")
