import numpy as np
import pytest

from steinchain.distributions import make_pmf
from steinchain.generators import (bd_from_rates, bernoulli_laplace, binomial_example_chain, canonical_bd,
                                   complete_graph_generator, gwi_generator)


def two_state():
    return bd_from_rates([1.0], [1.0])


def catalog():
    """Catalog chains with windows of at most 200 states, keyed by a short id."""
    rng = np.random.default_rng(7)
    return {
        "binomial-example-100": binomial_example_chain(100, 0.3),
        "binomial-example-30": binomial_example_chain(30, 0.5),
        "binomial-canonical-30": canonical_bd(make_pmf("binomial", n=30, p=0.5)),
        "binomial-canonical-60": canonical_bd(make_pmf("binomial", n=60, p=0.15)),
        "bernoulli-laplace-20-8": bernoulli_laplace(20, 8),
        "bernoulli-laplace-30-15": bernoulli_laplace(30, 15),
        "hypergeometric-canonical": canonical_bd(make_pmf("hypergeometric", n=20, r=8)),
        "uniform-canonical-50": canonical_bd(make_pmf("uniform", n=50)),
        "complete-graph-25": complete_graph_generator(25),
        "geometric-0.5": canonical_bd(make_pmf("geometric", p=0.5)),
        "geometric-0.2": canonical_bd(make_pmf("geometric", p=0.2)),
        "negbin-2-0.4": gwi_generator(2, 0.4),
        "custom-12": canonical_bd(make_pmf("custom", weights=list(rng.uniform(0.2, 1.0, 12)))),
        "two-state": two_state(),
    }


CATALOG = catalog()
BD_CATALOG = {k: g for k, g in CATALOG.items() if hasattr(g, "birth")}


@pytest.fixture(params=sorted(CATALOG), ids=sorted(CATALOG))
def chain(request):
    return CATALOG[request.param]


@pytest.fixture(params=sorted(BD_CATALOG), ids=sorted(BD_CATALOG))
def bd_chain(request):
    return BD_CATALOG[request.param]


ACCEPTANCE = {}


def record(criterion, ok, detail):
    """Store a criterion verdict for the end-of-run summary."""
    ACCEPTANCE[criterion] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
