import math

import pytest
from hypothesis import given, settings, strategies as st

from capsim.caps import InsufficientMemory
from capsim.costmodel import (
    OMEGA0,
    CostTriple,
    TABLE1_ROWS,
    bandwidth_ratio,
    caps_cost,
    effective_gflops,
    ell_opt_strassen_25d,
    hardware_balance,
    lower_bound,
    table1_cost,
)


def test_omega0():
    assert OMEGA0 == pytest.approx(math.log2(7))
    assert 2 ** OMEGA0 == pytest.approx(7)


def test_cost_triple_validation():
    with pytest.raises(ValueError):
        CostTriple(-1, 0, 0)


def test_caps_cost_unlimited_memory():
    c = caps_cost(56, 7)
    assert (c.flops, c.bandwidth_words, c.latency_messages) == (40978, 4032, 36)
    assert c.exact
    assert caps_cost(56, 7, cutoff=28).flops == 44800
    c = caps_cost(56, 49)
    assert (c.bandwidth_words, c.latency_messages) == (1584, 72)


def test_caps_cost_limited_memory():
    c = caps_cost(56, 7, M=4032, variant="lm")
    assert (c.bandwidth_words, c.latency_messages) == (7056, 252)
    c = caps_cost(112, 49, M=2304)  # auto resolves to two DFS steps
    assert c.bandwidth_words == 49 * (12 * 28 * 28 // 16 - 12 * 28 * 28 // 49)
    assert c.latency_messages == 49 * 72


def test_caps_cost_auto_agrees_with_simulator_depth_rule():
    # the depth rule can pick a DFS prefix even when the all-BFS working set
    # fits; the model must follow it so modeled == simulated
    from capsim.caps import memory_um
    n, P, M = 784, 343, 120000
    assert memory_um(n, P) <= M
    c = caps_cost(n, P, M=M)
    assert c.latency_messages == 7 * 36 * 3  # one DFS step deep
    assert c.bandwidth_words == 164052


def test_caps_cost_variant_errors():
    with pytest.raises(ValueError):
        caps_cost(56, 7, M=3000, variant="um")  # needs 3696 words
    with pytest.raises(ValueError):
        caps_cost(56, 7, variant="lm")  # lm needs M
    with pytest.raises(ValueError):
        caps_cost(56, 7, variant="magic")
    with pytest.raises(InsufficientMemory):
        caps_cost(56, 7, M=1000)


def test_caps_cost_inadmissible_n_falls_back_to_float_flops():
    c = caps_cost(1000, 7, cutoff=8)
    assert isinstance(c.flops, float)
    cs = 20 / 8 ** (OMEGA0 - 2)
    assert c.flops == pytest.approx((cs * 1000 ** OMEGA0 - 5e6) / 7)
    # bandwidth stays exact rational arithmetic regardless
    assert c.bandwidth_words == pytest.approx(12e6 / 4 - 12e6 / 7)


def test_lower_bound_structure():
    lb = lower_bound("strassen", 1024, 49, M=4096)
    assert lb.cost.flops == pytest.approx(1024 ** OMEGA0 / 49)
    dep = (1024 / 64) ** OMEGA0 * 4096 / 49
    assert lb.memory_dependent_words == pytest.approx(dep)
    assert lb.cost.bandwidth_words == max(lb.memory_dependent_words,
                                          lb.memory_independent_words)
    assert lb.cost.latency_messages >= 1.0
    with pytest.raises(ValueError):
        lower_bound("quantum", 8, 1)


@given(st.integers(32, 4096), st.integers(1, 4), st.integers(1, 60))
@settings(max_examples=60, deadline=None)
def test_lower_bound_properties(n, k, mexp):
    P = 7 ** k
    M = 2 ** mexp
    for family in ("classical", "strassen"):
        lb = lower_bound(family, n, P, M)
        assert lb.cost.bandwidth_words >= lb.memory_independent_words
        assert lb.cost.latency_messages >= 1.0
        # at the crossover memory the two terms agree
        at_cross = lower_bound(family, n, P)
        assert at_cross.memory_dependent_words == pytest.approx(
            at_cross.memory_independent_words, rel=1e-9)


def test_classical_bound_dominates_strassen_bound_on_flops():
    for n, P in ((512, 49), (4096, 343)):
        cl = lower_bound("classical", n, P).cost
        st_ = lower_bound("strassen", n, P).cost
        assert cl.flops > st_.flops


def test_table_rows_evaluate():
    M = 3 * 4096 ** 2 / 64
    for row in TABLE1_ROWS:
        kw = {}
        if row in ("2.5d", "2.5d-strassen", "strassen-2.5d", "caps",
                   "lower-classical", "lower-strassen"):
            kw["M"] = M
        if row in ("strassen-2d", "strassen-2.5d"):
            kw["ell"] = 2
        t = table1_cost(row, 4096, 64, **kw)
        assert t.flops > 0 and t.bandwidth_words > 0
        assert not t.exact


def test_table_row_errors():
    with pytest.raises(ValueError):
        table1_cost("4d", 64, 4)
    with pytest.raises(ValueError):
        table1_cost("2.5d", 64, 4)  # M missing
    with pytest.raises(ValueError):
        table1_cost("strassen-2d", 64, 4)  # ell missing


def test_caps_row_matches_strassen_bound_when_memory_bound():
    n, P = 4096, 64
    M = 3 * n * n / P
    caps_row = table1_cost("caps", n, P, M=M)
    lb = table1_cost("lower-strassen", n, P, M=M)
    assert caps_row.bandwidth_words == lb.bandwidth_words
    assert caps_row.flops == lb.flops


def test_ell_opt_spot():
    assert ell_opt_strassen_25d(1024, 8, 2 ** 14) == 2
    assert ell_opt_strassen_25d(64, 64, 2 ** 20) == 0


def test_bandwidth_ratio_cases():
    n, P = 4096, 117649
    m1 = n * n / P ** (2 / OMEGA0)
    m2 = n * n / P ** (2 / 3)
    r1, c1 = bandwidth_ratio(n, P, m1 * 0.5)
    r2, c2 = bandwidth_ratio(n, P, (m1 + m2) / 2)
    r3, c3 = bandwidth_ratio(n, P, m2 * 2)
    assert (c1, c2, c3) == (1, 2, 3)
    assert r1 > r2 > r3  # the advantage shrinks as memory grows
    assert r3 == pytest.approx(P ** (2 / OMEGA0 - 2 / 3), rel=1e-12)
    with pytest.raises(ValueError):
        bandwidth_ratio(n, P, n * n / P - 1)


def test_hardware_balance():
    flags = hardware_balance(gamma=1.0, beta=1.0, M=4.0)
    assert flags["classical_compute_bound"] is True
    assert flags["strassen_compute_bound"] is True
    # a fast-enough network keeps classical balanced but not the recursion
    flags = hardware_balance(gamma=1.0, beta=1.9, M=4.0)
    assert flags["classical_compute_bound"] is True
    assert flags["strassen_compute_bound"] is False


def test_effective_gflops():
    assert effective_gflops(1000, 2.0) == pytest.approx(1.0)
    assert effective_gflops(1000, 0.0) == math.inf
