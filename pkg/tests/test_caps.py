import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from capsim.bilinear import classical_multiply, flop_count, make_strassen, \
    make_strassen_winograd
from capsim.caps import (
    InsufficientMemory,
    Schedule,
    ScheduleExceedsMemory,
    caps_multiply,
    compute_ell,
    default_schedule,
    memory_um,
    validate_schedule,
)
from capsim.simnet import MachineParams, OutOfSimulatedMemory, SimMachine


def run(n, P, steps, M=None, cutoff=8, seed=3, alg=None):
    machine = SimMachine(MachineParams(P=P, M=M))
    rng = np.random.default_rng(seed)
    A = rng.uniform(-1, 1, (n, n))
    B = rng.uniform(-1, 1, (n, n))
    C, rep = caps_multiply(machine, A, B, Schedule(tuple(steps)),
                           alg=alg, cutoff=cutoff)
    tol = 1e-10 * n * np.max(np.abs(A)) * np.max(np.abs(B))
    assert np.max(np.abs(C - classical_multiply(A, B))) <= tol
    return rep


def test_schedule_parsing():
    s = Schedule.from_string("DBB")
    assert s.to_string() == "DBB"
    assert (s.ell, s.k, len(s)) == (1, 2, 3)
    assert list(s) == ["D", "B", "B"]
    assert Schedule.from_string("").k == 0
    with pytest.raises(ValueError):
        Schedule.from_string("DXB")


def test_compute_ell_integer_thresholds():
    assert compute_ell(1024, 7, 2 ** 22) == 0
    assert compute_ell(1024, 7, 2 ** 21) == 1
    assert compute_ell(112, 49, 2304) == 2
    assert compute_ell(112, 49, 3200) == 1
    with pytest.raises(InsufficientMemory):
        compute_ell(56, 7, 4031)  # feasibility needs M >= 9n^2/P = 4032


def test_default_schedule():
    assert default_schedule(16, 1).to_string() == ""
    assert default_schedule(56, 49).to_string() == "BB"
    assert default_schedule(112, 49, 2304).to_string() == "DDBB"
    # the depth rule is deliberately conservative: it can prefix a DFS step
    # even when the all-BFS working set would have fit
    assert memory_um(784, 343) <= 120000
    assert default_schedule(784, 343, 120000).to_string() == "DBBB"


def test_memory_um_spots():
    assert memory_um(56, 7) == 3696
    assert memory_um(56, 49) == 1116
    assert memory_um(112, 7) == 14784
    assert memory_um(112, 49) == 4464


def test_validate_schedule_peaks_and_errors():
    assert validate_schedule(Schedule(("B",)), 56, 7) == 3696
    assert validate_schedule(Schedule(("D", "B")), 56, 7) == 2268
    assert validate_schedule(Schedule(("D", "D", "B", "B")), 112, 49) == 1239
    with pytest.raises(ValueError):
        validate_schedule(Schedule(("B", "B")), 56, 7)  # k mismatch
    with pytest.raises(ScheduleExceedsMemory):
        validate_schedule(Schedule(("D", "B")), 56, 7, M=2267)
    assert validate_schedule(Schedule(("D", "B")), 56, 7, M=2268) == 2268


def test_all_bfs_ledger():
    rep = run(56, 7, "B", cutoff=28)
    assert rep.flops_critical == 44800
    assert rep.words_critical == 4032
    assert rep.messages_critical == 36
    assert rep.peak_memory_words == 3696


def test_dfs_prefix_ledger():
    rep = run(56, 7, "DB")
    assert rep.words_critical == 7056
    assert rep.messages_critical == 252
    assert rep.peak_memory_words == 2268


def test_two_bfs_levels_ledger():
    rep = run(56, 49, "BB")
    assert rep.words_critical == 1584
    assert rep.messages_critical == 72
    assert rep.peak_memory_words == memory_um(56, 49)


def test_single_processor_runs_without_communication():
    rep = run(16, 1, "")
    assert rep.words_critical == 0
    assert rep.messages_critical == 0
    assert rep.flops_critical == flop_count(make_strassen_winograd(), 16)


def test_flops_balanced_for_every_schedule():
    # every processor performs the same share of the one global flop tree,
    # so the critical-path flops never depend on the step ordering
    want = flop_count(make_strassen_winograd(), 56, cutoff=8) // 7
    for steps in ("B", "DB", "BD", "DDB", "DBD", "BDD"):
        assert run(56, 7, steps).flops_critical == want


def test_original_flavor_runs_and_charges_more_adds():
    sw = run(56, 7, "B").flops_critical
    original = run(56, 7, "B", alg=make_strassen()).flops_critical
    assert original == flop_count(make_strassen(), 56, cutoff=8) // 7
    assert original > sw


def test_caps_multiply_validation():
    machine = SimMachine(MachineParams(P=7))
    A = np.zeros((56, 56))
    with pytest.raises(ValueError):
        caps_multiply(machine, A, np.zeros((28, 28)), Schedule(("B",)))
    with pytest.raises(ValueError):
        caps_multiply(machine, A, A, Schedule(("B", "B")))  # k != log7(P)
    from capsim.bilinear import make_classical
    with pytest.raises(ValueError):
        caps_multiply(machine, A, A, Schedule(("B",)), alg=make_classical(2))


def test_memory_cap_enforced_during_run():
    machine = SimMachine(MachineParams(P=7, M=2267))
    A = np.zeros((56, 56))
    with pytest.raises((ScheduleExceedsMemory, OutOfSimulatedMemory)):
        caps_multiply(machine, A, A, Schedule(("D", "B")))


def test_simulated_peak_equals_predicted_peak():
    for n, P, steps in ((56, 7, "B"), (56, 7, "DB"), (112, 49, "DDBB"),
                        (112, 7, "BDD")):
        rep = run(n, P, steps)
        assert rep.peak_memory_words == validate_schedule(
            Schedule(tuple(steps)), n, P)


@st.composite
def step_permutations(draw):
    ell = draw(st.integers(0, 2))
    steps = ["B"] + ["D"] * ell
    a = draw(st.permutations(steps))
    b = draw(st.permutations(steps))
    return tuple(a), tuple(b)


@given(step_permutations())
@settings(max_examples=10, deadline=None)
def test_step_order_does_not_change_the_product_bits(pair):
    a, b = pair
    rng = np.random.default_rng(17)
    A = rng.uniform(-1, 1, (56, 56))
    B = rng.uniform(-1, 1, (56, 56))
    outs = []
    for steps in (a, b):
        machine = SimMachine(MachineParams(P=7))
        C, _ = caps_multiply(machine, A, B, Schedule(steps))
        outs.append(C)
    assert np.array_equal(outs[0], outs[1])


def test_leading_bandwidth_term_scales_perfectly_with_processors():
    # under the depth rule, growing P sevenfold drops the DFS depth by one
    # while k rises by one, so the first bandwidth term divides by exactly 7;
    # the subtracted 12 n^2 (7/4)^ell / P term is what breaks exact scaling
    from fractions import Fraction
    n, M = 784, 120000
    for P in (49,):
        k, k7 = 2, 3
        ell = compute_ell(n, P, M)
        ell7 = compute_ell(n, 7 * P, M)
        assert ell7 == ell - 1
        lead = Fraction(12 * n * n, 4 ** k) * Fraction(7, 4) ** ell
        lead7 = Fraction(12 * n * n, 4 ** k7) * Fraction(7, 4) ** ell7
        assert lead == 7 * lead7
