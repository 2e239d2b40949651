import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from capsim.bilinear import (
    BilinearAlgorithm,
    classical_multiply,
    flop_count,
    make_classical,
    make_strassen,
    make_strassen_winograd,
    padded_size,
    recursive_multiply,
    validate_bilinear,
)

ALGS = {
    "winograd": make_strassen_winograd(),
    "strassen": make_strassen(),
    "classical2": make_classical(2),
    "classical3": make_classical(3),
}


@pytest.mark.parametrize("name", sorted(ALGS))
def test_tables_satisfy_bilinear_identity(name):
    assert validate_bilinear(ALGS[name]) is True


def test_add_counts_match_declared_tables():
    sw = ALGS["winograd"]
    assert (sw.add_count_a, sw.add_count_b, sw.add_count_c) == (4, 4, 7)
    assert sw.add_count_total == 15
    s = ALGS["strassen"]
    assert (s.add_count_a, s.add_count_b, s.add_count_c) == (5, 5, 8)
    assert s.add_count_total == 18


def test_exponents():
    assert ALGS["winograd"].exponent == pytest.approx(math.log2(7))
    assert ALGS["strassen"].exponent == pytest.approx(math.log2(7))
    assert ALGS["classical2"].exponent == pytest.approx(3.0)
    assert ALGS["classical3"].exponent == pytest.approx(3.0)


@given(st.sampled_from(["winograd", "strassen"]),
       st.sampled_from(["a_coeffs", "b_coeffs", "c_coeffs"]),
       st.integers(0, 27), st.sampled_from([-1.0, 1.0, 2.0]))
@settings(max_examples=40, deadline=None)
def test_any_single_coefficient_bump_breaks_identity(name, field, flat, delta):
    alg = ALGS[name]
    arr = getattr(alg, field).copy()
    arr.flat[flat] += delta
    broken = dataclasses.replace(alg, **{field: arr})
    assert validate_bilinear(broken) is False


def test_sign_flip_breaks_identity():
    sw = ALGS["winograd"]
    assert validate_bilinear(dataclasses.replace(sw, c_coeffs=-sw.c_coeffs)) is False


def test_malformed_shapes_raise():
    sw = ALGS["winograd"]
    with pytest.raises(ValueError):
        BilinearAlgorithm(name="bad", n0=2, q=7,
                          a_coeffs=sw.a_coeffs[:, :3],
                          b_coeffs=sw.b_coeffs, c_coeffs=sw.c_coeffs,
                          add_count_a=4, add_count_b=4, add_count_c=7)


def test_flop_count_spot_values():
    sw = ALGS["winograd"]
    assert flop_count(sw, 8) == 960
    assert flop_count(sw, 16) == 7680
    assert flop_count(sw, 28, cutoff=28) == 43120
    assert flop_count(sw, 28, cutoff=8) == 39298
    assert flop_count(sw, 56, cutoff=8) == 286846
    st_ = ALGS["strassen"]
    assert flop_count(st_, 8) == 960  # base case is classical either way
    assert flop_count(st_, 16, cutoff=8) == 7 * 960 + 18 * 64


@pytest.mark.parametrize("nb", [4, 7, 8, 14])
@pytest.mark.parametrize("t", [0, 1, 2, 3])
def test_flop_count_matches_leading_constant_closed_form(nb, t):
    # with every leaf at size nb the count telescopes to
    # (2 nb + 4) nb^2 7^t - 5 n^2 (Winograd) or (2 nb + 5) nb^2 7^t - 6 n^2
    n = nb * 2 ** t
    assert flop_count(ALGS["winograd"], n, cutoff=nb) == \
        (2 * nb + 4) * nb * nb * 7 ** t - 5 * n * n
    assert flop_count(ALGS["strassen"], n, cutoff=nb) == \
        (2 * nb + 5) * nb * nb * 7 ** t - 6 * n * n


def test_flop_count_rejects_unreachable_size():
    with pytest.raises(ValueError):
        flop_count(ALGS["winograd"], 9, cutoff=8)


@pytest.mark.parametrize("n", [1, 2, 5, 8, 13, 16, 24, 37, 64])
@pytest.mark.parametrize("name", ["winograd", "strassen", "classical2"])
def test_recursive_multiply_matches_classical(n, name):
    rng = np.random.default_rng(7 * n + len(name))
    A = rng.uniform(-1, 1, (n, n))
    B = rng.uniform(-1, 1, (n, n))
    ref = classical_multiply(A, B)
    C = recursive_multiply(ALGS[name], A, B, cutoff=4)
    assert np.max(np.abs(C - ref)) <= 1e-12 * max(n, 1)
    assert np.max(np.abs(ref - A @ B)) <= 1e-12 * max(n, 1)


def test_recursive_multiply_base3():
    rng = np.random.default_rng(0)
    A = rng.uniform(-1, 1, (27, 27))
    B = rng.uniform(-1, 1, (27, 27))
    C = recursive_multiply(ALGS["classical3"], A, B, cutoff=3)
    assert np.max(np.abs(C - classical_multiply(A, B))) <= 1e-12 * 27


@pytest.mark.parametrize("n", [4, 8, 16, 64])
def test_classical_recursion_is_bit_exact_on_integers(n):
    rng = np.random.default_rng(n)
    A = rng.integers(-8, 9, (n, n)).astype(float)
    B = rng.integers(-8, 9, (n, n)).astype(float)
    C = recursive_multiply(ALGS["classical2"], A, B, cutoff=4)
    ref = np.zeros((n, n))
    for k in range(n):
        ref += np.outer(A[:, k], B[k, :])
    assert np.array_equal(C, ref)


@given(st.integers(1, 200), st.integers(1, 16))
@settings(max_examples=60, deadline=None)
def test_padded_size_is_minimal_admissible(n, cutoff):
    p = padded_size(n, 2, cutoff)
    assert p >= n
    m = p
    while m > cutoff:
        assert m % 2 == 0
        m //= 2
    # nothing admissible fits strictly between n and p
    for cand in range(n, p):
        m = cand
        while m > cutoff and m % 2 == 0:
            m //= 2
        assert m > cutoff
