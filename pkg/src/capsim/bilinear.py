"""Bilinear matrix-multiplication algorithms and the sequential recursive engine.

A bilinear algorithm over n0 x n0 blocks forms q left operands T_i and q right
operands S_i as signed linear combinations of the blocks of A and B, takes the
q products Q_i = T_i * S_i, and assembles each block of C as a signed linear
combination of the Q_i.  The classical algorithm is the (n0, n0^3) instance;
Strassen-Winograd is the (2, 7) instance with 15 additions, which is the
fewest known for a 2x2, 7-multiplication scheme.

Every operand and output is evaluated from its coefficient row in ascending
index order, skipping zero coefficients.  That fixes the floating-point
summation tree once and for all, so repeated runs are bit-identical and the
result does not depend on how the recursion is scheduled.  The flop ledger
does not count this evaluation; it uses the declared straight-line addition
counts (add_count_a/b/c), which for Strassen-Winograd are the printed 4+4+7.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
import math

import numpy as np

__all__ = [
    "BilinearAlgorithm",
    "make_strassen_winograd",
    "make_strassen",
    "make_classical",
    "validate_bilinear",
    "classical_multiply",
    "recursive_multiply",
    "flop_count",
    "padded_size",
]


@dataclass(frozen=True, eq=False)
class BilinearAlgorithm:
    """A recursive matrix-multiplication rule over an n0 x n0 block split.

    a_coeffs and b_coeffs have shape (q, n0*n0): row i gives the block
    coefficients of the i-th left/right operand, blocks flattened row-major.
    c_coeffs has shape (n0*n0, q): row p gives how the q products combine
    into output block p.  add_count_* are the straight-line addition counts
    per recursion step used by the flop ledger; they may be lower than the
    coefficient-row evaluation cost when the straight-line form reuses
    intermediates.
    """

    name: str
    n0: int
    q: int
    a_coeffs: np.ndarray
    b_coeffs: np.ndarray
    c_coeffs: np.ndarray
    add_count_a: int
    add_count_b: int
    add_count_c: int

    def __post_init__(self):
        nn = self.n0 * self.n0
        a = np.asarray(self.a_coeffs, dtype=np.float64)
        b = np.asarray(self.b_coeffs, dtype=np.float64)
        c = np.asarray(self.c_coeffs, dtype=np.float64)
        if a.shape != (self.q, nn) or b.shape != (self.q, nn):
            raise ValueError("operand coefficient arrays must be q x n0^2")
        if c.shape != (nn, self.q):
            raise ValueError("output coefficient array must be n0^2 x q")
        object.__setattr__(self, "a_coeffs", a)
        object.__setattr__(self, "b_coeffs", b)
        object.__setattr__(self, "c_coeffs", c)

    @property
    def exponent(self) -> float:
        """Recursion exponent log_{n0} q (log2 7 for the Strassen family)."""
        return math.log(self.q) / math.log(self.n0)

    @property
    def add_count_total(self) -> int:
        return self.add_count_a + self.add_count_b + self.add_count_c

    def __repr__(self):
        return (f"BilinearAlgorithm({self.name!r}, n0={self.n0}, q={self.q}, "
                f"adds={self.add_count_a}+{self.add_count_b}+{self.add_count_c})")


def make_strassen_winograd() -> BilinearAlgorithm:
    """The 7-multiplication, 15-addition Winograd variant on 2x2 blocks.

    Left operands (blocks A11 A12 A21 A22):
        T0=A11  T1=A12  T2=A21+A22  T3=T2-A11  T4=A11-A21  T5=A12-T3  T6=A22
    Right operands:
        S0=B11  S1=B21  S2=B12-B11  S3=B22-S2  S4=B22-B12  S5=B22  S6=S3-B21
    Outputs, with U1=Q0+Q3, U2=U1+Q4, U3=U1+Q2:
        C11=Q0+Q1  C12=U3+Q5  C21=U2-Q6  C22=U2+Q2
    The straight-line form costs 4 adds on each operand side and 7 on the
    output side.
    """
    a = np.array([
        [1, 0, 0, 0],    # T0 = A11
        [0, 1, 0, 0],    # T1 = A12
        [0, 0, 1, 1],    # T2 = A21 + A22
        [-1, 0, 1, 1],   # T3 = T2 - A11
        [1, 0, -1, 0],   # T4 = A11 - A21
        [1, 1, -1, -1],  # T5 = A12 - T3
        [0, 0, 0, 1],    # T6 = A22
    ], dtype=np.float64)
    b = np.array([
        [1, 0, 0, 0],    # S0 = B11
        [0, 0, 1, 0],    # S1 = B21
        [-1, 1, 0, 0],   # S2 = B12 - B11
        [1, -1, 0, 1],   # S3 = B22 - S2
        [0, -1, 0, 1],   # S4 = B22 - B12
        [0, 0, 0, 1],    # S5 = B22
        [1, -1, -1, 1],  # S6 = S3 - B21
    ], dtype=np.float64)
    c = np.array([
        [1, 1, 0, 0, 0, 0, 0],    # C11 = Q0 + Q1
        [1, 0, 1, 1, 0, 1, 0],    # C12 = U3 + Q5
        [1, 0, 0, 1, 1, 0, -1],   # C21 = U2 - Q6
        [1, 0, 1, 1, 1, 0, 0],    # C22 = U2 + Q2
    ], dtype=np.float64)
    return BilinearAlgorithm("strassen-winograd", 2, 7, a, b, c,
                             add_count_a=4, add_count_b=4, add_count_c=7)


def make_strassen() -> BilinearAlgorithm:
    """The original 7-multiplication, 18-addition rule on 2x2 blocks."""
    a = np.array([
        [1, 0, 0, 1],    # A11 + A22
        [0, 0, 1, 1],    # A21 + A22
        [1, 0, 0, 0],    # A11
        [0, 0, 0, 1],    # A22
        [1, 1, 0, 0],    # A11 + A12
        [-1, 0, 1, 0],   # A21 - A11
        [0, 1, 0, -1],   # A12 - A22
    ], dtype=np.float64)
    b = np.array([
        [1, 0, 0, 1],    # B11 + B22
        [1, 0, 0, 0],    # B11
        [0, 1, 0, -1],   # B12 - B22
        [-1, 0, 1, 0],   # B21 - B11
        [0, 0, 0, 1],    # B22
        [1, 1, 0, 0],    # B11 + B12
        [0, 0, 1, 1],    # B21 + B22
    ], dtype=np.float64)
    c = np.array([
        [1, 0, 0, 1, -1, 0, 1],
        [0, 0, 1, 0, 1, 0, 0],
        [0, 1, 0, 1, 0, 0, 0],
        [1, -1, 1, 0, 0, 1, 0],
    ], dtype=np.float64)
    return BilinearAlgorithm("strassen", 2, 7, a, b, c,
                             add_count_a=5, add_count_b=5, add_count_c=8)


def make_classical(n0: int) -> BilinearAlgorithm:
    """The classical rule on an n0 x n0 split: q = n0^3 block products."""
    if n0 < 1:
        raise ValueError("n0 must be at least 1")
    q = n0 ** 3
    nn = n0 * n0
    a = np.zeros((q, nn))
    b = np.zeros((q, nn))
    c = np.zeros((nn, q))
    m = 0
    for i in range(n0):
        for j in range(n0):
            for l in range(n0):
                a[m, i * n0 + l] = 1.0
                b[m, l * n0 + j] = 1.0
                c[i * n0 + j, m] = 1.0
                m += 1
    return BilinearAlgorithm(f"classical-{n0}", n0, q, a, b, c,
                             add_count_a=0, add_count_b=0,
                             add_count_c=nn * (n0 - 1))


def validate_bilinear(alg: BilinearAlgorithm) -> bool:
    """Check the bilinear identity exactly over all basis block pairs.

    One recursion level applied to E_ij, E_kl (single-entry block matrices)
    must reproduce the classical product: the (i,l) output block iff j == k,
    zero otherwise.  Coefficients are converted to exact rationals, so the
    verdict does not depend on floating-point rounding.
    """
    n0, q = alg.n0, alg.q
    nn = n0 * n0
    if alg.a_coeffs.shape != (q, nn) or alg.b_coeffs.shape != (q, nn):
        raise ValueError("operand coefficient arrays must be q x n0^2")
    if alg.c_coeffs.shape != (nn, q):
        raise ValueError("output coefficient array must be n0^2 x q")
    a = [[Fraction(x) for x in row] for row in alg.a_coeffs.tolist()]
    b = [[Fraction(x) for x in row] for row in alg.b_coeffs.tolist()]
    c = [[Fraction(x) for x in row] for row in alg.c_coeffs.tolist()]
    for ij in range(nn):
        i, j = divmod(ij, n0)
        for kl in range(nn):
            k, l = divmod(kl, n0)
            for p in range(nn):
                got = sum(c[p][m] * a[m][ij] * b[m][kl] for m in range(q))
                want = Fraction(1) if (j == k and p == i * n0 + l) else Fraction(0)
                if got != want:
                    return False
    return True


def classical_multiply(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Triple-loop product with the inner sum accumulated in ascending k.

    Vectorized as a rank-1 update per k; each element sees the identical
    sequence of roundings as the scalar i-j-k loop, so this doubles as the
    bit-level reference for the recursive engine's base case.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0]:
        raise ValueError("inner dimensions must agree")
    C = np.zeros((A.shape[0], B.shape[1]))
    for k in range(A.shape[1]):
        C += np.outer(A[:, k], B[k, :])
    return C


def padded_size(n: int, n0: int, cutoff: int) -> int:
    """Smallest n' >= n of the form m * n0^t with m <= cutoff."""
    if n < 1:
        raise ValueError("n must be positive")
    p = 1
    while True:
        m = -(-n // p)
        if m <= cutoff:
            return m * p
        p *= n0


def _combine(coeffs, blocks, shape):
    acc = np.zeros(shape)
    for c, blk in zip(coeffs, blocks):
        if c == 0.0:
            continue
        if c == 1.0:
            acc += blk
        elif c == -1.0:
            acc -= blk
        else:
            acc += c * blk
    return acc


def _recurse(alg: BilinearAlgorithm, A, B, cutoff):
    m = A.shape[0]
    if m <= cutoff:
        return classical_multiply(A, B)
    n0 = alg.n0
    if m % n0:
        raise ValueError(f"size {m} not divisible by n0={n0}")
    h = m // n0
    ablocks = [A[i * h:(i + 1) * h, j * h:(j + 1) * h]
               for i in range(n0) for j in range(n0)]
    bblocks = [B[i * h:(i + 1) * h, j * h:(j + 1) * h]
               for i in range(n0) for j in range(n0)]
    products = []
    for i in range(alg.q):
        t = _combine(alg.a_coeffs[i], ablocks, (h, h))
        s = _combine(alg.b_coeffs[i], bblocks, (h, h))
        products.append(_recurse(alg, t, s, cutoff))
    C = np.zeros((m, m))
    for p in range(n0 * n0):
        i, j = divmod(p, n0)
        C[i * h:(i + 1) * h, j * h:(j + 1) * h] = _combine(
            alg.c_coeffs[p], products, (h, h))
    return C


def recursive_multiply(alg: BilinearAlgorithm, A, B, cutoff: int = 8) -> np.ndarray:
    """Multiply square matrices by recursive application of `alg`.

    Recursion stops at sizes <= cutoff, where the classical triple loop
    takes over.  Sizes that cannot reach the cutoff by exact division by n0
    are zero-padded to the nearest admissible size; padding never leaks into
    the result, which is returned at the original size.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    if B.shape != A.shape:
        raise ValueError("A and B must have identical shape")
    if cutoff < 1:
        raise ValueError("cutoff must be at least 1")
    n = A.shape[0]
    target = padded_size(n, alg.n0, cutoff)
    if target != n:
        Ap = np.zeros((target, target))
        Bp = np.zeros((target, target))
        Ap[:n, :n] = A
        Bp[:n, :n] = B
        return _recurse(alg, Ap, Bp, cutoff)[:n, :n]
    return _recurse(alg, A, B, cutoff)


def flop_count(alg: BilinearAlgorithm, n: int, cutoff: int = 8) -> int:
    """Exact flops of recursive_multiply at an admissible size n.

    Satisfies F(n) = q F(n/n0) + adds (n/n0)^2 above the cutoff and
    F(m) = 2m^3 - m^2 at the classical base.  Raises if n cannot reach the
    cutoff by exact division by n0.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if cutoff < 1:
        raise ValueError("cutoff must be at least 1")
    if n <= cutoff:
        return 2 * n ** 3 - n ** 2
    if n % alg.n0:
        raise ValueError(
            f"size {n} not reachable from cutoff {cutoff} by dividing by {alg.n0}")
    sub = flop_count(alg, n // alg.n0, cutoff)
    return alg.q * sub + alg.add_count_total * (n // alg.n0) ** 2
