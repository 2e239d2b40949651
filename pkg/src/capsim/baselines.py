"""Torus baselines: Cannon's algorithm and the two Strassen hybrids.

All three run on a sqrt(P) x sqrt(P) processor grid, processor (r, c) having
rank r*sqrt(P)+c.  Cannon skews row i of A left by i and column j of B up by
j, then alternates local multiply-accumulate with unit circular shifts; each
processor sends at most two blocks per communication phase, so the critical
path counts one skew phase plus sqrt(P)-1 shift rounds: 2 sqrt(P) messages
and 2 sqrt(P) n^2/P words (P >= 4; a single processor communicates nothing).

2d-strassen keeps Cannon's dataflow and runs the recursive rule inside each
local block product: communication identical to Cannon, local flops
sqrt(P) F(n/sqrt(P)) + (sqrt(P)-1)(n/sqrt(P))^2 per processor.

strassen-2d applies ell communication-free recursion steps on top (every
processor owns an aligned piece of every quadrant, block-cyclic over the 4^ell
submatrices) and runs one classical Cannon multiply per subproblem underneath:
7^ell Cannon multiplies at size n/2^ell, hence (7/4)^ell times Cannon's words
and 7^ell times Cannon's messages.

Closed forms for all three are exported for the cost-model path; the
simulated ledgers match them exactly.
"""

from __future__ import annotations

import math

import numpy as np

from .bilinear import (BilinearAlgorithm, classical_multiply, flop_count,
                       make_strassen_winograd, padded_size, recursive_multiply)
from ._distmat import DistMatrix
from .simnet import SimMachine

__all__ = [
    "cannon_multiply",
    "two_d_strassen",
    "strassen_two_d",
    "cannon_cost",
    "two_d_strassen_cost",
    "strassen_two_d_cost",
]


def _grid_side(P: int) -> int:
    q = math.isqrt(P)
    if q * q != P:
        raise ValueError(f"P={P} is not a perfect square")
    return q


def _block_layout(A, q: int):
    n = A.shape[0]
    m = n // q
    return {(r, c): A[r * m:(r + 1) * m, c * m:(c + 1) * m].copy()
            for r in range(q) for c in range(q)}


def _cannon_rounds(machine, ablocks, bblocks, q, offset=0, multiply=None,
                   flops_first=None, flops_round=None, accum_flops=0):
    """Skew, then q rounds of multiply-accumulate and unit shifts.

    ablocks/bblocks map grid coordinates to local blocks; offset maps grid
    coordinate (r, c) to the machine processor id offset + r*q + c.  Returns
    the grid of local C blocks.  multiply(a, b) is the local product;
    flops_first/flops_round are the per-processor charges for the first and
    subsequent rounds (the first assigns into C, later ones accumulate).
    """
    m = next(iter(ablocks.values())).shape[0]
    words = m * m

    def pid(r, c):
        return offset + r * q + c

    machine.begin_phase("communicate")
    for r in range(q):
        for c in range(q):
            if r:  # A block (r, c) travels to column (c - r) mod q
                machine.send(pid(r, c), pid(r, (c - r) % q), words)
            if c:  # B block (r, c) travels to row (r - c) mod q
                machine.send(pid(r, c), pid((r - c) % q, c), words)
    machine.end_phase()
    a = {(r, c): ablocks[(r, (c + r) % q)] for r in range(q) for c in range(q)}
    b = {(r, c): bblocks[((r + c) % q, c)] for r in range(q) for c in range(q)}

    cblocks = {rc: np.zeros((m, m)) for rc in a}
    for rnd in range(q):
        machine.begin_phase("compute")
        for (r, c), blk in a.items():
            cblocks[(r, c)] += multiply(blk, b[(r, c)])
            machine.add_flops(pid(r, c),
                              flops_first if rnd == 0 else flops_round)
        machine.end_phase()
        if rnd == q - 1:
            break
        machine.begin_phase("communicate")
        for r in range(q):
            for c in range(q):
                if q > 1:
                    machine.send(pid(r, c), pid(r, (c - 1) % q), words)
                    machine.send(pid(r, c), pid((r - 1) % q, c), words)
        machine.end_phase()
        a = {(r, c): a[(r, (c + 1) % q)] for r in range(q) for c in range(q)}
        b = {(r, c): b[((r + 1) % q, c)] for r in range(q) for c in range(q)}
    return cblocks


def _check_square(A, B):
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape != B.shape:
        raise ValueError("A and B must be square and of identical shape")
    return A, B


def cannon_multiply(machine: SimMachine, A, B):
    """Classical Cannon on a square grid; returns (C, CostReport)."""
    A, B = _check_square(A, B)
    n = A.shape[0]
    q = _grid_side(machine.params.P)
    if n % q:
        raise ValueError(f"n={n} not divisible by sqrt(P)={q}")
    m = n // q
    for p in range(machine.params.P):
        machine.alloc(p, 3 * m * m)
    cblocks = _cannon_rounds(
        machine, _block_layout(A, q), _block_layout(B, q), q,
        multiply=classical_multiply,
        flops_first=2 * m ** 3 - m ** 2,
        flops_round=2 * m ** 3)
    C = np.block([[cblocks[(r, c)] for c in range(q)] for r in range(q)])
    for p in range(machine.params.P):
        machine.free(p, 3 * m * m)
    return C, machine.report()


def two_d_strassen(machine: SimMachine, A, B, cutoff: int = 8,
                   alg: BilinearAlgorithm | None = None):
    """Cannon dataflow with the recursive rule inside each block product."""
    if alg is None:
        alg = make_strassen_winograd()
    A, B = _check_square(A, B)
    n = A.shape[0]
    q = _grid_side(machine.params.P)
    if n % q:
        raise ValueError(f"n={n} not divisible by sqrt(P)={q}")
    m = n // q
    local = flop_count(alg, padded_size(m, alg.n0, cutoff), cutoff)
    for p in range(machine.params.P):
        machine.alloc(p, 3 * m * m)
    cblocks = _cannon_rounds(
        machine, _block_layout(A, q), _block_layout(B, q), q,
        multiply=lambda a, b: recursive_multiply(alg, a, b, cutoff),
        flops_first=local,
        flops_round=local + m * m)
    C = np.block([[cblocks[(r, c)] for c in range(q)] for r in range(q)])
    for p in range(machine.params.P):
        machine.free(p, 3 * m * m)
    return C, machine.report()


def strassen_two_d(machine: SimMachine, A, B, ell: int,
                   alg: BilinearAlgorithm | None = None):
    """ell communication-free recursion steps, then classical Cannon leaves."""
    if alg is None:
        alg = make_strassen_winograd()
    if alg.n0 != 2:
        raise ValueError("the recursion steps require a 2x2 rule")
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    A, B = _check_square(A, B)
    n = A.shape[0]
    P = machine.params.P
    q = _grid_side(P)
    if n % ((2 ** ell) * q):
        raise ValueError(f"n={n} not divisible by 2^ell * sqrt(P) = {2 ** ell * q}")

    # Block-cyclic over the 4^ell submatrices: processor (r, c) owns block
    # (r, c) of each, so quadrant arithmetic at all ell levels is local.
    def cyclic(Mfull):
        sub = n // 2 ** ell
        bs = sub // q
        blocks = {p: {} for p in range(P)}
        for sr in range(2 ** ell):
            for sc in range(2 ** ell):
                for r in range(q):
                    for c in range(q):
                        r0 = sr * sub + r * bs
                        c0 = sc * sub + c * bs
                        blocks[r * q + c][(r0, c0)] = Mfull[r0:r0 + bs,
                                                            c0:c0 + bs].copy()
        return DistMatrix(n, blocks)

    dA, dB = cyclic(A), cyclic(B)
    dC = dA.zeros_like()
    for p in range(P):
        machine.alloc(p, 3 * (n * n // P))
    _s2d_recurse(machine, alg, dA, dB, dC, ell, q, P)
    for p in range(P):
        machine.free(p, 3 * (n * n // P))
    return dC.assemble(), machine.report()


def _s2d_recurse(machine, alg, dA, dB, dC, left, q, P):
    if left == 0:
        # Exactly one block per processor remains: run Cannon on it.
        m = dA.m
        ab = {}
        bb = {}
        for p, d in dA.blocks.items():
            ((r0, c0), blk), = d.items()
            ab[(r0 // (m // q), c0 // (m // q))] = blk
        for p, d in dB.blocks.items():
            ((r0, c0), blk), = d.items()
            bb[(r0 // (m // q), c0 // (m // q))] = blk
        mb = m // q
        cblocks = _cannon_rounds(
            machine, ab, bb, q,
            multiply=classical_multiply,
            flops_first=2 * mb ** 3 - mb ** 2,
            flops_round=2 * mb ** 3)
        for p, d in dC.blocks.items():
            ((r0, c0), blk), = d.items()
            blk += cblocks[(r0 // mb, c0 // mb)]
        return

    m = dA.m
    share = (m // 2) ** 2 // P
    nn = alg.n0 * alg.n0
    for p in range(P):
        machine.alloc(p, 3 * share)
    machine.begin_phase("compute")
    for p in range(P):
        machine.add_flops(p, (alg.add_count_a + alg.add_count_b) * share)
    machine.end_phase()

    def flat(dm):
        quads = dm.quadrants()
        return [quads[0][0], quads[0][1], quads[1][0], quads[1][1]]

    aq, bq, cq = flat(dA), flat(dB), flat(dC)
    for i in range(alg.q):
        ti = DistMatrix.combine(alg.a_coeffs[i], aq)
        si = DistMatrix.combine(alg.b_coeffs[i], bq)
        ci = ti.zeros_like()
        _s2d_recurse(machine, alg, ti, si, ci, left - 1, q, P)
        for b in range(nn):
            cq[b].accumulate(alg.c_coeffs[b, i], ci)

    machine.begin_phase("compute")
    for p in range(P):
        machine.add_flops(p, alg.add_count_c * share)
    machine.end_phase()
    for p in range(P):
        machine.free(p, 3 * share)


# -- closed forms --------------------------------------------------------

def cannon_cost(n: int, P: int):
    """(flops, words, messages) per critical path, exact."""
    q = _grid_side(P)
    if n % q:
        raise ValueError(f"n={n} not divisible by sqrt(P)={q}")
    flops = (2 * n ** 3 - n ** 2) // P
    if P == 1:
        return flops, 0, 0
    return flops, 2 * q * (n * n // P), 2 * q


def two_d_strassen_cost(n: int, P: int, cutoff: int = 8,
                        alg: BilinearAlgorithm | None = None):
    if alg is None:
        alg = make_strassen_winograd()
    q = _grid_side(P)
    if n % q:
        raise ValueError(f"n={n} not divisible by sqrt(P)={q}")
    m = n // q
    local = flop_count(alg, padded_size(m, alg.n0, cutoff), cutoff)
    flops = q * local + (q - 1) * m * m
    if P == 1:
        return flops, 0, 0
    return flops, 2 * q * (n * n // P), 2 * q


def strassen_two_d_cost(n: int, P: int, ell: int,
                        alg: BilinearAlgorithm | None = None):
    if alg is None:
        alg = make_strassen_winograd()
    q = _grid_side(P)
    if ell < 0 or n % ((2 ** ell) * q):
        raise ValueError(f"n={n} not divisible by 2^ell * sqrt(P)")

    def flops(m, left):
        if left == 0:
            return (2 * m ** 3 - m ** 2) // P
        return (alg.add_count_total * (m // 2) ** 2 // P
                + alg.q * flops(m // 2, left - 1))

    f = flops(n, ell)
    if P == 1:
        return f, 0, 0
    sub = n // 2 ** ell
    return f, 7 ** ell * 2 * q * (sub * sub // P), 7 ** ell * 2 * q
