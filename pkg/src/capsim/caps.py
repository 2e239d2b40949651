"""Communication-avoiding parallel Strassen on the simulated machine.

The recursion over 2x2 quadrants takes one of two parallel steps per level:

* BFS step: all current processors jointly form the seven half-size operand
  pairs, then scatter them across seven disjoint subgroups with three 7-way
  all-to-alls (operands out, products back), each processor shipping its
  (m/2)^2/p-word share to each of its six partners.  All seven subproblems
  then run concurrently on a seventh of the processors each.  Costs 36
  messages and 36 (m/2)^2/p words per processor, plus transient buffers for
  7 products and 14 operands (21 (m/2)^2/p words).
* DFS step: the seven subproblems run one after another on all current
  processors with no communication at all, reusing a single triple of
  subproblem buffers (3 (m/2)^2/p words).

A schedule is the top-down string of step kinds; it must contain exactly
log7 P BFS steps.  BFS early and often is fastest but needs the most memory;
prefixing DFS steps shrinks the working set at a bandwidth premium.  The
memory-minimal choice of DFS prefix length for a capacity M is computed by
compute_ell, and validate_schedule prices the exact per-processor peak of
any schedule before running it.

Quadrant arithmetic never crosses processors (the layout guarantees every
block sits inside one quadrant at every level), so all operand formation is
local; the simulator tracks true block payloads end to end and the returned
product is numerically exact up to floating-point rounding.  Because every
linear combination is evaluated in fixed coefficient order, any interleaving
of the same number of BFS and DFS steps returns the bit-identical product.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bilinear import (BilinearAlgorithm, flop_count, make_strassen_winograd,
                       padded_size, recursive_multiply)
from .layout import Layout, log7, shard as make_shards
from ._distmat import DistMatrix
from .simnet import SimMachine

__all__ = [
    "Schedule",
    "InsufficientMemory",
    "ScheduleExceedsMemory",
    "compute_ell",
    "default_schedule",
    "validate_schedule",
    "memory_um",
    "caps_multiply",
]


class InsufficientMemory(Exception):
    """Raised when M cannot hold the inputs under any schedule (Eq.-style
    feasibility: three shards of n^2/P words must fit in a third of M)."""


class ScheduleExceedsMemory(Exception):
    """Raised when a specific schedule's peak working set exceeds M."""


@dataclass(frozen=True)
class Schedule:
    """Top-down step kinds, 'B' or 'D'; serialized as e.g. 'DDB'."""

    steps: tuple

    def __post_init__(self):
        bad = [s for s in self.steps if s not in ("B", "D")]
        if bad:
            raise ValueError(f"schedule steps must be 'B' or 'D', got {bad}")
        object.__setattr__(self, "steps", tuple(self.steps))

    @classmethod
    def from_string(cls, text: str) -> "Schedule":
        return cls(tuple(text))

    def to_string(self) -> str:
        return "".join(self.steps)

    @property
    def ell(self) -> int:
        return sum(1 for s in self.steps if s == "D")

    @property
    def k(self) -> int:
        return sum(1 for s in self.steps if s == "B")

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)


def compute_ell(n: int, P: int, M: int) -> int:
    """Fewest DFS steps that fit memory M: max(0, ceil(log2(4n/(P^(1/w) sqrt(M))))).

    P^(1/omega0) = 2^k exactly for P = 7^k, so the ceiling is evaluated as
    the smallest ell with 4^(ell+k) M >= 16 n^2, all in integers.  Raises
    InsufficientMemory when even the inputs cannot fit (3n^2/P > M/3).
    """
    k = log7(P)
    if n < 1 or M < 1:
        raise ValueError("n and M must be positive")
    if 9 * n * n > M * P:
        raise InsufficientMemory(
            f"M={M} cannot hold 3n^2/P = {3 * n * n}/{P} words in M/3")
    ell = 0
    while (4 ** (ell + k)) * M < 16 * n * n:
        ell += 1
    return ell


def default_schedule(n: int, P: int, M: int | None = None) -> Schedule:
    """DFS prefix of length ell followed by log7 P BFS steps.

    With no memory limit the prefix is empty (the unlimited-memory scheme).
    A single processor always gets the empty schedule: DFS steps without any
    BFS below them only cost memory.
    """
    k = log7(P)
    if k == 0:
        return Schedule(())
    ell = 0 if M is None else compute_ell(n, P, M)
    return Schedule(("D",) * ell + ("B",) * k)


def memory_um_exact(n: int, P: int) -> Fraction:
    """Per-processor peak of the all-BFS schedule, 7n^2/P^(2/w) - 4n^2/P,
    as an exact rational for any n (the model side needs no divisibility)."""
    k = log7(P)
    return Fraction(7 * n * n, 4 ** k) - Fraction(4 * n * n, P)


def memory_um(n: int, P: int) -> int:
    """memory_um_exact restricted to sizes where the peak is a whole number
    of words, which every executable layout guarantees."""
    val = memory_um_exact(n, P)
    if val.denominator != 1:
        raise ValueError(f"n={n} does not give an integral peak at P={P}")
    return int(val)


def validate_schedule(schedule: Schedule, n: int, P: int,
                      M: int | None = None) -> int:
    """Exact per-processor peak words of running `schedule` at (n, P).

    Peak = 3n^2/P for the resident shards, plus 21(m/2)^2/p per live BFS
    step and 3(m/2)^2/p per live DFS step down the recursion.  Raises
    ValueError when the BFS count differs from log7 P and
    ScheduleExceedsMemory when the peak exceeds M.
    """
    k = log7(P)
    if schedule.k != k:
        raise ValueError(
            f"schedule has {schedule.k} BFS steps, log7(P) = {k} required")
    peak = Fraction(3 * n * n, P)
    m, p = n, P
    for step in schedule:
        if m % 2:
            raise ValueError(f"matrix size {m} not divisible by 2 mid-schedule")
        m //= 2
        if step == "B":
            peak += Fraction(21 * m * m, p)
            p //= 7
        else:
            peak += Fraction(3 * m * m, p)
    if peak.denominator != 1:
        raise ValueError(f"n={n} does not give integral shares under P={P}")
    peak = int(peak)
    if M is not None and peak > M:
        raise ScheduleExceedsMemory(
            f"schedule {schedule.to_string()!r} peaks at {peak} words > M={M}")
    return peak


@dataclass
class _Ctx:
    """One live subproblem: its processors and distributed A, B, C."""

    procs: tuple
    A: DistMatrix
    B: DistMatrix
    C: DistMatrix


def _groups(procs, digit: int):
    """Partition procs into groups of 7 agreeing on all base-7 digits except
    `digit`, each group ordered by that digit's value."""
    lo = 7 ** digit
    buckets = {}
    for p in sorted(procs):
        key = (p // (lo * 7)) * lo + p % lo
        buckets.setdefault(key, []).append(p)
    groups = list(buckets.values())
    for g in groups:
        if len(g) != 7:
            raise ValueError("processor set does not split into groups of 7")
    return groups


def _flat_quadrants(dm: DistMatrix):
    q = dm.quadrants()
    return [q[0][0], q[0][1], q[1][0], q[1][1]]


def _share_words(m: int, p: int) -> int:
    w, r = divmod((m // 2) * (m // 2), p)
    if r:
        raise ValueError("subproblem share is not an integral word count")
    return w


def _run(machine: SimMachine, alg, cutoff, steps, contexts, bfs_done):
    if not steps:
        machine.begin_phase("compute")
        for ctx in contexts:
            if len(ctx.procs) != 1:
                raise AssertionError("schedule exhausted with processors left")
            p = ctx.procs[0]
            full = recursive_multiply(alg, ctx.A.assemble(), ctx.B.assemble(),
                                      cutoff)
            machine.add_flops(
                p, flop_count(alg, padded_size(ctx.A.m, alg.n0, cutoff), cutoff))
            ctx.C.accumulate(1.0, ctx.C.disassemble_like(full))
        machine.end_phase()
        return
    step, rest = steps[0], steps[1:]
    if step == "B":
        _bfs_step(machine, alg, cutoff, rest, contexts, bfs_done)
    else:
        _dfs_step(machine, alg, cutoff, rest, contexts, bfs_done)


def _bfs_step(machine, alg, cutoff, rest, contexts, bfs_done):
    digit = bfs_done
    nn = alg.n0 * alg.n0
    plan = []
    for ctx in contexts:
        share = _share_words(ctx.A.m, len(ctx.procs))
        # 2q operand shares plus q product shares live through the step.
        for p in ctx.procs:
            machine.alloc(p, 3 * alg.q * share)
        plan.append((ctx, share, _groups(ctx.procs, digit)))

    machine.begin_phase("compute")
    formed = []
    for ctx, share, groups in plan:
        aq = _flat_quadrants(ctx.A)
        bq = _flat_quadrants(ctx.B)
        ts = [DistMatrix.combine(alg.a_coeffs[i], aq) for i in range(alg.q)]
        ss = [DistMatrix.combine(alg.b_coeffs[i], bq) for i in range(alg.q)]
        for p in ctx.procs:
            machine.add_flops(p, (alg.add_count_a + alg.add_count_b) * share)
        formed.append((ts, ss))
    machine.end_phase()

    machine.begin_phase("communicate")
    for (ctx, share, groups), _ in zip(plan, formed):
        for g in groups:
            machine.exchange(g, share)  # operand T shares
            machine.exchange(g, share)  # operand S shares
    machine.end_phase()

    children = []
    returns = []
    for (ctx, share, groups), (ts, ss) in zip(plan, formed):
        quad_keys = ts[0].key_sets()
        subs = []
        for i in range(alg.q):
            ti = ts[i].gather_to_digit(digit, i)
            si = ss[i].gather_to_digit(digit, i)
            sub = _Ctx(ti.procs, ti, si, ti.zeros_like())
            subs.append(sub)
            children.append(sub)
        returns.append((ctx, share, groups, quad_keys, subs))

    _run(machine, alg, cutoff, rest, children, bfs_done + 1)

    machine.begin_phase("communicate")
    for ctx, share, groups, quad_keys, subs in returns:
        for g in groups:
            machine.exchange(g, share)  # product shares back
    machine.end_phase()

    machine.begin_phase("compute")
    for ctx, share, groups, quad_keys, subs in returns:
        cq = _flat_quadrants(ctx.C)
        for i, sub in enumerate(subs):
            qi = sub.C.scatter_to_key_sets(quad_keys)
            for b in range(nn):
                cq[b].accumulate(alg.c_coeffs[b, i], qi)
        for p in ctx.procs:
            machine.add_flops(p, alg.add_count_c * share)
    machine.end_phase()

    for ctx, share, groups, quad_keys, subs in returns:
        for p in ctx.procs:
            machine.free(p, 3 * alg.q * share)


def _dfs_step(machine, alg, cutoff, rest, contexts, bfs_done):
    nn = alg.n0 * alg.n0
    plan = []
    for ctx in contexts:
        share = _share_words(ctx.A.m, len(ctx.procs))
        for p in ctx.procs:
            machine.alloc(p, 3 * share)
        plan.append((ctx, share))

    # Operand-formation adds for all seven subproblems, charged up front;
    # the subproblems below reuse one buffer triple and run sequentially.
    machine.begin_phase("compute")
    for ctx, share in plan:
        for p in ctx.procs:
            machine.add_flops(p, (alg.add_count_a + alg.add_count_b) * share)
    machine.end_phase()

    quads = [( _flat_quadrants(ctx.A), _flat_quadrants(ctx.B),
               _flat_quadrants(ctx.C)) for ctx, _ in plan]

    for i in range(alg.q):
        subs = []
        for (ctx, share), (aq, bq, cq) in zip(plan, quads):
            ti = DistMatrix.combine(alg.a_coeffs[i], aq)
            si = DistMatrix.combine(alg.b_coeffs[i], bq)
            subs.append(_Ctx(ctx.procs, ti, si, ti.zeros_like()))
        _run(machine, alg, cutoff, rest, subs, bfs_done)
        for (ctx, share), (aq, bq, cq), sub in zip(plan, quads, subs):
            for b in range(nn):
                cq[b].accumulate(alg.c_coeffs[b, i], sub.C)

    machine.begin_phase("compute")
    for ctx, share in plan:
        for p in ctx.procs:
            machine.add_flops(p, alg.add_count_c * share)
    machine.end_phase()

    for ctx, share in plan:
        for p in ctx.procs:
            machine.free(p, 3 * share)


def caps_multiply(machine: SimMachine, A, B, schedule: Schedule,
                  alg: BilinearAlgorithm | None = None,
                  cutoff: int = 8):
    """Run the parallel recursion on the simulated machine.

    Returns (C, CostReport) where C is the exact dense product and the
    report carries the run's critical-path and total ledgers.  The schedule
    must hold exactly log7(P) BFS steps and fit the machine's memory; n must
    be divisible by 2^s * 7^ceil(k/2) so the layout exists.
    """
    if alg is None:
        alg = make_strassen_winograd()
    if alg.n0 != 2 or alg.q != 7:
        raise ValueError("distributed execution requires a 2x2, 7-product rule")
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape != B.shape:
        raise ValueError("A and B must be square and of identical shape")
    n = A.shape[0]
    P = machine.params.P
    validate_schedule(schedule, n, P, machine.params.M)
    lay = Layout(n, P, len(schedule))

    dA = DistMatrix.from_shards(make_shards(A, lay), lay)
    dB = DistMatrix.from_shards(make_shards(B, lay), lay)
    dC = dA.zeros_like()
    resident = 3 * (n * n // P)
    for p in range(P):
        machine.alloc(p, resident)

    _run(machine, alg, cutoff, list(schedule.steps), [_Ctx(tuple(range(P)), dA, dB, dC)], 0)

    for p in range(P):
        machine.free(p, resident)
    return dC.assemble(), machine.report()
