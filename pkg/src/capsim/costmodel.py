"""Closed-form cost models, communication lower bounds and derived metrics.

caps_cost carries the exact leading constants of the executed recursion
(bandwidth 12 n^2 (P^{-2/omega0} - P^{-1}) and latency 36 log7 P for the
all-BFS scheme, scaled by 7^ell after ell DFS steps), so its numbers equal
the simulator's ledgers integer-for-integer at admissible sizes.  The
survey-table rows and the lower bounds are order-of-magnitude expressions
with constant 1; a marker on every triple records which kind it is, and the
two kinds are never compared for equality, only for dominance and growth
rates.

omega0 = log2 7 throughout.  For P = 7^k the identities P^{1/omega0} = 2^k
and P^{2/omega0} = 4^k hold exactly and are used in integer form wherever a
result feeds an exact equality check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .bilinear import BilinearAlgorithm, flop_count, make_strassen, make_strassen_winograd
from .caps import InsufficientMemory, compute_ell, memory_um_exact
from .layout import log7

__all__ = [
    "OMEGA0",
    "CostTriple",
    "LowerBoundReport",
    "caps_cost",
    "lower_bound",
    "table1_cost",
    "TABLE1_ROWS",
    "ell_opt_strassen_25d",
    "bandwidth_ratio",
    "hardware_balance",
    "effective_gflops",
]

OMEGA0 = math.log2(7.0)


@dataclass(frozen=True)
class CostTriple:
    """Flop, bandwidth and latency costs along the critical path.

    exact=True means the numbers carry the algorithm's true constants and
    may be compared integer-for-integer with simulated ledgers; exact=False
    marks order-of-magnitude rows (constant 1) that only support asymptotic
    comparisons.
    """

    flops: float
    bandwidth_words: float
    latency_messages: float
    exact: bool = False

    def __post_init__(self):
        for f in ("flops", "bandwidth_words", "latency_messages"):
            if getattr(self, f) < 0:
                raise ValueError(f"{f} must be nonnegative")


def _as_int(x: Fraction):
    return int(x) if x.denominator == 1 else float(x)


def _flavor_alg(flavor: str) -> BilinearAlgorithm:
    if flavor == "winograd":
        return make_strassen_winograd()
    if flavor == "strassen":
        return make_strassen()
    raise ValueError(f"unknown flavor {flavor!r}")


def _exact_flops(n: int, P: int, flavor: str, cutoff: int):
    """Per-processor flops (c_s n^omega0 - 5n^2)/P for Winograd, -6n^2 for
    the original rule; exact via the recurrence at admissible n, else the
    float closed form with c_s = (2 cutoff + 4 or 5)/cutoff^(omega0-2)."""
    alg = _flavor_alg(flavor)
    try:
        return _as_int(Fraction(flop_count(alg, n, cutoff), P))
    except ValueError:
        cs = (2 * cutoff + (4 if flavor == "winograd" else 5)) / cutoff ** (OMEGA0 - 2)
        csub = 5 if flavor == "winograd" else 6
        return (cs * n ** OMEGA0 - csub * n * n) / P


def caps_cost(n: int, P: int, M: int | None = None, variant: str = "auto",
              flavor: str = "winograd", cutoff: int = 8) -> CostTriple:
    """Exact critical-path cost of the recursion at (n, P, M).

    variant 'um' prices the all-BFS scheme, 'lm' the DFS-prefixed scheme
    with ell from compute_ell, 'auto' routes through the same ell rule the
    simulator's default schedule uses (so modeled and simulated runs agree
    even where the rule is conservative).  Raises InsufficientMemory when
    not even the inputs fit, and ValueError when 'um' is forced below its
    memory need.
    """
    k = log7(P)
    if variant not in ("auto", "um", "lm"):
        raise ValueError(f"unknown variant {variant!r}")
    if variant == "auto":
        if M is None or compute_ell(n, P, M) == 0:
            variant = "um"
        else:
            variant = "lm"
    if variant == "um":
        if M is not None:
            need = memory_um_exact(n, P)
            if need > M:
                raise ValueError(
                    f"the all-BFS scheme needs {float(need):.0f} words"
                    f" > M={M}")
        ell = 0
    else:
        if M is None:
            raise ValueError("the limited-memory variant requires M")
        ell = max(compute_ell(n, P, M), 0)

    sub = Fraction(n, 2 ** ell)
    bw = 7 ** ell * 12 * sub * sub * (Fraction(1, 4 ** k) - Fraction(1, P))
    lat = 7 ** ell * 36 * k
    return CostTriple(
        flops=_exact_flops(n, P, flavor, cutoff),
        bandwidth_words=_as_int(bw),
        latency_messages=lat,
        exact=True,
    )


@dataclass(frozen=True)
class LowerBoundReport:
    """A communication lower bound with its regime decomposition."""

    cost: CostTriple
    memory_dependent_words: float
    memory_independent_words: float
    dominant: str
    crossover_memory: float


def lower_bound(family: str, n: int, P: int, M: int | None = None) -> LowerBoundReport:
    """Bandwidth/latency lower bounds for 'classical' or 'strassen' flops.

    The memory-dependent term is (n/sqrt(M))^w * M/P (w = 3 or log2 7); the
    memory-independent term is n^2/P^(2/w); the bound is their max, latency
    is the bandwidth bound divided by M floored at one message, and the two
    terms cross at M* = n^2/P^(2/w)."""
    if family == "classical":
        w = 3.0
    elif family == "strassen":
        w = OMEGA0
    else:
        raise ValueError(f"unknown family {family!r}")
    if n < 1 or P < 1:
        raise ValueError("n and P must be positive")
    crossover = n * n / P ** (2.0 / w)
    if M is None:
        M = crossover  # at the crossover both terms agree
    if M <= 0:
        raise ValueError("M must be positive")
    dep = (n / math.sqrt(M)) ** w * M / P
    indep = n * n / P ** (2.0 / w)
    bw = max(dep, indep)
    lat = max(dep / M, 1.0)
    cost = CostTriple(flops=n ** w / P, bandwidth_words=bw,
                      latency_messages=lat, exact=False)
    return LowerBoundReport(
        cost=cost,
        memory_dependent_words=dep,
        memory_independent_words=indep,
        dominant="memory-dependent" if dep >= indep else "memory-independent",
        crossover_memory=crossover,
    )


TABLE1_ROWS = ("2d", "3d", "2.5d", "2d-strassen", "strassen-2d",
               "2.5d-strassen", "strassen-2.5d", "caps",
               "lower-classical", "lower-strassen")


def table1_cost(row: str, n: int, P: int, M: int | None = None,
                ell: int | None = None) -> CostTriple:
    """Order-of-magnitude (constant 1) cost of a survey-table row.

    Rows '2.5d', '2.5d-strassen', 'strassen-2.5d', 'caps' and the lower
    bounds need M; 'strassen-2d' and 'strassen-2.5d' need ell.  Logarithms
    are base 2.
    """
    row = row.lower()
    if row not in TABLE1_ROWS:
        raise ValueError(f"unknown row {row!r}; pick one of {TABLE1_ROWS}")
    if n < 1 or P < 1:
        raise ValueError("n and P must be positive")
    w = OMEGA0
    logp = math.log2(P) if P > 1 else 1.0

    def need_m():
        if M is None or M <= 0:
            raise ValueError(f"row {row!r} requires a positive M")
        return float(M)

    def need_ell():
        if ell is None or ell < 0:
            raise ValueError(f"row {row!r} requires a nonnegative ell")
        return ell

    if row == "2d":
        return CostTriple(n ** 3 / P, n * n / P ** 0.5, P ** 0.5)
    if row == "3d":
        return CostTriple(n ** 3 / P, n * n / P ** (2 / 3), logp)
    if row == "2.5d":
        m = need_m()
        return CostTriple(
            n ** 3 / P,
            max(n ** 3 / (P * m ** 0.5), n * n / P ** (2 / 3)),
            n ** 3 / (P * m ** 1.5) + logp)
    if row == "2d-strassen":
        return CostTriple(n ** w / P ** ((w - 1) / 2), n * n / P ** 0.5, P ** 0.5)
    if row == "strassen-2d":
        l = need_ell()
        return CostTriple(
            (7 / 8) ** l * n ** 3 / P,
            (7 / 4) ** l * n * n / P ** 0.5,
            7 ** l * P ** 0.5)
    if row == "2.5d-strassen":
        m = need_m()
        return CostTriple(
            max(n ** 3 / (P * m ** (1.5 - w / 2)), n ** w / P ** (w / 3)),
            max(n ** 3 / (P * m ** 0.5), n * n / P ** (2 / 3)),
            n ** 3 / (P * m ** 1.5) + logp)
    if row == "strassen-2.5d":
        m = need_m()
        l = need_ell()
        return CostTriple(
            (7 / 8) ** l * n ** 3 / P,
            max((7 / 8) ** l * n ** 3 / (P * m ** 0.5),
                (7 / 4) ** l * n * n / P ** (2 / 3)),
            (7 / 8) ** l * n ** 3 / (P * m ** 1.5) + 7 ** l * logp)
    if row == "caps":
        m = need_m()
        # same memory-dependent expression as lower_bound, so the row
        # matches the strassen bound bit-for-bit where it is tight
        dep = (n / math.sqrt(m)) ** w * m / P
        return CostTriple(
            n ** w / P,
            max(dep, n * n / P ** (2 / w)),
            max(dep / m * logp, logp))
    family = "classical" if row == "lower-classical" else "strassen"
    return lower_bound(family, n, P, M).cost


def ell_opt_strassen_25d(n: int, P: int, M: int) -> int:
    """Recursion depth max(0, ceil(log2(n / (sqrt(M) P^(1/3))))) minimizing
    the strassen-2.5d models, via the exact test P^2 (4^ell M)^3 >= n^6."""
    if n < 1 or P < 1 or M < 1:
        raise ValueError("n, P and M must be positive")
    ell = 0
    while P * P * (4 ** ell * M) ** 3 < n ** 6:
        ell += 1
    return ell


def bandwidth_ratio(n: int, P: int, M) -> tuple:
    """Best-classical over best-Strassen bandwidth, with its regime.

    Returns (ratio, case): case 1 for M <= n^2/P^(2/omega0) where the ratio
    is (n^2/M)^((3-omega0)/2); case 2 up to n^2/P^(2/3) where it is
    sqrt(n^2/M) P^(2/omega0 - 1); case 3 above, flat at P^(2/omega0 - 2/3).
    Requires M >= n^2/P (the inputs must fit)."""
    if n < 1 or P < 1:
        raise ValueError("n and P must be positive")
    if M < n * n / P:
        raise ValueError("M below n^2/P cannot hold the inputs")
    m1 = n * n / P ** (2.0 / OMEGA0)
    m2 = n * n / P ** (2.0 / 3.0)
    if M <= m1:
        return (n * n / M) ** ((3.0 - OMEGA0) / 2.0), 1
    if M < m2:
        return math.sqrt(n * n / M) * P ** (2.0 / OMEGA0 - 1.0), 2
    return P ** (2.0 / OMEGA0 - 2.0 / 3.0), 3


def hardware_balance(gamma: float, beta: float, M: float,
                     c: float = 1.0, c_prime: float = 1.0) -> dict:
    """Whether a machine stays compute-bound as it scales.

    Classical algorithms need gamma sqrt(M) >= c beta; the recursion's lower
    exponent tightens this to gamma M^(omega0/2 - 1) >= c' beta.  c and
    c_prime are the implementation's constants (default 1)."""
    if M <= 0:
        raise ValueError("M must be positive")
    return {
        "classical_compute_bound": gamma * math.sqrt(M) >= c * beta,
        "strassen_compute_bound": gamma * M ** (OMEGA0 / 2.0 - 1.0) >= c_prime * beta,
    }


def effective_gflops(n: int, seconds: float) -> float:
    """Classical-equivalent rate 2n^3 / (time * 1e9), the usual scale for
    comparing runs regardless of which algorithm produced them."""
    if seconds <= 0:
        return math.inf
    return 2.0 * n ** 3 / (seconds * 1e9)
