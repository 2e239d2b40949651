"""Deterministic simulator and cost models for communication-avoiding
parallel Strassen matrix multiplication.

The package executes the algorithms for real (numerically correct products on
simulated processors) while keeping exact per-run ledgers of flops, words and
messages along the critical path, and provides closed-form cost models and
communication lower bounds to validate the ledgers against.
"""

from .bilinear import (
    BilinearAlgorithm,
    make_strassen_winograd,
    make_strassen,
    make_classical,
    validate_bilinear,
    classical_multiply,
    recursive_multiply,
    flop_count,
)
from .layout import Layout, Shard, shard, unshard, bfs_child_layout, dfs_child_layout
from .simnet import (
    MachineParams,
    SimMachine,
    CostReport,
    OutOfSimulatedMemory,
    PhaseError,
)
from .caps import (
    Schedule,
    InsufficientMemory,
    ScheduleExceedsMemory,
    compute_ell,
    default_schedule,
    memory_um,
    memory_um_exact,
    validate_schedule,
    caps_multiply,
)
from .baselines import cannon_multiply, two_d_strassen, strassen_two_d
from .costmodel import (
    OMEGA0,
    CostTriple,
    LowerBoundReport,
    caps_cost,
    lower_bound,
    table1_cost,
    ell_opt_strassen_25d,
    bandwidth_ratio,
    hardware_balance,
    effective_gflops,
)

__version__ = "0.1.0"
