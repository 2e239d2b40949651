"""Block-cyclic data layout for P = 7^k processors.

The matrix is cut into 4^s square submatrices (s recursive halvings) and each
submatrix into a 7^floor(k/2) x 7^ceil(k/2) grid of equal blocks.  Block
(bx, by) of every submatrix belongs to the processor whose base-7 digit
string has bx in the low floor(k/2) digit positions and by in the high
ceil(k/2) positions.  Every processor therefore owns exactly one block of
every submatrix, quadrant arithmetic at all s levels is processor-local, and
the seven processors that exchange data at the m-th recursion split agree on
all base-7 digits except the m-th, counting from the right.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Layout",
    "Shard",
    "shard",
    "unshard",
    "rearrange_to_layout",
    "bfs_child_layout",
    "dfs_child_layout",
    "bfs_groups",
    "log7",
]


def log7(P: int) -> int:
    """Exact base-7 logarithm; raises unless P is a positive power of 7."""
    if P < 1:
        raise ValueError("P must be positive")
    k = 0
    while P % 7 == 0:
        P //= 7
        k += 1
    if P != 1:
        raise ValueError("P must be a power of 7")
    return k


@dataclass(frozen=True)
class Layout:
    """Distribution of an n x n matrix over P = 7^k processors at depth s."""

    n: int
    P: int
    s: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.s < 0:
            raise ValueError("s must be nonnegative")
        k = log7(self.P)
        need = (2 ** self.s) * (7 ** ((k + 1) // 2))
        if self.n % need:
            raise ValueError(
                f"n={self.n} not divisible by 2^s * 7^ceil(k/2) = {need}")

    @property
    def k(self) -> int:
        return log7(self.P)

    @property
    def grid_rows(self) -> int:
        return 7 ** (self.k // 2)

    @property
    def grid_cols(self) -> int:
        return 7 ** ((self.k + 1) // 2)

    @property
    def submatrix_size(self) -> int:
        return self.n // (2 ** self.s)

    @property
    def block_rows(self) -> int:
        return self.submatrix_size // self.grid_rows

    @property
    def block_cols(self) -> int:
        return self.submatrix_size // self.grid_cols

    def owner(self, i: int, j: int) -> int:
        """Processor owning entry (i, j)."""
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise ValueError("index out of range")
        sub = self.submatrix_size
        bx = (i % sub) // self.block_rows
        by = (j % sub) // self.block_cols
        return bx + self.grid_rows * by

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "P": self.P, "s": self.s})

    @classmethod
    def from_json(cls, text: str) -> "Layout":
        d = json.loads(text)
        return cls(n=int(d["n"]), P=int(d["P"]), s=int(d["s"]))


def bfs_child_layout(layout: Layout) -> Layout:
    """Layout of one half-size subproblem on a seventh of the processors."""
    if layout.s < 1:
        raise ValueError("no recursion levels left")
    if layout.P % 7:
        raise ValueError("P must shrink by 7 at a BFS step")
    return Layout(layout.n // 2, layout.P // 7, layout.s - 1)


def dfs_child_layout(layout: Layout) -> Layout:
    """Layout of one half-size subproblem on all processors."""
    if layout.s < 1:
        raise ValueError("no recursion levels left")
    return Layout(layout.n // 2, layout.P, layout.s - 1)


@dataclass
class Shard:
    """One processor's piece of a distributed matrix.

    blocks holds (submatrix index (sr, sc), block coordinates (bx, by),
    payload) triples; the payload is a copy, not a view.
    """

    owner: int
    blocks: list

    @property
    def words(self) -> int:
        return sum(payload.size for _, _, payload in self.blocks)


def shard(M, layout: Layout) -> list:
    """Split a matrix into per-processor shards, sorted by owner."""
    M = np.asarray(M, dtype=np.float64)
    if M.shape != (layout.n, layout.n):
        raise ValueError(f"matrix shape {M.shape} does not match n={layout.n}")
    sub = layout.submatrix_size
    br, bc = layout.block_rows, layout.block_cols
    nsub = 2 ** layout.s
    shards = [Shard(p, []) for p in range(layout.P)]
    for sr in range(nsub):
        for sc in range(nsub):
            for bx in range(layout.grid_rows):
                for by in range(layout.grid_cols):
                    owner = bx + layout.grid_rows * by
                    r0 = sr * sub + bx * br
                    c0 = sc * sub + by * bc
                    payload = M[r0:r0 + br, c0:c0 + bc].copy()
                    shards[owner].blocks.append(((sr, sc), (bx, by), payload))
    return shards


def unshard(shards, layout: Layout) -> np.ndarray:
    """Reassemble a matrix from shards; exact inverse of shard()."""
    M = np.empty((layout.n, layout.n))
    M.fill(np.nan)
    sub = layout.submatrix_size
    br, bc = layout.block_rows, layout.block_cols
    for sh in shards:
        for (sr, sc), (bx, by), payload in sh.blocks:
            if payload.shape != (br, bc):
                raise ValueError("block payload shape does not match layout")
            r0 = sr * sub + bx * br
            c0 = sc * sub + by * bc
            M[r0:r0 + br, c0:c0 + bc] = payload
    if np.isnan(M).any():
        raise ValueError("shards do not cover the matrix")
    return M


def rearrange_to_layout(pieces, n: int, layout: Layout) -> list:
    """Reassemble arbitrary rectangular pieces and reshard per `layout`.

    pieces is an iterable of (row offset, col offset, payload).  Convenience
    only: this path carries no cost accounting and takes no part in the
    ledger acceptance checks.
    """
    M = np.empty((n, n))
    M.fill(np.nan)
    for r0, c0, payload in pieces:
        payload = np.asarray(payload, dtype=np.float64)
        M[r0:r0 + payload.shape[0], c0:c0 + payload.shape[1]] = payload
    if np.isnan(M).any():
        raise ValueError("pieces do not cover the matrix")
    return shard(M, layout)


def bfs_groups(P: int, digit: int) -> list:
    """Groups of seven processors agreeing on all base-7 digits but `digit`.

    The m-th recursion split (m = 1 at the top) keys on digit m-1, counting
    from the right.  Each group is returned in ascending digit value, which
    is also the subproblem index each member takes over.
    """
    k = log7(P)
    if not (0 <= digit < k):
        raise ValueError("digit position out of range")
    lo = 7 ** digit
    hi = lo * 7
    groups = []
    for base_high in range(P // hi):
        for base_low in range(lo):
            groups.append([base_high * hi + t * lo + base_low for t in range(7)])
    return groups
