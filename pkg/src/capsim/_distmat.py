"""Internal bookkeeping for matrices distributed as rectangular blocks.

A DistMatrix is a logical m x m matrix whose entries live on a set of
simulated processors as blocks keyed by their (row, col) offset within the
matrix.  The recursive algorithms only ever need five structural facts, all
kept explicit here: per-processor word counts, quadrant splitting (blocks
never straddle a quadrant boundary), elementwise linear combinations over
aligned structures, merging a seven-processor group's blocks onto one member
(the forward half of an all-to-all), and scattering blocks back to recorded
per-processor key sets (the return half).  Payload movement itself is free;
the caller charges the matching simnet costs.
"""

from __future__ import annotations

import numpy as np

__all__ = ["DistMatrix", "set_digit", "get_digit"]


def get_digit(p: int, d: int) -> int:
    return (p // 7 ** d) % 7


def set_digit(p: int, d: int, v: int) -> int:
    lo = 7 ** d
    return p + (v - (p // lo) % 7) * lo


class DistMatrix:
    """m x m matrix held as {proc: {(r0, c0): block array}}."""

    __slots__ = ("m", "blocks")

    def __init__(self, m: int, blocks: dict):
        self.m = m
        self.blocks = blocks

    @property
    def procs(self) -> tuple:
        return tuple(sorted(self.blocks))

    def words(self, proc: int) -> int:
        return sum(b.size for b in self.blocks[proc].values())

    # -- construction ---------------------------------------------------

    @classmethod
    def from_shards(cls, shards, layout) -> "DistMatrix":
        sub = layout.submatrix_size
        br, bc = layout.block_rows, layout.block_cols
        blocks = {}
        for sh in shards:
            d = {}
            for (sr, sc), (bx, by), payload in sh.blocks:
                d[(sr * sub + bx * br, sc * sub + by * bc)] = payload
            blocks[sh.owner] = d
        return cls(layout.n, blocks)

    def to_shards(self, layout) -> list:
        from .layout import Shard
        sub = layout.submatrix_size
        br, bc = layout.block_rows, layout.block_cols
        shards = []
        for p in self.procs:
            blks = []
            for (r0, c0), payload in sorted(self.blocks[p].items()):
                if payload.shape != (br, bc):
                    raise ValueError("block shape does not match layout")
                sr, bx = divmod(r0, sub)
                sc, by = divmod(c0, sub)
                blks.append(((sr, sc), (bx // br, by // bc), payload))
            shards.append(Shard(p, blks))
        return shards

    def zeros_like(self) -> "DistMatrix":
        return DistMatrix(self.m, {
            p: {key: np.zeros(b.shape) for key, b in d.items()}
            for p, d in self.blocks.items()
        })

    # -- structure ------------------------------------------------------

    def quadrants(self) -> list:
        """2x2 nested list of half-size DistMatrix views (arrays shared)."""
        h = self.m // 2
        out = [[{}, {}], [{}, {}]]
        for p, d in self.blocks.items():
            for q in (0, 1):
                for r in (0, 1):
                    out[q][r].setdefault(p, {})
        for p, d in self.blocks.items():
            for (r0, c0), b in d.items():
                if r0 % h + b.shape[0] > h or c0 % h + b.shape[1] > h:
                    raise ValueError("block straddles a quadrant boundary")
                out[r0 // h][c0 // h][p][(r0 % h, c0 % h)] = b
        return [[DistMatrix(h, out[0][0]), DistMatrix(h, out[0][1])],
                [DistMatrix(h, out[1][0]), DistMatrix(h, out[1][1])]]

    @staticmethod
    def combine(coeffs, mats) -> "DistMatrix":
        """Elementwise sum(c * mat) over structurally aligned matrices,
        accumulated in ascending index order, zero coefficients skipped."""
        first = mats[0]
        terms = [(float(c), m_) for c, m_ in zip(coeffs, mats) if c != 0.0]
        blocks = {}
        for p in first.blocks:
            keys = first.blocks[p].keys()
            for m_ in mats[1:]:
                if m_.blocks[p].keys() != keys:
                    raise ValueError("operands are not structurally aligned")
            d = {}
            for key in keys:
                acc = None
                for c, m_ in terms:
                    b = m_.blocks[p][key]
                    if acc is None:
                        acc = b.copy() if c == 1.0 else -b if c == -1.0 else c * b
                    elif c == 1.0:
                        acc += b
                    elif c == -1.0:
                        acc -= b
                    else:
                        acc += c * b
                if acc is None:
                    acc = np.zeros(first.blocks[p][key].shape)
                d[key] = acc
            blocks[p] = d
        return DistMatrix(first.m, blocks)

    def accumulate(self, coeff: float, other: "DistMatrix"):
        """self += coeff * other, in place, structures must align."""
        if coeff == 0.0:
            return
        for p, d in other.blocks.items():
            mine = self.blocks[p]
            for key, b in d.items():
                if coeff == 1.0:
                    mine[key] += b
                elif coeff == -1.0:
                    mine[key] -= b
                else:
                    mine[key] += coeff * b

    # -- movement -------------------------------------------------------

    def key_sets(self) -> dict:
        return {p: frozenset(d.keys()) for p, d in self.blocks.items()}

    def gather_to_digit(self, digit: int, value: int) -> "DistMatrix":
        """Merge every group's blocks onto the member whose base-7 digit at
        `digit` equals `value`; the result lives on a seventh of the procs."""
        merged = {}
        for p, d in self.blocks.items():
            r = set_digit(p, digit, value)
            tgt = merged.setdefault(r, {})
            for key, b in d.items():
                if key in tgt:
                    raise ValueError("overlapping blocks while merging")
                tgt[key] = b
        return DistMatrix(self.m, merged)

    def scatter_to_key_sets(self, key_sets: dict) -> "DistMatrix":
        """Inverse of gather: hand each processor the blocks named by
        key_sets; the union must match this matrix's blocks exactly."""
        pool = {}
        for d in self.blocks.values():
            for key, b in d.items():
                if key in pool:
                    raise ValueError("duplicate block key")
                pool[key] = b
        out = {}
        used = 0
        for p, keys in key_sets.items():
            out[p] = {key: pool[key] for key in keys}
            used += len(keys)
        if used != len(pool):
            raise ValueError("key sets do not cover the matrix")
        return DistMatrix(self.m, out)

    # -- materialization --------------------------------------------------

    def assemble(self) -> np.ndarray:
        """Place all blocks into one dense array; must tile the matrix."""
        full = np.empty((self.m, self.m))
        full.fill(np.nan)
        for d in self.blocks.values():
            for (r0, c0), b in d.items():
                full[r0:r0 + b.shape[0], c0:c0 + b.shape[1]] = b
        if np.isnan(full).any():
            raise ValueError("blocks do not tile the matrix")
        return full

    def disassemble_like(self, full: np.ndarray) -> "DistMatrix":
        """Cut a dense array into this matrix's exact block structure."""
        blocks = {}
        for p, d in self.blocks.items():
            blocks[p] = {
                (r0, c0): full[r0:r0 + b.shape[0], c0:c0 + b.shape[1]].copy()
                for (r0, c0), b in d.items()
            }
        return DistMatrix(self.m, blocks)
