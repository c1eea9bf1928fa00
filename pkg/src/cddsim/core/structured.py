"""Operators with exploitable structure, and their products.

Three kinds cover every propagator the engine builds:

* :class:`Dense`, a full matrix;
* :class:`BlockDiag`, independent blocks over a fixed partition of the
  basis (the exponential of a generator with a conserved quantity);
* :class:`Monomial`, a signed permutation ``|c> -> phases[c] |rows[c]>``
  (an ideal Pauli pulse).

:func:`matmul` picks the cheapest product and falls back to dense only when
the structure is lost.  Arrays may be numpy or double-double.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dd import DDArray, as_dd


@dataclass(frozen=True, eq=False)
class Partition:
    """Disjoint index groups covering ``range(dim)``; compared by identity."""

    groups: tuple
    dim: int


@dataclass(eq=False)
class Dense:
    m: object

    @property
    def dim(self) -> int:
        return self.m.shape[0]


@dataclass(eq=False)
class BlockDiag:
    partition: Partition
    blocks: list

    @property
    def dim(self) -> int:
        return self.partition.dim


@dataclass(eq=False)
class Monomial:
    rows: np.ndarray
    phases: np.ndarray

    @property
    def dim(self) -> int:
        return self.rows.size

    @property
    def diagonal(self) -> bool:
        return bool(np.array_equal(self.rows, np.arange(self.rows.size)))


def _is_dd(x) -> bool:
    return isinstance(x, DDArray)


def _empty_like(shape, ref):
    if _is_dd(ref):
        return DDArray(np.zeros(shape, dtype=complex), np.zeros(shape, dtype=complex))
    return np.zeros(shape, dtype=complex)


def _scale(arr, factors):
    """Multiply by an exact complex factor array (phases are +-1, +-i)."""
    if _is_dd(arr):
        return DDArray(arr.hi * factors, arr.lo * factors)
    return arr * factors


def to_dense(op):
    if isinstance(op, Dense):
        return op.m
    if isinstance(op, BlockDiag):
        out = _empty_like((op.dim, op.dim), op.blocks[0])
        for idx, b in zip(op.partition.groups, op.blocks):
            if _is_dd(out):
                out.hi[np.ix_(idx, idx)] = b.hi
                out.lo[np.ix_(idx, idx)] = b.lo
            else:
                out[np.ix_(idx, idx)] = b
        return out
    d = op.dim
    out = np.zeros((d, d), dtype=complex)
    out[op.rows, np.arange(d)] = op.phases
    return out


def block_diag_or_dense(partition: Partition, blocks: list):
    if len(partition.groups) == 1:
        return Dense(blocks[0])
    return BlockDiag(partition, blocks)


def _left_monomial(p: Monomial, m):
    """``P @ m`` for a dense matrix or a vector."""
    ph = p.phases[:, None] if m.ndim == 2 else p.phases
    src = _scale(m, ph)
    out = _empty_like(m.shape, m)
    out[p.rows] = src
    return out


def _right_monomial(m, p: Monomial):
    """``m @ P``: column ``c`` of the result is ``phases[c] m[:, rows[c]]``."""
    return _scale(m[:, p.rows], p.phases[None, :])


def _blockdiag_left(b: BlockDiag, m):
    out = _empty_like(m.shape, m)
    for idx, blk in zip(b.partition.groups, b.blocks):
        out[idx] = blk @ m[idx]
    return out


def _blockdiag_right(m, b: BlockDiag):
    out = _empty_like(m.shape, m)
    for idx, blk in zip(b.partition.groups, b.blocks):
        out[:, idx] = m[:, idx] @ blk
    return out


def matmul(a, b):
    """Structured product ``a @ b`` (``b`` acts first)."""
    if isinstance(a, Monomial) and isinstance(b, Monomial):
        rows = a.rows[b.rows]
        phases = b.phases * a.phases[b.rows]
        return Monomial(rows, phases)
    if isinstance(a, BlockDiag) and isinstance(b, BlockDiag) and a.partition is b.partition:
        return BlockDiag(a.partition, [x @ y for x, y in zip(a.blocks, b.blocks)])
    if isinstance(a, Monomial) and isinstance(b, BlockDiag) and a.diagonal:
        return BlockDiag(b.partition, [_scale(blk, a.phases[idx][:, None])
                                       for idx, blk in zip(b.partition.groups, b.blocks)])
    if isinstance(a, BlockDiag) and isinstance(b, Monomial) and b.diagonal:
        return BlockDiag(a.partition, [_scale(blk, b.phases[idx][None, :])
                                       for idx, blk in zip(a.partition.groups, a.blocks)])
    if isinstance(a, Monomial):
        return Dense(_left_monomial(a, to_dense(b)))
    if isinstance(b, Monomial):
        return Dense(_right_monomial(to_dense(a), b))
    if isinstance(a, BlockDiag):
        return Dense(_blockdiag_left(a, to_dense(b)))
    if isinstance(b, BlockDiag):
        return Dense(_blockdiag_right(to_dense(a), b))
    return Dense(a.m @ b.m)


def apply(op, v):
    """Action on a state vector (or the columns of a matrix)."""
    if isinstance(op, Dense):
        return op.m @ v
    if isinstance(op, BlockDiag):
        return _blockdiag_left(op, v)
    return _left_monomial(op, v)


def lift(op, precision):
    """Convert the arrays of a structured op to ``precision``."""
    if not precision.extended:
        return op
    if isinstance(op, Dense):
        return Dense(as_dd(op.m))
    if isinstance(op, BlockDiag):
        return BlockDiag(op.partition, [as_dd(b) for b in op.blocks])
    return op
