"""McEliece-style trapdoored matrices: M = P.G.S over a quasi-cyclic code.

Each n x k column instance is a permutation P, a block-circulant generator
G (grid of b x b circulants, encodable through the NTT when the field
allows), and a k x k scrambler S that is either an explicit dense matrix or
recursively another stacked trapdoor.  n/k instances side by side give the
square matrix; applying it runs each column pipeline S -> G -> P and sums.

Only right multiplication is supported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .circulant import (
    _correlation_kernel,
    cyclic_convolve,
    get_ntt_plan,
    ntt_available,
)
from .errors import BadShape, ShapeError, TooLarge
from .field import FieldContext
from .matrices import (
    DenseMatrix,
    FVector,
    PermutationMatrix,
    matmul_mod,
    sample_permutation,
)
from .opcount import add_ops
from .rng import Rng

MATERIALIZE_CAP = 4096


class QcGenerator:
    """n x k block-circulant generator: an (n/b) x (k/b) grid of first rows."""

    __slots__ = ("ctx", "b", "first_rows", "_freq")

    def __init__(self, ctx: FieldContext, b: int, first_rows: np.ndarray):
        if b < 1 or (b & (b - 1)) != 0:
            raise BadShape(f"block size must be a power of two, got {b}")
        first_rows = np.ascontiguousarray(first_rows, dtype=np.int64)
        if first_rows.ndim != 3 or first_rows.shape[2] != b:
            raise BadShape("first_rows must have shape (n/b, k/b, b)")
        if first_rows.shape[0] < first_rows.shape[1]:
            raise BadShape("generator must be tall: n >= k")
        self.ctx = ctx
        self.b = b
        first_rows.flags.writeable = False
        self.first_rows = first_rows
        if ntt_available(ctx.p, b):
            plan = get_ntt_plan(ctx.p, b)
            kernels = np.stack(
                [
                    [_correlation_kernel(row, ctx.p) for row in grid_row]
                    for grid_row in first_rows
                ]
            )
            self._freq = plan.forward(kernels)
        else:
            self._freq = None

    @property
    def n(self) -> int:
        return self.first_rows.shape[0] * self.b

    @property
    def k(self) -> int:
        return self.first_rows.shape[1] * self.b

    def encode(self, s: np.ndarray) -> np.ndarray:
        """G . s for s of shape (k,) or (k, cols); near-linear via NTT."""
        single = s.ndim == 1
        x = s[:, None] if single else s
        cols = x.shape[1]
        r_blocks, c_blocks, b = self.first_rows.shape
        p = self.ctx.p
        # (c_blocks, cols, b) layout so the transform runs over the last axis.
        xb = x.reshape(c_blocks, b, cols).transpose(0, 2, 1)
        if self._freq is not None:
            plan = get_ntt_plan(p, b)
            fx = plan.forward(xb)
            # Accumulate in the frequency domain across the block grid, one
            # batched inverse transform per apply.
            acc = self._freq[:, 0, None, :] * fx[0][None] % p
            for j in range(1, c_blocks):
                acc = (acc + self._freq[:, j, None, :] * fx[j][None] % p) % p
            add_ops(
                mults=r_blocks * c_blocks * cols * b,
                adds=r_blocks * c_blocks * cols * b,
            )
            out = plan.inverse(acc)
        else:
            out = np.zeros((r_blocks, cols, b), dtype=np.int64)
            for i in range(r_blocks):
                for j in range(c_blocks):
                    kern = _correlation_kernel(self.first_rows[i, j], p)
                    for col in range(cols):
                        out[i, col] = (out[i, col] + cyclic_convolve(kern, xb[j, col], p)) % p
            add_ops(adds=r_blocks * c_blocks * cols * b)
        res = out.transpose(0, 2, 1).reshape(r_blocks * b, cols)
        return res[:, 0] if single else res

    def densify(self) -> DenseMatrix:
        from .circulant import circulant_densify
        from .matrices import FVector as _FV

        r_blocks, c_blocks, b = self.first_rows.shape
        out = np.zeros((self.n, self.k), dtype=np.int64)
        for i in range(r_blocks):
            for j in range(c_blocks):
                out[i * b : (i + 1) * b, j * b : (j + 1) * b] = circulant_densify(
                    _FV(self.ctx, self.first_rows[i, j])
                )
        return DenseMatrix(self.ctx, out)


@dataclass(frozen=True)
class McElieceColumn:
    perm: PermutationMatrix
    gen: QcGenerator
    scrambler: Union[DenseMatrix, "McElieceTrapdoor"]

    def apply_raw(self, x: np.ndarray, p: int) -> np.ndarray:
        if isinstance(self.scrambler, DenseMatrix):
            k = self.scrambler.n
            cols = 1 if x.ndim == 1 else x.shape[1]
            add_ops(mults=k * k * cols, adds=k * max(0, k - 1) * cols)
            s = matmul_mod(self.scrambler.data, x, p)
        else:
            s = self.scrambler._apply_raw_padded(x)
        encoded = self.gen.encode(s)
        return self.perm.permute_rows(encoded)

    def materialize(self, p: int) -> np.ndarray:
        g = self.gen.densify().data
        if isinstance(self.scrambler, DenseMatrix):
            s = self.scrambler.data
        else:
            s = self.scrambler._materialize_padded()
        gs = matmul_mod(g, s, p)
        return self.perm.permute_rows(gs)


class McElieceTrapdoor:
    """Stack of n/k column instances forming a square trapdoored matrix."""

    def __init__(
        self,
        ctx: FieldContext,
        logical_dim: int,
        padded_dim: int,
        k: int,
        b: int,
        columns: tuple,
    ):
        if k * len(columns) != padded_dim:
            raise BadShape(
                f"column count {len(columns)} x k={k} must equal padded "
                f"dimension {padded_dim}"
            )
        self.ctx = ctx
        self.logical_dim = logical_dim
        self.padded_dim = padded_dim
        self.k = k
        self.b = b
        self.columns = columns

    def _apply_raw_padded(self, x: np.ndarray) -> np.ndarray:
        p = self.ctx.p
        k = self.k
        out = None
        for i, col in enumerate(self.columns):
            part = col.apply_raw(x[i * k : (i + 1) * k], p)
            out = part if out is None else (out + part) % p
        if len(self.columns) > 1:
            cols = 1 if x.ndim == 1 else x.shape[1]
            add_ops(adds=(len(self.columns) - 1) * self.padded_dim * cols)
        return out

    def _materialize_padded(self) -> np.ndarray:
        return np.concatenate(
            [c.materialize(self.ctx.p) for c in self.columns], axis=1
        )

    def apply(self, v: FVector) -> FVector:
        return mce_apply(self, v)

    def apply_matrix(self, mat: DenseMatrix) -> DenseMatrix:
        if mat.ctx != self.ctx or mat.n != self.logical_dim:
            raise ShapeError(f"expected {self.logical_dim} rows, got {mat.n}")
        x = _pad_rows(mat.data, self.padded_dim)
        out = self._apply_raw_padded(x)
        return DenseMatrix(self.ctx, out[: self.logical_dim])

    def materialize(self, cap: int = MATERIALIZE_CAP) -> DenseMatrix:
        return mce_materialize(self, cap=cap)

    def __repr__(self) -> str:
        return (
            f"McElieceTrapdoor(p={self.ctx.p}, n={self.logical_dim}, "
            f"k={self.k}, b={self.b}, columns={len(self.columns)})"
        )


def _pad_rows(x: np.ndarray, dim: int) -> np.ndarray:
    if x.shape[0] == dim:
        return x
    pad = np.zeros((dim - x.shape[0],) + x.shape[1:], dtype=np.int64)
    return np.concatenate([x, pad], axis=0)


def _next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def _default_threshold(n: int) -> int:
    return max(math.ceil(math.log2(max(n, 2))) ** 2, 16)


def mce_sample(
    n: int,
    ctx: FieldContext,
    rng: Rng,
    k: int | None = None,
    b: int | None = None,
    recurse: bool = False,
    leaf_threshold: int | None = None,
) -> McElieceTrapdoor:
    """Sample a stacked n x n trapdoor.

    k defaults to the power of two nearest ceil(sqrt(n)); b defaults to k,
    i.e. one circulant block per row-block, which keeps the encoder at
    O(n log b) per column.  With `recurse`, scramblers become stacked
    trapdoors themselves down to `leaf_threshold`.
    """
    if n < 1:
        raise ShapeError(f"dimension must be >= 1, got {n}")
    padded = _next_pow2(n)
    if k is None:
        k = _next_pow2(max(1, math.isqrt(padded)))
    if b is None:
        b = k
    if b < 1 or (b & (b - 1)) != 0:
        raise BadShape(f"block size must be a power of two, got {b}")
    if k % b != 0:
        raise BadShape(f"b={b} must divide k={k}")
    if padded % k != 0:
        raise BadShape(f"k={k} must divide padded dimension {padded}")
    threshold = leaf_threshold if leaf_threshold is not None else _default_threshold(n)
    root = _sample_padded(padded, k, b, ctx, rng, recurse, threshold)
    return McElieceTrapdoor(ctx, n, padded, k, b, root.columns)


def _sample_scrambler_dense(k: int, ctx: FieldContext, rng: Rng) -> DenseMatrix:
    """Uniform nonsingular k x k matrix (rejection sampling).

    An unconditioned uniform scrambler is singular with probability ~q_p,
    which would cap the column rank below k and make the stack trivially
    distinguishable from uniform by rank.
    """
    from .reference import ref_rank

    for attempt in range(256):
        s = DenseMatrix(ctx, rng.split(attempt).integers(0, ctx.p, size=(k, k)))
        if ref_rank(s) == k:
            return s
    raise BadShape("could not sample a nonsingular scrambler")


def _sample_padded(
    padded: int,
    k: int,
    b: int,
    ctx: FieldContext,
    rng: Rng,
    recurse: bool,
    threshold: int,
) -> McElieceTrapdoor:
    columns = []
    for i in range(padded // k):
        crng = rng.split(i)
        perm = sample_permutation(crng.split(0), padded)
        first_rows = crng.split(1).integers(
            0, ctx.p, size=(padded // b, k // b, b)
        )
        gen = QcGenerator(ctx, b, first_rows)
        if recurse and k > threshold:
            sub_k = _next_pow2(max(1, math.isqrt(k)))
            sub_b = min(b, sub_k)
            scrambler = _sample_padded(
                k, sub_k, sub_b, ctx, crng.split(2), recurse, threshold
            )
        else:
            scrambler = _sample_scrambler_dense(k, ctx, crng.split(2))
        columns.append(McElieceColumn(perm, gen, scrambler))
    return McElieceTrapdoor(ctx, padded, padded, k, b, tuple(columns))


def mce_apply(td: McElieceTrapdoor, v: FVector) -> FVector:
    if v.ctx != td.ctx:
        raise ShapeError("field mismatch")
    if v.n != td.logical_dim:
        raise ShapeError(f"expected length {td.logical_dim}, got {v.n}")
    x = _pad_rows(v.data, td.padded_dim)
    out = td._apply_raw_padded(x)
    return FVector(td.ctx, out[: td.logical_dim])


def mce_materialize(td: McElieceTrapdoor, cap: int = MATERIALIZE_CAP) -> DenseMatrix:
    if td.padded_dim > cap:
        raise TooLarge(f"dimension {td.padded_dim} exceeds materialize cap {cap}")
    full = td._materialize_padded()
    return DenseMatrix(td.ctx, full[: td.logical_dim, : td.logical_dim])
