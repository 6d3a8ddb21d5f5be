"""Cubic-time Gaussian-elimination oracles over F_p.

These are the trusted slow paths the fast trapdoor machinery and the
reductions are tested against.  Nothing here is instrumented or optimized
beyond plain vectorized elimination.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError, Singular
from .field import FieldContext
from .matrices import DenseMatrix, FVector, matmul_mod


def ref_matmul(a: DenseMatrix, b: DenseMatrix) -> DenseMatrix:
    if a.ctx != b.ctx or a.m != b.n:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return DenseMatrix(a.ctx, matmul_mod(a.data, b.data, a.ctx.p))


def _inv_scalar(a: int, p: int) -> int:
    return pow(int(a), p - 2, p)


def _echelon(data: np.ndarray, p: int) -> tuple[np.ndarray, int, int]:
    """Row echelon form; returns (matrix, rank, det_of_square_part).

    The determinant accumulator is only meaningful for square inputs: it
    tracks pivot products and row-swap signs and is 0 when rank < n.
    """
    a = data.copy()
    n, m = a.shape
    det = 1
    rank = 0
    for col in range(m):
        if rank == n:
            break
        pivots = np.nonzero(a[rank:, col])[0]
        if pivots.size == 0:
            det = 0
            continue
        piv = rank + int(pivots[0])
        if piv != rank:
            a[[rank, piv]] = a[[piv, rank]]
            det = -det
        pval = int(a[rank, col])
        det = det * pval % p
        inv = _inv_scalar(pval, p)
        below = a[rank + 1 :, col]
        nz = np.nonzero(below)[0]
        if nz.size:
            factors = below[nz] * inv % p
            a[rank + 1 + nz] = (a[rank + 1 + nz] - factors[:, None] * a[rank]) % p
        rank += 1
    if rank < min(n, m):
        det = 0
    return a, rank, det % p


def ref_rank(a: DenseMatrix) -> int:
    _, rank, _ = _echelon(a.data, a.ctx.p)
    return rank


def ref_det(a: DenseMatrix) -> int:
    if a.n != a.m:
        raise ShapeError("determinant requires a square matrix")
    _, rank, det = _echelon(a.data, a.ctx.p)
    if rank < a.n:
        return 0
    return det


def ref_inverse(a: DenseMatrix) -> DenseMatrix:
    if a.n != a.m:
        raise ShapeError("inversion requires a square matrix")
    p = a.ctx.p
    n = a.n
    aug = np.concatenate([a.data.copy(), np.eye(n, dtype=np.int64)], axis=1)
    for col in range(n):
        pivots = np.nonzero(aug[col:, col])[0]
        if pivots.size == 0:
            raise Singular("matrix is singular")
        piv = col + int(pivots[0])
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        inv = _inv_scalar(int(aug[col, col]), p)
        aug[col] = aug[col] * inv % p
        others = np.nonzero(aug[:, col])[0]
        others = others[others != col]
        if others.size:
            aug[others] = (aug[others] - aug[others, col][:, None] * aug[col]) % p
    return DenseMatrix(a.ctx, aug[:, n:])


def ref_solve(a: DenseMatrix, b: FVector) -> FVector:
    if a.n != a.m:
        raise ShapeError("solve requires a square matrix")
    if a.ctx != b.ctx or b.n != a.n:
        raise ShapeError("right-hand side does not match")
    p = a.ctx.p
    n = a.n
    aug = np.concatenate([a.data.copy(), b.data[:, None].copy()], axis=1)
    for col in range(n):
        pivots = np.nonzero(aug[col:, col])[0]
        if pivots.size == 0:
            raise Singular("matrix is singular")
        piv = col + int(pivots[0])
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        inv = _inv_scalar(int(aug[col, col]), p)
        aug[col] = aug[col] * inv % p
        others = np.nonzero(aug[:, col])[0]
        others = others[others != col]
        if others.size:
            aug[others] = (aug[others] - aug[others, col][:, None] * aug[col]) % p
    return FVector(a.ctx, aug[:, n])


def identity(ctx: FieldContext, n: int) -> DenseMatrix:
    return DenseMatrix(ctx, np.eye(n, dtype=np.int64))
