"""Randomized verification of matrix products.

For C != A.B a single round accepts with probability at most 1/p, so
`rounds` gives a (1/p)^rounds one-sided error at O(rounds * n^2) cost.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError
from .matrices import DenseMatrix, matmul_mod
from .opcount import add_ops
from .rng import Rng


def freivalds_verify(
    a: DenseMatrix, b: DenseMatrix, c: DenseMatrix, rounds: int, rng: Rng
) -> bool:
    if a.ctx != b.ctx or a.ctx != c.ctx:
        raise ShapeError("field mismatch")
    if a.m != b.n or c.n != a.n or c.m != b.m:
        raise ShapeError(
            f"incompatible shapes {a.shape} x {b.shape} vs {c.shape}"
        )
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    p = a.ctx.p
    for _ in range(rounds):
        x = rng.integers(0, p, size=b.m)
        bx = matmul_mod(b.data, x, p)
        abx = matmul_mod(a.data, bx, p)
        cx = matmul_mod(c.data, x, p)
        add_ops(mults=a.n * a.m + b.n * b.m + c.n * c.m)
        if not np.array_equal(abx, cx):
            return False
    return True


def freivalds_check_identity(a: DenseMatrix, b: DenseMatrix, rounds: int, rng: Rng) -> bool:
    """Verify a.b == I without forming the product: checks a.(b.x) == x."""
    if a.ctx != b.ctx or a.m != b.n or a.n != b.m or a.n != a.m:
        raise ShapeError("identity check needs square compatible operands")
    p = a.ctx.p
    for _ in range(rounds):
        x = rng.integers(0, p, size=b.m)
        bx = matmul_mod(b.data, x, p)
        abx = matmul_mod(a.data, bx, p)
        add_ops(mults=a.n * a.m + b.n * b.m)
        if not np.array_equal(abx, x):
            return False
    return True
