"""LPN-style trapdoored matrices: M = A.B + E, recursed.

A sample is a recursive node tree: leaves are explicit dense blocks, a
composite of dimension d with sub-dimension k holds d/k vertically stacked
A-blocks, d/k horizontally stacked B-blocks (each again a node of dimension
k) and a sparse Bernoulli noise matrix.  The tree doubles as the trapdoor:
applying it to a vector costs two child applications per block plus the
noise, which is near-linear for the default schedule.

Right multiplication M.v, left multiplication v^T.M and matrix application
M.V are all supported; inverse application is not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import BadSchedule, ShapeError, TooLarge
from .field import FieldContext
from .matrices import (
    DenseMatrix,
    FVector,
    SparseMatrix,
    matmul_mod,
    sample_bernoulli_sparse,
    sparse_apply_left_raw,
    sparse_apply_raw,
)
from .opcount import add_ops
from .rng import Rng

MATERIALIZE_CAP = 4096


@dataclass(frozen=True)
class LpnSchedule:
    """Recursion schedule: dimension and noise-rate rules per level.

    The default level rule maps d to the largest divisor of d not exceeding
    round(d^(1-epsilon)); the default noise rule maps the sub-dimension k to
    k^(-delta), clamped so the expected noise support is never empty.
    Recursion stops at `leaf_threshold` (default max(ceil(log2 n)^2, 16)),
    or at n^leaf_exponent when a polynomial-regime exponent is set.
    """

    epsilon: float = 0.15
    delta: float = 0.85
    leaf_threshold: int | None = None
    leaf_exponent: float | None = None
    level_rule: Callable[[int], int] | None = None
    noise_rate_rule: Callable[[int], float] | None = None

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise BadSchedule(f"epsilon must be in (0,1), got {self.epsilon}")
        if not 0.0 < self.delta < 1.0:
            raise BadSchedule(f"delta must be in (0,1), got {self.delta}")

    def threshold_for(self, n: int) -> int:
        if self.leaf_threshold is not None:
            return self.leaf_threshold
        if self.leaf_exponent is not None:
            return max(int(round(n**self.leaf_exponent)), 16)
        return max(math.ceil(math.log2(max(n, 2))) ** 2, 16)

    def next_dim(self, dim: int) -> int:
        if self.level_rule is not None:
            return self.level_rule(dim)
        target = int(round(dim ** (1.0 - self.epsilon)))
        return _largest_divisor_at_most(dim, max(target, 1))

    def noise_rate(self, dim: int, subdim: int) -> float:
        if self.noise_rate_rule is not None:
            rate = self.noise_rate_rule(subdim)
        else:
            rate = float(subdim) ** (-self.delta)
        return min(1.0, max(rate, 1.0 / (dim * dim)))

    def level_dims(self, padded_n: int, logical_n: int) -> list[int]:
        threshold = self.threshold_for(logical_n)
        dims = [padded_n]
        while dims[-1] > threshold:
            nxt = self.next_dim(dims[-1])
            if not (0 < nxt < dims[-1]) or dims[-1] % nxt != 0:
                raise BadSchedule(
                    f"level rule produced {nxt} from {dims[-1]}; levels must "
                    "strictly decrease and divide their predecessor"
                )
            dims.append(nxt)
        return dims


def _largest_divisor_at_most(n: int, limit: int) -> int:
    best = 1
    d = 1
    while d * d <= n:
        if n % d == 0:
            if d <= limit and d > best:
                best = d
            q = n // d
            if q <= limit and q > best:
                best = q
        d += 1
    return best


@dataclass(frozen=True)
class LpnLeaf:
    dense: DenseMatrix

    @property
    def dim(self) -> int:
        return self.dense.n


@dataclass(frozen=True)
class LpnComposite:
    dim: int
    subdim: int
    a_blocks: tuple  # vertical stack, each subdim x subdim
    b_blocks: tuple  # horizontal stack, each subdim x subdim
    noise: SparseMatrix

    def __post_init__(self):
        if self.dim % self.subdim != 0:
            raise ShapeError(f"subdim {self.subdim} must divide dim {self.dim}")
        blocks = self.dim // self.subdim
        if len(self.a_blocks) != blocks or len(self.b_blocks) != blocks:
            raise ShapeError(
                f"expected {blocks} blocks per side, got "
                f"{len(self.a_blocks)}/{len(self.b_blocks)}"
            )
        if self.noise.n != self.dim or self.noise.m != self.dim:
            raise ShapeError("noise matrix must be dim x dim")
        # When every child is a leaf, keep the blocks stacked as one tensor
        # so application is a single batched matmul instead of 2*blocks
        # small ones.
        a_stack = b_stack = None
        if all(isinstance(c, LpnLeaf) for c in self.a_blocks) and all(
            isinstance(c, LpnLeaf) for c in self.b_blocks
        ):
            a_stack = np.stack([c.dense.data for c in self.a_blocks])
            b_stack = np.stack([c.dense.data for c in self.b_blocks])
        object.__setattr__(self, "_a_stack", a_stack)
        object.__setattr__(self, "_b_stack", b_stack)


LpnNode = Union[LpnLeaf, LpnComposite]


class LpnTrapdoor:
    """Sampled matrix plus its application circuit.

    `logical_dim` is the caller-visible dimension; the node tree may live at
    the next power of two, with inputs zero-extended and outputs truncated.
    """

    def __init__(self, ctx: FieldContext, logical_dim: int, root: LpnNode):
        self.ctx = ctx
        self.logical_dim = logical_dim
        self.root = root

    @property
    def padded_dim(self) -> int:
        return self.root.dim if isinstance(self.root, LpnComposite) else self.root.dim

    def levels(self) -> list[int]:
        dims = []
        node = self.root
        while isinstance(node, LpnComposite):
            dims.append(node.dim)
            node = node.a_blocks[0]
        dims.append(node.dim)
        return dims

    def total_nnz(self) -> int:
        return _total_nnz(self.root)

    def apply(self, v: FVector) -> FVector:
        return lpn_apply(self, v)

    def apply_left(self, v: FVector) -> FVector:
        return lpn_apply_left(v, self)

    def apply_matrix(self, mat: DenseMatrix) -> DenseMatrix:
        return lpn_apply_matrix(self, mat)

    def apply_left_matrix(self, mat: DenseMatrix) -> DenseMatrix:
        """mat . M for a (r x n) matrix of row vectors."""
        if mat.ctx != self.ctx or mat.m != self.logical_dim:
            raise ShapeError("row count mismatch for left application")
        x = _pad_cols(mat.data, self.padded_dim)
        out = _node_apply_left(self.root, x, self.ctx.p)
        return DenseMatrix(self.ctx, out[:, : self.logical_dim])

    def materialize(self, cap: int = MATERIALIZE_CAP) -> DenseMatrix:
        return lpn_materialize(self, cap=cap)

    def __repr__(self) -> str:
        return (
            f"LpnTrapdoor(p={self.ctx.p}, n={self.logical_dim}, "
            f"levels={self.levels()})"
        )


def _total_nnz(node: LpnNode) -> int:
    if isinstance(node, LpnLeaf):
        return 0
    return (
        node.noise.nnz
        + sum(_total_nnz(b) for b in node.a_blocks)
        + sum(_total_nnz(b) for b in node.b_blocks)
    )


# ---------------------------------------------------------------------------
# Sampling.
# ---------------------------------------------------------------------------

def _next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def _sample_node(
    dims: list[int], rates: list[float], ctx: FieldContext, rng: Rng
) -> LpnNode:
    if len(dims) == 1:
        return LpnLeaf(DenseMatrix(ctx, rng.integers(0, ctx.p, size=(dims[0], dims[0]))))
    dim, sub = dims[0], dims[1]
    blocks = dim // sub
    a_blocks = tuple(
        _sample_node(dims[1:], rates[1:], ctx, rng.split(j)) for j in range(blocks)
    )
    b_blocks = tuple(
        _sample_node(dims[1:], rates[1:], ctx, rng.split(blocks + j))
        for j in range(blocks)
    )
    noise = sample_bernoulli_sparse(rng.split(2 * blocks), dim, dim, rates[0], ctx)
    return LpnComposite(dim, sub, a_blocks, b_blocks, noise)


def lpn_sample(
    schedule: LpnSchedule, n: int, ctx: FieldContext, rng: Rng
) -> LpnTrapdoor:
    """Sample an n x n trapdoored matrix under the given schedule."""
    if n < 1:
        raise ShapeError(f"dimension must be >= 1, got {n}")
    padded = _next_pow2(n)
    dims = schedule.level_dims(padded, n)
    rates = [schedule.noise_rate(dims[i], dims[i + 1]) for i in range(len(dims) - 1)]
    rates.append(0.0)  # leaf level carries no noise
    return LpnTrapdoor(ctx, n, _sample_node(dims, rates, ctx, rng))


def lpn_sample_base(
    n: int,
    ctx: FieldContext,
    rng: Rng,
    k: int | None = None,
    noise_c: float = 2.0,
) -> LpnTrapdoor:
    """Non-recursive base construction: dense A, B at width k = ~sqrt(n) and
    Bernoulli noise at rate (log2 k)^noise_c / k."""
    if n < 1:
        raise ShapeError(f"dimension must be >= 1, got {n}")
    padded = _next_pow2(n)
    if k is None:
        k = _largest_divisor_at_most(padded, max(1, math.isqrt(padded)))
    if padded % k != 0:
        raise BadSchedule(f"k={k} must divide padded dimension {padded}")
    rate = min(1.0, math.log2(max(2.0, float(k))) ** noise_c / k)
    dims = [padded, k]
    rates = [rate, 0.0]
    return LpnTrapdoor(ctx, n, _sample_node(dims, rates, ctx, rng))


# ---------------------------------------------------------------------------
# Application kernels (batched over columns / rows).
# ---------------------------------------------------------------------------

def _node_apply(node: LpnNode, x: np.ndarray, p: int) -> np.ndarray:
    """node . x for x of shape (dim, r)."""
    r = x.shape[1]
    if isinstance(node, LpnLeaf):
        d = node.dim
        add_ops(mults=d * d * r, adds=d * max(0, d - 1) * r)
        return matmul_mod(node.dense.data, x, p)
    sub = node.subdim
    blocks = node.dim // sub
    if node._a_stack is not None and blocks * sub * (p - 1) ** 2 < 2**62:
        add_ops(
            mults=2 * blocks * sub * sub * r,
            adds=2 * blocks * sub * max(0, sub - 1) * r + (blocks - 1) * sub * r,
        )
        xb = x.reshape(blocks, sub, r)
        w = np.einsum("bij,bjr->ir", node._b_stack, xb) % p
        out = (node._a_stack @ w).reshape(node.dim, r) % p
    else:
        w = _node_apply(node.b_blocks[0], x[:sub], p)
        for j in range(1, blocks):
            w = (w + _node_apply(node.b_blocks[j], x[j * sub : (j + 1) * sub], p)) % p
        add_ops(adds=(blocks - 1) * sub * r)
        parts = [_node_apply(node.a_blocks[j], w, p) for j in range(blocks)]
        out = np.concatenate(parts, axis=0)
    out = (out + sparse_apply_raw(node.noise, x)) % p
    add_ops(adds=node.dim * r)
    return out


def _node_apply_left(node: LpnNode, x: np.ndarray, p: int) -> np.ndarray:
    """x . node for x of shape (r, dim)."""
    r = x.shape[0]
    if isinstance(node, LpnLeaf):
        d = node.dim
        add_ops(mults=d * d * r, adds=d * max(0, d - 1) * r)
        return matmul_mod(x, node.dense.data, p)
    sub = node.subdim
    blocks = node.dim // sub
    if node._a_stack is not None and blocks * sub * (p - 1) ** 2 < 2**62:
        add_ops(
            mults=2 * blocks * sub * sub * r,
            adds=2 * blocks * sub * max(0, sub - 1) * r + (blocks - 1) * sub * r,
        )
        xb = x.reshape(r, blocks, sub)
        w = np.einsum("rbi,bij->rj", xb, node._a_stack) % p
        out = np.einsum("rj,bjk->rbk", w, node._b_stack).reshape(r, node.dim) % p
    else:
        w = _node_apply_left(node.a_blocks[0], x[:, :sub], p)
        for j in range(1, blocks):
            w = (w + _node_apply_left(node.a_blocks[j], x[:, j * sub : (j + 1) * sub], p)) % p
        add_ops(adds=(blocks - 1) * sub * r)
        parts = [_node_apply_left(node.b_blocks[j], w, p) for j in range(blocks)]
        out = np.concatenate(parts, axis=1)
    out = (out + sparse_apply_left_raw(node.noise, x)) % p
    add_ops(adds=node.dim * r)
    return out


def _pad_rows(x: np.ndarray, dim: int) -> np.ndarray:
    if x.shape[0] == dim:
        return x
    pad = np.zeros((dim - x.shape[0],) + x.shape[1:], dtype=np.int64)
    return np.concatenate([x, pad], axis=0)


def _pad_cols(x: np.ndarray, dim: int) -> np.ndarray:
    if x.shape[1] == dim:
        return x
    pad = np.zeros((x.shape[0], dim - x.shape[1]), dtype=np.int64)
    return np.concatenate([x, pad], axis=1)


def lpn_apply(td: LpnTrapdoor, v: FVector) -> FVector:
    if v.ctx != td.ctx:
        raise ShapeError("field mismatch")
    if v.n != td.logical_dim:
        raise ShapeError(f"expected length {td.logical_dim}, got {v.n}")
    x = _pad_rows(v.data[:, None], td.padded_dim)
    out = _node_apply(td.root, x, td.ctx.p)
    return FVector(td.ctx, out[: td.logical_dim, 0])


def lpn_apply_left(v: FVector, td: LpnTrapdoor) -> FVector:
    if v.ctx != td.ctx:
        raise ShapeError("field mismatch")
    if v.n != td.logical_dim:
        raise ShapeError(f"expected length {td.logical_dim}, got {v.n}")
    x = _pad_cols(v.data[None, :], td.padded_dim)
    out = _node_apply_left(td.root, x, td.ctx.p)
    return FVector(td.ctx, out[0, : td.logical_dim])


def lpn_apply_matrix(td: LpnTrapdoor, mat: DenseMatrix) -> DenseMatrix:
    if mat.ctx != td.ctx:
        raise ShapeError("field mismatch")
    if mat.n != td.logical_dim:
        raise ShapeError(f"expected {td.logical_dim} rows, got {mat.n}")
    x = _pad_rows(mat.data, td.padded_dim)
    out = _node_apply(td.root, x, td.ctx.p)
    return DenseMatrix(td.ctx, out[: td.logical_dim])


def _node_materialize(node: LpnNode, p: int) -> np.ndarray:
    if isinstance(node, LpnLeaf):
        return node.dense.data
    a = np.concatenate([_node_materialize(b, p) for b in node.a_blocks], axis=0)
    b = np.concatenate([_node_materialize(b, p) for b in node.b_blocks], axis=1)
    return (matmul_mod(a, b, p) + node.noise.densify().data) % p


def lpn_materialize(td: LpnTrapdoor, cap: int = MATERIALIZE_CAP) -> DenseMatrix:
    if td.padded_dim > cap:
        raise TooLarge(f"dimension {td.padded_dim} exceeds materialize cap {cap}")
    if isinstance(td.root, LpnLeaf) and td.root.dim == td.logical_dim:
        return td.root.dense
    full = _node_materialize(td.root, td.ctx.p)
    return DenseMatrix(td.ctx, full[: td.logical_dim, : td.logical_dim])
