"""Core finite-field vector/matrix containers and multiplication kernels.

All containers are immutable after construction (backing arrays are marked
read-only) and safe for concurrent read-only use.  Entries are stored as
int64 residues in [0, p); kernels chunk their accumulations so intermediate
sums never overflow 64 bits for any modulus below 2**31.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError
from .field import FieldContext
from .opcount import add_ops
from .rng import Rng


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.int64)
    a.flags.writeable = False
    return a


def _check_ctx(a, b) -> None:
    if a.ctx != b.ctx:
        raise ShapeError(f"field mismatch: {a.ctx} vs {b.ctx}")


class FVector:
    """Vector over F_p."""

    __slots__ = ("ctx", "data")

    def __init__(self, ctx: FieldContext, entries):
        self.ctx = ctx
        data = np.asarray(entries, dtype=np.int64)
        if data.ndim != 1:
            raise ShapeError(f"vector must be 1-d, got shape {data.shape}")
        if data.size and (data.min() < 0 or data.max() >= ctx.p):
            raise ValueError("entries must lie in [0, p)")
        self.data = _freeze(data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FVector)
            and self.ctx == other.ctx
            and np.array_equal(self.data, other.data)
        )

    def __repr__(self) -> str:
        return f"FVector(p={self.ctx.p}, n={self.n})"


class DenseMatrix:
    """Dense row-major matrix over F_p."""

    __slots__ = ("ctx", "data")

    def __init__(self, ctx: FieldContext, entries):
        self.ctx = ctx
        data = np.asarray(entries, dtype=np.int64)
        if data.ndim != 2:
            raise ShapeError(f"matrix must be 2-d, got shape {data.shape}")
        if data.size and (data.min() < 0 or data.max() >= ctx.p):
            raise ValueError("entries must lie in [0, p)")
        self.data = _freeze(data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def m(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DenseMatrix)
            and self.ctx == other.ctx
            and np.array_equal(self.data, other.data)
        )

    def __repr__(self) -> str:
        return f"DenseMatrix(p={self.ctx.p}, shape={self.shape})"


class SparseMatrix:
    """Sparse matrix as row-major sorted (row, col, value) triplets.

    Values are nonzero and positions unique; a CSR-style row pointer is
    precomputed for the matvec kernel.
    """

    __slots__ = ("ctx", "n", "m", "rows", "cols", "vals", "_row_ptr")

    def __init__(self, ctx: FieldContext, n: int, m: int, rows, cols, vals):
        self.ctx = ctx
        self.n = int(n)
        self.m = int(m)
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.int64)
        if not (rows.shape == cols.shape == vals.shape) or rows.ndim != 1:
            raise ShapeError("triplet arrays must be 1-d and equal length")
        if rows.size:
            if rows.min() < 0 or rows.max() >= self.n:
                raise ValueError("row index out of range")
            if cols.min() < 0 or cols.max() >= self.m:
                raise ValueError("col index out of range")
            if vals.min() <= 0 or vals.max() >= ctx.p:
                raise ValueError("values must be nonzero elements of F_p")
            order = np.lexsort((cols, rows))
            rows, cols, vals = rows[order], cols[order], vals[order]
            keys = rows * self.m + cols
            if np.any(np.diff(keys) == 0):
                raise ValueError("duplicate (row, col) triplet")
        self.rows = _freeze(rows)
        self.cols = _freeze(cols)
        self.vals = _freeze(vals)
        ptr = np.zeros(self.n + 1, dtype=np.int64)
        if rows.size:
            np.add.at(ptr, rows + 1, 1)
        self._row_ptr = _freeze(np.cumsum(ptr))

    @property
    def nnz(self) -> int:
        return self.vals.shape[0]

    def densify(self) -> DenseMatrix:
        out = np.zeros((self.n, self.m), dtype=np.int64)
        out[self.rows, self.cols] = self.vals
        return DenseMatrix(self.ctx, out)

    def __repr__(self) -> str:
        return f"SparseMatrix(p={self.ctx.p}, shape=({self.n},{self.m}), nnz={self.nnz})"


class PermutationMatrix:
    """n x n permutation matrix represented by its forward map sigma.

    Column i holds its 1 in row sigma(i):  (P v)[sigma(i)] = v[i].
    """

    __slots__ = ("n", "sigma", "_inverse")

    def __init__(self, sigma):
        sigma = np.asarray(sigma, dtype=np.int64)
        n = sigma.shape[0]
        if sigma.ndim != 1 or not np.array_equal(np.sort(sigma), np.arange(n)):
            raise ValueError("sigma must be a bijection on [0, n)")
        self.n = n
        self.sigma = _freeze(sigma)
        inv = np.empty(n, dtype=np.int64)
        inv[sigma] = np.arange(n)
        self._inverse = _freeze(inv)

    def apply(self, x: np.ndarray) -> np.ndarray:
        out = np.empty_like(x)
        out[self.sigma] = x
        return out

    def apply_inverse(self, x: np.ndarray) -> np.ndarray:
        return x[self.sigma]

    def permute_rows(self, a: np.ndarray) -> np.ndarray:
        """P . a  (row i of the result is row sigma^{-1}(i) of a)."""
        out = np.empty_like(a)
        out[self.sigma] = a
        return out

    def permute_rows_inverse(self, a: np.ndarray) -> np.ndarray:
        return a[self.sigma]

    def permute_cols(self, a: np.ndarray) -> np.ndarray:
        """a . P  (column sigma(j) of a lands in column j)."""
        return a[:, self.sigma]

    def permute_cols_inverse(self, a: np.ndarray) -> np.ndarray:
        out = np.empty_like(a)
        out[:, self.sigma] = a
        return out

    def densify(self, ctx: FieldContext) -> DenseMatrix:
        m = np.zeros((self.n, self.n), dtype=np.int64)
        m[self.sigma, np.arange(self.n)] = 1
        return DenseMatrix(ctx, m)

    def __repr__(self) -> str:
        return f"PermutationMatrix(n={self.n})"


class DiagonalMatrix:
    """Diagonal matrix over F_p; optionally constrained to nonzero entries."""

    __slots__ = ("ctx", "diag")

    def __init__(self, ctx: FieldContext, diag, require_nonzero: bool = False):
        self.ctx = ctx
        diag = np.asarray(diag, dtype=np.int64)
        if diag.ndim != 1:
            raise ShapeError("diagonal must be 1-d")
        if diag.size and (diag.min() < 0 or diag.max() >= ctx.p):
            raise ValueError("entries must lie in [0, p)")
        if require_nonzero and diag.size and diag.min() == 0:
            raise ValueError("zero entry in a nonzero-constrained diagonal")
        self.diag = _freeze(diag)

    @property
    def n(self) -> int:
        return self.diag.shape[0]

    def densify(self) -> DenseMatrix:
        return DenseMatrix(self.ctx, np.diag(self.diag))

    def __repr__(self) -> str:
        return f"DiagonalMatrix(p={self.ctx.p}, n={self.n})"


# ---------------------------------------------------------------------------
# Raw modular kernels (int64 arrays in, int64 arrays out).
# ---------------------------------------------------------------------------

def matmul_mod(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    """(a @ b) % p with accumulation chunked to avoid int64 overflow."""
    inner = a.shape[-1]
    if inner == 0:
        return np.zeros(a.shape[:-1] + b.shape[1:], dtype=np.int64)
    # Largest inner-chunk whose worst-case partial sum stays below 2**62.
    chunk = max(1, (2**62) // ((p - 1) * (p - 1)))
    if inner <= chunk:
        return (a @ b) % p
    acc = (a[..., :chunk] @ b[:chunk]) % p
    for lo in range(chunk, inner, chunk):
        hi = min(lo + chunk, inner)
        acc = (acc + (a[..., lo:hi] @ b[lo:hi]) % p) % p
    return acc


def dense_matvec(mat: DenseMatrix, v: FVector) -> FVector:
    """M . v over F_p; Theta(n * m) multiply-adds."""
    _check_ctx(mat, v)
    if mat.m != v.n:
        raise ShapeError(f"cannot multiply {mat.shape} by length-{v.n} vector")
    add_ops(mults=mat.n * mat.m, adds=mat.n * max(0, mat.m - 1))
    return FVector(mat.ctx, matmul_mod(mat.data, v.data, mat.ctx.p))


def dense_matmul(a: DenseMatrix, b: DenseMatrix) -> DenseMatrix:
    _check_ctx(a, b)
    if a.m != b.n:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    add_ops(mults=a.n * a.m * b.m, adds=a.n * b.m * max(0, a.m - 1))
    return DenseMatrix(a.ctx, matmul_mod(a.data, b.data, a.ctx.p))


def sparse_apply_raw(e: SparseMatrix, x: np.ndarray) -> np.ndarray:
    """E . x for x of shape (m,) or (m, r); cost Theta(nnz) per column."""
    p = e.ctx.p
    cols = 1 if x.ndim == 1 else x.shape[1]
    out_shape = (e.n,) if x.ndim == 1 else (e.n, cols)
    add_ops(mults=e.nnz * cols, adds=e.nnz * cols)
    out = np.zeros(out_shape, dtype=np.int64)
    if e.nnz == 0:
        return out
    prod = (e.vals[:, None] if x.ndim == 2 else e.vals) * x[e.cols] % p
    ptr = e._row_ptr
    nz_rows = np.flatnonzero(ptr[1:] > ptr[:-1])
    # Partial sums stay below max_row_nnz * p < 2**62 for p < 2**31.
    sums = np.add.reduceat(prod, ptr[nz_rows], axis=0) % p
    out[nz_rows] = sums
    return out


def sparse_apply_left_raw(e: SparseMatrix, x: np.ndarray) -> np.ndarray:
    """x^T . E for x of shape (n,) or (r, n), returned as (m,) or (r, m)."""
    p = e.ctx.p
    rows = 1 if x.ndim == 1 else x.shape[0]
    add_ops(mults=e.nnz * rows, adds=e.nnz * rows)
    if x.ndim == 1:
        out = np.zeros(e.m, dtype=np.int64)
        if e.nnz:
            np.add.at(out, e.cols, e.vals * x[e.rows] % p)
        return out % p
    out = np.zeros((rows, e.m), dtype=np.int64)
    if e.nnz:
        np.add.at(out.T, e.cols, (e.vals[None, :] * x[:, e.rows] % p).T)
    return out % p


def sparse_matvec(e: SparseMatrix, v: FVector) -> FVector:
    _check_ctx(e, v)
    if e.m != v.n:
        raise ShapeError(f"cannot multiply ({e.n},{e.m}) by length-{v.n} vector")
    return FVector(e.ctx, sparse_apply_raw(e, v.data))


# ---------------------------------------------------------------------------
# Samplers.
# ---------------------------------------------------------------------------

def dense_trusted(ctx: FieldContext, data: np.ndarray) -> DenseMatrix:
    """Wrap entries already known to lie in [0, p), skipping validation.

    For hot loops whose arrays come straight from a bounded sampler or a
    mod-p kernel.
    """
    m = DenseMatrix.__new__(DenseMatrix)
    m.ctx = ctx
    m.data = _freeze(data)
    return m


def sample_uniform(rng: Rng, n: int, m: int, ctx: FieldContext) -> DenseMatrix:
    return DenseMatrix(ctx, rng.integers(0, ctx.p, size=(n, m)))


def sample_uniform_vector(rng: Rng, n: int, ctx: FieldContext) -> FVector:
    return FVector(ctx, rng.integers(0, ctx.p, size=n))


def sample_nonzero_diagonal(rng: Rng, n: int, ctx: FieldContext) -> DiagonalMatrix:
    return DiagonalMatrix(ctx, rng.integers(1, ctx.p, size=n), require_nonzero=True)


def sample_permutation(rng: Rng, n: int) -> PermutationMatrix:
    return PermutationMatrix(rng.generator.permutation(n))


def sample_bernoulli_sparse(
    rng: Rng, n: int, m: int, rate: float, ctx: FieldContext
) -> SparseMatrix:
    """Each cell independently nonzero with probability `rate`; nonzero
    values uniform on F_p \\ {0}.

    Cells are walked with geometric gaps, so the cost is proportional to the
    number of nonzeros rather than n*m.
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"rate must be in [0, 1], got {rate}")
    total = n * m
    if rate == 0.0 or total == 0:
        return SparseMatrix(ctx, n, m, [], [], [])
    if rate == 1.0:
        pos = np.arange(total, dtype=np.int64)
    else:
        mean = total * rate
        batch = int(mean + 6.0 * np.sqrt(mean + 1.0) + 16)
        chunks = []
        last = -1
        while last < total - 1:
            gaps = rng.geometric(rate, size=batch)
            pos_chunk = last + np.cumsum(gaps)
            chunks.append(pos_chunk)
            last = int(pos_chunk[-1])
        pos = np.concatenate(chunks)
        pos = pos[pos < total]
    vals = rng.integers(1, ctx.p, size=pos.shape[0])
    return SparseMatrix(ctx, n, m, pos // m, pos % m, vals)
