"""Worst-case to average-case reductions for dense linear algebra.

Every reduction masks its worst-case input with fresh trapdoored samples so
the oracle only ever sees (trapdoor-masked) uniform inputs, verifies each
candidate cheaply, and repeats until verification passes or the round
budget is exhausted.  The fault-oracle factory simulates average-case
algorithms at declared success rates for testing the reductions end to end.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Union

import numpy as np

from . import _kernels
from .errors import ReductionFailed, ShapeError, Singular
from .field import FieldContext
from .freivalds import freivalds_check_identity, freivalds_verify
from .lpn import LpnLeaf, LpnSchedule, LpnTrapdoor, lpn_sample
from .matrices import (
    DenseMatrix,
    DiagonalMatrix,
    FVector,
    PermutationMatrix,
    matmul_mod,
    sample_nonzero_diagonal,
    sample_permutation,
)
from .mceliece import mce_sample
from .reference import ref_inverse, ref_matmul, ref_solve
from .rng import Rng

# ---------------------------------------------------------------------------
# Singularity probabilities q_p = 1 - prod_{i>=1} (1 - p^-i).
# ---------------------------------------------------------------------------

# Three-decimal reference values for small fields.
QP_TABLE = {2: 0.711, 3: 0.440, 4: 0.311}


def q_p(p: int) -> float:
    """Limiting probability that a uniform square matrix over F_p is
    singular; q_p < 1/(p-1) for every p."""
    prod = 1.0
    term = 1.0 / p
    while term > 1e-18:
        prod *= 1.0 - term
        term /= p
    return 1.0 - prod


# ---------------------------------------------------------------------------
# Fault models and oracles.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Honest:
    pass


@dataclass(frozen=True)
class ExactWithProb:
    """True answer with probability eps, independent uniform answer else."""

    eps: float


@dataclass(frozen=True)
class EntrywiseCorrupt:
    """Each output entry independently replaced by a uniform field element
    with probability rate (the replacement may coincide with the truth)."""

    rate: float


@dataclass(frozen=True)
class AlwaysWrong:
    pass


@dataclass(frozen=True)
class AlwaysSingularAnswer:
    """Always answers as if the input were singular (zero output)."""


FaultModel = Union[Honest, ExactWithProb, EntrywiseCorrupt, AlwaysWrong, AlwaysSingularAnswer]


class AvgCaseOracle:
    """Callable wrapper around a (possibly faulty) average-case algorithm.

    The fault coins come from the oracle's own stream, independent of the
    inputs, so behavior is deterministic given (inputs, oracle seed, call
    order).
    """

    def __init__(self, kind: str, behavior: Callable, declared_success: float | None,
                 cost_model: str = "reference"):
        if kind not in ("matmul", "invert", "solve", "determinant"):
            raise ValueError(f"unknown oracle kind {kind!r}")
        self.kind = kind
        self.behavior = behavior
        self.declared_success = declared_success
        self.cost_model = cost_model
        self.calls = 0
        self.trace: list[dict] | None = None

    def __call__(self, *inputs):
        self.calls += 1
        if self.trace is not None:
            h = hashlib.blake2b(digest_size=8)
            for x in inputs:
                data = x.data if hasattr(x, "data") else np.asarray(x)
                h.update(np.ascontiguousarray(data).tobytes())
            self.trace.append({"call": self.calls, "input_digest": h.hexdigest()})
        return self.behavior(*inputs)


def _truth_matmul(a: DenseMatrix, b: DenseMatrix) -> DenseMatrix:
    return ref_matmul(a, b)


def _pack_f2(data: np.ndarray) -> np.ndarray:
    n = data.shape[1]
    shifts = np.arange(n, dtype=np.uint64)
    return ((data.astype(np.uint64)) << shifts).sum(axis=1, dtype=np.uint64)


def _truth_det(a: DenseMatrix) -> int:
    p = a.ctx.p
    if p == 2:
        words = _pack_f2(a.data)
        return 1 if _kernels.rank_f2(words, a.n) == a.n else 0
    return int(_kernels.det_mod(a.data, p))


def make_fault_oracle(kind: str, model: FaultModel, ctx: FieldContext, rng: Rng) -> AvgCaseOracle:
    """Simulated average-case algorithm: computes the truth via the
    reference suite, then degrades it according to the fault model."""
    p = ctx.p
    gen = rng

    def uniform_like(shape):
        if shape == ():
            return int(gen.integers(0, p))
        return gen.integers(0, p, size=shape)

    def degrade(truth_arr, shape):
        if isinstance(model, Honest):
            return truth_arr
        if isinstance(model, ExactWithProb):
            if gen.random() < model.eps:
                return truth_arr
            return uniform_like(shape)
        if isinstance(model, EntrywiseCorrupt):
            mask = gen.random(size=shape) < model.rate
            noise = gen.integers(0, p, size=shape)
            return np.where(mask, noise, truth_arr)
        if isinstance(model, AlwaysWrong):
            bumped = truth_arr.copy()
            flat = bumped.reshape(-1)
            pos = int(gen.integers(0, flat.shape[0]))
            flat[pos] = (flat[pos] + 1 + int(gen.integers(0, p - 1))) % p
            return bumped
        if isinstance(model, AlwaysSingularAnswer):
            return np.zeros(shape, dtype=np.int64)
        raise TypeError(f"unknown fault model {model!r}")

    if kind == "matmul":
        def behavior(a: DenseMatrix, b: DenseMatrix) -> DenseMatrix:
            truth = _truth_matmul(a, b).data
            return DenseMatrix(ctx, degrade(truth, truth.shape))
    elif kind == "invert":
        def behavior(a: DenseMatrix) -> DenseMatrix:
            try:
                truth = ref_inverse(a).data
            except Singular:
                # Singular input: an average-case inverter has no valid
                # answer; emit junk that can never verify.
                truth = uniform_like((a.n, a.n))
            return DenseMatrix(ctx, degrade(truth, truth.shape))
    elif kind == "solve":
        def behavior(a: DenseMatrix, b: FVector) -> FVector:
            try:
                truth = ref_solve(a, b).data
            except Singular:
                truth = uniform_like((a.n,))
            return FVector(ctx, degrade(truth, truth.shape))
    elif kind == "determinant":
        def behavior(a: DenseMatrix) -> int:
            truth = _truth_det(a)
            if isinstance(model, Honest):
                return truth
            if isinstance(model, ExactWithProb):
                return truth if gen.random() < model.eps else int(gen.integers(0, p))
            if isinstance(model, AlwaysWrong):
                return (truth + 1 + int(gen.integers(0, p - 1))) % p
            if isinstance(model, AlwaysSingularAnswer):
                return 0
            raise TypeError(f"fault model {model!r} not supported for determinant")
    else:
        raise ValueError(f"unknown oracle kind {kind!r}")

    declared = model.eps if isinstance(model, ExactWithProb) else (
        1.0 if isinstance(model, Honest) else None
    )
    return AvgCaseOracle(kind, behavior, declared)


# ---------------------------------------------------------------------------
# Configuration and family plumbing.
# ---------------------------------------------------------------------------

@dataclass
class ReductionConfig:
    """Knobs for the reductions: advantage parameter, explicit repetition
    multipliers for each asymptotic bound, verification rounds, seed."""

    eps: float = 0.1
    c1: float = 4.0
    c2: float = 8.0
    c3: float = 4.0
    c4: float = 4.0
    c5: float = 8.0
    c6: float = 8.0
    freivalds_rounds: int | None = None
    seed: int = 0
    family: str = "lpn"
    family_sampler: Callable | None = None
    trace: list | None = None

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        for name in ("c1", "c2", "c3", "c4", "c5", "c6"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def verification_rounds(self, p: int) -> int:
        if self.freivalds_rounds is not None:
            return self.freivalds_rounds
        return math.ceil(40.0 / math.log2(p))


# Below this dimension the default LPN schedule bottoms out anyway, so the
# mask source draws family base-case samples (exactly uniform leaves) from
# one stream instead of paying per-sample generator setup.
_LEAF_FAST_DIM = 128


class _MaskSource:
    """Fresh trapdoor samples and masking components for one reduction run.

    Draws are deterministic given (cfg.seed, reduction tag): the fast path
    consumes a single counter-based stream; the general path derives one
    child stream per sample.
    """

    def __init__(self, cfg: ReductionConfig, n: int, ctx: FieldContext,
                 rng: Rng, two_sided: bool):
        self._n = n
        self._ctx = ctx
        self._count = 0
        self._sampler = None
        self._gen = None
        if cfg.family_sampler is not None:
            self._sampler = cfg.family_sampler
            self._rng = rng
        elif cfg.family == "lpn":
            if n <= _LEAF_FAST_DIM:
                self._gen = rng.generator
            else:
                self._sampler = lambda d, c, r: lpn_sample(LpnSchedule(), d, c, r)
                self._rng = rng
        elif cfg.family == "mceliece":
            if two_sided:
                raise ValueError(
                    "mceliece family supports right multiplication only; "
                    "this reduction needs two-sided multiplication"
                )
            self._sampler = lambda d, c, r: mce_sample(d, c, r)
            self._rng = rng
        else:
            raise ValueError(f"unknown trapdoor family {cfg.family!r}")

    def trapdoor(self):
        self._count += 1
        if self._gen is not None:
            data = self._gen.integers(0, self._ctx.p, size=(self._n, self._n))
            from .matrices import dense_trusted

            return LpnTrapdoor(self._ctx, self._n, LpnLeaf(dense_trusted(self._ctx, data)))
        return self._sampler(self._n, self._ctx, self._rng.split(self._count))

    def permutation(self):
        self._count += 1
        if self._gen is not None:
            return PermutationMatrix(self._gen.permutation(self._n))
        return sample_permutation(self._rng.split(self._count), self._n)

    def nonzero_diagonal(self):
        self._count += 1
        if self._gen is not None:
            return DiagonalMatrix(
                self._ctx,
                self._gen.integers(1, self._ctx.p, size=self._n),
                require_nonzero=True,
            )
        return sample_nonzero_diagonal(self._rng.split(self._count), self._n, self._ctx)

    def verifier_rng(self) -> Rng:
        self._count += 1
        if self._gen is not None:
            # A derived seed keeps verification draws on the same stream.
            return Rng(int(self._gen.integers(0, 2**62)))
        return self._rng.split(self._count)


def _trace_round(cfg: ReductionConfig, round_idx: int, verified: bool, digests: list[str]):
    if cfg.trace is not None:
        cfg.trace.append(
            {"round": round_idx, "verified": verified, "oracle_inputs": digests}
        )


def _digest(arr: np.ndarray) -> str:
    return hashlib.blake2b(
        np.ascontiguousarray(arr).tobytes(), digest_size=8
    ).hexdigest()


# ---------------------------------------------------------------------------
# Matrix multiplication.
# ---------------------------------------------------------------------------

def _check_square_pair(a: DenseMatrix, b: DenseMatrix):
    if a.ctx != b.ctx:
        raise ShapeError("field mismatch")
    if a.n != a.m or b.n != b.m or a.n != b.n:
        raise ShapeError("reduction requires equal square matrices")


def wc_matmul_exact(oracle: AvgCaseOracle, a: DenseMatrix, b: DenseMatrix,
                    cfg: ReductionConfig) -> DenseMatrix:
    """Exact product from an oracle that is exactly right with probability
    >= eps on uniform input pairs: AB = (A+R)(B+Q) - AQ - RB - RQ, each
    candidate Freivalds-verified."""
    _check_square_pair(a, b)
    if oracle.kind != "matmul":
        raise ValueError("oracle kind must be 'matmul'")
    n = a.n
    ctx = a.ctx
    p = ctx.p
    masks = _MaskSource(cfg, n, ctx, Rng(cfg.seed, (101,)), two_sided=False)
    rounds = math.ceil(cfg.c1 * math.log2(max(n, 2)) / cfg.eps)
    fr = cfg.verification_rounds(p)
    for r in range(rounds):
        r_td = masks.trapdoor()
        qt_td = masks.trapdoor()
        r_mat = r_td.materialize().data
        q_mat = qt_td.materialize().data.T
        masked_a = DenseMatrix(ctx, (a.data + r_mat) % p)
        masked_b = DenseMatrix(ctx, (b.data + q_mat) % p)
        c_hat = oracle(masked_a, masked_b)
        aq = qt_td.apply_matrix(DenseMatrix(ctx, a.data.T.copy())).data.T
        rb = r_td.apply_matrix(b).data
        rq = r_td.apply_matrix(DenseMatrix(ctx, q_mat)).data
        candidate = DenseMatrix(ctx, (c_hat.data - aq - rb - rq) % p)
        ok = freivalds_verify(a, b, candidate, fr, masks.verifier_rng())
        _trace_round(cfg, r, ok, [_digest(masked_a.data), _digest(masked_b.data)])
        if ok:
            return candidate
    raise ReductionFailed(f"no candidate verified in {rounds} rounds")


def wc_matmul_errorcorrect(oracle: AvgCaseOracle, a: DenseMatrix, b: DenseMatrix,
                           cfg: ReductionConfig,
                           diagnostics: dict | None = None) -> DenseMatrix:
    """Exact product from an oracle whose output is merely closer to AB
    than a random matrix would be: mask by D.P on the left and P' on the
    right so errors land uniformly, repeat, take the entrywise plurality."""
    _check_square_pair(a, b)
    if oracle.kind != "matmul":
        raise ValueError("oracle kind must be 'matmul'")
    n = a.n
    ctx = a.ctx
    p = ctx.p
    if p > 1024:
        raise ValueError("plurality vote table caps the modulus at 1024")
    masks = _MaskSource(cfg, n, ctx, Rng(cfg.seed, (102,)), two_sided=False)
    reps = math.ceil(cfg.c2 * math.log2(p * max(n, 2)) / (cfg.eps**2 * p))
    counts = np.zeros((p, n, n), dtype=np.int32)
    rows = np.arange(n)[:, None]
    cols = np.arange(n)[None, :]
    inv_table = np.array([0] + [pow(v, p - 2, p) for v in range(1, p)], dtype=np.int64)
    for r in range(reps):
        r_td = masks.trapdoor()
        qt_td = masks.trapdoor()
        perm_left = masks.permutation()
        perm_right = masks.permutation()
        diag = masks.nonzero_diagonal()
        inv_diag = inv_table[diag.diag]
        r_mat = r_td.materialize().data
        q_mat = qt_td.materialize().data.T
        masked_a = perm_left.permute_rows_inverse(inv_diag[:, None] * (a.data + r_mat) % p)
        masked_b = perm_right.permute_cols_inverse((b.data + q_mat) % p)
        c_hat = oracle(DenseMatrix(ctx, masked_a), DenseMatrix(ctx, masked_b))
        unmasked = diag.diag[:, None] * perm_left.permute_rows(c_hat.data) % p
        unmasked = perm_right.permute_cols(unmasked)
        aq = qt_td.apply_matrix(DenseMatrix(ctx, a.data.T.copy())).data.T
        rb = r_td.apply_matrix(b).data
        rq = r_td.apply_matrix(DenseMatrix(ctx, q_mat)).data
        candidate = (unmasked - aq - rb - rq) % p
        counts[candidate, rows, cols] += 1
        _trace_round(cfg, r, True, [_digest(masked_a), _digest(masked_b)])
    # Ties break toward the smallest field element (argmax returns the
    # first maximal index); tied entries signal too few repetitions.
    winners = np.argmax(counts, axis=0)
    if diagnostics is not None:
        top = np.max(counts, axis=0)
        diagnostics["ties"] = int(np.sum(np.sum(counts == top[None], axis=0) > 1))
        diagnostics["reps"] = reps
    return DenseMatrix(ctx, winners.astype(np.int64))


# ---------------------------------------------------------------------------
# Inversion and solving.
# ---------------------------------------------------------------------------

def wc_invert(oracle: AvgCaseOracle, a: DenseMatrix, cfg: ReductionConfig) -> DenseMatrix:
    """A^-1 from an oracle inverting a uniformly random invertible matrix
    with probability >= eps: candidate = R . oracle(A.R)."""
    if oracle.kind != "invert":
        raise ValueError("oracle kind must be 'invert'")
    if a.n != a.m:
        raise ShapeError("inversion requires a square matrix")
    n = a.n
    ctx = a.ctx
    p = ctx.p
    masks = _MaskSource(cfg, n, ctx, Rng(cfg.seed, (103,)), two_sided=True)
    rounds = math.ceil(cfg.c3 * math.log2(max(n, 2)) / ((1.0 - q_p(p)) * cfg.eps))
    fr = cfg.verification_rounds(p)
    for r in range(rounds):
        r_td = masks.trapdoor()
        ar = r_td.apply_left_matrix(a)
        inv_hat = oracle(ar)
        candidate = r_td.apply_matrix(inv_hat)
        ok = freivalds_check_identity(a, candidate, fr, masks.verifier_rng())
        _trace_round(cfg, r, ok, [_digest(ar.data)])
        if ok:
            return candidate
    raise ReductionFailed(f"no inverse verified in {rounds} rounds (singular input?)")


def wc_solve(oracle: AvgCaseOracle, a: DenseMatrix, b: FVector,
             cfg: ReductionConfig) -> FVector:
    """Unique solution of A.x = b from an oracle solving uniform nonsingular
    systems with probability >= eps: candidate = Q . oracle(R.A.Q, R.b)."""
    if oracle.kind != "solve":
        raise ValueError("oracle kind must be 'solve'")
    if a.n != a.m or a.ctx != b.ctx or b.n != a.n:
        raise ShapeError("solve requires square A and matching b")
    n = a.n
    ctx = a.ctx
    p = ctx.p
    masks = _MaskSource(cfg, n, ctx, Rng(cfg.seed, (104,)), two_sided=True)
    rounds = math.ceil(
        cfg.c4 * math.log2(max(n, 2)) / ((1.0 - q_p(p)) ** 2 * cfg.eps)
    )
    for r in range(rounds):
        r_td = masks.trapdoor()
        q_td = masks.trapdoor()
        ra = r_td.apply_matrix(a)
        raq = q_td.apply_left_matrix(ra)
        rb = r_td.apply(b)
        x_hat = oracle(raq, rb)
        candidate = q_td.apply(x_hat)
        # Exact O(n^2) verification, no randomness needed.
        ok = bool(np.array_equal(matmul_mod(a.data, candidate.data, p), b.data))
        _trace_round(cfg, r, ok, [_digest(raq.data), _digest(rb.data)])
        if ok:
            return candidate
    raise ReductionFailed(f"no solution verified in {rounds} rounds (singular input?)")


# ---------------------------------------------------------------------------
# Determinants.
# ---------------------------------------------------------------------------

def wc_det_largep(oracle: AvgCaseOracle, a: DenseMatrix, cfg: ReductionConfig) -> int:
    """det(A) over F_p, p > 2, from an oracle with success probability
    >= (3 + 2 q_p)/4 + eps: vote on oracle(RA)/oracle(R), skipping
    iterations whose R-query returns 0."""
    if oracle.kind != "determinant":
        raise ValueError("oracle kind must be 'determinant'")
    if a.n != a.m:
        raise ShapeError("determinant requires a square matrix")
    ctx = a.ctx
    p = ctx.p
    if p <= 2:
        raise ValueError("use wc_det_f2 for the two-element field")
    n = a.n
    masks = _MaskSource(cfg, n, ctx, Rng(cfg.seed, (105,)), two_sided=False)
    t = math.ceil(cfg.c5 * math.log2(p * max(n, 2)) / cfg.eps**2)
    votes: dict[int, int] = {}
    for _ in range(t):
        r_td = masks.trapdoor()
        m_r = oracle(r_td.materialize())
        if m_r == 0:
            continue
        ra = r_td.apply_matrix(a)
        m_ra = oracle(ra)
        ratio = m_ra * pow(int(m_r), p - 2, p) % p
        votes[ratio] = votes.get(ratio, 0) + 1
    threshold = (0.5 + cfg.eps) * t
    for value, count in votes.items():
        if count >= threshold:
            return int(value)
    return 0


def wc_det_f2(oracle: AvgCaseOracle, a: DenseMatrix, cfg: ReductionConfig) -> int:
    """det(A) over F_2 from an oracle with success probability
    >= (2 + q_2)/3 + eps: count disagreements between oracle(R) and
    oracle(RA); an invertible A makes them agree except on oracle error."""
    if oracle.kind != "determinant":
        raise ValueError("oracle kind must be 'determinant'")
    if a.n != a.m:
        raise ShapeError("determinant requires a square matrix")
    ctx = a.ctx
    if ctx.p != 2:
        raise ValueError("wc_det_f2 requires p == 2")
    n = a.n
    masks = _MaskSource(cfg, n, ctx, Rng(cfg.seed, (106,)), two_sided=False)
    t = math.ceil(cfg.c6 * math.log2(max(n, 2)) / cfg.eps**2)
    disagreements = 0
    for _ in range(t):
        r_td = masks.trapdoor()
        m_r = oracle(r_td.materialize())
        m_ra = oracle(r_td.apply_matrix(a))
        if m_r != m_ra:
            disagreements += 1
    return 1 if disagreements < (2.0 / 3.0) * (1.0 - q_p(2)) * t else 0
