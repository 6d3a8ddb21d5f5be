"""Worst-case/average-case reductions and the fault-oracle harness."""

import numpy as np
import pytest
from scipy.stats import chi2

from trapmat import (
    DenseMatrix,
    FieldContext,
    FVector,
    ReductionFailed,
    ref_det,
    ref_matmul,
    ref_solve,
    sample_nonzero_diagonal,
    sample_permutation,
    sample_uniform,
    sample_uniform_vector,
)
from trapmat.reductions import (
    QP_TABLE,
    AlwaysSingularAnswer,
    AlwaysWrong,
    EntrywiseCorrupt,
    ExactWithProb,
    Honest,
    ReductionConfig,
    make_fault_oracle,
    q_p,
    wc_det_f2,
    wc_det_largep,
    wc_invert,
    wc_matmul_errorcorrect,
    wc_matmul_exact,
    wc_solve,
)
from trapmat.reference import identity
from trapmat.rng import Rng

F2 = FieldContext(2)
F3 = FieldContext(3)
F5 = FieldContext(5)


# ---------------------------------------------------------------------------
# q_p table.
# ---------------------------------------------------------------------------

def test_qp_reference_values():
    for p, expected in QP_TABLE.items():
        assert round(q_p(p), 3) == expected


def test_qp_general_bound():
    for p in (5, 7, 11, 31, 101):
        assert 0 < q_p(p) < 1.0 / (p - 1)


# ---------------------------------------------------------------------------
# Masking identities.
# ---------------------------------------------------------------------------

def _all_f2_2x2():
    for bits in range(16):
        yield np.array(
            [[bits & 1, (bits >> 1) & 1], [(bits >> 2) & 1, (bits >> 3) & 1]],
            dtype=np.int64,
        )


def test_additive_mask_identity_exhaustive_f2():
    # (A+R)(B+Q) - AQ - RB - RQ == AB for every 2x2 tuple over F_2.
    mats = list(_all_f2_2x2())
    for a in mats:
        for b in mats:
            ab = a @ b % 2
            for r in mats:
                for q in mats:
                    got = ((a + r) @ (b + q) - a @ q - r @ b - r @ q) % 2
                    assert np.array_equal(got, ab)


def test_additive_mask_identity_fuzzed():
    rng = Rng(1)
    for t in range(30):
        n = int(rng.split(t).integers(2, 65))
        s = rng.split(1000 + t)
        a = s.split(0).integers(0, 5, (n, n))
        b = s.split(1).integers(0, 5, (n, n))
        r = s.split(2).integers(0, 5, (n, n))
        q = s.split(3).integers(0, 5, (n, n))
        got = ((a + r) @ (b + q) - a @ q - r @ b - r @ q) % 5
        assert np.array_equal(got, a @ b % 5)


def test_full_mask_identity_with_honest_middle():
    # D.P.((P^-1 D^-1 (A+R)).((B+Q).P'^-1)).P' - AQ - RB - RQ == AB.
    rng = Rng(2)
    for t in range(20):
        n = int(rng.split(t).integers(2, 17))
        s = rng.split(500 + t)
        p = 7
        ctx = FieldContext(p)
        a = s.split(0).integers(0, p, (n, n))
        b = s.split(1).integers(0, p, (n, n))
        r = s.split(2).integers(0, p, (n, n))
        q = s.split(3).integers(0, p, (n, n))
        perm_l = sample_permutation(s.split(4), n)
        perm_r = sample_permutation(s.split(5), n)
        d = sample_nonzero_diagonal(s.split(6), n, ctx).diag
        d_inv = np.array([pow(int(x), p - 2, p) for x in d], dtype=np.int64)
        x = perm_l.permute_rows_inverse(d_inv[:, None] * (a + r) % p)
        y = perm_r.permute_cols_inverse((b + q) % p)
        middle = x @ y % p
        z = d[:, None] * perm_l.permute_rows(middle) % p
        z = perm_r.permute_cols(z)
        got = (z - a @ q - r @ b - r @ q) % p
        assert np.array_equal(got, a @ b % p)


def test_masked_error_distribution():
    # With an honest-then-corrupted middle product, candidate - truth has
    # entries that are zero with probability q >= 1/p + eps and uniform on
    # the nonzero elements otherwise.
    n, p = 32, 5
    rate = (1 - 1 / p - 0.1) * p / (p - 1)
    a = sample_uniform(Rng(3), n, n, F5)
    b = sample_uniform(Rng(4), n, n, F5)
    truth = ref_matmul(a, b).data
    oracle = make_fault_oracle("matmul", EntrywiseCorrupt(rate), F5, Rng(5))
    cfg = ReductionConfig(eps=0.1, seed=6)
    counts = np.zeros(p, dtype=np.int64)
    reps = 40
    # Reproduce single repetitions by forcing rep count to 1 via c2.
    for rep in range(reps):
        cfg_rep = ReductionConfig(eps=1.0, c2=1e-9, seed=100 + rep)
        cand = wc_matmul_errorcorrect(oracle, a, b, cfg_rep)
        err = (cand.data - truth) % p
        counts += np.bincount(err.reshape(-1), minlength=p)
    total = counts.sum()
    q_hat = counts[0] / total
    assert q_hat >= 1 / p + 0.05
    nonzero = counts[1:]
    expected = nonzero.sum() / (p - 1)
    stat = float(np.sum((nonzero - expected) ** 2 / expected))
    assert stat <= chi2.isf(1e-3, p - 2)


# ---------------------------------------------------------------------------
# Fault oracles.
# ---------------------------------------------------------------------------

def test_honest_oracle_returns_reference():
    a = sample_uniform(Rng(7), 8, 8, F5)
    b = sample_uniform(Rng(8), 8, 8, F5)
    oracle = make_fault_oracle("matmul", Honest(), F5, Rng(9))
    assert oracle(a, b) == ref_matmul(a, b)


def test_exactprob_zero_rarely_correct():
    a = sample_uniform(Rng(10), 8, 8, F5)
    b = sample_uniform(Rng(11), 8, 8, F5)
    truth = ref_matmul(a, b)
    oracle = make_fault_oracle("matmul", ExactWithProb(0.0), F5, Rng(12))
    hits = sum(1 for _ in range(50) if oracle(a, b) == truth)
    assert hits == 0  # coincidence probability 5^-64


def test_entrywise_distance_calibration():
    # At rate 0.5 over F_2 half the corrupted entries coincide with the
    # truth, so the expected Hamming distance is n^2/4.
    n, p, rate = 64, 2, 0.5
    a = sample_uniform(Rng(13), n, n, F2)
    b = sample_uniform(Rng(14), n, n, F2)
    truth = ref_matmul(a, b).data
    oracle = make_fault_oracle("matmul", EntrywiseCorrupt(rate), F2, Rng(15))
    trials = 60
    dists = [np.sum(oracle(a, b).data != truth) for _ in range(trials)]
    q = rate * (1 - 1 / p)
    expected = q * n * n
    sigma_mean = np.sqrt(n * n * q * (1 - q) / trials)
    assert abs(np.mean(dists) - expected) <= 3 * sigma_mean


def test_alwayswrong_never_matches():
    a = sample_uniform(Rng(16), 6, 6, F5)
    b = sample_uniform(Rng(17), 6, 6, F5)
    truth = ref_matmul(a, b)
    oracle = make_fault_oracle("matmul", AlwaysWrong(), F5, Rng(18))
    for _ in range(30):
        assert oracle(a, b) != truth


def test_oracle_determinism_and_trace():
    a = sample_uniform(Rng(19), 8, 8, F5)
    b = sample_uniform(Rng(20), 8, 8, F5)
    o1 = make_fault_oracle("matmul", ExactWithProb(0.5), F5, Rng(21))
    o2 = make_fault_oracle("matmul", ExactWithProb(0.5), F5, Rng(21))
    o1.trace = []
    outs1 = [o1(a, b) for _ in range(5)]
    outs2 = [o2(a, b) for _ in range(5)]
    assert all(x == y for x, y in zip(outs1, outs2))
    assert len(o1.trace) == 5 and all("input_digest" in rec for rec in o1.trace)


# ---------------------------------------------------------------------------
# Reductions: trivial cases.
# ---------------------------------------------------------------------------

def test_matmul_honest_first_try():
    a = sample_uniform(Rng(22), 12, 12, F5)
    b = sample_uniform(Rng(23), 12, 12, F5)
    oracle = make_fault_oracle("matmul", Honest(), F5, Rng(24))
    out = wc_matmul_exact(oracle, a, b, ReductionConfig(eps=1.0, seed=1))
    assert out == ref_matmul(a, b)
    assert oracle.calls == 1


def test_matmul_alwayswrong_fails():
    a = sample_uniform(Rng(25), 8, 8, F5)
    b = sample_uniform(Rng(26), 8, 8, F5)
    oracle = make_fault_oracle("matmul", AlwaysWrong(), F5, Rng(27))
    with pytest.raises(ReductionFailed):
        wc_matmul_exact(oracle, a, b, ReductionConfig(eps=0.5, seed=2))


def test_matmul_errorcorrect_honest_single_rep():
    a = sample_uniform(Rng(28), 10, 10, F5)
    b = sample_uniform(Rng(29), 10, 10, F5)
    oracle = make_fault_oracle("matmul", Honest(), F5, Rng(30))
    cfg = ReductionConfig(eps=1.0, c2=1e-9, seed=3)  # forces one repetition
    out = wc_matmul_errorcorrect(oracle, a, b, cfg)
    assert out == ref_matmul(a, b)
    assert oracle.calls == 1


def test_invert_honest_identity():
    oracle = make_fault_oracle("invert", Honest(), F3, Rng(31))
    out = wc_invert(oracle, identity(F3, 8), ReductionConfig(eps=1.0, seed=4))
    assert out == identity(F3, 8)


def test_invert_singular_input_fails():
    oracle = make_fault_oracle("invert", Honest(), F3, Rng(32))
    singular = DenseMatrix(F3, np.ones((6, 6), dtype=np.int64))
    with pytest.raises(ReductionFailed):
        wc_invert(oracle, singular, ReductionConfig(eps=1.0, seed=5))


def test_invert_alwayssingular_fails():
    oracle = make_fault_oracle("invert", AlwaysSingularAnswer(), F3, Rng(33))
    with pytest.raises(ReductionFailed):
        wc_invert(oracle, identity(F3, 6), ReductionConfig(eps=0.5, seed=6))


def test_solve_honest_identity_returns_rhs():
    oracle = make_fault_oracle("solve", Honest(), F5, Rng(34))
    b = sample_uniform_vector(Rng(35), 8, F5)
    out = wc_solve(oracle, identity(F5, 8), b, ReductionConfig(eps=1.0, seed=7))
    assert out == b


def test_solve_zero_rhs_gives_zero():
    oracle = make_fault_oracle("solve", Honest(), F5, Rng(36))
    a = sample_uniform(Rng(37), 8, 8, F5)
    while ref_det(a) == 0:
        a = sample_uniform(Rng(int(a.data[0, 0]) + 38), 8, 8, F5)
    out = wc_solve(
        oracle, a, FVector(F5, np.zeros(8, dtype=np.int64)),
        ReductionConfig(eps=1.0, seed=8),
    )
    assert not np.any(out.data)


def test_det_largep_honest_cases():
    oracle = make_fault_oracle("determinant", Honest(), F3, Rng(39))
    cfg = ReductionConfig(eps=0.2, c5=0.2, seed=9)
    assert wc_det_largep(oracle, identity(F3, 6), cfg) == 1
    repeated = DenseMatrix(F3, np.array(
        [[1, 2, 0], [1, 2, 0], [0, 1, 1]], dtype=np.int64))
    assert wc_det_largep(oracle, repeated, cfg) == 0


def test_det_skip_rule_alwayssingular_returns_zero():
    # Every R-query returns 0, so nothing is appended and the vote is empty.
    oracle = make_fault_oracle("determinant", AlwaysSingularAnswer(), F3, Rng(40))
    cfg = ReductionConfig(eps=0.2, c5=0.2, seed=10)
    assert wc_det_largep(oracle, identity(F3, 6), cfg) == 0
    assert oracle.calls > 0


def test_det_f2_honest_cases():
    oracle = make_fault_oracle("determinant", Honest(), F2, Rng(41))
    cfg = ReductionConfig(eps=0.2, seed=11)
    assert wc_det_f2(oracle, identity(F2, 8), cfg) == 1
    singular = DenseMatrix(F2, np.ones((8, 8), dtype=np.int64))
    assert wc_det_f2(oracle, singular, cfg) == 0


def test_det_largep_rejects_f2():
    oracle = make_fault_oracle("determinant", Honest(), F2, Rng(42))
    with pytest.raises(ValueError):
        wc_det_largep(oracle, identity(F2, 4), ReductionConfig(eps=0.1))


def test_kind_mismatch_rejected():
    oracle = make_fault_oracle("matmul", Honest(), F5, Rng(43))
    with pytest.raises(ValueError):
        wc_invert(oracle, identity(F5, 4), ReductionConfig(eps=0.5))


def test_mceliece_family_right_only():
    cfg = ReductionConfig(eps=1.0, seed=12, family="mceliece")
    oracle = make_fault_oracle("invert", Honest(), F5, Rng(44))
    with pytest.raises(ValueError):
        wc_invert(oracle, identity(F5, 8), cfg)
    # Right-multiplication-only reductions accept it.
    a = sample_uniform(Rng(45), 8, 8, F5)
    b = sample_uniform(Rng(46), 8, 8, F5)
    moracle = make_fault_oracle("matmul", Honest(), F5, Rng(47))
    out = wc_matmul_exact(moracle, a, b, cfg)
    assert out == ref_matmul(a, b)


def test_structured_family_above_leaf_scale():
    # Above the fast-path cutoff the default family samples recursive
    # trapdoors; results must be unchanged.
    n = 130
    a = sample_uniform(Rng(48), n, n, F5)
    b = sample_uniform(Rng(49), n, n, F5)
    oracle = make_fault_oracle("matmul", Honest(), F5, Rng(50))
    out = wc_matmul_exact(oracle, a, b, ReductionConfig(eps=1.0, seed=13))
    assert out == ref_matmul(a, b)


# ---------------------------------------------------------------------------
# Reductions: small Monte Carlo (full batteries run in the acceptance suite).
# ---------------------------------------------------------------------------

def test_matmul_exactprob_small_mc():
    n = 32
    a = DenseMatrix(F5, np.ones((n, n), dtype=np.int64))
    b = DenseMatrix(F5, np.triu(np.ones((n, n), dtype=np.int64)))
    truth = ref_matmul(a, b)
    for run in range(10):
        oracle = make_fault_oracle("matmul", ExactWithProb(0.3), F5, Rng(600 + run))
        out = wc_matmul_exact(oracle, a, b, ReductionConfig(eps=0.3, seed=run))
        assert out == truth


def test_invert_exactprob_small_mc():
    n = 16
    a = DenseMatrix(F3, np.tril(np.ones((n, n), dtype=np.int64)))
    for run in range(10):
        oracle = make_fault_oracle("invert", ExactWithProb(0.4), F3, Rng(700 + run))
        out = wc_invert(oracle, a, ReductionConfig(eps=0.4, seed=run))
        assert np.array_equal((a.data @ out.data) % 3, np.eye(n, dtype=np.int64))


def test_solve_exactprob_small_mc():
    n = 16
    ctx = FieldContext(7)
    a = sample_uniform(Rng(51), n, n, ctx)
    while ref_det(a) == 0:
        a = sample_uniform(Rng(int(a.data[0, 0]) + 52), n, n, ctx)
    b = sample_uniform_vector(Rng(53), n, ctx)
    expected = ref_solve(a, b)
    for run in range(10):
        oracle = make_fault_oracle("solve", ExactWithProb(0.4), ctx, Rng(800 + run))
        assert wc_solve(oracle, a, b, ReductionConfig(eps=0.4, seed=run)) == expected


def test_errorcorrect_small_mc():
    n, p = 16, 5
    rate = (1 - 1 / p - 0.1) * p / (p - 1)
    a = sample_uniform(Rng(54), n, n, F5)
    b = sample_uniform(Rng(55), n, n, F5)
    truth = ref_matmul(a, b)
    for run in range(3):
        oracle = make_fault_oracle("matmul", EntrywiseCorrupt(rate), F5, Rng(900 + run))
        out = wc_matmul_errorcorrect(oracle, a, b, ReductionConfig(eps=0.1, seed=run))
        assert out == truth


def test_det_largep_small_mc():
    n = 16
    for run in range(5):
        a = sample_uniform(Rng(56 + run), n, n, F3)
        oracle = make_fault_oracle("determinant", ExactWithProb(0.98), F3, Rng(1000 + run))
        cfg = ReductionConfig(eps=0.02, c5=1.0, seed=run)
        assert wc_det_largep(oracle, a, cfg) == ref_det(a)


def test_det_f2_small_mc():
    n = 16
    for run in range(5):
        a = sample_uniform(Rng(66 + run), n, n, F2)
        oracle = make_fault_oracle("determinant", ExactWithProb(0.95), F2, Rng(1100 + run))
        cfg = ReductionConfig(eps=0.04, c6=2.0, seed=run)
        assert wc_det_f2(oracle, a, cfg) == ref_det(a)


def test_reduction_determinism():
    a = sample_uniform(Rng(57), 16, 16, F5)
    b = sample_uniform(Rng(58), 16, 16, F5)
    o1 = make_fault_oracle("matmul", ExactWithProb(0.5), F5, Rng(59))
    o2 = make_fault_oracle("matmul", ExactWithProb(0.5), F5, Rng(59))
    r1 = wc_matmul_exact(o1, a, b, ReductionConfig(eps=0.5, seed=60))
    r2 = wc_matmul_exact(o2, a, b, ReductionConfig(eps=0.5, seed=60))
    assert r1 == r2 and o1.calls == o2.calls


def test_trace_records_rounds():
    a = sample_uniform(Rng(61), 8, 8, F5)
    b = sample_uniform(Rng(62), 8, 8, F5)
    trace: list = []
    cfg = ReductionConfig(eps=1.0, seed=63, trace=trace)
    oracle = make_fault_oracle("matmul", Honest(), F5, Rng(64))
    wc_matmul_exact(oracle, a, b, cfg)
    assert trace and trace[0]["verified"] is True
    assert len(trace[0]["oracle_inputs"]) == 2
