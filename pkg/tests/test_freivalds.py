"""Freivalds product verification: completeness and soundness."""

import numpy as np
import pytest

from trapmat import (
    DenseMatrix,
    FieldContext,
    FVector,
    ShapeError,
    freivalds_verify,
    ref_matmul,
    sample_uniform,
)
from trapmat.rng import Rng

F2 = FieldContext(2)
F3 = FieldContext(3)
F5 = FieldContext(5)


def test_honest_product_always_accepts():
    rng = Rng(1)
    a = sample_uniform(rng.split(0), 16, 16, F3)
    b = sample_uniform(rng.split(1), 16, 16, F3)
    c = ref_matmul(a, b)
    assert freivalds_verify(a, b, c, 10, rng.split(2))


def test_scalar_cases():
    a = DenseMatrix(F5, [[2]])
    b = DenseMatrix(F5, [[3]])
    # 2*3 = 6 = 1 mod 5: the honest scalar product always verifies.
    assert freivalds_verify(a, b, DenseMatrix(F5, [[1]]), 4, Rng(0))
    wrong = DenseMatrix(F5, [[2]])
    rejected = sum(
        0 if freivalds_verify(a, b, wrong, 4, Rng(s)) else 1 for s in range(200)
    )
    assert rejected >= 190  # accept prob (1/5)^4 per run


def test_corrupted_entry_rejected_at_20_rounds():
    rng = Rng(2)
    a = sample_uniform(rng.split(0), 16, 16, F2)
    b = sample_uniform(rng.split(1), 16, 16, F2)
    c = ref_matmul(a, b).data.copy()
    c[3, 7] ^= 1
    bad = DenseMatrix(F2, c)
    for s in range(100):
        assert not freivalds_verify(a, b, bad, 20, Rng(1000 + s))


def test_false_accept_rate_bound():
    # Single corrupted entry over F_2: per-round accept probability is
    # exactly 1/2, so r rounds accept with probability 2^-r.
    rng = Rng(3)
    a = sample_uniform(rng.split(0), 8, 8, F2)
    b = sample_uniform(rng.split(1), 8, 8, F2)
    c = ref_matmul(a, b).data.copy()
    c[0, 0] ^= 1
    bad = DenseMatrix(F2, c)
    for rounds in (1, 2, 4):
        trials = 2000
        accepts = sum(
            1 if freivalds_verify(a, b, bad, rounds, Rng(5000 * rounds + s)) else 0
            for s in range(trials)
        )
        bound = 2.0**-rounds
        sigma = np.sqrt(bound * (1 - bound) / trials)
        assert accepts / trials <= bound + 4 * sigma


def test_shape_and_round_validation():
    a = sample_uniform(Rng(0), 4, 4, F5)
    b = sample_uniform(Rng(1), 4, 4, F5)
    c = sample_uniform(Rng(2), 4, 3, F5)
    with pytest.raises(ShapeError):
        freivalds_verify(a, b, c, 5, Rng(3))
    with pytest.raises(ValueError):
        freivalds_verify(a, b, ref_matmul(a, b), 0, Rng(3))
