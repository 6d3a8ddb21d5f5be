"""TDM1 binary format and JSON debug mirror."""

import json
import struct

import numpy as np
import pytest

from trapmat import (
    DenseMatrix,
    DiagonalMatrix,
    FieldContext,
    FormatError,
    LpnSchedule,
    kac_apply,
    kac_sample,
    lpn_apply,
    lpn_sample,
    mce_apply,
    mce_sample,
    sample_bernoulli_sparse,
    sample_permutation,
    sample_uniform,
    sample_uniform_vector,
)
from trapmat.haar import HaarInvariantSampler, goe_spectrum_sampler, haar_invariant_sample
from trapmat.rng import Rng
from trapmat.serialize import dump_bytes, load_bytes, to_debug_json

F257 = FieldContext(257)


def test_header_layout():
    m = DenseMatrix(F257, [[1, 2], [3, 4]])
    raw = dump_bytes(m)
    assert raw[:4] == b"TDM1"
    modulus, kind, n, cols = struct.unpack("<QBQQ", raw[4:29])
    assert (modulus, kind, n, cols) == (257, 1, 2, 2)
    assert raw[29:] == np.array([1, 2, 3, 4], dtype="<u4").tobytes()


def test_dense_sparse_perm_diag_roundtrip():
    rng = Rng(1)
    dense = sample_uniform(rng.split(0), 5, 7, F257)
    assert load_bytes(dump_bytes(dense)) == dense
    sparse = sample_bernoulli_sparse(rng.split(1), 9, 6, 0.3, F257)
    back = load_bytes(dump_bytes(sparse))
    assert np.array_equal(back.densify().data, sparse.densify().data)
    perm = sample_permutation(rng.split(2), 12)
    assert np.array_equal(load_bytes(dump_bytes(perm)).sigma, perm.sigma)
    diag = DiagonalMatrix(F257, [5, 0, 7])
    assert np.array_equal(load_bytes(dump_bytes(diag)).diag, diag.diag)


def test_lpn_roundtrip_applies_identically():
    td = lpn_sample(LpnSchedule(), 100, F257, Rng(2))
    td2 = load_bytes(dump_bytes(td))
    v = sample_uniform_vector(Rng(3), 100, F257)
    assert lpn_apply(td, v) == lpn_apply(td2, v)


def test_mceliece_roundtrip_with_recursion():
    td = mce_sample(128, F257, Rng(4), recurse=True, leaf_threshold=4)
    td2 = load_bytes(dump_bytes(td))
    v = sample_uniform_vector(Rng(5), 128, F257)
    assert mce_apply(td, v) == mce_apply(td2, v)


def test_kac_roundtrip_bit_exact():
    chain = kac_sample(48, Rng(6), T=700)
    chain2 = load_bytes(dump_bytes(chain))
    x = Rng(7).standard_normal(48)
    assert np.array_equal(kac_apply(chain, x), kac_apply(chain2, x))
    assert np.array_equal(chain.cs, chain2.cs)


def test_real_trapdoor_roundtrip_both_modes():
    sym = haar_invariant_sample(
        HaarInvariantSampler(goe_spectrum_sampler, "symmetric"), 16, Rng(8), T=300
    )
    sym2 = load_bytes(dump_bytes(sym))
    z = Rng(9).standard_normal(16)
    assert np.array_equal(sym.apply(z), sym2.apply(z))
    two = haar_invariant_sample(
        HaarInvariantSampler(goe_spectrum_sampler, "two-sided"), 16, Rng(10), T=300
    )
    two2 = load_bytes(dump_bytes(two))
    assert np.array_equal(two.apply(z), two2.apply(z))
    assert two2.right is not None and sym2.right is None


def test_bad_magic_and_truncation():
    with pytest.raises(FormatError):
        load_bytes(b"NOPE" + b"\x00" * 40)
    raw = dump_bytes(sample_uniform(Rng(1), 4, 4, F257))
    with pytest.raises(FormatError):
        load_bytes(raw[:-3])


def test_debug_json_parses():
    td = lpn_sample(LpnSchedule(), 32, F257, Rng(11))
    doc = json.loads(to_debug_json(td))
    assert doc["format"] == "TDM1" and doc["kind"] == "lpn" and doc["n"] == 32
    chain = kac_sample(8, Rng(12), T=5)
    doc = json.loads(to_debug_json(chain))
    assert len(doc["steps"]) == 5
