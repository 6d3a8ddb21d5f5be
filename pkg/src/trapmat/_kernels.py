"""JIT-compiled hot loops (numba), with pure-Python fallbacks.

The rotation kernels perform plain multiply/add in a fixed order, no fused
contractions, so results are bit-identical to the pure-Python loops and to
any other IEEE-754 implementation that follows the same expression order.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def deco(f):
            return f

        return deco


@njit(cache=True)
def kac_forward(ii, jj, cs, sn, v):
    for t in range(ii.shape[0]):
        i = ii[t]
        j = jj[t]
        vi = v[i]
        vj = v[j]
        c = cs[t]
        s = sn[t]
        v[i] = c * vi - s * vj
        v[j] = s * vi + c * vj


@njit(cache=True)
def kac_inverse(ii, jj, cs, sn, v):
    for t in range(ii.shape[0] - 1, -1, -1):
        i = ii[t]
        j = jj[t]
        vi = v[i]
        vj = v[j]
        c = cs[t]
        s = sn[t]
        v[i] = c * vi + s * vj
        v[j] = c * vj - s * vi


@njit(cache=True)
def kac_forward_matrix(ii, jj, cs, sn, m):
    cols = m.shape[1]
    for t in range(ii.shape[0]):
        i = ii[t]
        j = jj[t]
        c = cs[t]
        s = sn[t]
        for col in range(cols):
            mi = m[i, col]
            mj = m[j, col]
            m[i, col] = c * mi - s * mj
            m[j, col] = s * mi + c * mj


@njit(cache=True)
def kac_inverse_matrix(ii, jj, cs, sn, m):
    cols = m.shape[1]
    for t in range(ii.shape[0] - 1, -1, -1):
        i = ii[t]
        j = jj[t]
        c = cs[t]
        s = sn[t]
        for col in range(cols):
            mi = m[i, col]
            mj = m[j, col]
            m[i, col] = c * mi + s * mj
            m[j, col] = c * mj - s * mi


def py_kac_forward(ii, jj, cs, sn, v):
    """Reference loop used to pin down the numba kernel bit-for-bit."""
    for t in range(ii.shape[0]):
        i = int(ii[t])
        j = int(jj[t])
        vi = float(v[i])
        vj = float(v[j])
        c = float(cs[t])
        s = float(sn[t])
        v[i] = c * vi - s * vj
        v[j] = s * vi + c * vj


# ---------------------------------------------------------------------------
# Packed F_2 linear algebra (rows as uint64 bit masks, n <= 64).
# ---------------------------------------------------------------------------

@njit(cache=True)
def rank_f2(words, n):
    w = words.copy()
    rank = 0
    for col in range(n):
        mask = np.uint64(1) << np.uint64(col)
        pivot = -1
        for row in range(rank, n):
            if w[row] & mask:
                pivot = row
                break
        if pivot < 0:
            continue
        tmp = w[rank]
        w[rank] = w[pivot]
        w[pivot] = tmp
        for row in range(pivot + 1, n):
            if w[row] & mask:
                w[row] ^= w[rank]
        rank += 1
    return rank


@njit(cache=True)
def count_singular_f2(batch, n):
    cnt = 0
    for b in range(batch.shape[0]):
        if rank_f2(batch[b], n) < n:
            cnt += 1
    return cnt


@njit(cache=True)
def matmul_f2(a_words, b_words, n):
    out = np.zeros(n, dtype=np.uint64)
    for r in range(n):
        acc = np.uint64(0)
        row = a_words[r]
        for k in range(n):
            if row & (np.uint64(1) << np.uint64(k)):
                acc ^= b_words[k]
        out[r] = acc
    return out


# ---------------------------------------------------------------------------
# Modular dense helpers for high-volume reduction loops.
# ---------------------------------------------------------------------------

@njit(cache=True)
def _inv_mod(a, p):
    # Extended Euclid; a != 0 mod p.
    t, new_t = 0, 1
    r, new_r = p, a % p
    while new_r != 0:
        q = r // new_r
        t, new_t = new_t, t - q * new_t
        r, new_r = new_r, r - q * new_r
    return t % p


@njit(cache=True)
def det_mod(a, p):
    """Determinant of int64 matrix mod p; destroys its copy."""
    m = a % p
    n = m.shape[0]
    det = 1
    for col in range(n):
        pivot = -1
        for row in range(col, n):
            if m[row, col] != 0:
                pivot = row
                break
        if pivot < 0:
            return 0
        if pivot != col:
            for j in range(n):
                tmp = m[col, j]
                m[col, j] = m[pivot, j]
                m[pivot, j] = tmp
            det = p - det if det != 0 else 0
        pval = m[col, col]
        det = det * pval % p
        inv = _inv_mod(pval, p)
        for row in range(col + 1, n):
            f = m[row, col] * inv % p
            if f:
                for j in range(col, n):
                    m[row, j] = (m[row, j] - f * m[col, j]) % p
    return det


@njit(cache=True)
def matmul_small_mod(a, b, p):
    n, k = a.shape
    m = b.shape[1]
    out = np.zeros((n, m), dtype=np.int64)
    for i in range(n):
        for t in range(k):
            v = a[i, t]
            if v:
                for j in range(m):
                    out[i, j] = (out[i, j] + v * b[t, j]) % p
    return out
