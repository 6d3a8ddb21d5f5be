"""Circulant matrix-vector multiplication over F_p.

The b x b circulant generated by first row c has C[i, j] = c[(j - i) mod b],
so C.v is a cyclic cross-correlation.  When b is a power of two and
p == 1 (mod 2b) the product runs through a number-theoretic transform in
O(b log b); otherwise a Karatsuba convolution provides an O(b^1.59)
fallback that works for every prime and block size.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError
from .field import FieldContext
from .matrices import FVector
from .opcount import add_ops

_KARATSUBA_LEAF = 32


# ---------------------------------------------------------------------------
# NTT machinery.
# ---------------------------------------------------------------------------

def _find_generator(p: int) -> int:
    """Smallest generator of the multiplicative group of F_p."""
    if p == 2:
        return 1
    factors = []
    m = p - 1
    d = 2
    while d * d <= m:
        if m % d == 0:
            factors.append(d)
            while m % d == 0:
                m //= d
        d += 1
    if m > 1:
        factors.append(m)
    for g in range(2, p):
        if all(pow(g, (p - 1) // q, p) != 1 for q in factors):
            return g
    raise ValueError(f"no generator found for p={p}")


def ntt_available(p: int, b: int) -> bool:
    return b >= 1 and (b & (b - 1)) == 0 and (p - 1) % (2 * b) == 0


class NttPlan:
    """Precomputed radix-2 transform tables for length b over F_p."""

    def __init__(self, p: int, b: int):
        if not ntt_available(p, b):
            raise ValueError(f"NTT unavailable for p={p}, b={b}")
        self.p = p
        self.b = b
        g = _find_generator(p)
        root = pow(g, (p - 1) // b, p)
        self._bitrev = self._bitrev_indices(b)
        self._stage_tw = self._stage_twiddles(root)
        self._stage_tw_inv = self._stage_twiddles(pow(root, p - 2, p))
        self._b_inv = pow(b, p - 2, p)

    @staticmethod
    def _bitrev_indices(b: int) -> np.ndarray:
        bits = max(1, b.bit_length() - 1)
        idx = np.arange(b, dtype=np.int64)
        rev = np.zeros(b, dtype=np.int64)
        for _ in range(bits):
            rev = (rev << 1) | (idx & 1)
            idx >>= 1
        return rev

    def _stage_twiddles(self, root: int) -> list[np.ndarray]:
        tables = []
        length = 2
        while length <= self.b:
            w = pow(root, self.b // length, self.p)
            tw = np.empty(length // 2, dtype=np.int64)
            acc = 1
            for k in range(length // 2):
                tw[k] = acc
                acc = acc * w % self.p
            tables.append(tw)
            length *= 2
        return tables

    def _transform(self, x: np.ndarray, tables: list[np.ndarray]) -> np.ndarray:
        p = self.p
        a = x[..., self._bitrev].copy()
        lead = a.shape[:-1]
        batch = int(np.prod(lead)) if lead else 1
        for tw in tables:
            half = tw.shape[0]
            length = 2 * half
            a = a.reshape(lead + (self.b // length, length))
            u = a[..., :half].copy()
            v = a[..., half:] * tw % p
            a[..., :half] = (u + v) % p
            a[..., half:] = (u - v) % p
            a = a.reshape(lead + (self.b,))
        if self.b > 1:
            add_ops(
                mults=batch * (self.b // 2) * (self.b.bit_length() - 1),
                adds=batch * self.b * (self.b.bit_length() - 1),
            )
        return a

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self._transform(x, self._stage_tw)

    def inverse(self, x: np.ndarray) -> np.ndarray:
        out = self._transform(x, self._stage_tw_inv)
        add_ops(mults=out.size)
        return out * self._b_inv % self.p

    def pointwise(self, fx: np.ndarray, fy: np.ndarray) -> np.ndarray:
        out = fx * fy % self.p
        add_ops(mults=out.size)
        return out


_plan_cache: dict[tuple[int, int], NttPlan] = {}


def get_ntt_plan(p: int, b: int) -> NttPlan:
    key = (p, b)
    plan = _plan_cache.get(key)
    if plan is None:
        plan = _plan_cache[key] = NttPlan(p, b)
    return plan


# ---------------------------------------------------------------------------
# Karatsuba fallback.
# ---------------------------------------------------------------------------

def _schoolbook(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    out = np.zeros(a.shape[0] + b.shape[0] - 1, dtype=np.int64)
    for i in range(a.shape[0]):
        # a[i]*b < 2**62 and out < p, so the sum stays inside int64.
        out[i : i + b.shape[0]] = (out[i : i + b.shape[0]] + a[i] * b) % p
    add_ops(mults=a.shape[0] * b.shape[0], adds=a.shape[0] * b.shape[0])
    return out


def _karatsuba_conv(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    """Linear convolution of equal-padded halves; inputs may differ in length."""
    la, lb = a.shape[0], b.shape[0]
    if la == 0 or lb == 0:
        return np.zeros(max(la + lb - 1, 0), dtype=np.int64)
    if min(la, lb) <= _KARATSUBA_LEAF:
        return _schoolbook(a, b, p)
    half = (max(la, lb) + 1) // 2
    a0, a1 = a[:half], a[half:]
    b0, b1 = b[:half], b[half:]
    z0 = _karatsuba_conv(a0, b0, p)
    z2 = (
        _karatsuba_conv(a1, b1, p)
        if a1.shape[0] and b1.shape[0]
        else np.zeros(0, dtype=np.int64)
    )
    sa = np.zeros(half, dtype=np.int64)
    sa[: a0.shape[0]] = a0
    sa[: a1.shape[0]] = (sa[: a1.shape[0]] + a1) % p
    sb = np.zeros(half, dtype=np.int64)
    sb[: b0.shape[0]] = b0
    sb[: b1.shape[0]] = (sb[: b1.shape[0]] + b1) % p
    add_ops(adds=2 * half)
    zm = _karatsuba_conv(sa, sb, p)
    z1 = zm.copy()
    z1[: z0.shape[0]] = (z1[: z0.shape[0]] - z0) % p
    z1[: z2.shape[0]] = (z1[: z2.shape[0]] - z2) % p
    add_ops(adds=z0.shape[0] + z2.shape[0])
    out = np.zeros(la + lb - 1, dtype=np.int64)
    out[: z0.shape[0]] = z0
    end1 = half + z1.shape[0]
    out[half:end1] = (out[half:end1] + z1) % p
    if z2.shape[0]:
        out[2 * half : 2 * half + z2.shape[0]] = (
            out[2 * half : 2 * half + z2.shape[0]] + z2
        ) % p
    add_ops(adds=z1.shape[0] + z2.shape[0])
    return out


# ---------------------------------------------------------------------------
# Public entry point.
# ---------------------------------------------------------------------------

def _correlation_kernel(first_row: np.ndarray, p: int) -> np.ndarray:
    """Reorder c so the circulant product becomes a cyclic convolution."""
    return np.concatenate((first_row[:1], first_row[1:][::-1]))


def cyclic_convolve(a: np.ndarray, v: np.ndarray, p: int) -> np.ndarray:
    b = a.shape[0]
    if ntt_available(p, b):
        plan = get_ntt_plan(p, b)
        return plan.inverse(plan.pointwise(plan.forward(a), plan.forward(v)))
    lin = _karatsuba_conv(a, v, p)  # length 2b - 1
    out = lin[:b].copy()
    tail = lin[b:]
    if tail.shape[0]:
        out[: tail.shape[0]] = (out[: tail.shape[0]] + tail) % p
        add_ops(adds=tail.shape[0])
    return out % p


def circulant_matvec(first_row: FVector, v: FVector) -> FVector:
    if first_row.ctx != v.ctx:
        raise ShapeError("field mismatch between first row and vector")
    if first_row.n != v.n:
        raise ShapeError(f"length mismatch: {first_row.n} vs {v.n}")
    p = first_row.ctx.p
    kernel = _correlation_kernel(first_row.data, p)
    return FVector(first_row.ctx, cyclic_convolve(kernel, v.data, p))


def circulant_densify(first_row: FVector) -> np.ndarray:
    b = first_row.n
    c = first_row.data
    idx = (np.arange(b)[None, :] - np.arange(b)[:, None]) % b
    return c[idx]
