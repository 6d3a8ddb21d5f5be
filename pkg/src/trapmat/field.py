"""Prime-field contexts and scalar arithmetic.

A `FieldContext` carries the modulus every finite-field object in the
library is tied to.  Moduli are capped below 2**31 so products of residues
fit a 64-bit word, keeping the vectorized kernels free of arbitrary
precision arithmetic.
"""

from __future__ import annotations

from .errors import ZeroInverse

MAX_MODULUS = 2**31

# Deterministic Miller-Rabin witnesses, sufficient for all n < 3,215,031,751
# (covers the full modulus range).
_MR_WITNESSES = (2, 3, 5, 7)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin primality test for n < 2**31."""
    if n < 2:
        return False
    for small in (2, 3, 5, 7, 11, 13):
        if n == small:
            return True
        if n % small == 0:
            return False
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


class FieldContext:
    """The prime field F_p, 2 <= p < 2**31."""

    __slots__ = ("p",)

    def __init__(self, p: int):
        p = int(p)
        if not (2 <= p < MAX_MODULUS):
            raise ValueError(f"modulus must be in [2, 2**31), got {p}")
        if not is_prime(p):
            raise ValueError(f"modulus must be prime, got {p}")
        self.p = p

    # Scalar operations ---------------------------------------------------

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.p

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.p

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.p

    def neg(self, a: int) -> int:
        return (-a) % self.p

    def inv(self, a: int) -> int:
        a %= self.p
        if a == 0:
            raise ZeroInverse("0 has no multiplicative inverse")
        return pow(a, self.p - 2, self.p)

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def pow(self, a: int, e: int) -> int:
        return pow(a % self.p, e, self.p)

    def __eq__(self, other) -> bool:
        return isinstance(other, FieldContext) and other.p == self.p

    def __hash__(self) -> int:
        return hash(("FieldContext", self.p))

    def __repr__(self) -> str:
        return f"FieldContext(p={self.p})"
