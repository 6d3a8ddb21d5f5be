"""Scalar-operation instrumentation.

Kernels report how many field/float multiplications and additions they
perform via `add_ops`; benchmarks wrap work in `count_ops()` to collect the
noise-free cost signal that the scaling tests bind to.  Counters are
bulk-incremented (a dense n*m matvec reports n*m multiplies in one call),
which matches exactly what the vectorized kernels execute.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, field


@dataclass
class OpCount:
    mults: int = 0
    adds: int = 0

    @property
    def total(self) -> int:
        return self.mults + self.adds


_stack: list[OpCount] = []


def add_ops(mults: int = 0, adds: int = 0) -> None:
    for c in _stack:
        c.mults += mults
        c.adds += adds


@contextmanager
def count_ops():
    c = OpCount()
    _stack.append(c)
    try:
        yield c
    finally:
        _stack.remove(c)
