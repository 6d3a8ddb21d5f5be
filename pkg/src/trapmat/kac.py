"""Kac-walk rotation chains: the real-valued trapdoor primitive.

A chain of T uniformly random Givens rotations applied in order.  Each step
touches two coordinates, so applying the chain costs exactly 4T multiplies
and 2T additions, and every step is trivially invertible by negating the
angle and reversing the order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import BadDim, ShapeError
from .opcount import add_ops
from .rng import Rng

ORTHO_TOL = 1e-12


@dataclass(frozen=True)
class Rotation:
    """Plane rotation on coordinates (i, j), stored as (cos, sin)."""

    i: int
    j: int
    c: float
    s: float

    def __post_init__(self):
        if self.i == self.j:
            raise BadDim("rotation indices must be distinct")
        if abs(self.c * self.c + self.s * self.s - 1.0) > ORTHO_TOL:
            raise ValueError("cos^2 + sin^2 must equal 1 within 1e-12")

    @classmethod
    def from_angle(cls, i: int, j: int, theta: float) -> "Rotation":
        return cls(i, j, math.cos(theta), math.sin(theta))


class RotationChain:
    """Ordered list of rotations in dimension n, stored as parallel arrays."""

    __slots__ = ("n", "ii", "jj", "cs", "sn")

    def __init__(self, n: int, ii, jj, cs, sn):
        if n < 2:
            raise BadDim(f"chain dimension must be >= 2, got {n}")
        ii = np.ascontiguousarray(ii, dtype=np.int32)
        jj = np.ascontiguousarray(jj, dtype=np.int32)
        cs = np.ascontiguousarray(cs, dtype=np.float64)
        sn = np.ascontiguousarray(sn, dtype=np.float64)
        if not (ii.shape == jj.shape == cs.shape == sn.shape) or ii.ndim != 1:
            raise ShapeError("chain arrays must be 1-d and equal length")
        if ii.shape[0]:
            if ii.min() < 0 or ii.max() >= n or jj.min() < 0 or jj.max() >= n:
                raise ValueError("rotation index out of range")
            if np.any(ii == jj):
                raise ValueError("rotation indices must be distinct")
            if np.max(np.abs(cs * cs + sn * sn - 1.0)) > ORTHO_TOL:
                raise ValueError("cos^2 + sin^2 must equal 1 within 1e-12")
        for a in (ii, jj, cs, sn):
            a.flags.writeable = False
        self.n = n
        self.ii, self.jj, self.cs, self.sn = ii, jj, cs, sn

    @property
    def steps(self) -> int:
        return self.ii.shape[0]

    def __len__(self) -> int:
        return self.steps

    def rotation(self, t: int) -> Rotation:
        return Rotation(int(self.ii[t]), int(self.jj[t]), float(self.cs[t]), float(self.sn[t]))

    def __repr__(self) -> str:
        return f"RotationChain(n={self.n}, T={self.steps})"


def default_steps(n: int) -> int:
    """Default walk length n * ceil(log2 n)^2."""
    return n * math.ceil(math.log2(max(n, 2))) ** 2


def kac_sample(n: int, rng: Rng, T: int | None = None) -> RotationChain:
    """T i.i.d. rotations with uniform index pairs and uniform angles."""
    if n < 2:
        raise BadDim(f"dimension must be >= 2, got {n}")
    if T is None:
        T = default_steps(n)
    if T < 0:
        raise ValueError(f"step count must be >= 0, got {T}")
    ii = rng.integers(0, n, size=T).astype(np.int32)
    jj = rng.integers(0, n - 1, size=T).astype(np.int32)
    jj = np.where(jj >= ii, jj + 1, jj).astype(np.int32)
    theta = rng.uniform(0.0, 2.0 * math.pi, size=T)
    return RotationChain(n, ii, jj, np.cos(theta), np.sin(theta))


def _check_vec(chain: RotationChain, v) -> np.ndarray:
    out = np.array(v, dtype=np.float64)
    if out.ndim != 1 or out.shape[0] != chain.n:
        raise ShapeError(f"expected length-{chain.n} vector")
    return out


def kac_apply(chain: RotationChain, v) -> np.ndarray:
    out = _check_vec(chain, v)
    _kernels.kac_forward(chain.ii, chain.jj, chain.cs, chain.sn, out)
    add_ops(mults=4 * chain.steps, adds=2 * chain.steps)
    return out


def kac_apply_inverse(chain: RotationChain, v) -> np.ndarray:
    out = _check_vec(chain, v)
    _kernels.kac_inverse(chain.ii, chain.jj, chain.cs, chain.sn, out)
    add_ops(mults=4 * chain.steps, adds=2 * chain.steps)
    return out


def kac_materialize(chain: RotationChain) -> np.ndarray:
    """Dense n x n state of the walk (applies the chain to the identity)."""
    m = np.eye(chain.n)
    _kernels.kac_forward_matrix(chain.ii, chain.jj, chain.cs, chain.sn, m)
    add_ops(mults=4 * chain.steps * chain.n, adds=2 * chain.steps * chain.n)
    return m


def kac_materialize_inverse(chain: RotationChain) -> np.ndarray:
    m = np.eye(chain.n)
    _kernels.kac_inverse_matrix(chain.ii, chain.jj, chain.cs, chain.sn, m)
    add_ops(mults=4 * chain.steps * chain.n, adds=2 * chain.steps * chain.n)
    return m
