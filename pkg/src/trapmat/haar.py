"""Trapdoors for rotation-invariant real matrix distributions.

A distribution invariant under rotation of input and output space is
determined by its singular-value law, so sampling a diagonal plus two
independent Kac chains (two-sided mode) reproduces it; a conjugation
-invariant symmetric distribution is determined by its eigenvalue law and
uses one chain applied from both sides (symmetric mode).

Reference spectral decompositions (one-sided Jacobi SVD, cyclic Jacobi
eigensolver) are implemented here at test scale; spectrum samplers for the
common distributions bypass them entirely.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ShapeError, SingularDiag
from .kac import (
    RotationChain,
    kac_apply,
    kac_apply_inverse,
    kac_materialize,
    kac_materialize_inverse,
    kac_sample,
)
from .opcount import add_ops
from .rng import Rng

TWO_SIDED = "two-sided"
SYMMETRIC = "symmetric"


@dataclass(frozen=True)
class HaarInvariantSampler:
    """Recipe for a rotation-invariant distribution: its diagonal law plus
    whether it is two-sided (O1.D.O2) or symmetric (O.D.O^-1)."""

    diag_sampler: Callable[[int, Rng], np.ndarray]
    mode: str = TWO_SIDED

    def __post_init__(self):
        if self.mode not in (TWO_SIDED, SYMMETRIC):
            raise ValueError(f"unknown mode {self.mode!r}")


class RealTrapdoor:
    """Sampled real matrix in factored form: left chain, diagonal, right
    chain (absent right chain means symmetric mode: right = left^-1)."""

    __slots__ = ("left", "diag", "right")

    def __init__(self, left: RotationChain, diag: np.ndarray, right: RotationChain | None):
        diag = np.ascontiguousarray(diag, dtype=np.float64)
        if diag.ndim != 1 or diag.shape[0] != left.n:
            raise ShapeError("diagonal length must match chain dimension")
        if right is not None and right.n != left.n:
            raise ShapeError("left/right chain dimensions differ")
        diag.flags.writeable = False
        self.left = left
        self.diag = diag
        self.right = right

    @property
    def n(self) -> int:
        return self.left.n

    @property
    def symmetric(self) -> bool:
        return self.right is None

    def apply(self, v) -> np.ndarray:
        return real_apply(self, v)

    def apply_inverse(self, v) -> np.ndarray:
        return real_apply_inverse(self, v)

    def materialize(self) -> np.ndarray:
        if self.right is None:
            m = kac_materialize_inverse(self.left)
        else:
            m = kac_materialize(self.right)
        m = self.diag[:, None] * m
        add_ops(mults=m.size)
        _apply_chain_to_matrix(self.left, m)
        return m

    def __repr__(self) -> str:
        mode = SYMMETRIC if self.symmetric else TWO_SIDED
        return f"RealTrapdoor(n={self.n}, mode={mode}, T={self.left.steps})"


def _apply_chain_to_matrix(chain: RotationChain, m: np.ndarray) -> None:
    from . import _kernels

    _kernels.kac_forward_matrix(chain.ii, chain.jj, chain.cs, chain.sn, m)
    add_ops(mults=4 * chain.steps * m.shape[1], adds=2 * chain.steps * m.shape[1])


def haar_invariant_sample(
    sampler: HaarInvariantSampler, n: int, rng: Rng, T: int | None = None
) -> RealTrapdoor:
    diag = np.ascontiguousarray(sampler.diag_sampler(n, rng.split(0)), dtype=np.float64)
    if diag.shape != (n,):
        raise ShapeError(f"diag_sampler returned shape {diag.shape}, wanted ({n},)")
    left = kac_sample(n, rng.split(1), T)
    right = kac_sample(n, rng.split(2), T) if sampler.mode == TWO_SIDED else None
    return RealTrapdoor(left, diag, right)


def real_apply(td: RealTrapdoor, v) -> np.ndarray:
    if td.right is not None:
        w = kac_apply(td.right, v)
    else:
        w = kac_apply_inverse(td.left, v)
    w *= td.diag
    add_ops(mults=td.n)
    return kac_apply(td.left, w)


def real_apply_inverse(td: RealTrapdoor, v) -> np.ndarray:
    if np.min(np.abs(td.diag)) == 0.0:
        raise SingularDiag("inverse application requires a nonzero diagonal")
    w = kac_apply_inverse(td.left, v)
    w /= td.diag
    add_ops(mults=td.n)
    if td.right is not None:
        return kac_apply_inverse(td.right, w)
    return kac_apply(td.left, w)


# ---------------------------------------------------------------------------
# Diagonal-law samplers.
# ---------------------------------------------------------------------------

def all_ones_diag(n: int, rng: Rng) -> np.ndarray:
    return np.ones(n)


def fixed_diag(values) -> Callable[[int, Rng], np.ndarray]:
    arr = np.ascontiguousarray(values, dtype=np.float64)

    def sampler(n: int, rng: Rng) -> np.ndarray:
        if arr.shape != (n,):
            raise ShapeError(f"fixed diagonal has length {arr.shape[0]}, wanted {n}")
        return arr.copy()

    return sampler


def gaussian_spectrum_sampler(n: int, rng: Rng) -> np.ndarray:
    """Singular values of an n x n i.i.d. standard normal matrix, descending.

    Reference path: draws the matrix and runs the in-repo Jacobi SVD, so the
    cost is O(n^3) at sampling time only.
    """
    a = rng.standard_normal((n, n))
    if n == 1:
        return np.abs(a[0])
    return jacobi_singular_values(a)


def goe_spectrum_sampler(n: int, rng: Rng) -> np.ndarray:
    """Eigenvalues of (A + A^T)/sqrt(2) for i.i.d. normal A, descending."""
    a = rng.standard_normal((n, n))
    sym = (a + a.T) / np.sqrt(2.0)
    if n == 1:
        return sym[0]
    return jacobi_eigenvalues(sym)


# ---------------------------------------------------------------------------
# Reference spectral decompositions (test scale, n <= 512).
# ---------------------------------------------------------------------------

def jacobi_singular_values(a: np.ndarray, tol: float = 1e-13, max_sweeps: int = 60) -> np.ndarray:
    """One-sided Jacobi: orthogonalize column pairs until convergence; the
    singular values are the resulting column norms."""
    u = np.array(a, dtype=np.float64)
    n = u.shape[1]
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                x = u[:, p]
                y = u[:, q]
                alpha = float(x @ x)
                beta = float(y @ y)
                gamma = float(x @ y)
                denom = np.sqrt(alpha * beta)
                if denom == 0.0:
                    continue
                off = max(off, abs(gamma) / denom)
                if abs(gamma) <= tol * denom:
                    continue
                zeta = (beta - alpha) / (2.0 * gamma)
                t = np.sign(zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                if zeta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                xp = c * x - s * y
                yq = s * x + c * y
                u[:, p] = xp
                u[:, q] = yq
        if off < tol:
            break
    sv = np.sqrt(np.sum(u * u, axis=0))
    return np.sort(sv)[::-1].copy()


def jacobi_eigenvalues(sym: np.ndarray, tol: float = 1e-12, max_sweeps: int = 60) -> np.ndarray:
    """Cyclic Jacobi eigenvalues of a symmetric matrix, descending."""
    a = np.array(sym, dtype=np.float64)
    n = a.shape[0]
    scale = max(1.0, float(np.max(np.abs(a))))
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off < tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                if tau == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p] = rot_p
                a[:, q] = rot_q
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :] = rot_p
                a[q, :] = rot_q
        scale = max(1.0, float(np.max(np.abs(a))))
    return np.sort(np.diag(a))[::-1].copy()
