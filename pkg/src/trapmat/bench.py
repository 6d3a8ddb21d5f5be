"""Matvec benchmarking: op counts, wall-clock medians, fitted slopes.

Wall time is the median of `reps` runs after one warm-up on a monotonic
clock; the scalar-op counters are the noise-free signal that the scaling
tests bind to.  Slopes are least squares over log2(n).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .field import FieldContext
from .haar import HaarInvariantSampler, all_ones_diag, haar_invariant_sample
from .kac import default_steps, kac_apply, kac_sample
from .lpn import LpnSchedule, lpn_apply, lpn_sample, lpn_sample_base
from .matrices import FVector, dense_matvec, sample_uniform, sample_uniform_vector
from .mceliece import mce_apply, mce_sample
from .opcount import count_ops
from .rng import Rng

FIELD_FAMILIES = ("lpn", "lpn-base", "mceliece")
REAL_FAMILIES = ("kac", "haar2", "haarsym")
BENCH_FAMILIES = FIELD_FAMILIES + REAL_FAMILIES


@dataclass
class BenchPoint:
    n: int
    scalar_ops: int
    mults: int
    wall_ns_median: int


@dataclass
class BenchSeries:
    label: str
    points: list[BenchPoint] = field(default_factory=list)

    def slope_intercept(self, key) -> tuple[float, float]:
        xs = np.log2([pt.n for pt in self.points])
        ys = np.log2([max(key(pt), 1) for pt in self.points])
        slope, intercept = np.polyfit(xs, ys, 1)
        return float(slope), float(intercept)


@dataclass
class BenchReport:
    family: str
    modulus: int | str
    sizes: list[int]
    reps: int
    seed: int
    params: dict
    trapdoor: BenchSeries = None
    dense: BenchSeries = None

    def __post_init__(self):
        if len(self.sizes) < 3:
            raise ValueError("need at least 3 sizes")
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ValueError("sizes must be strictly increasing")

    def to_json_dict(self) -> dict:
        def series(s: BenchSeries) -> dict:
            slope_ops, intercept_ops = s.slope_intercept(lambda pt: pt.scalar_ops)
            slope_wall, intercept_wall = s.slope_intercept(lambda pt: pt.wall_ns_median)
            return {
                "label": s.label,
                "points": [
                    {
                        "n": pt.n,
                        "scalar_ops": pt.scalar_ops,
                        "mults": pt.mults,
                        "wall_ns_median": pt.wall_ns_median,
                    }
                    for pt in s.points
                ],
                "slope_ops": slope_ops,
                "intercept_ops": intercept_ops,
                "slope_wall": slope_wall,
                "intercept_wall": intercept_wall,
            }

        return {
            "report": "bench",
            "family": self.family,
            "modulus": self.modulus,
            "sizes": self.sizes,
            "reps": self.reps,
            "seed": self.seed,
            "params": self.params,
            "trapdoor": series(self.trapdoor),
            "dense": series(self.dense),
        }


def _median_wall_ns(fn, reps: int) -> int:
    fn()  # warm-up
    times = []
    for _ in range(reps):
        t0 = time.perf_counter_ns()
        fn()
        times.append(time.perf_counter_ns() - t0)
    return int(sorted(times)[len(times) // 2])


def _build_apply(family: str, n: int, ctx: FieldContext | None, rng: Rng):
    """Returns (apply_fn, params) where apply_fn() performs one matvec."""
    if family == "lpn":
        td = lpn_sample(LpnSchedule(), n, ctx, rng.split(0))
        v = sample_uniform_vector(rng.split(1), n, ctx)
        return lambda: lpn_apply(td, v), {"levels": td.levels(), "nnz": td.total_nnz()}
    if family == "lpn-base":
        # noise_c=1 keeps the sparse term within the n^1.5 polylog envelope
        # at these sizes.
        td = lpn_sample_base(n, ctx, rng.split(0), noise_c=1.0)
        v = sample_uniform_vector(rng.split(1), n, ctx)
        return lambda: lpn_apply(td, v), {"k": td.levels()[-1], "nnz": td.total_nnz()}
    if family == "mceliece":
        td = mce_sample(n, ctx, rng.split(0))
        v = sample_uniform_vector(rng.split(1), n, ctx)
        return lambda: mce_apply(td, v), {"k": td.k, "b": td.b}
    if family == "kac":
        chain = kac_sample(n, rng.split(0))
        v = rng.split(1).standard_normal(n)
        return lambda: kac_apply(chain, v), {"T": chain.steps}
    if family in ("haar2", "haarsym"):
        mode = "two-sided" if family == "haar2" else "symmetric"
        sampler = HaarInvariantSampler(all_ones_diag, mode)
        td = haar_invariant_sample(sampler, n, rng.split(0))
        v = rng.split(1).standard_normal(n)
        return lambda: td.apply(v), {"T": td.left.steps, "mode": mode}
    raise ValueError(f"unknown bench family {family!r}")


def _build_dense_apply(family: str, n: int, ctx: FieldContext | None, rng: Rng):
    if family in FIELD_FAMILIES:
        mat = sample_uniform(rng.split(2), n, n, ctx)
        v = sample_uniform_vector(rng.split(3), n, ctx)
        return lambda: dense_matvec(mat, v)
    mat = rng.split(2).standard_normal((n, n))
    v = rng.split(3).standard_normal(n)

    def apply_dense():
        from .opcount import add_ops

        add_ops(mults=n * n, adds=n * (n - 1))
        return mat @ v

    return apply_dense


def run_bench(
    family: str,
    sizes: list[int],
    reps: int = 5,
    seed: int = 0,
    p: int = 257,
) -> BenchReport:
    if family not in BENCH_FAMILIES:
        raise ValueError(f"unknown bench family {family!r}")
    is_field = family in FIELD_FAMILIES
    ctx = FieldContext(p) if is_field else None
    report = BenchReport(
        family=family,
        modulus=p if is_field else "real",
        sizes=list(sizes),
        reps=reps,
        seed=seed,
        params={},
    )
    trapdoor = BenchSeries("trapdoor")
    dense = BenchSeries("dense")
    root = Rng(seed)
    for idx, n in enumerate(sizes):
        rng = root.split(idx)
        apply_fn, params = _build_apply(family, n, ctx, rng)
        report.params[str(n)] = params
        with count_ops() as ops:
            apply_fn()
        wall = _median_wall_ns(apply_fn, reps)
        trapdoor.points.append(BenchPoint(n, ops.total, ops.mults, wall))
        dense_fn = _build_dense_apply(family, n, ctx, rng)
        with count_ops() as dops:
            dense_fn()
        dwall = _median_wall_ns(dense_fn, reps)
        dense.points.append(BenchPoint(n, dops.total, dops.mults, dwall))
    report.trapdoor = trapdoor
    report.dense = dense
    return report
