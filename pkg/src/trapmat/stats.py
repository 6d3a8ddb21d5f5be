"""Statistical sanity checks for the trapdoor families.

These are necessary-condition tests (entry distributions, rank frequency,
orthogonality), useful for catching sampler bugs.  Passing them is not a
pseudorandomness claim; the indistinguishability contracts are not
machine-checkable and live in the parameter documentation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from . import _kernels
from .field import FieldContext
from .haar import HaarInvariantSampler, gaussian_spectrum_sampler, goe_spectrum_sampler, haar_invariant_sample
from .kac import kac_materialize, kac_sample
from .lpn import LpnSchedule, lpn_materialize, lpn_sample
from .matrices import sample_uniform
from .mceliece import mce_materialize, mce_sample
from .reference import ref_rank
from .rng import Rng

SIGNIFICANCE = 1e-3
STAT_FAMILIES = ("lpn", "mceliece", "kac", "haar2", "haarsym", "uniform", "zeros")


@dataclass
class StatReport:
    test: str
    statistic: float
    threshold: float
    passed: bool
    samples: int
    seed: int

    def __post_init__(self):
        if self.passed != bool(self.statistic <= self.threshold):
            raise ValueError("pass flag inconsistent with statistic vs threshold")

    def to_json_dict(self) -> dict:
        return {
            "report": "stat",
            "test": self.test,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "passed": self.passed,
            "samples": self.samples,
            "seed": self.seed,
        }


def _make_stat(test: str, statistic: float, threshold: float, samples: int, seed: int) -> StatReport:
    return StatReport(
        test=test,
        statistic=float(statistic),
        threshold=float(threshold),
        passed=bool(statistic <= threshold),
        samples=samples,
        seed=seed,
    )


def full_rank_probability(p: int, n: int) -> float:
    """Probability that a uniform n x n matrix over F_p has full rank."""
    prob = 1.0
    for i in range(1, n + 1):
        prob *= 1.0 - p ** (-i)
    return prob


def _field_sampler(family: str, n: int, ctx: FieldContext):
    if family == "lpn":
        return lambda rng: lpn_materialize(lpn_sample(LpnSchedule(), n, ctx, rng)).data
    if family == "mceliece":
        return lambda rng: mce_materialize(mce_sample(n, ctx, rng)).data
    if family == "uniform":
        return lambda rng: sample_uniform(rng, n, n, ctx).data
    if family == "zeros":
        return lambda rng: np.zeros((n, n), dtype=np.int64)
    raise ValueError(f"not a field family: {family!r}")


def chi_square_entrywise(family: str, n: int, trials: int, seed: int, p: int) -> StatReport:
    """Pooled entry frequencies of `trials` samples against uniform."""
    ctx = FieldContext(p)
    sampler = _field_sampler(family, n, ctx)
    rng = Rng(seed, (1,))
    counts = np.zeros(p, dtype=np.int64)
    for t in range(trials):
        data = sampler(rng.split(t))
        counts += np.bincount(data.reshape(-1), minlength=p)
    total = counts.sum()
    expected = total / p
    stat = float(np.sum((counts - expected) ** 2 / expected))
    threshold = float(chi2.isf(SIGNIFICANCE, p - 1))
    return _make_stat(f"{family}-chi2-entrywise", stat, threshold, trials, seed)


def rank_frequency(family: str, n: int, trials: int, seed: int, p: int) -> StatReport:
    """|full-rank frequency - uniform rate|; threshold 0.05 plus 3 sigma."""
    ctx = FieldContext(p)
    sampler = _field_sampler(family, n, ctx)
    rng = Rng(seed, (2,))
    full = 0
    for t in range(trials):
        data = sampler(rng.split(t))
        if p == 2 and n <= 64:
            words = ((data.astype(np.uint64)) << np.arange(n, dtype=np.uint64)).sum(
                axis=1, dtype=np.uint64
            )
            r = int(_kernels.rank_f2(words, n))
        else:
            from .matrices import dense_trusted

            r = ref_rank(dense_trusted(ctx, data))
        if r == n:
            full += 1
    expected = full_rank_probability(p, n)
    sigma = math.sqrt(max(expected * (1 - expected), 1e-12) / trials)
    stat = abs(full / trials - expected)
    return _make_stat(f"{family}-full-rank", stat, 0.05 + 3 * sigma, trials, seed)


def kac_column_checks(n: int, trials: int, seed: int) -> list[StatReport]:
    """Column norms of the materialized walk, plus pairwise orthogonality."""
    rng = Rng(seed, (3,))
    worst_norm = 0.0
    worst_dot = 0.0
    pairs = 0
    for t in range(min(trials, 10)):
        chain = kac_sample(n, rng.split(t))
        q = kac_materialize(chain)
        norms = np.sqrt(np.sum(q * q, axis=0))
        worst_norm = max(worst_norm, float(np.max(np.abs(norms - 1.0))))
        gen = rng.split(1000 + t).generator
        for _ in range(10):
            i, j = gen.choice(n, size=2, replace=False)
            worst_dot = max(worst_dot, abs(float(q[:, i] @ q[:, j])))
            pairs += 1
    return [
        _make_stat("kac-column-norms", worst_norm, 1e-9, min(trials, 10), seed),
        _make_stat("kac-column-orthogonality", worst_dot, 6.0 / math.sqrt(n), pairs, seed),
    ]


def haar_checks(mode: str, n: int, trials: int, seed: int) -> list[StatReport]:
    """Frobenius mass must match the sampled spectrum; symmetric mode must
    produce symmetric matrices."""
    rng = Rng(seed, (4,))
    diag_sampler = gaussian_spectrum_sampler if mode == "two-sided" else goe_spectrum_sampler
    sampler = HaarInvariantSampler(diag_sampler, mode)
    worst_frob = 0.0
    worst_sym = 0.0
    runs = min(trials, 5)
    for t in range(runs):
        td = haar_invariant_sample(sampler, n, rng.split(t))
        m = td.materialize()
        frob = float(np.sqrt(np.sum(m * m)))
        target = float(np.sqrt(np.sum(td.diag**2)))
        worst_frob = max(worst_frob, abs(frob - target) / max(target, 1e-12))
        if mode == "symmetric":
            worst_sym = max(worst_sym, float(np.max(np.abs(m - m.T))))
    name = "haar2" if mode == "two-sided" else "haarsym"
    out = [_make_stat(f"{name}-frobenius-spectrum", worst_frob, 1e-9, runs, seed)]
    if mode == "symmetric":
        out.append(_make_stat(f"{name}-symmetry", worst_sym, 1e-9, runs, seed))
    return out


def run_stats(family: str, n: int, trials: int, seed: int, p: int = 2) -> list[StatReport]:
    if trials < 100:
        raise ValueError("trials must be >= 100")
    if family in ("lpn", "mceliece", "uniform", "zeros"):
        return [
            chi_square_entrywise(family, n, max(1, trials // 100), seed, p),
            rank_frequency(family, n, trials, seed, p),
        ]
    if family == "kac":
        return kac_column_checks(n, trials, seed)
    if family == "haar2":
        return haar_checks("two-sided", n, trials, seed)
    if family == "haarsym":
        return haar_checks("symmetric", n, trials, seed)
    raise ValueError(f"unknown stats family {family!r}")
