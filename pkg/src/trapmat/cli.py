"""`tdm` command line: sample/apply trapdoors, benchmark, stats, reductions.

Machine-readable JSON goes to stdout (one object per line); human-oriented
summaries go to stderr.  All commands are reproducible byte-for-byte from
(seed, flags), timing fields excepted.  TDM_SEED serves as the seed
fallback when --seed is omitted.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from .bench import BENCH_FAMILIES, run_bench
from .errors import ReductionFailed, TrapmatError
from .field import FieldContext
from .haar import (
    HaarInvariantSampler,
    RealTrapdoor,
    all_ones_diag,
    gaussian_spectrum_sampler,
    goe_spectrum_sampler,
    haar_invariant_sample,
)
from .kac import RotationChain, kac_apply, kac_sample
from .lpn import LpnSchedule, LpnTrapdoor, lpn_apply, lpn_sample, lpn_sample_base
from .matrices import DenseMatrix, FVector, sample_uniform, sample_uniform_vector
from .mceliece import McElieceTrapdoor, mce_apply, mce_sample
from .reductions import (
    AlwaysSingularAnswer,
    AlwaysWrong,
    EntrywiseCorrupt,
    ExactWithProb,
    Honest,
    ReductionConfig,
    make_fault_oracle,
    wc_det_f2,
    wc_det_largep,
    wc_invert,
    wc_matmul_errorcorrect,
    wc_matmul_exact,
    wc_solve,
)
from .reference import ref_det, ref_matmul, ref_solve
from .rng import Rng
from .serialize import dump_file, load_file
from .stats import STAT_FAMILIES, run_stats

SAMPLE_FAMILIES = ("lpn", "mceliece", "kac", "haar2", "haarsym")
REDUCE_KINDS = ("matmul", "matmulec", "invert", "solve", "detp", "det2")


def _emit(doc: dict) -> None:
    print(json.dumps(doc))


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def _seed_from(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("TDM_SEED")
    return int(env) if env else 0


# ---------------------------------------------------------------------------
# sample
# ---------------------------------------------------------------------------

def cmd_sample(args) -> int:
    seed = _seed_from(args)
    rng = Rng(seed)
    family = args.family
    n = args.n
    doc: dict = {"command": "sample", "family": family, "n": n, "seed": seed}
    if family in ("lpn", "mceliece"):
        ctx = FieldContext(args.p)
        doc["modulus"] = args.p
    else:
        doc["modulus"] = "real"
    if family == "lpn":
        if args.base:
            td = lpn_sample_base(n, ctx, rng, k=args.k, noise_c=args.noise_c)
        else:
            schedule = LpnSchedule(
                epsilon=args.eps_level,
                delta=args.delta,
                leaf_threshold=args.leaf_threshold,
            )
            td = lpn_sample(schedule, n, ctx, rng)
        doc.update(levels=td.levels(), nnz=td.total_nnz(), base_mode=bool(args.base))
        obj = td
    elif family == "mceliece":
        td = mce_sample(n, ctx, rng, k=args.k, b=args.b, recurse=args.recurse)
        doc.update(k=td.k, b=td.b, columns=len(td.columns), recursive=bool(args.recurse))
        obj = td
    elif family == "kac":
        chain = kac_sample(n, rng, T=args.steps)
        doc.update(T=chain.steps)
        obj = chain
    else:
        mode = "two-sided" if family == "haar2" else "symmetric"
        diag_kind = args.diag or ("gaussian" if family == "haar2" else "goe")
        if diag_kind == "ones":
            diag_sampler = all_ones_diag
        elif diag_kind == "gaussian":
            diag_sampler = gaussian_spectrum_sampler
        elif diag_kind == "goe":
            diag_sampler = goe_spectrum_sampler
        else:
            _note(f"unknown diagonal law {diag_kind!r}")
            return 2
        if diag_kind != "ones" and n > 512:
            _note("reference spectrum samplers are capped at n=512; use --diag ones")
            return 2
        sampler = HaarInvariantSampler(diag_sampler, mode)
        td = haar_invariant_sample(sampler, n, rng, T=args.steps)
        doc.update(T=td.left.steps, mode=mode, diag=diag_kind)
        obj = td
    if args.out:
        dump_file(obj, args.out)
        doc["out"] = args.out
    _emit(doc)
    _note(f"sampled {family} n={n} seed={seed}" + (f" -> {args.out}" if args.out else ""))
    return 0


# ---------------------------------------------------------------------------
# apply
# ---------------------------------------------------------------------------

def _apply_loaded(obj, vec: np.ndarray):
    if isinstance(obj, LpnTrapdoor):
        return lpn_apply(obj, FVector(obj.ctx, vec)).data
    if isinstance(obj, McElieceTrapdoor):
        return mce_apply(obj, FVector(obj.ctx, vec)).data
    if isinstance(obj, RotationChain):
        return kac_apply(obj, vec)
    if isinstance(obj, RealTrapdoor):
        return obj.apply(vec)
    raise TrapmatError(f"file does not contain an applicable trapdoor: {type(obj).__name__}")


def cmd_apply(args) -> int:
    seed = _seed_from(args)
    obj = load_file(args.infile)
    is_field = isinstance(obj, (LpnTrapdoor, McElieceTrapdoor))
    n = obj.logical_dim if is_field else obj.n
    vectors: list[np.ndarray] = []
    if args.vec:
        parts = [float(x) for x in args.vec.split(",")]
        v = np.array(parts)
        vectors.append(v.astype(np.int64) if is_field else v)
    else:
        rng = Rng(seed, (7,))
        for i in range(args.count):
            if is_field:
                vectors.append(rng.split(i).integers(0, obj.ctx.p, size=n))
            else:
                vectors.append(rng.split(i).standard_normal(n))
    outputs = []
    for v in vectors:
        out = _apply_loaded(obj, v)
        outputs.append([int(x) for x in out] if is_field else [float(x) for x in out])
    doc = {
        "command": "apply",
        "kind": type(obj).__name__,
        "n": n,
        "seed": seed,
        "count": len(vectors),
        "outputs": outputs,
    }
    if not args.vec:
        doc["inputs"] = [
            [int(x) for x in v] if is_field else [float(x) for x in v] for v in vectors
        ]
    _emit(doc)
    _note(f"applied {type(obj).__name__} to {len(vectors)} vector(s)")
    return 0


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

def cmd_bench(args) -> int:
    seed = _seed_from(args)
    sizes = [int(s) for s in args.sizes.split(",")]
    if len(sizes) < 3:
        _note("need at least 3 sizes")
        return 2
    report = run_bench(args.family, sizes, reps=args.reps, seed=seed, p=args.p)
    doc = report.to_json_dict()
    _emit(doc)
    _note(
        "bench %s: trapdoor ops slope %.3f, dense ops slope %.3f"
        % (args.family, doc["trapdoor"]["slope_ops"], doc["dense"]["slope_ops"])
    )
    return 0


# ---------------------------------------------------------------------------
# stats
# ---------------------------------------------------------------------------

def cmd_stats(args) -> int:
    seed = _seed_from(args)
    reports = run_stats(args.family, args.n, args.trials, seed, p=args.p)
    all_pass = True
    for r in reports:
        _emit(r.to_json_dict())
        all_pass = all_pass and r.passed
        _note(
            "%-32s %-4s statistic=%.6g threshold=%.6g"
            % (r.test, "PASS" if r.passed else "FAIL", r.statistic, r.threshold)
        )
    return 0 if all_pass else 1


# ---------------------------------------------------------------------------
# reduce
# ---------------------------------------------------------------------------

def _parse_model(text: str):
    name, _, param = text.partition(":")
    if name == "honest":
        return Honest()
    if name == "exactprob":
        return ExactWithProb(float(param))
    if name == "entrywise":
        return EntrywiseCorrupt(float(param))
    if name == "alwayswrong":
        return AlwaysWrong()
    if name == "alwayssingular":
        return AlwaysSingularAnswer()
    raise ValueError(f"unknown oracle model {text!r}")


def cmd_reduce(args) -> int:
    seed = _seed_from(args)
    kind = args.kind
    p = 2 if kind == "det2" else args.p
    if kind == "detp" and p <= 2:
        _note("detp requires p > 2")
        return 2
    ctx = FieldContext(p)
    try:
        model = _parse_model(args.model)
    except ValueError as exc:
        _note(str(exc))
        return 2
    n = args.n
    rng = Rng(seed, (11,))
    cfg = ReductionConfig(eps=args.eps, seed=seed)
    if args.c5 is not None:
        cfg.c5 = args.c5
    oracle_kind = {
        "matmul": "matmul",
        "matmulec": "matmul",
        "invert": "invert",
        "solve": "solve",
        "detp": "determinant",
        "det2": "determinant",
    }[kind]
    oracle = make_fault_oracle(oracle_kind, model, ctx, rng.split(0))
    a = sample_uniform(rng.split(1), n, n, ctx)
    if kind == "invert":
        attempt = 2
        while ref_det(a) == 0:
            a = sample_uniform(rng.split(attempt), n, n, ctx)
            attempt += 1
    doc = {
        "command": "reduce",
        "kind": kind,
        "model": args.model,
        "n": n,
        "modulus": p,
        "eps": args.eps,
        "seed": seed,
    }
    t0 = time.perf_counter()
    try:
        if kind == "matmul":
            b = sample_uniform(rng.split(100), n, n, ctx)
            out = wc_matmul_exact(oracle, a, b, cfg)
            verified = out == ref_matmul(a, b)
        elif kind == "matmulec":
            b = sample_uniform(rng.split(100), n, n, ctx)
            out = wc_matmul_errorcorrect(oracle, a, b, cfg)
            verified = out == ref_matmul(a, b)
        elif kind == "invert":
            out = wc_invert(oracle, a, cfg)
            verified = np.array_equal(
                (a.data @ out.data) % p, np.eye(n, dtype=np.int64) % p
            )
        elif kind == "solve":
            b_vec = sample_uniform_vector(rng.split(100), n, ctx)
            while ref_det(a) == 0:
                a = sample_uniform(rng.split(int(a.data[0, 0]) + 200), n, n, ctx)
            out = wc_solve(oracle, a, b_vec, cfg)
            verified = out == ref_solve(a, b_vec)
        elif kind == "detp":
            out = wc_det_largep(oracle, a, cfg)
            verified = out == ref_det(a)
        else:
            out = wc_det_f2(oracle, a, cfg)
            verified = out == ref_det(a)
        doc.update(success=True, verified=bool(verified), oracle_calls=oracle.calls)
    except ReductionFailed as exc:
        doc.update(success=False, verified=False, error="ReductionFailed",
                   detail=str(exc), oracle_calls=oracle.calls)
    doc["wall_ms"] = round((time.perf_counter() - t0) * 1e3, 3)
    _emit(doc)
    _note(
        "reduce %s/%s n=%d: %s (%d oracle calls)"
        % (kind, args.model, n,
           "verified" if doc.get("verified") else doc.get("error", "WRONG"),
           oracle.calls)
    )
    return 0 if doc.get("verified") else 1


# ---------------------------------------------------------------------------
# Argument wiring.
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tdm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample", help="sample a trapdoor and serialize it")
    sp.add_argument("--family", required=True, choices=SAMPLE_FAMILIES)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p", type=int, default=257)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--steps", type=int, default=None, help="walk length for kac/haar")
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--b", type=int, default=None)
    sp.add_argument("--recurse", action="store_true")
    sp.add_argument("--base", action="store_true", help="non-recursive lpn base mode")
    sp.add_argument("--noise-c", type=float, default=2.0)
    sp.add_argument("--eps-level", type=float, default=0.15)
    sp.add_argument("--delta", type=float, default=0.85)
    sp.add_argument("--leaf-threshold", type=int, default=None)
    sp.add_argument("--diag", default=None, choices=("ones", "gaussian", "goe"))
    sp.set_defaults(func=cmd_sample)

    ap = sub.add_parser("apply", help="apply a serialized trapdoor to vectors")
    ap.add_argument("--in", dest="infile", required=True)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--count", type=int, default=1)
    ap.add_argument("--vec", default=None, help="comma-separated explicit vector")
    ap.set_defaults(func=cmd_apply)

    bp = sub.add_parser("bench", help="matvec scaling benchmark")
    bp.add_argument("--family", required=True, choices=BENCH_FAMILIES)
    bp.add_argument("--sizes", required=True, help="comma-separated sizes")
    bp.add_argument("--reps", type=int, default=5)
    bp.add_argument("--seed", type=int, default=None)
    bp.add_argument("--p", type=int, default=257)
    bp.set_defaults(func=cmd_bench)

    st = sub.add_parser("stats", help="statistical sanity suite")
    st.add_argument("--family", required=True, choices=STAT_FAMILIES)
    st.add_argument("--n", type=int, required=True)
    st.add_argument("--trials", type=int, default=300)
    st.add_argument("--seed", type=int, default=None)
    st.add_argument("--p", type=int, default=2)
    st.set_defaults(func=cmd_stats)

    rp = sub.add_parser("reduce", help="run a worst-case/average-case reduction demo")
    rp.add_argument("--kind", required=True, choices=REDUCE_KINDS)
    rp.add_argument("--model", required=True)
    rp.add_argument("--n", type=int, required=True)
    rp.add_argument("--p", type=int, default=5)
    rp.add_argument("--eps", type=float, default=0.1)
    rp.add_argument("--c5", type=float, default=None)
    rp.add_argument("--seed", type=int, default=None)
    rp.set_defaults(func=cmd_reduce)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TrapmatError as exc:
        _note(f"error: {exc}")
        return 1
    except ValueError as exc:
        _note(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
