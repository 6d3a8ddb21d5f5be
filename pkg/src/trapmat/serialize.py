"""Versioned binary serialization (TDM1) plus a JSON debug mirror.

Layout (all integers little-endian):

    header:  magic "TDM1" | modulus u64 (0 = real-valued) | kind u8
             | n u64 | m u64
    dense:   n*m row-major u32 entries
    sparse:  count u64, then count * (row u64, col u64, value u32)
    perm:    n * u64 forward map
    diag:    n * u32 (field) or n * f64 (real)
    lpn:     recursive node: tag u8 (0 leaf / 1 composite);
             leaf = dim u64 + dim^2 u32;
             composite = dim u64, subdim u64, blocks u64,
                         blocks A-children, blocks B-children, sparse noise
    mce:     padded u64, k u64, b u64, columns u64, then per column:
             perm (padded u64s), grid r u64, c u64, r*c*b u32 first rows,
             scrambler tag u8 (0 dense k^2 u32 / 1 nested mce payload)
    kac:     T u64, then T * (i u32, j u32, cos f64, sin f64)
    real:    mode u8 (0 two-sided / 1 symmetric), left kac payload,
             n f64 diagonal, right kac payload when two-sided
"""

from __future__ import annotations

import io
import json
import struct

import numpy as np

from .errors import FormatError
from .field import FieldContext
from .haar import RealTrapdoor
from .kac import RotationChain
from .lpn import LpnComposite, LpnLeaf, LpnNode, LpnTrapdoor
from .matrices import (
    DenseMatrix,
    DiagonalMatrix,
    FVector,
    PermutationMatrix,
    SparseMatrix,
)
from .mceliece import McElieceColumn, McElieceTrapdoor, QcGenerator

MAGIC = b"TDM1"

KIND_DENSE = 1
KIND_SPARSE = 2
KIND_PERMUTATION = 3
KIND_DIAGONAL = 4
KIND_LPN = 5
KIND_MCELIECE = 6
KIND_KAC = 7
KIND_REAL = 8
KIND_DIAGONAL_REAL = 9

_KIND_NAMES = {
    KIND_DENSE: "dense",
    KIND_SPARSE: "sparse",
    KIND_PERMUTATION: "permutation",
    KIND_DIAGONAL: "diagonal",
    KIND_LPN: "lpn",
    KIND_MCELIECE: "mceliece",
    KIND_KAC: "kac",
    KIND_REAL: "real",
    KIND_DIAGONAL_REAL: "diagonal_real",
}


def _header(modulus: int, kind: int, n: int, m: int) -> bytes:
    return MAGIC + struct.pack("<QBQQ", modulus, kind, n, m)


def _read_header(buf: io.BytesIO) -> tuple[int, int, int, int]:
    magic = buf.read(4)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    raw = buf.read(25)
    if len(raw) != 25:
        raise FormatError("truncated header")
    modulus, kind, n, m = struct.unpack("<QBQQ", raw)
    return modulus, kind, n, m


def _u32_entries(data: np.ndarray) -> bytes:
    return data.astype("<u4").tobytes()


def _read_u32(buf: io.BytesIO, count: int) -> np.ndarray:
    raw = buf.read(4 * count)
    if len(raw) != 4 * count:
        raise FormatError("truncated u32 payload")
    return np.frombuffer(raw, dtype="<u4").astype(np.int64)


def _read_u64(buf: io.BytesIO, count: int = 1) -> np.ndarray:
    raw = buf.read(8 * count)
    if len(raw) != 8 * count:
        raise FormatError("truncated u64 payload")
    return np.frombuffer(raw, dtype="<u8").astype(np.int64)


def _read_f64(buf: io.BytesIO, count: int) -> np.ndarray:
    raw = buf.read(8 * count)
    if len(raw) != 8 * count:
        raise FormatError("truncated f64 payload")
    return np.frombuffer(raw, dtype="<f8").copy()


# ---------------------------------------------------------------------------
# Payload writers/readers.
# ---------------------------------------------------------------------------

def _write_sparse_payload(out: io.BytesIO, s: SparseMatrix) -> None:
    out.write(struct.pack("<Q", s.nnz))
    if s.nnz:
        trip = np.zeros(s.nnz, dtype=[("r", "<u8"), ("c", "<u8"), ("v", "<u4")])
        trip["r"] = s.rows
        trip["c"] = s.cols
        trip["v"] = s.vals
        out.write(trip.tobytes())


def _read_sparse_payload(buf: io.BytesIO, ctx: FieldContext, n: int, m: int) -> SparseMatrix:
    (count,) = struct.unpack("<Q", buf.read(8))
    if count:
        raw = buf.read(20 * count)
        if len(raw) != 20 * count:
            raise FormatError("truncated triplet payload")
        trip = np.frombuffer(raw, dtype=[("r", "<u8"), ("c", "<u8"), ("v", "<u4")])
        return SparseMatrix(
            ctx, n, m,
            trip["r"].astype(np.int64),
            trip["c"].astype(np.int64),
            trip["v"].astype(np.int64),
        )
    return SparseMatrix(ctx, n, m, [], [], [])


def _write_lpn_node(out: io.BytesIO, node: LpnNode) -> None:
    if isinstance(node, LpnLeaf):
        out.write(struct.pack("<BQ", 0, node.dim))
        out.write(_u32_entries(node.dense.data))
    else:
        blocks = node.dim // node.subdim
        out.write(struct.pack("<BQQQ", 1, node.dim, node.subdim, blocks))
        for child in node.a_blocks:
            _write_lpn_node(out, child)
        for child in node.b_blocks:
            _write_lpn_node(out, child)
        _write_sparse_payload(out, node.noise)


def _read_lpn_node(buf: io.BytesIO, ctx: FieldContext) -> LpnNode:
    (tag,) = struct.unpack("<B", buf.read(1))
    if tag == 0:
        (dim,) = struct.unpack("<Q", buf.read(8))
        data = _read_u32(buf, dim * dim).reshape(dim, dim)
        return LpnLeaf(DenseMatrix(ctx, data))
    if tag == 1:
        dim, subdim, blocks = struct.unpack("<QQQ", buf.read(24))
        a_blocks = tuple(_read_lpn_node(buf, ctx) for _ in range(blocks))
        b_blocks = tuple(_read_lpn_node(buf, ctx) for _ in range(blocks))
        noise = _read_sparse_payload(buf, ctx, dim, dim)
        return LpnComposite(dim, subdim, a_blocks, b_blocks, noise)
    raise FormatError(f"bad node tag {tag}")


def _write_kac_payload(out: io.BytesIO, chain: RotationChain) -> None:
    out.write(struct.pack("<Q", chain.steps))
    rec = np.zeros(chain.steps, dtype=[("i", "<u4"), ("j", "<u4"), ("c", "<f8"), ("s", "<f8")])
    rec["i"] = chain.ii
    rec["j"] = chain.jj
    rec["c"] = chain.cs
    rec["s"] = chain.sn
    out.write(rec.tobytes())


def _read_kac_payload(buf: io.BytesIO, n: int) -> RotationChain:
    (steps,) = struct.unpack("<Q", buf.read(8))
    raw = buf.read(24 * steps)
    if len(raw) != 24 * steps:
        raise FormatError("truncated rotation payload")
    rec = np.frombuffer(raw, dtype=[("i", "<u4"), ("j", "<u4"), ("c", "<f8"), ("s", "<f8")])
    return RotationChain(
        n,
        rec["i"].astype(np.int32),
        rec["j"].astype(np.int32),
        rec["c"].copy(),
        rec["s"].copy(),
    )


def _write_mce_payload(out: io.BytesIO, td: McElieceTrapdoor) -> None:
    out.write(struct.pack("<QQQQ", td.padded_dim, td.k, td.b, len(td.columns)))
    for col in td.columns:
        out.write(col.perm.sigma.astype("<u8").tobytes())
        r, c, b = col.gen.first_rows.shape
        out.write(struct.pack("<QQ", r, c))
        out.write(_u32_entries(col.gen.first_rows))
        if isinstance(col.scrambler, DenseMatrix):
            out.write(struct.pack("<B", 0))
            out.write(_u32_entries(col.scrambler.data))
        else:
            out.write(struct.pack("<B", 1))
            _write_mce_payload(out, col.scrambler)


def _read_mce_payload(buf: io.BytesIO, ctx: FieldContext, logical: int) -> McElieceTrapdoor:
    padded, k, b, ncols = struct.unpack("<QQQQ", buf.read(32))
    columns = []
    for _ in range(ncols):
        sigma = _read_u64(buf, padded)
        perm = PermutationMatrix(sigma)
        r, c = struct.unpack("<QQ", buf.read(16))
        rows = _read_u32(buf, r * c * b).reshape(r, c, b)
        gen = QcGenerator(ctx, b, rows)
        (tag,) = struct.unpack("<B", buf.read(1))
        if tag == 0:
            scr = DenseMatrix(ctx, _read_u32(buf, k * k).reshape(k, k))
        elif tag == 1:
            scr = _read_mce_payload(buf, ctx, k)
        else:
            raise FormatError(f"bad scrambler tag {tag}")
        columns.append(McElieceColumn(perm, gen, scr))
    return McElieceTrapdoor(ctx, logical, padded, k, b, tuple(columns))


# ---------------------------------------------------------------------------
# Public API.
# ---------------------------------------------------------------------------

def dump_bytes(obj) -> bytes:
    out = io.BytesIO()
    if isinstance(obj, DenseMatrix):
        out.write(_header(obj.ctx.p, KIND_DENSE, obj.n, obj.m))
        out.write(_u32_entries(obj.data))
    elif isinstance(obj, SparseMatrix):
        out.write(_header(obj.ctx.p, KIND_SPARSE, obj.n, obj.m))
        _write_sparse_payload(out, obj)
    elif isinstance(obj, PermutationMatrix):
        out.write(_header(0, KIND_PERMUTATION, obj.n, obj.n))
        out.write(obj.sigma.astype("<u8").tobytes())
    elif isinstance(obj, DiagonalMatrix):
        out.write(_header(obj.ctx.p, KIND_DIAGONAL, obj.n, obj.n))
        out.write(_u32_entries(obj.diag))
    elif isinstance(obj, LpnTrapdoor):
        out.write(_header(obj.ctx.p, KIND_LPN, obj.logical_dim, obj.logical_dim))
        _write_lpn_node(out, obj.root)
    elif isinstance(obj, McElieceTrapdoor):
        out.write(_header(obj.ctx.p, KIND_MCELIECE, obj.logical_dim, obj.logical_dim))
        _write_mce_payload(out, obj)
    elif isinstance(obj, RotationChain):
        out.write(_header(0, KIND_KAC, obj.n, obj.n))
        _write_kac_payload(out, obj)
    elif isinstance(obj, RealTrapdoor):
        out.write(_header(0, KIND_REAL, obj.n, obj.n))
        out.write(struct.pack("<B", 1 if obj.symmetric else 0))
        _write_kac_payload(out, obj.left)
        out.write(obj.diag.astype("<f8").tobytes())
        if not obj.symmetric:
            _write_kac_payload(out, obj.right)
    else:
        raise FormatError(f"cannot serialize {type(obj).__name__}")
    return out.getvalue()


def load_bytes(raw: bytes):
    buf = io.BytesIO(raw)
    modulus, kind, n, m = _read_header(buf)
    if kind in (KIND_DENSE, KIND_SPARSE, KIND_DIAGONAL, KIND_LPN, KIND_MCELIECE):
        ctx = FieldContext(modulus)
    if kind == KIND_DENSE:
        return DenseMatrix(ctx, _read_u32(buf, n * m).reshape(n, m))
    if kind == KIND_SPARSE:
        return _read_sparse_payload(buf, ctx, n, m)
    if kind == KIND_PERMUTATION:
        return PermutationMatrix(_read_u64(buf, n))
    if kind == KIND_DIAGONAL:
        return DiagonalMatrix(ctx, _read_u32(buf, n))
    if kind == KIND_LPN:
        return LpnTrapdoor(ctx, n, _read_lpn_node(buf, ctx))
    if kind == KIND_MCELIECE:
        return _read_mce_payload(buf, ctx, n)
    if kind == KIND_KAC:
        return _read_kac_payload(buf, n)
    if kind == KIND_REAL:
        (mode,) = struct.unpack("<B", buf.read(1))
        left = _read_kac_payload(buf, n)
        diag = _read_f64(buf, n)
        right = None if mode == 1 else _read_kac_payload(buf, n)
        return RealTrapdoor(left, diag, right)
    if kind == KIND_DIAGONAL_REAL:
        return _read_f64(buf, n)
    raise FormatError(f"unknown kind {kind}")


def dump_file(obj, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(dump_bytes(obj))


def load_file(path: str):
    with open(path, "rb") as fh:
        return load_bytes(fh.read())


# ---------------------------------------------------------------------------
# JSON debug mirror.
# ---------------------------------------------------------------------------

def _node_json(node: LpnNode):
    if isinstance(node, LpnLeaf):
        return {"tag": "leaf", "dim": node.dim, "entries": node.dense.data.reshape(-1).tolist()}
    return {
        "tag": "composite",
        "dim": node.dim,
        "subdim": node.subdim,
        "a_blocks": [_node_json(b) for b in node.a_blocks],
        "b_blocks": [_node_json(b) for b in node.b_blocks],
        "noise": {
            "rows": node.noise.rows.tolist(),
            "cols": node.noise.cols.tolist(),
            "vals": node.noise.vals.tolist(),
        },
    }


def to_debug_json(obj) -> str:
    raw = dump_bytes(obj)
    buf = io.BytesIO(raw)
    modulus, kind, n, m = _read_header(buf)
    doc: dict = {
        "format": "TDM1",
        "kind": _KIND_NAMES[kind],
        "modulus": modulus,
        "n": n,
        "m": m,
    }
    if isinstance(obj, DenseMatrix):
        doc["entries"] = obj.data.reshape(-1).tolist()
    elif isinstance(obj, SparseMatrix):
        doc["triplets"] = [
            [int(r), int(c), int(v)]
            for r, c, v in zip(obj.rows, obj.cols, obj.vals)
        ]
    elif isinstance(obj, PermutationMatrix):
        doc["sigma"] = obj.sigma.tolist()
    elif isinstance(obj, DiagonalMatrix):
        doc["diag"] = obj.diag.tolist()
    elif isinstance(obj, LpnTrapdoor):
        doc["root"] = _node_json(obj.root)
    elif isinstance(obj, RotationChain):
        doc["steps"] = [
            {"i": int(i), "j": int(j), "cos": float(c), "sin": float(s)}
            for i, j, c, s in zip(obj.ii, obj.jj, obj.cs, obj.sn)
        ]
    elif isinstance(obj, RealTrapdoor):
        doc["mode"] = "symmetric" if obj.symmetric else "two-sided"
        doc["diag"] = obj.diag.tolist()
        doc["left_steps"] = obj.left.steps
        doc["right_steps"] = None if obj.symmetric else obj.right.steps
    elif isinstance(obj, McElieceTrapdoor):
        doc["k"] = obj.k
        doc["b"] = obj.b
        doc["columns"] = len(obj.columns)
    return json.dumps(doc)
