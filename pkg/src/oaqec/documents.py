"""JSON documents: channels and matrices as ``[re, im]`` pairs, plus a stable writer.

Schema tag ``oaqec/1``. A channel document::

    {"version": "oaqec/1", "kind": "channel", "d_in": 2, "d_out": 2,
     "kraus": [[[[1, 0], [0, 0]], [[0, 0], [1, 0]]]], "metadata": {...}}

A matrix document (Hamiltonians, isometries, states)::

    {"version": "oaqec/1", "kind": "matrix", "rows": 4, "cols": 4,
     "data": [[[re, im], ...], ...], "dims": [2, 2]}

``dims`` is optional and declares a tensor factorization (system first).
"""

from __future__ import annotations

import hashlib
import json
import math
from typing import Any

import numpy as np

from .channel import KrausChannel

VERSION = "oaqec/1"


class DocumentError(ValueError):
    """Malformed or inconsistent document."""


def matrix_to_pairs(a) -> list:
    a = np.asarray(a, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def pairs_to_matrix(data, rows: int | None = None, cols: int | None = None, what: str = "matrix") -> np.ndarray:
    if not isinstance(data, list) or not data or not all(isinstance(r, list) for r in data):
        raise DocumentError(f"{what}: expected a non-empty list of rows")
    out = []
    for i, row in enumerate(data):
        vals = []
        for j, pair in enumerate(row):
            if (not isinstance(pair, list) or len(pair) != 2
                    or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pair)):
                raise DocumentError(f"{what}[{i}][{j}]: expected a [re, im] pair of numbers")
            vals.append(complex(pair[0], pair[1]))
        out.append(vals)
    if len({len(r) for r in out}) != 1:
        raise DocumentError(f"{what}: ragged rows")
    arr = np.array(out, dtype=complex)
    if not np.all(np.isfinite(arr)):
        raise DocumentError(f"{what}: non-finite entries")
    if rows is not None and arr.shape[0] != rows or cols is not None and arr.shape[1] != cols:
        raise DocumentError(f"{what}: shape {arr.shape} does not match declared {rows}x{cols}")
    return arr


def loads_json(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _check_header(doc, kind: str):
    if not isinstance(doc, dict):
        raise DocumentError("document must be a JSON object")
    if doc.get("version") != VERSION:
        raise DocumentError(f"unsupported version {doc.get('version')!r}, expected {VERSION!r}")
    if doc.get("kind", kind) != kind:
        raise DocumentError(f"expected a {kind} document, got kind {doc.get('kind')!r}")


def _positive_int(doc, key: str) -> int:
    val = doc.get(key)
    if not isinstance(val, int) or isinstance(val, bool) or val < 1:
        raise DocumentError(f"field {key!r} must be a positive integer")
    return val


def channel_from_doc(doc) -> KrausChannel:
    _check_header(doc, "channel")
    d_in, d_out = _positive_int(doc, "d_in"), _positive_int(doc, "d_out")
    kraus = doc.get("kraus")
    if not isinstance(kraus, list) or not kraus:
        raise DocumentError("field 'kraus' must be a non-empty list of matrices")
    ops = [pairs_to_matrix(k, d_out, d_in, f"kraus[{i}]") for i, k in enumerate(kraus)]
    return KrausChannel(ops)


def channel_to_doc(ch: KrausChannel, metadata: dict | None = None) -> dict:
    doc = {
        "version": VERSION,
        "kind": "channel",
        "d_in": ch.d_in,
        "d_out": ch.d_out,
        "kraus": [matrix_to_pairs(e) for e in ch.kraus],
    }
    if metadata:
        doc["metadata"] = metadata
    return doc


def matrix_from_doc(doc) -> tuple[np.ndarray, list[int] | None]:
    _check_header(doc, "matrix")
    rows, cols = _positive_int(doc, "rows"), _positive_int(doc, "cols")
    arr = pairs_to_matrix(doc.get("data"), rows, cols, "data")
    dims = doc.get("dims")
    if dims is not None:
        if (not isinstance(dims, list) or len(dims) != 2
                or not all(isinstance(x, int) and not isinstance(x, bool) and x > 0 for x in dims)):
            raise DocumentError("field 'dims' must be a pair of positive integers")
        if dims[0] * dims[1] != rows:
            raise DocumentError(f"dims {dims} do not factor the {rows}-dimensional space")
    return arr, dims


def matrix_to_doc(a, dims: list[int] | None = None, metadata: dict | None = None) -> dict:
    a = np.asarray(a, dtype=complex)
    doc = {"version": VERSION, "kind": "matrix", "rows": a.shape[0], "cols": a.shape[1], "data": matrix_to_pairs(a)}
    if dims is not None:
        doc["dims"] = list(dims)
    if metadata:
        doc["metadata"] = metadata
    return doc


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite float {x!r}")
    return format(x, ".17g")


def _scalar(obj) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _is_flat(obj) -> bool:
    """Numbers, or lists of numbers: written on one line."""
    if isinstance(obj, (list, tuple)):
        return all(not isinstance(x, (list, tuple, dict)) or (isinstance(x, (list, tuple)) and all(
            not isinstance(y, (list, tuple, dict)) for y in x)) for x in obj)
    return not isinstance(obj, dict)


def _dump(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_dump(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if _is_flat(obj):
            return "[" + ", ".join(_dump(x, indent, level) for x in obj) + "]"
        return "[\n" + ",\n".join(pad + _dump(x, indent, level + 1) for x in obj) + "\n" + end + "]"
    return _scalar(obj)


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON: insertion key order, floats with 17 significant digits."""
    return _dump(obj, indent, 0) + "\n"


def digest_bytes(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def digest_array(a, decimals: int = 9) -> str:
    """Digest of an array rounded to ``decimals`` (negative zeros folded)."""
    a = np.asarray(a, dtype=complex)
    re = np.round(a.real, decimals) + 0.0
    im = np.round(a.imag, decimals) + 0.0
    h = hashlib.sha256()
    h.update(str(a.shape).encode())
    h.update(np.ascontiguousarray(re).tobytes())
    h.update(np.ascontiguousarray(im).tobytes())
    return "sha256:" + h.hexdigest()
