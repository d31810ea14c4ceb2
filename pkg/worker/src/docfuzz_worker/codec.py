"""Wire value codec: protocol v1 encoded values <-> native Python/numpy.

The orchestrator sends arguments as tagged JSON objects; this module
turns them into the natural call-site types (numbers, strings, tuples,
numpy arrays) and encodes whatever the target returns back onto the
wire. Array payloads are base64 little-endian C-order bytes and round
trip bit-exactly.
"""

from __future__ import annotations

import base64
import math
from typing import Any

import numpy as np

_DTYPES = {
    "uint8": np.dtype("<u1"),
    "int32": np.dtype("<i4"),
    "float32": np.dtype("<f4"),
    "float64": np.dtype("<f8"),
    "bool": np.dtype("|b1"),
}

# wire names for numpy kinds the protocol cannot carry directly
_FALLBACK_CASTS = {
    "i": np.dtype("<i4"),
    "u": np.dtype("<u1"),
    "f": np.dtype("<f8"),
}


class CodecError(Exception):
    pass


def decode_value(obj: Any) -> Any:
    """Wire object -> native value (numbers, str, None, tuple, ndarray)."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise CodecError(f"not an encoded value: {obj!r}")
    kind = obj["kind"]
    if kind == "int":
        return int(obj["value"])
    if kind == "float":
        value = obj["value"]
        return float(value)  # "nan"/"inf"/"-inf" strings parse directly
    if kind == "bool":
        return bool(obj["value"])
    if kind == "str":
        return str(obj["value"])
    if kind == "null":
        return None
    if kind == "enum":
        return int(obj["value"])
    if kind == "seq":
        return tuple(decode_value(item) for item in obj["items"])
    if kind == "ndarray":
        dtype = _DTYPES.get(obj["dtype"])
        if dtype is None:
            raise CodecError(f"unknown dtype {obj['dtype']!r}")
        data = base64.b64decode(obj["data"])
        arr = np.frombuffer(data, dtype=dtype)
        expected = int(np.prod(obj["shape"], dtype=np.int64))
        if arr.size != expected:
            raise CodecError(
                f"payload holds {arr.size} elements, shape wants {expected}"
            )
        return arr.reshape(obj["shape"]).copy()
    raise CodecError(f"unknown kind {kind!r}")


def _encode_array(arr: np.ndarray) -> dict:
    name = arr.dtype.name if arr.dtype.name != "bool_" else "bool"
    if name not in _DTYPES:
        cast = _FALLBACK_CASTS.get(arr.dtype.kind)
        if cast is None:
            raise CodecError(f"cannot encode ndarray of dtype {arr.dtype}")
        if arr.dtype.kind == "i":
            info = np.iinfo(cast)
            arr = np.clip(arr, info.min, info.max)
        arr = arr.astype(cast)
        name = arr.dtype.name
    payload = np.ascontiguousarray(arr, dtype=_DTYPES[name]).tobytes(order="C")
    return {
        "kind": "ndarray",
        "dtype": name,
        "shape": [int(d) for d in arr.shape],
        "data": base64.b64encode(payload).decode("ascii"),
    }


def encode_value(value: Any) -> dict:
    """Native value -> wire object; unknown objects degrade to strings."""
    if value is None:
        return {"kind": "null"}
    if isinstance(value, (bool, np.bool_)):
        return {"kind": "bool", "value": bool(value)}
    if isinstance(value, (int, np.integer)):
        return {"kind": "int", "value": int(value)}
    if isinstance(value, (float, np.floating)):
        f = float(value)
        if math.isnan(f):
            return {"kind": "float", "value": "nan"}
        if math.isinf(f):
            return {"kind": "float", "value": "inf" if f > 0 else "-inf"}
        return {"kind": "float", "value": f}
    if isinstance(value, str):
        return {"kind": "str", "value": value}
    if isinstance(value, (tuple, list)):
        return {"kind": "seq", "items": [encode_value(v) for v in value]}
    if isinstance(value, np.ndarray):
        return _encode_array(value)
    return {"kind": "str", "value": repr(value)}


def has_non_finite(value: Any) -> bool:
    """True when any numeric part of a native output is NaN or +/-Inf."""
    if isinstance(value, (tuple, list)):
        return any(has_non_finite(v) for v in value)
    if isinstance(value, np.ndarray):
        if np.issubdtype(value.dtype, np.floating):
            return value.size > 0 and not bool(np.isfinite(value).all())
        return False
    if isinstance(value, (float, np.floating)):
        return not math.isfinite(float(value))
    return False
