"""Concrete argument values and their wire encoding.

Every value that flows through the pipeline (parameter defaults, legal
option sets, generated test-case arguments, worker outputs) is one of a
small tagged union of encoded values. The JSON wire form is shared with
the worker process:

    {"kind": "int", "value": 5}
    {"kind": "float", "value": 0.25}          # non-finite as "nan"/"inf"/"-inf"
    {"kind": "bool", "value": true}
    {"kind": "str", "value": "abc"}
    {"kind": "null"}
    {"kind": "enum", "name": "LINEAR", "value": 1}
    {"kind": "seq", "items": [...]}
    {"kind": "ndarray", "dtype": "uint8", "shape": [2, 2, 3],
     "data": "<base64 little-endian C-order bytes>"}

Array payloads are bit-exact: encode(decode(x)) round-trips byte for byte.
"""

from __future__ import annotations

import base64
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Union

import numpy as np


class ScalarType(str, Enum):
    """Element types a parameter may take."""

    UINT8 = "uint8"
    INT32 = "int32"
    FLOAT32 = "float32"
    FLOAT64 = "float64"
    BOOL = "bool"
    STRING = "string"
    ENUM = "enum"


# numpy dtypes are pinned to little-endian so encoded bytes are portable.
_NUMPY_DTYPE: dict[ScalarType, np.dtype] = {
    ScalarType.UINT8: np.dtype("<u1"),
    ScalarType.INT32: np.dtype("<i4"),
    ScalarType.FLOAT32: np.dtype("<f4"),
    ScalarType.FLOAT64: np.dtype("<f8"),
    ScalarType.BOOL: np.dtype("|b1"),
}

_ARRAY_TYPES = frozenset(_NUMPY_DTYPE)

INTEGER_TYPES = frozenset({ScalarType.UINT8, ScalarType.INT32})
FLOAT_TYPES = frozenset({ScalarType.FLOAT32, ScalarType.FLOAT64})


class ValueError_(Exception):
    """Raised for malformed encoded-value payloads."""


@dataclass(frozen=True)
class IntVal:
    value: int

    def to_wire(self) -> dict[str, Any]:
        return {"kind": "int", "value": self.value}


@dataclass(frozen=True)
class FloatVal:
    value: float

    def to_wire(self) -> dict[str, Any]:
        if math.isnan(self.value):
            return {"kind": "float", "value": "nan"}
        if math.isinf(self.value):
            return {"kind": "float", "value": "inf" if self.value > 0 else "-inf"}
        return {"kind": "float", "value": self.value}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FloatVal):
            return NotImplemented
        if math.isnan(self.value) and math.isnan(other.value):
            return True
        return self.value == other.value

    def __hash__(self) -> int:
        return hash("nan") if math.isnan(self.value) else hash(self.value)


@dataclass(frozen=True)
class BoolVal:
    value: bool

    def to_wire(self) -> dict[str, Any]:
        return {"kind": "bool", "value": self.value}


@dataclass(frozen=True)
class StrVal:
    value: str

    def to_wire(self) -> dict[str, Any]:
        return {"kind": "str", "value": self.value}


@dataclass(frozen=True)
class NullVal:
    def to_wire(self) -> dict[str, Any]:
        return {"kind": "null"}


@dataclass(frozen=True)
class EnumVal:
    name: str
    value: int

    def to_wire(self) -> dict[str, Any]:
        return {"kind": "enum", "name": self.name, "value": self.value}


@dataclass(frozen=True)
class SeqVal:
    items: tuple["EncodedValue", ...]

    def to_wire(self) -> dict[str, Any]:
        return {"kind": "seq", "items": [item.to_wire() for item in self.items]}


@dataclass(frozen=True)
class NdArrayVal:
    dtype: ScalarType
    shape: tuple[int, ...]
    data: bytes = field(repr=False)

    def __post_init__(self) -> None:
        if self.dtype not in _ARRAY_TYPES:
            raise ValueError_(f"{self.dtype.value} is not an array element type")
        expected = _NUMPY_DTYPE[self.dtype].itemsize * int(np.prod(self.shape, dtype=np.int64))
        if len(self.data) != expected:
            raise ValueError_(
                f"ndarray payload is {len(self.data)} bytes, expected {expected} "
                f"for dtype={self.dtype.value} shape={list(self.shape)}"
            )

    def to_wire(self) -> dict[str, Any]:
        return {
            "kind": "ndarray",
            "dtype": self.dtype.value,
            "shape": list(self.shape),
            "data": base64.b64encode(self.data).decode("ascii"),
        }

    def to_numpy(self) -> np.ndarray:
        arr = np.frombuffer(self.data, dtype=_NUMPY_DTYPE[self.dtype])
        return arr.reshape(self.shape)


EncodedValue = Union[IntVal, FloatVal, BoolVal, StrVal, NullVal, EnumVal, SeqVal, NdArrayVal]


def ndarray_from_numpy(arr: np.ndarray, dtype: ScalarType | None = None) -> NdArrayVal:
    """Encode a numpy array, normalizing to little-endian C order."""
    if dtype is None:
        name = arr.dtype.name
        try:
            dtype = ScalarType(name)
        except ValueError:
            if name == "bool":
                dtype = ScalarType.BOOL
            else:
                raise ValueError_(f"unsupported numpy dtype {name}")
    normalized = np.ascontiguousarray(arr, dtype=_NUMPY_DTYPE[dtype])
    return NdArrayVal(dtype=dtype, shape=tuple(int(d) for d in arr.shape), data=normalized.tobytes(order="C"))


def numpy_dtype(dtype: ScalarType) -> np.dtype:
    return _NUMPY_DTYPE[dtype]


def from_wire(obj: Any, path: str = "") -> EncodedValue:
    """Decode the JSON wire form; raises ValueError_ with a location hint."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValueError_(f"{path or '/'}: expected an encoded-value object")
    kind = obj["kind"]
    if kind == "int":
        if not isinstance(obj.get("value"), int) or isinstance(obj.get("value"), bool):
            raise ValueError_(f"{path}/value: expected int")
        return IntVal(obj["value"])
    if kind == "float":
        raw = obj.get("value")
        if isinstance(raw, str):
            if raw not in ("nan", "inf", "-inf"):
                raise ValueError_(f"{path}/value: bad non-finite float {raw!r}")
            return FloatVal(float(raw))
        if not isinstance(raw, (int, float)) or isinstance(raw, bool):
            raise ValueError_(f"{path}/value: expected float")
        return FloatVal(float(raw))
    if kind == "bool":
        if not isinstance(obj.get("value"), bool):
            raise ValueError_(f"{path}/value: expected bool")
        return BoolVal(obj["value"])
    if kind == "str":
        if not isinstance(obj.get("value"), str):
            raise ValueError_(f"{path}/value: expected str")
        return StrVal(obj["value"])
    if kind == "null":
        return NullVal()
    if kind == "enum":
        name, value = obj.get("name"), obj.get("value")
        if not isinstance(name, str) or not isinstance(value, int) or isinstance(value, bool):
            raise ValueError_(f"{path}: enum needs a str name and int value")
        return EnumVal(name, value)
    if kind == "seq":
        items = obj.get("items")
        if not isinstance(items, list):
            raise ValueError_(f"{path}/items: expected list")
        return SeqVal(tuple(from_wire(item, f"{path}/items/{i}") for i, item in enumerate(items)))
    if kind == "ndarray":
        dtype_name, shape, data = obj.get("dtype"), obj.get("shape"), obj.get("data")
        try:
            dtype = ScalarType(dtype_name)
        except ValueError:
            raise ValueError_(f"{path}/dtype: unknown dtype {dtype_name!r}")
        if not isinstance(shape, list) or not all(isinstance(d, int) and d >= 0 for d in shape):
            raise ValueError_(f"{path}/shape: expected list of non-negative ints")
        if not isinstance(data, str):
            raise ValueError_(f"{path}/data: expected base64 string")
        try:
            payload = base64.b64decode(data, validate=True)
        except Exception:
            raise ValueError_(f"{path}/data: invalid base64")
        try:
            return NdArrayVal(dtype=dtype, shape=tuple(shape), data=payload)
        except ValueError_ as exc:
            raise ValueError_(f"{path}: {exc}")
    raise ValueError_(f"{path}/kind: unknown kind {kind!r}")


def contains_non_finite(value: EncodedValue) -> bool:
    """True when a NaN or +/-Inf hides anywhere inside a numeric value."""
    if isinstance(value, FloatVal):
        return not math.isfinite(value.value)
    if isinstance(value, SeqVal):
        return any(contains_non_finite(item) for item in value.items)
    if isinstance(value, NdArrayVal) and value.dtype in FLOAT_TYPES:
        arr = value.to_numpy()
        return bool(arr.size) and not bool(np.isfinite(arr).all())
    return False


def scalar_type_of(value: EncodedValue) -> ScalarType | None:
    """Coarse scalar type used when comparing dependent parameters."""
    if isinstance(value, NdArrayVal):
        return value.dtype
    if isinstance(value, IntVal):
        return ScalarType.INT32
    if isinstance(value, FloatVal):
        return ScalarType.FLOAT64
    if isinstance(value, BoolVal):
        return ScalarType.BOOL
    if isinstance(value, StrVal):
        return ScalarType.STRING
    if isinstance(value, EnumVal):
        return ScalarType.ENUM
    return None
