from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from docfuzz.values import (
    BoolVal,
    FloatVal,
    IntVal,
    NdArrayVal,
    NullVal,
    ScalarType,
    SeqVal,
    StrVal,
    ValueError_,
    contains_non_finite,
    from_wire,
    ndarray_from_numpy,
)


def test_ndarray_round_trip_bit_exact():
    arr = np.arange(24, dtype=np.float32).reshape(2, 3, 4) / 7.0
    val = ndarray_from_numpy(arr)
    wire = val.to_wire()
    back = from_wire(wire)
    assert back == val
    assert back.to_wire() == wire
    np.testing.assert_array_equal(back.to_numpy(), arr)


def test_ndarray_byte_length_checked():
    with pytest.raises(ValueError_):
        NdArrayVal(dtype=ScalarType.UINT8, shape=(2, 2), data=b"\x00" * 3)


def test_non_finite_floats_survive_wire():
    for x in (math.nan, math.inf, -math.inf):
        back = from_wire(FloatVal(x).to_wire())
        assert isinstance(back, FloatVal)
        if math.isnan(x):
            assert math.isnan(back.value)
        else:
            assert back.value == x


def test_nan_inf_detection_in_arrays():
    clean = ndarray_from_numpy(np.ones((2, 2), dtype=np.float64))
    assert not contains_non_finite(clean)
    dirty = ndarray_from_numpy(np.array([[1.0, np.nan]], dtype=np.float64))
    assert contains_non_finite(dirty)
    infs = ndarray_from_numpy(np.array([np.inf], dtype=np.float32))
    assert contains_non_finite(infs)
    # integer arrays can never be non-finite
    assert not contains_non_finite(ndarray_from_numpy(np.zeros(3, dtype=np.uint8)))


def test_seq_nesting():
    val = SeqVal((IntVal(1), SeqVal((FloatVal(0.5), NullVal()))))
    assert from_wire(val.to_wire()) == val
    assert not contains_non_finite(val)
    assert contains_non_finite(SeqVal((FloatVal(math.nan),)))


@pytest.mark.parametrize(
    "obj",
    [
        {"kind": "int", "value": "5"},
        {"kind": "float", "value": "infinity"},
        {"kind": "ndarray", "dtype": "int64", "shape": [1], "data": ""},
        {"kind": "ndarray", "dtype": "uint8", "shape": [2], "data": "%%"},
        {"kind": "mystery"},
        "not a dict",
    ],
)
def test_bad_wire_payloads(obj):
    with pytest.raises(ValueError_):
        from_wire(obj)


simple_values = st.one_of(
    st.integers(-(2**40), 2**40).map(IntVal),
    st.floats(allow_nan=False).map(FloatVal),
    st.booleans().map(BoolVal),
    st.text(max_size=12).map(StrVal),
    st.just(NullVal()),
)


@given(simple_values)
def test_scalar_wire_round_trip(v):
    assert from_wire(v.to_wire()) == v
