"""Shared hypothesis strategies building structurally valid standardized infos."""

from __future__ import annotations

from hypothesis import strategies as st

from docfuzz.schema import (
    ChannelSetDim,
    DependencyEdge,
    DependencyKind,
    DescriptionSpec,
    FixedDim,
    ParamInfo,
    Provenance,
    RefDim,
    SizeSpec,
    StandardizedApiInfo,
    VarDim,
    VarSymbol,
)
from docfuzz.values import BoolVal, EnumVal, FloatVal, IntVal, ScalarType, StrVal

idents = st.from_regex(r"[a-z][a-z0-9_]{0,10}", fullmatch=True)

scalar_values = st.one_of(
    st.integers(-(2**31), 2**31 - 1).map(IntVal),
    st.floats(allow_nan=False, width=64).map(FloatVal),
    st.booleans().map(BoolVal),
    st.text(max_size=8).map(StrVal),
    st.tuples(st.from_regex(r"[A-Z]{1,6}", fullmatch=True), st.integers(0, 50)).map(
        lambda t: EnumVal(*t)
    ),
)

array_types = st.sampled_from(
    [ScalarType.UINT8, ScalarType.INT32, ScalarType.FLOAT32, ScalarType.FLOAT64]
)


@st.composite
def size_specs(draw, earlier: list[str]):
    dims = []
    for _ in range(draw(st.integers(1, 3))):
        choice = draw(st.integers(0, 3 if earlier else 2))
        if choice == 0:
            dims.append(FixedDim(draw(st.integers(1, 8))))
        elif choice == 1:
            dims.append(VarDim(draw(st.sampled_from(list(VarSymbol)))))
        elif choice == 2:
            dims.append(
                ChannelSetDim(
                    frozenset(draw(st.sets(st.sampled_from([1, 2, 3, 4]), min_size=1, max_size=4)))
                )
            )
        else:
            dims.append(RefDim(draw(st.sampled_from(earlier)), draw(st.integers(0, 2))))
    return SizeSpec(dims=tuple(dims))


@st.composite
def param_infos(draw, name: str, earlier: list[str]):
    flag = draw(st.booleans())
    options = None
    default = None
    if not flag:
        # unmodifiable params need a closed domain
        options = tuple(draw(st.lists(scalar_values, min_size=1, max_size=4)))
    elif draw(st.booleans()):
        default = draw(scalar_values)
    value_range = None
    if draw(st.booleans()):
        lo = draw(st.integers(-10, 10))
        value_range = (float(lo), float(lo + draw(st.integers(1, 300))))
    edges = []
    if earlier and draw(st.booleans()):
        kind = draw(st.sampled_from(list(DependencyKind)))
        edges.append(
            DependencyEdge(
                source=draw(st.sampled_from(earlier)),
                kind=kind,
                axes=(0, 1) if kind is DependencyKind.BOUNDED_BY_SHAPE else None,
            )
        )
    return ParamInfo(
        name=name,
        flag=flag,
        default=default,
        type_domain=frozenset(draw(st.sets(array_types, max_size=3))),
        size_spec=draw(st.none() | size_specs(earlier)),
        description=DescriptionSpec(
            raw_text=draw(st.text(max_size=30)),
            value_range=value_range,
            options=options,
            depends_on=tuple(edges),
        ),
    )


@st.composite
def api_infos(draw):
    names = draw(st.lists(idents, min_size=1, max_size=5, unique=True))
    params = []
    for i, name in enumerate(names):
        params.append(draw(param_infos(name, names[:i])))
    return StandardizedApiInfo(
        api_name=draw(idents),
        params=tuple(params),
        output_count=draw(st.integers(0, 4)),
        provenance=draw(st.sampled_from(list(Provenance))),
    )
