"""The standardized API-information format.

Every API the pipeline touches is reduced to one `StandardizedApiInfo`:
an ordered list of input parameters, each carrying the five attributes
(flag, default, type, size, description), plus the output count. This is
the single contract between the enrichment stage and everything
downstream, and the JSON form defined here is the on-disk file format.

Validation is report-based: `validate` never raises, it returns the list
of broken invariants. The JSON codec is strict: unknown keys, missing
fields, and structurally impossible values (for example a duplicated
type-domain entry) raise `SchemaError` with a JSON-pointer path.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Union

from .values import EncodedValue, ScalarType, from_wire

# parameters whose text mentions one of these default to the RGB image size
IMAGE_KEYWORD_RE = re.compile(r"\bimage\b|\barray\b|\bmatrix\b", re.IGNORECASE)


class SchemaError(Exception):
    """Malformed serialized info; `path` is a JSON pointer to the defect."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class VarSymbol(str, Enum):
    H = "H"
    W = "W"
    N = "N"


@dataclass(frozen=True)
class FixedDim:
    n: int


@dataclass(frozen=True)
class VarDim:
    symbol: VarSymbol


@dataclass(frozen=True)
class RefDim:
    param: str
    axis: int


@dataclass(frozen=True)
class ChannelSetDim:
    allowed: frozenset[int]


DimSpec = Union[FixedDim, VarDim, RefDim, ChannelSetDim]


@dataclass(frozen=True)
class SizeSpec:
    dims: tuple[DimSpec, ...]


RGB_IMAGE_SIZE = SizeSpec(
    dims=(VarDim(VarSymbol.H), VarDim(VarSymbol.W), ChannelSetDim(frozenset({3})))
)
GRAY_IMAGE_SIZE = SizeSpec(
    dims=(VarDim(VarSymbol.H), VarDim(VarSymbol.W), ChannelSetDim(frozenset({1})))
)
POINTS_SIZE = SizeSpec(dims=(VarDim(VarSymbol.N), FixedDim(1), FixedDim(2)))


class DependencyKind(str, Enum):
    SAME_TYPE = "same_type"
    SAME_SHAPE = "same_shape"
    BOUNDED_BY_SHAPE = "bounded_by_shape"


@dataclass(frozen=True)
class DependencyEdge:
    """Ties the owning parameter to an earlier one.

    `axes` is only meaningful for BOUNDED_BY_SHAPE: the pair of source axes
    that bound the owner's trailing coordinate pair.
    """

    source: str
    kind: DependencyKind
    axes: tuple[int, int] | None = None


@dataclass(frozen=True)
class DescriptionSpec:
    raw_text: str = ""
    value_range: tuple[float, float] | None = None
    options: tuple[EncodedValue, ...] | None = None
    depends_on: tuple[DependencyEdge, ...] = ()


@dataclass(frozen=True)
class ParamInfo:
    name: str
    flag: bool = True
    default: EncodedValue | None = None
    type_domain: frozenset[ScalarType] = frozenset()
    size_spec: SizeSpec | None = None
    description: DescriptionSpec = field(default_factory=DescriptionSpec)


class Provenance(str, Enum):
    PARSED = "parsed"
    ENRICHED = "enriched"


@dataclass(frozen=True)
class StandardizedApiInfo:
    api_name: str
    params: tuple[ParamInfo, ...]
    output_count: int
    provenance: Provenance = Provenance.PARSED


@dataclass(frozen=True)
class SchemaViolation:
    param: str | None
    rule: str
    message: str

    def __str__(self) -> str:
        where = f"{self.param}: " if self.param else ""
        return f"{where}{self.rule}: {self.message}"


ValidationReport = list[SchemaViolation]


def validate(info: StandardizedApiInfo) -> ValidationReport:
    """Check every invariant; an empty report means the info is usable."""
    report: ValidationReport = []
    if not info.api_name:
        report.append(SchemaViolation(None, "empty-api-name", "api_name must be non-empty"))
    if info.output_count < 0:
        report.append(SchemaViolation(None, "negative-output-count", "output_count must be >= 0"))

    seen: dict[str, int] = {}
    for idx, param in enumerate(info.params):
        if param.name in seen:
            report.append(SchemaViolation(param.name, "duplicate-param", "parameter name repeats"))
        else:
            seen[param.name] = idx

    earlier: set[str] = set()
    for param in info.params:
        desc = param.description
        if not param.flag and not desc.options and param.default is None:
            report.append(
                SchemaViolation(
                    param.name,
                    "unmodifiable-without-domain",
                    "flag=false requires options or a default",
                )
            )
        if desc.value_range is not None and not desc.value_range[0] < desc.value_range[1]:
            report.append(
                SchemaViolation(param.name, "empty-value-range", "value_range needs lo < hi")
            )
        if desc.options is not None and len(desc.options) == 0:
            report.append(
                SchemaViolation(param.name, "empty-options", "options, when present, must be non-empty")
            )
        for edge in desc.depends_on:
            if edge.source == param.name:
                report.append(
                    SchemaViolation(param.name, "self-dependency", "parameter depends on itself")
                )
            elif edge.source not in earlier:
                report.append(
                    SchemaViolation(
                        param.name,
                        "forward-dependency",
                        f"dependency source {edge.source!r} is not an earlier parameter",
                    )
                )
            if edge.kind is DependencyKind.BOUNDED_BY_SHAPE and edge.axes is None:
                report.append(
                    SchemaViolation(param.name, "missing-axes", "bounded_by_shape requires axes")
                )
        if param.size_spec is not None:
            for dim in param.size_spec.dims:
                if isinstance(dim, FixedDim) and dim.n < 1:
                    report.append(
                        SchemaViolation(param.name, "bad-fixed-dim", f"fixed dim {dim.n} < 1")
                    )
                elif isinstance(dim, RefDim):
                    if dim.param not in earlier:
                        report.append(
                            SchemaViolation(
                                param.name,
                                "forward-dependency",
                                f"size ref {dim.param!r} is not an earlier parameter",
                            )
                        )
                    if dim.axis < 0:
                        report.append(
                            SchemaViolation(param.name, "bad-ref-axis", "ref axis must be >= 0")
                        )
                elif isinstance(dim, ChannelSetDim):
                    if not dim.allowed or not dim.allowed <= {1, 2, 3, 4}:
                        report.append(
                            SchemaViolation(
                                param.name,
                                "bad-channel-set",
                                "channel set must be a non-empty subset of {1,2,3,4}",
                            )
                        )
        earlier.add(param.name)
    return report


# ---------------------------------------------------------------------------
# JSON codec


def _dim_to_json(dim: DimSpec) -> dict[str, Any]:
    if isinstance(dim, FixedDim):
        return {"kind": "fixed", "n": dim.n}
    if isinstance(dim, VarDim):
        return {"kind": "var", "symbol": dim.symbol.value}
    if isinstance(dim, RefDim):
        return {"kind": "ref", "param": dim.param, "axis": dim.axis}
    return {"kind": "channel_set", "allowed": sorted(dim.allowed)}


def _edge_to_json(edge: DependencyEdge) -> dict[str, Any]:
    obj: dict[str, Any] = {"source": edge.source, "kind": edge.kind.value}
    if edge.axes is not None:
        obj["axes"] = list(edge.axes)
    return obj


def info_to_obj(info: StandardizedApiInfo) -> dict[str, Any]:
    params = []
    for p in info.params:
        desc = p.description
        params.append(
            {
                "name": p.name,
                "flag": p.flag,
                "default": p.default.to_wire() if p.default is not None else None,
                "type_domain": sorted(t.value for t in p.type_domain),
                "size_spec": (
                    {"dims": [_dim_to_json(d) for d in p.size_spec.dims]}
                    if p.size_spec is not None
                    else None
                ),
                "description": {
                    "raw_text": desc.raw_text,
                    "value_range": list(desc.value_range) if desc.value_range else None,
                    "options": [o.to_wire() for o in desc.options] if desc.options is not None else None,
                    "depends_on": [_edge_to_json(e) for e in desc.depends_on],
                },
            }
        )
    return {
        "api_name": info.api_name,
        "params": params,
        "output_count": info.output_count,
        "provenance": info.provenance.value,
    }


def to_json(info: StandardizedApiInfo) -> str:
    return json.dumps(info_to_obj(info), indent=2)


def _require(obj: dict, key: str, path: str) -> Any:
    if key not in obj:
        raise SchemaError(f"{path}/{key}", "missing required field")
    return obj[key]


def _reject_unknown(obj: dict, allowed: set[str], path: str) -> None:
    for key in obj:
        if key not in allowed:
            raise SchemaError(f"{path}/{key}", "unknown field")


def _expect(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise SchemaError(path, message)


def _dim_from_obj(obj: Any, path: str) -> DimSpec:
    _expect(isinstance(obj, dict), path, "expected object")
    kind = _require(obj, "kind", path)
    if kind == "fixed":
        _reject_unknown(obj, {"kind", "n"}, path)
        n = _require(obj, "n", path)
        _expect(isinstance(n, int) and not isinstance(n, bool), f"{path}/n", "expected int")
        return FixedDim(n)
    if kind == "var":
        _reject_unknown(obj, {"kind", "symbol"}, path)
        symbol = _require(obj, "symbol", path)
        try:
            return VarDim(VarSymbol(symbol))
        except ValueError:
            raise SchemaError(f"{path}/symbol", f"unknown symbol {symbol!r}")
    if kind == "ref":
        _reject_unknown(obj, {"kind", "param", "axis"}, path)
        param = _require(obj, "param", path)
        axis = _require(obj, "axis", path)
        _expect(isinstance(param, str), f"{path}/param", "expected str")
        _expect(isinstance(axis, int) and not isinstance(axis, bool), f"{path}/axis", "expected int")
        return RefDim(param, axis)
    if kind == "channel_set":
        _reject_unknown(obj, {"kind", "allowed"}, path)
        allowed = _require(obj, "allowed", path)
        _expect(
            isinstance(allowed, list) and all(isinstance(c, int) for c in allowed),
            f"{path}/allowed",
            "expected list of ints",
        )
        _expect(len(set(allowed)) == len(allowed), f"{path}/allowed", "duplicate channel")
        return ChannelSetDim(frozenset(allowed))
    raise SchemaError(f"{path}/kind", f"unknown dim kind {kind!r}")


def _edge_from_obj(obj: Any, path: str) -> DependencyEdge:
    _expect(isinstance(obj, dict), path, "expected object")
    _reject_unknown(obj, {"source", "kind", "axes"}, path)
    source = _require(obj, "source", path)
    kind_raw = _require(obj, "kind", path)
    _expect(isinstance(source, str) and source != "", f"{path}/source", "expected non-empty str")
    try:
        kind = DependencyKind(kind_raw)
    except ValueError:
        raise SchemaError(f"{path}/kind", f"unknown dependency kind {kind_raw!r}")
    axes = None
    if "axes" in obj and obj["axes"] is not None:
        raw = obj["axes"]
        _expect(
            isinstance(raw, list) and len(raw) == 2 and all(isinstance(a, int) for a in raw),
            f"{path}/axes",
            "expected a pair of ints",
        )
        axes = (raw[0], raw[1])
    return DependencyEdge(source=source, kind=kind, axes=axes)


def _param_from_obj(obj: Any, path: str) -> ParamInfo:
    _expect(isinstance(obj, dict), path, "expected object")
    _reject_unknown(obj, {"name", "flag", "default", "type_domain", "size_spec", "description"}, path)
    name = _require(obj, "name", path)
    flag = _require(obj, "flag", path)
    _expect(isinstance(name, str) and name != "", f"{path}/name", "expected non-empty str")
    _expect(isinstance(flag, bool), f"{path}/flag", "expected bool")

    default = None
    if obj.get("default") is not None:
        try:
            default = from_wire(obj["default"], f"{path}/default")
        except Exception as exc:
            raise SchemaError(f"{path}/default", str(exc))

    raw_domain = _require(obj, "type_domain", path)
    _expect(isinstance(raw_domain, list), f"{path}/type_domain", "expected list")
    domain: list[ScalarType] = []
    for i, t in enumerate(raw_domain):
        try:
            domain.append(ScalarType(t))
        except ValueError:
            raise SchemaError(f"{path}/type_domain/{i}", f"unknown scalar type {t!r}")
    _expect(len(set(domain)) == len(domain), f"{path}/type_domain", "duplicate scalar type")

    size_spec = None
    if obj.get("size_spec") is not None:
        raw_size = obj["size_spec"]
        _expect(isinstance(raw_size, dict), f"{path}/size_spec", "expected object")
        _reject_unknown(raw_size, {"dims"}, f"{path}/size_spec")
        dims_raw = _require(raw_size, "dims", f"{path}/size_spec")
        _expect(isinstance(dims_raw, list), f"{path}/size_spec/dims", "expected list")
        size_spec = SizeSpec(
            dims=tuple(
                _dim_from_obj(d, f"{path}/size_spec/dims/{i}") for i, d in enumerate(dims_raw)
            )
        )

    raw_desc = _require(obj, "description", path)
    _expect(isinstance(raw_desc, dict), f"{path}/description", "expected object")
    dpath = f"{path}/description"
    _reject_unknown(raw_desc, {"raw_text", "value_range", "options", "depends_on"}, dpath)
    raw_text = raw_desc.get("raw_text", "")
    _expect(isinstance(raw_text, str), f"{dpath}/raw_text", "expected str")
    value_range = None
    if raw_desc.get("value_range") is not None:
        vr = raw_desc["value_range"]
        _expect(
            isinstance(vr, list)
            and len(vr) == 2
            and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in vr),
            f"{dpath}/value_range",
            "expected [lo, hi]",
        )
        value_range = (float(vr[0]), float(vr[1]))
    options = None
    if raw_desc.get("options") is not None:
        raw_opts = raw_desc["options"]
        _expect(isinstance(raw_opts, list), f"{dpath}/options", "expected list")
        try:
            options = tuple(
                from_wire(o, f"{dpath}/options/{i}") for i, o in enumerate(raw_opts)
            )
        except Exception as exc:
            raise SchemaError(f"{dpath}/options", str(exc))
    edges_raw = raw_desc.get("depends_on", [])
    _expect(isinstance(edges_raw, list), f"{dpath}/depends_on", "expected list")
    depends_on = tuple(
        _edge_from_obj(e, f"{dpath}/depends_on/{i}") for i, e in enumerate(edges_raw)
    )

    return ParamInfo(
        name=name,
        flag=flag,
        default=default,
        type_domain=frozenset(domain),
        size_spec=size_spec,
        description=DescriptionSpec(
            raw_text=raw_text, value_range=value_range, options=options, depends_on=depends_on
        ),
    )


def info_from_obj(obj: Any, path: str = "") -> StandardizedApiInfo:
    _expect(isinstance(obj, dict), path or "/", "expected object")
    _reject_unknown(obj, {"api_name", "params", "output_count", "provenance"}, path)
    api_name = _require(obj, "api_name", path)
    params_raw = _require(obj, "params", path)
    output_count = _require(obj, "output_count", path)
    provenance_raw = _require(obj, "provenance", path)
    _expect(isinstance(api_name, str) and api_name != "", f"{path}/api_name", "expected non-empty str")
    _expect(isinstance(params_raw, list), f"{path}/params", "expected list")
    _expect(
        isinstance(output_count, int) and not isinstance(output_count, bool),
        f"{path}/output_count",
        "expected int",
    )
    try:
        provenance = Provenance(provenance_raw)
    except ValueError:
        raise SchemaError(f"{path}/provenance", f"unknown provenance {provenance_raw!r}")
    params = tuple(_param_from_obj(p, f"{path}/params/{i}") for i, p in enumerate(params_raw))
    return StandardizedApiInfo(
        api_name=api_name, params=params, output_count=output_count, provenance=provenance
    )


def from_json(text: str) -> StandardizedApiInfo:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("", f"not valid JSON: {exc}")
    return info_from_obj(obj)


def infos_to_json(infos: list[StandardizedApiInfo]) -> str:
    """The canonical file format: a top-level array of infos."""
    return json.dumps([info_to_obj(i) for i in infos], indent=2)


def infos_from_json(text: str) -> list[StandardizedApiInfo]:
    try:
        arr = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("", f"not valid JSON: {exc}")
    if not isinstance(arr, list):
        raise SchemaError("", "expected a top-level array")
    return [info_from_obj(o, f"/{i}") for i, o in enumerate(arr)]
