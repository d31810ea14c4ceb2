"""Executable constraints: resolved generation domains plus a checker.

`extract_constraints` turns a validated standardized info into concrete
per-parameter generation domains (defaults filled in, unmodifiable
parameters reduced to their closed choice sets) and a dependency-ordered
generation plan. `check_case` is the validity oracle: it replays every
resolved constraint, including cross-parameter dependencies, against a
concrete test case and reports what is violated.

The atomic-constraint count sums, per parameter: one for the type bound,
one per size dimension bound, one for a value range, one per dependency
edge, and one per fixed choice set. The total is invariant under
parameter reordering.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

import numpy as np

from .schema import (
    ChannelSetDim,
    DependencyEdge,
    DependencyKind,
    FixedDim,
    IMAGE_KEYWORD_RE,
    RGB_IMAGE_SIZE,
    RefDim,
    SizeSpec,
    StandardizedApiInfo,
    VarDim,
    _dim_from_obj,
    _dim_to_json,
    _edge_from_obj,
    _edge_to_json,
)
from .values import (
    EncodedValue,
    EnumVal,
    FloatVal,
    IntVal,
    NdArrayVal,
    ScalarType,
    SeqVal,
    StrVal,
    from_wire,
    scalar_type_of,
)

DEFAULT_TYPE_DOMAIN = frozenset({ScalarType.FLOAT32})


class CyclicDependency(Exception):
    def __init__(self, api_name: str, cycle: list[str]):
        self.cycle = cycle
        super().__init__(f"{api_name}: dependency cycle among {cycle}")


@dataclass(frozen=True)
class ResolvedSpec:
    modifiable: bool
    type_domain: frozenset[ScalarType]
    size_template: SizeSpec | None = None  # None means scalar
    fixed_choices: tuple[EncodedValue, ...] | None = None
    value_range: tuple[float, float] | None = None
    deps: tuple[DependencyEdge, ...] = ()


@dataclass(frozen=True)
class ApiConstraintSet:
    api_name: str
    specs: dict[str, ResolvedSpec]
    order: tuple[str, ...]
    constraint_count: int


@dataclass(frozen=True)
class Violation:
    param: str
    rule: str

    def __str__(self) -> str:
        return f"{self.param}: {self.rule}"


def _dependency_sources(param_name: str, spec_deps: Iterable[DependencyEdge], size: SizeSpec | None) -> set[str]:
    sources = {e.source for e in spec_deps}
    if size is not None:
        sources |= {d.param for d in size.dims if isinstance(d, RefDim)}
    sources.discard(param_name)
    return sources


def _topo_order(api_name: str, names: list[str], sources: dict[str, set[str]]) -> tuple[str, ...]:
    """Kahn's algorithm, stable by original parameter order among independents."""
    placed: list[str] = []
    done: set[str] = set()
    remaining = list(names)
    while remaining:
        progressed = False
        for name in remaining:
            if sources[name] <= done:
                placed.append(name)
                done.add(name)
                remaining.remove(name)
                progressed = True
                break
        if not progressed:
            raise CyclicDependency(api_name, remaining)
    return tuple(placed)


def extract_constraints(info: StandardizedApiInfo) -> ApiConstraintSet:
    """Resolve a validated info into generation domains and an order.

    Raises:
        CyclicDependency: the dependency edges cannot be ordered.
    """
    specs: dict[str, ResolvedSpec] = {}
    for param in info.params:
        desc = param.description
        fixed_choices = None
        if not param.flag:
            choices: list[EncodedValue] = list(desc.options or ())
            if param.default is not None and param.default not in choices:
                choices.append(param.default)
            fixed_choices = tuple(choices)
        type_domain = param.type_domain or DEFAULT_TYPE_DOMAIN
        size_template = param.size_spec
        if size_template is None and IMAGE_KEYWORD_RE.search(desc.raw_text):
            size_template = RGB_IMAGE_SIZE
        specs[param.name] = ResolvedSpec(
            modifiable=param.flag,
            type_domain=type_domain,
            size_template=size_template,
            fixed_choices=fixed_choices,
            value_range=desc.value_range,
            deps=desc.depends_on,
        )

    names = [p.name for p in info.params]
    sources = {
        name: _dependency_sources(name, specs[name].deps, specs[name].size_template)
        for name in names
    }
    order = _topo_order(info.api_name, names, sources)

    count = 0
    for spec in specs.values():
        count += 1  # type bound (defaulted when absent)
        if spec.size_template is not None:
            count += len(spec.size_template.dims)
        if spec.value_range is not None:
            count += 1
        count += len(spec.deps)
        if spec.fixed_choices is not None:
            count += 1
    return ApiConstraintSet(
        api_name=info.api_name, specs=specs, order=order, constraint_count=count
    )


# --- validity oracle --------------------------------------------------------

_INT_FAMILY = frozenset({ScalarType.UINT8, ScalarType.INT32})
_FLOAT_FAMILY = frozenset({ScalarType.FLOAT32, ScalarType.FLOAT64})


def _scalar_matches_domain(value: EncodedValue, domain: frozenset[ScalarType]) -> bool:
    if isinstance(value, IntVal):
        return bool(domain & _INT_FAMILY)
    if isinstance(value, FloatVal):
        return bool(domain & _FLOAT_FAMILY)
    if isinstance(value, EnumVal):
        return ScalarType.ENUM in domain or bool(domain & _INT_FAMILY)
    if isinstance(value, StrVal):
        return ScalarType.STRING in domain
    kind = scalar_type_of(value)
    return kind in domain if kind else False


def _check_type(value: EncodedValue, domain: frozenset[ScalarType]) -> bool:
    if isinstance(value, NdArrayVal):
        return value.dtype in domain
    if isinstance(value, SeqVal):
        return all(_scalar_matches_domain(item, domain) for item in value.items)
    return _scalar_matches_domain(value, domain)


def _dim_ok(dim, actual: int, args: Mapping[str, EncodedValue]) -> bool:
    if isinstance(dim, FixedDim):
        return actual == dim.n
    if isinstance(dim, VarDim):
        return actual >= 1
    if isinstance(dim, ChannelSetDim):
        return actual in dim.allowed
    if isinstance(dim, RefDim):
        ref = args.get(dim.param)
        if not isinstance(ref, NdArrayVal) or dim.axis >= len(ref.shape):
            return True  # unmatchable reference: nothing to enforce
        return actual == ref.shape[dim.axis]
    return False


def _check_size(value: EncodedValue, template: SizeSpec | None, args: Mapping[str, EncodedValue]) -> bool:
    if template is None:
        return not isinstance(value, (NdArrayVal, SeqVal))
    dims = template.dims
    if isinstance(value, NdArrayVal):
        if len(value.shape) != len(dims):
            return False
        return all(_dim_ok(d, s, args) for d, s in zip(dims, value.shape))
    if isinstance(value, SeqVal) and len(dims) == 1:
        return _dim_ok(dims[0], len(value.items), args)
    return False


def _iter_numeric(value: EncodedValue):
    if isinstance(value, (IntVal, FloatVal)):
        yield float(value.value)
    elif isinstance(value, SeqVal):
        for item in value.items:
            yield from _iter_numeric(item)
    elif isinstance(value, NdArrayVal) and value.dtype not in (ScalarType.BOOL,):
        arr = value.to_numpy()
        if arr.size:
            yield float(arr.min())
            yield float(arr.max())


def _check_range(value: EncodedValue, rng: tuple[float, float]) -> bool:
    lo, hi = rng
    return all(lo <= x < hi for x in _iter_numeric(value))


def _check_dep(
    param: str,
    value: EncodedValue,
    edge: DependencyEdge,
    args: Mapping[str, EncodedValue],
) -> Violation | None:
    source = args.get(edge.source)
    if source is None:
        return None
    if edge.kind is DependencyKind.SAME_TYPE:
        if isinstance(source, (StrVal,)) or source is None:
            return None  # corrupted source: dependency is unenforceable
        if isinstance(value, NdArrayVal) and isinstance(source, NdArrayVal):
            if value.dtype != source.dtype:
                return Violation(param, f"SameType({edge.source})")
            return None
        if scalar_type_of(value) != scalar_type_of(source):
            return Violation(param, f"SameType({edge.source})")
        return None
    if edge.kind is DependencyKind.SAME_SHAPE:
        if isinstance(value, NdArrayVal) and isinstance(source, NdArrayVal):
            if value.shape != source.shape:
                return Violation(param, f"SameShape({edge.source})")
        elif isinstance(value, SeqVal) and isinstance(source, SeqVal):
            if len(value.items) != len(source.items):
                return Violation(param, f"SameShape({edge.source})")
        return None
    # bounded-by-shape: trailing coordinate pairs within the source extent
    if not isinstance(value, NdArrayVal) or not isinstance(source, NdArrayVal):
        return None
    axes = edge.axes or (0, 1)
    if max(axes) >= len(source.shape):
        return None
    coords = value.to_numpy()
    if coords.size == 0 or coords.shape[-1] != 2:
        return None
    bound0, bound1 = source.shape[axes[0]], source.shape[axes[1]]
    flat = coords.reshape(-1, 2)
    ok = (
        (flat[:, 0] >= 0).all()
        and (flat[:, 0] < bound0).all()
        and (flat[:, 1] >= 0).all()
        and (flat[:, 1] < bound1).all()
    )
    if not ok:
        return Violation(param, f"BoundedByShape({edge.source})")
    return None


def check_case(cs: ApiConstraintSet, case: Any) -> list[Violation]:
    """Check one concrete case against every resolved constraint.

    `case` is a generated test case or any mapping from parameter name to
    encoded value covering all parameters of the constraint set.
    """
    args: Mapping[str, EncodedValue] = case.args if hasattr(case, "args") else case
    violations: list[Violation] = []
    for name in cs.order:
        spec = cs.specs[name]
        value = args[name]
        if not spec.modifiable:
            if spec.fixed_choices and value not in spec.fixed_choices:
                violations.append(Violation(name, "fixed_choice"))
            continue
        if not _check_type(value, spec.type_domain):
            violations.append(Violation(name, "type"))
        if not _check_size(value, spec.size_template, args):
            violations.append(Violation(name, "size"))
        if spec.value_range is not None and not _check_range(value, spec.value_range):
            violations.append(Violation(name, "value_range"))
        for edge in spec.deps:
            v = _check_dep(name, value, edge, args)
            if v is not None:
                violations.append(v)
    return violations


# --- constraints file format --------------------------------------------------


def constraint_set_to_obj(cs: ApiConstraintSet) -> dict[str, Any]:
    specs = {}
    for name in cs.order:
        spec = cs.specs[name]
        specs[name] = {
            "modifiable": spec.modifiable,
            "type_domain": sorted(t.value for t in spec.type_domain),
            "size_template": (
                {"dims": [_dim_to_json(d) for d in spec.size_template.dims]}
                if spec.size_template is not None
                else None
            ),
            "fixed_choices": (
                [c.to_wire() for c in spec.fixed_choices]
                if spec.fixed_choices is not None
                else None
            ),
            "value_range": list(spec.value_range) if spec.value_range else None,
            "deps": [_edge_to_json(e) for e in spec.deps],
        }
    return {
        "api_name": cs.api_name,
        "order": list(cs.order),
        "constraint_count": cs.constraint_count,
        "specs": specs,
    }


def constraint_set_from_obj(obj: dict[str, Any]) -> ApiConstraintSet:
    specs = {}
    for name, raw in obj["specs"].items():
        size = None
        if raw.get("size_template") is not None:
            size = SizeSpec(
                dims=tuple(_dim_from_obj(d, "") for d in raw["size_template"]["dims"])
            )
        choices = None
        if raw.get("fixed_choices") is not None:
            choices = tuple(from_wire(c) for c in raw["fixed_choices"])
        vr = raw.get("value_range")
        specs[name] = ResolvedSpec(
            modifiable=raw["modifiable"],
            type_domain=frozenset(ScalarType(t) for t in raw["type_domain"]),
            size_template=size,
            fixed_choices=choices,
            value_range=(float(vr[0]), float(vr[1])) if vr else None,
            deps=tuple(_edge_from_obj(e, "") for e in raw.get("deps", [])),
        )
    return ApiConstraintSet(
        api_name=obj["api_name"],
        specs=specs,
        order=tuple(obj["order"]),
        constraint_count=obj["constraint_count"],
    )


def constraint_sets_to_json(sets: list[ApiConstraintSet]) -> str:
    return json.dumps([constraint_set_to_obj(cs) for cs in sets], indent=2)


def constraint_sets_from_json(text: str) -> list[ApiConstraintSet]:
    return [constraint_set_from_obj(o) for o in json.loads(text)]
