"""Deterministic test-case generation under a constraint set.

A case stream is a pure function of (constraint set, config): the first
case initializes every parameter inside its resolved domain, and each
following case mutates the previous one parameter by parameter. Per
parameter the generator decides a type (kept when the domain is a
singleton, copied along a same-type dependency, sampled otherwise), a
size (fixed dims kept, shapes copied along same-shape dependencies, free
dims redrawn), and applies one of the enabled value strategies: adding
gaussian noise, masking a random rectangle with a fixed integer, or
dividing elementwise by an integer.

A slice of cases is adversarial: one dependency-free parameter gets an
invalid type (a string where a number is expected) or an extreme
dimension. Valid-mode cases are clamped back into every declared range
and bound, so they pass the constraint checker by construction.

Randomness contract: every draw comes from a PCG64 stream keyed by
SHA-256 over (seed, api, case index, parameter), so runs are bit-stable
across platforms, budgets are prefix-closed, and inserting a parameter
does not disturb its neighbours' streams.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator

import numpy as np

from .constraint_engine import ApiConstraintSet, ResolvedSpec
from .schema import (
    ChannelSetDim,
    DependencyKind,
    FixedDim,
    RefDim,
    SizeSpec,
    VarDim,
)
from .values import (
    BoolVal,
    EncodedValue,
    EnumVal,
    FloatVal,
    INTEGER_TYPES,
    IntVal,
    NdArrayVal,
    ScalarType,
    SeqVal,
    StrVal,
    ndarray_from_numpy,
    numpy_dtype,
)

_ARRAY_CAPABLE = frozenset(
    {ScalarType.UINT8, ScalarType.INT32, ScalarType.FLOAT32, ScalarType.FLOAT64, ScalarType.BOOL}
)
_DEFAULT_INT_RANGE = (0, 256)
INVALID_TYPE_PROBE = StrVal("not-a-number")


class ValueStrategy(str, Enum):
    NOISE = "noise"
    MASK = "mask"
    DIVISION = "division"


class ValidityMode(str, Enum):
    VALID_ONLY = "valid_only"
    ADVERSARIAL = "adversarial"


@dataclass(frozen=True)
class StrategyFlags:
    type: bool = True
    size: bool = True
    value_noise: bool = True
    value_mask: bool = True
    value_division: bool = True

    def disabled(self, name: str) -> "StrategyFlags":
        if not hasattr(self, name):
            raise ValueError(f"unknown strategy flag {name!r}")
        return replace(self, **{name: False})


@dataclass(frozen=True)
class GenConfig:
    budget_per_api: int = 600
    rng_seed: int = 0
    dim_range: tuple[int, int] = (1, 64)
    extreme_dims: tuple[int, ...] = (0, 1, 4096)
    adversarial_ratio: float = 0.2
    noise_sigma: float = 8.0  # absolute, integer elements
    noise_sigma_rel: float = 0.05  # relative to data scale, float elements
    mask_value_range: tuple[int, int] = (0, 255)
    divisors: tuple[int, ...] = (2, 3, 4, 5, 8, 16)
    strategy_flags: StrategyFlags = field(default_factory=StrategyFlags)

    def __post_init__(self) -> None:
        if self.budget_per_api < 1:
            raise ValueError("budget_per_api must be >= 1")
        if not 0.0 <= self.adversarial_ratio <= 1.0:
            raise ValueError("adversarial_ratio must be within [0, 1]")


@dataclass(frozen=True)
class AppliedStrategies:
    type_strategy: str | None = None  # "resample" | "invalid"
    size_strategy: str | None = None  # "resample" | "extreme"
    value_strategy: ValueStrategy | None = None


@dataclass(frozen=True)
class TestCase:
    __test__ = False  # domain type, not a pytest case

    api_name: str
    case_index: int
    seed: int
    args: dict[str, EncodedValue]
    applied: AppliedStrategies
    validity_mode: ValidityMode


def derive_rng(seed: int, *parts: object) -> np.random.Generator:
    """Platform-independent stream keyed by hashing the identifying parts."""
    digest = hashlib.sha256()
    digest.update(str(seed).encode("utf-8"))
    for part in parts:
        digest.update(b"\x1f")
        digest.update(str(part).encode("utf-8"))
    key = int.from_bytes(digest.digest()[:16], "little")
    return np.random.Generator(np.random.PCG64(key))


def _param_rng(cfg: GenConfig, api: str, case_index: int, param: str) -> np.random.Generator:
    return derive_rng(cfg.rng_seed, api, case_index, param)


def _case_rng(cfg: GenConfig, api: str, case_index: int) -> np.random.Generator:
    return derive_rng(cfg.rng_seed, api, case_index, "\x00case")


def _choice(rng: np.random.Generator, items):
    return items[int(rng.integers(0, len(items)))]


def _sorted_domain(domain: frozenset[ScalarType]) -> list[ScalarType]:
    return sorted(domain, key=lambda t: t.value)


def _pick_dtype(
    spec: ResolvedSpec,
    args: dict[str, EncodedValue],
    rng: np.random.Generator,
) -> ScalarType:
    from .values import scalar_type_of

    for edge in spec.deps:
        if edge.kind is DependencyKind.SAME_TYPE:
            source = args.get(edge.source)
            if isinstance(source, NdArrayVal):
                return source.dtype
            if source is not None and not isinstance(source, (StrVal,)):
                kind = scalar_type_of(source)
                if kind in _ARRAY_CAPABLE:
                    return kind
    domain = _sorted_domain(spec.type_domain)
    if spec.size_template is not None:
        capable = [t for t in domain if t in _ARRAY_CAPABLE]
        domain = capable or [ScalarType.FLOAT32]
    return _choice(rng, domain)


def _resolve_dims(
    spec: ResolvedSpec,
    args: dict[str, EncodedValue],
    cfg: GenConfig,
    rng: np.random.Generator,
) -> tuple[int, ...] | None:
    template = spec.size_template
    if template is None:
        return None
    for edge in spec.deps:
        if edge.kind is DependencyKind.SAME_SHAPE:
            source = args.get(edge.source)
            if isinstance(source, NdArrayVal):
                return source.shape
            if isinstance(source, SeqVal):
                return (len(source.items),)
    lo, hi = cfg.dim_range
    dims: list[int] = []
    for dim in template.dims:
        if isinstance(dim, FixedDim):
            dims.append(dim.n)
        elif isinstance(dim, ChannelSetDim):
            dims.append(_choice(rng, sorted(dim.allowed)))
        elif isinstance(dim, RefDim):
            ref = args.get(dim.param)
            if isinstance(ref, NdArrayVal) and dim.axis < len(ref.shape):
                dims.append(ref.shape[dim.axis])
            else:
                dims.append(int(rng.integers(lo, hi + 1)))
        else:
            dims.append(int(rng.integers(lo, hi + 1)))
    return tuple(dims)


def _bound_extents(
    spec: ResolvedSpec, args: dict[str, EncodedValue]
) -> tuple[int, int] | None:
    """The (H, W) window a bounded point parameter must stay inside."""
    for edge in spec.deps:
        if edge.kind is DependencyKind.BOUNDED_BY_SHAPE:
            source = args.get(edge.source)
            if isinstance(source, NdArrayVal):
                axes = edge.axes or (0, 1)
                if max(axes) < len(source.shape):
                    return source.shape[axes[0]], source.shape[axes[1]]
    return None


def _value_interval(spec: ResolvedSpec, dtype: ScalarType) -> tuple[float, float]:
    if spec.value_range is not None:
        lo, hi = spec.value_range
        if dtype is ScalarType.UINT8:
            lo, hi = max(lo, 0.0), min(hi, 256.0)
        return lo, hi
    if dtype in INTEGER_TYPES:
        return float(_DEFAULT_INT_RANGE[0]), float(_DEFAULT_INT_RANGE[1])
    return 0.0, 1.0


def _fresh_array(
    dtype: ScalarType,
    shape: tuple[int, ...],
    interval: tuple[float, float],
    bounds: tuple[int, int] | None,
    rng: np.random.Generator,
) -> NdArrayVal:
    lo, hi = interval
    np_dtype = numpy_dtype(dtype)
    if bounds is not None and shape and shape[-1] == 2:
        # coordinates drawn directly inside the bounding window
        h, w = bounds
        if dtype in INTEGER_TYPES:
            col0 = rng.integers(0, max(h, 1), size=shape[:-1])
            col1 = rng.integers(0, max(w, 1), size=shape[:-1])
        else:
            col0 = rng.random(size=shape[:-1]) * h
            col1 = rng.random(size=shape[:-1]) * w
        arr = np.stack([col0, col1], axis=-1).astype(np_dtype)
        return ndarray_from_numpy(arr, dtype)
    if dtype is ScalarType.BOOL:
        return ndarray_from_numpy(rng.integers(0, 2, size=shape).astype(bool), dtype)
    if dtype in INTEGER_TYPES:
        arr = rng.integers(int(lo), max(int(hi), int(lo) + 1), size=shape)
        return ndarray_from_numpy(arr.astype(np_dtype), dtype)
    arr = rng.random(size=shape) * (hi - lo) + lo
    return ndarray_from_numpy(arr.astype(np_dtype), dtype)


def _fresh_scalar(
    spec: ResolvedSpec, dtype: ScalarType, rng: np.random.Generator
) -> EncodedValue:
    lo, hi = _value_interval(spec, dtype)
    if dtype in INTEGER_TYPES:
        return IntVal(int(rng.integers(int(lo), max(int(hi), int(lo) + 1))))
    if dtype is ScalarType.BOOL:
        return BoolVal(bool(rng.integers(0, 2)))
    if dtype is ScalarType.STRING:
        letters = "abcdefghijklmnopqrstuvwxyz"
        return StrVal("".join(_choice(rng, letters) for _ in range(int(rng.integers(1, 9)))))
    if dtype is ScalarType.ENUM:
        k = int(rng.integers(0, 4))
        return EnumVal(f"OPT{k}", k)
    return FloatVal(float(rng.random() * (hi - lo) + lo))


def _fresh_value(
    spec: ResolvedSpec,
    dtype: ScalarType,
    dims: tuple[int, ...] | None,
    args: dict[str, EncodedValue],
    rng: np.random.Generator,
) -> EncodedValue:
    if dims is None:
        return _fresh_scalar(spec, dtype, rng)
    template = spec.size_template
    interval = _value_interval(spec, dtype)
    if (
        template is not None
        and len(template.dims) == 1
        and isinstance(template.dims[0], FixedDim)
    ):
        # short fixed tuples (color triples and the like) stay sequences
        make = (
            (lambda: IntVal(int(rng.integers(int(interval[0]), int(interval[1])))))
            if dtype in INTEGER_TYPES
            else (lambda: FloatVal(float(rng.random() * (interval[1] - interval[0]) + interval[0])))
        )
        return SeqVal(tuple(make() for _ in range(dims[0])))
    return _fresh_array(dtype, dims, interval, _bound_extents(spec, args), rng)


# --- value strategies --------------------------------------------------------


def _noise_sigma(cfg: GenConfig, arr: np.ndarray, dtype: ScalarType) -> float:
    if dtype in INTEGER_TYPES:
        return cfg.noise_sigma
    scale = float(np.abs(arr).max()) if arr.size else 1.0
    return cfg.noise_sigma_rel * max(1.0, scale)


def apply_value_strategy(
    v: NdArrayVal,
    s: ValueStrategy,
    cfg: GenConfig,
    rng_stream: np.random.Generator,
) -> NdArrayVal:
    """Mutate a numeric array in place of its values; shape and dtype persist."""
    arr = v.to_numpy().astype(np.float64)
    np_dtype = numpy_dtype(v.dtype)
    if s is ValueStrategy.NOISE:
        sigma = _noise_sigma(cfg, arr, v.dtype)
        out = arr + rng_stream.normal(0.0, sigma, size=arr.shape)
        if v.dtype in INTEGER_TYPES:
            info = np.iinfo(np_dtype)
            out = np.clip(np.rint(out), info.min, info.max)
    elif s is ValueStrategy.MASK:
        out = arr.copy()
        lo, hi = cfg.mask_value_range
        value = int(rng_stream.integers(lo, hi + 1))
        if out.size:
            region = []
            for extent in out.shape:
                start = int(rng_stream.integers(0, extent))
                length = int(rng_stream.integers(1, extent - start + 1))
                region.append(slice(start, start + length))
            out[tuple(region)] = value
    else:  # DIVISION
        d = _choice(rng_stream, cfg.divisors)
        out = np.floor_divide(arr, d) if v.dtype in INTEGER_TYPES else arr / d
    return ndarray_from_numpy(out.astype(np_dtype), v.dtype)


def _apply_scalar_strategy(
    value: EncodedValue,
    s: ValueStrategy,
    cfg: GenConfig,
    rng: np.random.Generator,
) -> EncodedValue:
    if isinstance(value, SeqVal):
        return SeqVal(tuple(_apply_scalar_strategy(item, s, cfg, rng) for item in value.items))
    if isinstance(value, IntVal):
        if s is ValueStrategy.NOISE:
            return IntVal(int(round(value.value + rng.normal(0.0, cfg.noise_sigma))))
        if s is ValueStrategy.MASK:
            return IntVal(int(rng.integers(cfg.mask_value_range[0], cfg.mask_value_range[1] + 1)))
        return IntVal(value.value // _choice(rng, cfg.divisors))
    if isinstance(value, FloatVal):
        if s is ValueStrategy.NOISE:
            sigma = cfg.noise_sigma_rel * max(1.0, abs(value.value))
            return FloatVal(value.value + float(rng.normal(0.0, sigma)))
        if s is ValueStrategy.MASK:
            return FloatVal(float(rng.integers(cfg.mask_value_range[0], cfg.mask_value_range[1] + 1)))
        return FloatVal(value.value / _choice(rng, cfg.divisors))
    return value


def _clamp_valid(
    value: EncodedValue,
    spec: ResolvedSpec,
    args: dict[str, EncodedValue],
) -> EncodedValue:
    """Pull a valid-mode value back inside its declared range and bounds."""
    rng_pair = spec.value_range
    if isinstance(value, IntVal) and rng_pair:
        lo, hi = rng_pair
        return IntVal(int(min(max(value.value, int(np.ceil(lo))), int(np.ceil(hi)) - 1)))
    if isinstance(value, FloatVal) and rng_pair:
        lo, hi = rng_pair
        return FloatVal(float(min(max(value.value, lo), np.nextafter(hi, -np.inf))))
    if isinstance(value, SeqVal) and rng_pair:
        return SeqVal(tuple(_clamp_valid(item, spec, args) for item in value.items))
    if not isinstance(value, NdArrayVal):
        return value
    arr = value.to_numpy()
    out = arr
    if rng_pair and value.dtype is not ScalarType.BOOL:
        lo, hi = rng_pair
        upper = int(np.ceil(hi)) - 1 if value.dtype in INTEGER_TYPES else np.nextafter(hi, -np.inf)
        out = np.clip(out, lo, upper)
    bounds = _bound_extents(spec, args)
    if bounds is not None and out.ndim >= 1 and out.size and out.shape[-1] == 2:
        out = out.copy()
        h, w = bounds
        out[..., 0] = np.clip(out[..., 0], 0, max(h - 1, 0))
        out[..., 1] = np.clip(out[..., 1], 0, max(w - 1, 0))
    if out is arr:
        return value
    return ndarray_from_numpy(out.astype(numpy_dtype(value.dtype)), value.dtype)


# --- the generation loop -----------------------------------------------------


def init_case(cs: ApiConstraintSet, cfg: GenConfig) -> TestCase:
    """Case 0: every parameter drawn fresh inside its resolved domain."""
    args: dict[str, EncodedValue] = {}
    for name in cs.order:
        spec = cs.specs[name]
        rng = _param_rng(cfg, cs.api_name, 0, name)
        if not spec.modifiable and spec.fixed_choices:
            args[name] = _choice(rng, spec.fixed_choices)
            continue
        dtype = _pick_dtype(spec, args, rng)
        dims = _resolve_dims(spec, args, cfg, rng)
        value = _fresh_value(spec, dtype, dims, args, rng)
        args[name] = _clamp_valid(value, spec, args)
    return TestCase(
        api_name=cs.api_name,
        case_index=0,
        seed=cfg.rng_seed,
        args=args,
        applied=AppliedStrategies(),
        validity_mode=ValidityMode.VALID_ONLY,
    )


def _corruption_plan(
    cs: ApiConstraintSet, cfg: GenConfig, rng: np.random.Generator
) -> tuple[str, str] | None:
    """Decide whether this case corrupts (kind, parameter); None keeps it valid."""
    flags = cfg.strategy_flags
    kinds = [k for k, on in (("type", flags.type), ("size", flags.size)) if on]
    roll = rng.random()  # drawn unconditionally to keep the stream stable
    if not kinds or roll >= cfg.adversarial_ratio:
        return None
    kind = _choice(rng, kinds)
    eligible = [
        name
        for name in cs.order
        if cs.specs[name].modifiable
        and not cs.specs[name].deps
        and (kind == "type" or cs.specs[name].size_template is not None)
    ]
    if not eligible:
        return None
    return kind, _choice(rng, eligible)


def next_case(cs: ApiConstraintSet, prev: TestCase, cfg: GenConfig, index: int) -> TestCase:
    """Mutate the previous case into case `index` under the enabled strategies."""
    flags = cfg.strategy_flags
    case_rng = _case_rng(cfg, cs.api_name, index)
    corruption = _corruption_plan(cs, cfg, case_rng)
    enabled_values = [
        s
        for s, on in (
            (ValueStrategy.NOISE, flags.value_noise),
            (ValueStrategy.MASK, flags.value_mask),
            (ValueStrategy.DIVISION, flags.value_division),
        )
        if on
    ]
    strategy = _choice(case_rng, enabled_values) if enabled_values else None
    adversarial = corruption is not None

    args: dict[str, EncodedValue] = {}
    typed_any = sized_any = value_applied = False
    for name in cs.order:
        spec = cs.specs[name]
        rng = _param_rng(cfg, cs.api_name, index, name)
        if not spec.modifiable and spec.fixed_choices:
            args[name] = _choice(rng, spec.fixed_choices)
            continue
        if corruption is not None and corruption == ("type", name):
            args[name] = INVALID_TYPE_PROBE
            continue
        dtype = _pick_dtype(spec, args, rng)
        typed_any = True
        dims = _resolve_dims(spec, args, cfg, rng)
        if dims is not None:
            sized_any = True
            if corruption is not None and corruption == ("size", name):
                axis_candidates = [
                    i
                    for i, d in enumerate(spec.size_template.dims)
                    if isinstance(d, (VarDim, RefDim))
                ] or list(range(len(dims)))
                axis = _choice(rng, axis_candidates)
                extreme = _choice(rng, cfg.extreme_dims)
                dims = tuple(extreme if i == axis else d for i, d in enumerate(dims))

        prev_value = prev.args.get(name)
        chained = (
            isinstance(prev_value, NdArrayVal)
            and prev_value.dtype == dtype
            and prev_value.shape == dims
        )
        base = prev_value if chained else _fresh_value(spec, dtype, dims, args, rng)
        if strategy is not None:
            if isinstance(base, NdArrayVal) and base.dtype is not ScalarType.BOOL:
                base = apply_value_strategy(base, strategy, cfg, rng)
                value_applied = True
            elif isinstance(base, (IntVal, FloatVal, SeqVal)):
                base = _apply_scalar_strategy(base, strategy, cfg, rng)
                value_applied = True
        if not adversarial:
            base = _clamp_valid(base, spec, args)
        args[name] = base

    applied = AppliedStrategies(
        type_strategy=(
            "invalid"
            if corruption is not None and corruption[0] == "type"
            else ("resample" if flags.type and typed_any else None)
        ),
        size_strategy=(
            "extreme"
            if corruption is not None and corruption[0] == "size"
            else ("resample" if flags.size and sized_any else None)
        ),
        value_strategy=strategy if value_applied else None,
    )
    return TestCase(
        api_name=cs.api_name,
        case_index=index,
        seed=cfg.rng_seed,
        args=args,
        applied=applied,
        validity_mode=ValidityMode.ADVERSARIAL if adversarial else ValidityMode.VALID_ONLY,
    )


def case_stream(cs: ApiConstraintSet, cfg: GenConfig) -> Iterator[TestCase]:
    """Exactly budget_per_api cases; a pure function of (cs, cfg)."""
    case = init_case(cs, cfg)
    yield case
    for index in range(1, cfg.budget_per_api):
        case = next_case(cs, case, cfg, index)
        yield case


# --- serialization -----------------------------------------------------------


def case_to_obj(case: TestCase) -> dict:
    return {
        "api_name": case.api_name,
        "case_index": case.case_index,
        "seed": case.seed,
        "validity_mode": case.validity_mode.value,
        "applied": {
            "type_strategy": case.applied.type_strategy,
            "size_strategy": case.applied.size_strategy,
            "value_strategy": (
                case.applied.value_strategy.value if case.applied.value_strategy else None
            ),
        },
        "args": {name: value.to_wire() for name, value in case.args.items()},
    }


def case_to_json(case: TestCase) -> str:
    return json.dumps(case_to_obj(case))


def case_from_obj(obj: dict) -> TestCase:
    from .values import from_wire

    applied = obj.get("applied", {})
    return TestCase(
        api_name=obj["api_name"],
        case_index=obj["case_index"],
        seed=obj["seed"],
        args={name: from_wire(value) for name, value in obj["args"].items()},
        applied=AppliedStrategies(
            type_strategy=applied.get("type_strategy"),
            size_strategy=applied.get("size_strategy"),
            value_strategy=(
                ValueStrategy(applied["value_strategy"]) if applied.get("value_strategy") else None
            ),
        ),
        validity_mode=ValidityMode(obj["validity_mode"]),
    )
