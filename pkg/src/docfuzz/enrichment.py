"""Turn parsed docs into standardized API information.

Well-documented APIs map deterministically: a fixed keyword-rule table
over each parameter's description text fills in type, size, value range,
dependencies, and closed option sets. Poorly-documented APIs borrow the
most frequent pattern recorded for same-named parameters of
well-documented APIs (the parameter corpus); an external LLM backend can
be swapped in, but any backend failure falls back to corpus inference so
enrichment always returns a usable info.

Rule table (first matching size rule wins; matching is case-insensitive):

====================  =====================================================
trigger               effect
====================  =====================================================
"uint8"/"float32"/    added to the type domain ("float" alone means
"float64"/"int" ...   float32, "double" means float64)
name or text says     size (N, 1, 2); bounded by the first earlier
points/pts            image-shaped parameter when one exists
"grayscale" or        size (H, W, 1)
"single-channel"
"image"/"array"/      size (H, W, 3) - the three-channel default
"matrix"
name contains color   size (3,), int elements, range [0, 256)
"range/of/between     value range [lo, hi)
lo to/and hi"
"same type as p"      type tied to p
"same size as p"      shape tied to p
"one of A, B, C"      closed option set; the parameter becomes
                      unmodifiable (flag = false)
"default(s to) v"     default value v
====================  =====================================================
"""

from __future__ import annotations

import json
import logging
import os
import re
import urllib.error
import urllib.request
from dataclasses import dataclass, field

from .doc_parser import ParamDescription, SignatureInfo
from .schema import (
    DependencyEdge,
    DependencyKind,
    DescriptionSpec,
    GRAY_IMAGE_SIZE,
    IMAGE_KEYWORD_RE,
    ParamInfo,
    POINTS_SIZE,
    Provenance,
    RGB_IMAGE_SIZE,
    RefDim,
    SizeSpec,
    StandardizedApiInfo,
    FixedDim,
    from_json as schema_from_json,
    info_to_obj,
    validate,
)
from .values import EncodedValue, EnumVal, FloatVal, IntVal, ScalarType

log = logging.getLogger(__name__)


class BackendUnavailable(Exception):
    """The external enrichment backend could not be reached; non-fatal."""


@dataclass(frozen=True)
class CorpusInference:
    """Offline backend: infer from well-documented parameter patterns."""


@dataclass(frozen=True)
class ExternalLlm:
    endpoint: str
    model: str
    prompt_template: str = ""
    timeout_s: float = 30.0

    def __post_init__(self) -> None:
        if not self.endpoint:
            raise ValueError("ExternalLlm requires a non-empty endpoint")


EnrichmentBackend = CorpusInference | ExternalLlm


def normalize_param_name(name: str) -> str:
    """Lowercase and strip trailing digits: image1/image2 collapse to image."""
    return re.sub(r"\d+$", "", name.lower())


# --- keyword rules ----------------------------------------------------------

_TYPE_PATTERNS: list[tuple[str, ScalarType]] = [
    (r"\buint8\b", ScalarType.UINT8),
    (r"\bfloat64\b|\bdouble\b", ScalarType.FLOAT64),
    (r"\bfloat32\b", ScalarType.FLOAT32),
    (r"\bfloat\b", ScalarType.FLOAT32),
    (r"\bint32\b|\bint\b|\binteger\b", ScalarType.INT32),
    (r"\bbool\b|\bboolean\b", ScalarType.BOOL),
    (r"\bstring\b", ScalarType.STRING),
]

_RANGE_RE = re.compile(
    r"(?:range(?:s)?\s+(?:of\s+)?|between\s+|from\s+|of\s+)"
    r"(-?\d+(?:\.\d+)?)\s+(?:to|and)\s+(-?\d+(?:\.\d+)?)",
    re.IGNORECASE,
)
_SAME_TYPE_RE = re.compile(r"same\s+(?:data\s+)?type\s+as\s+(\w+)", re.IGNORECASE)
_SAME_SHAPE_RE = re.compile(r"same\s+(?:size|shape|dimensions)\s+as\s+(\w+)", re.IGNORECASE)
_ONE_OF_RE = re.compile(r"one\s+of[:\s]+(.+?)(?:\.|$)", re.IGNORECASE)
_OPTION_RE = re.compile(r"([A-Z][A-Z0-9_]*)\s*\((\d+)\)|(-?\d+)\b")
_DEFAULT_RE = re.compile(r"defaults?\s*(?:to|is|:)?\s+(-?\d+(?:\.\d+)?)", re.IGNORECASE)
_POINTS_RE = re.compile(r"\bpoints?\b|\bpts\b", re.IGNORECASE)
_GRAY_RE = re.compile(r"\bgrayscale\b|\bsingle-channel\b", re.IGNORECASE)


def _extract_types(text: str) -> frozenset[ScalarType]:
    found = set()
    for pattern, scalar in _TYPE_PATTERNS:
        if re.search(pattern, text, re.IGNORECASE):
            found.add(scalar)
    return frozenset(found)


def _extract_options(text: str) -> tuple[EncodedValue, ...] | None:
    m = _ONE_OF_RE.search(text)
    if not m:
        return None
    options: list[EncodedValue] = []
    for named, value, bare in _OPTION_RE.findall(m.group(1)):
        if named:
            options.append(EnumVal(named, int(value)))
        elif bare:
            options.append(IntVal(int(bare)))
    return tuple(options) or None


def _is_image_shaped(param: ParamInfo) -> bool:
    return param.size_spec in (RGB_IMAGE_SIZE, GRAY_IMAGE_SIZE)


def infer_param_spec(
    name: str,
    text: str,
    earlier: list[ParamInfo],
) -> ParamInfo:
    """Apply the rule table to one parameter's description text."""
    earlier_names = [p.name for p in earlier]
    type_domain = _extract_types(text)
    size_spec: SizeSpec | None = None
    value_range: tuple[float, float] | None = None
    edges: list[DependencyEdge] = []

    norm = normalize_param_name(name)
    if _POINTS_RE.search(name) or norm in ("pt", "pts", "point") or _POINTS_RE.search(text):
        size_spec = POINTS_SIZE
        image_sources = [p.name for p in earlier if _is_image_shaped(p)]
        if image_sources:
            edges.append(
                DependencyEdge(image_sources[0], DependencyKind.BOUNDED_BY_SHAPE, axes=(0, 1))
            )
        if not type_domain:
            type_domain = frozenset({ScalarType.FLOAT32})
    elif _GRAY_RE.search(text):
        size_spec = GRAY_IMAGE_SIZE
    elif "color" in norm or "colour" in norm:
        size_spec = SizeSpec(dims=(FixedDim(3),))
        if not type_domain:
            type_domain = frozenset({ScalarType.INT32})
        value_range = (0.0, 256.0)
    elif IMAGE_KEYWORD_RE.search(text):
        size_spec = RGB_IMAGE_SIZE

    m = _RANGE_RE.search(text)
    if m:
        value_range = (float(m.group(1)), float(m.group(2)))

    for pattern, kind in ((_SAME_TYPE_RE, DependencyKind.SAME_TYPE), (_SAME_SHAPE_RE, DependencyKind.SAME_SHAPE)):
        for source in pattern.findall(text):
            if source in earlier_names and source != name:
                edges.append(DependencyEdge(source, kind))

    options = _extract_options(text)
    default = None
    dm = _DEFAULT_RE.search(text)
    if dm:
        raw = dm.group(1)
        default = IntVal(int(raw)) if "." not in raw else FloatVal(float(raw))

    flag = options is None
    if options is not None and not type_domain:
        kinds = {type(o) for o in options}
        type_domain = frozenset(
            {ScalarType.ENUM if kinds == {EnumVal} else ScalarType.INT32}
        )

    return ParamInfo(
        name=name,
        flag=flag,
        default=default,
        type_domain=type_domain,
        size_spec=size_spec,
        description=DescriptionSpec(
            raw_text=text,
            value_range=value_range,
            options=options,
            depends_on=tuple(edges),
        ),
    )


def standardize_well_documented(
    sig: SignatureInfo, descs: list[ParamDescription], api_name: str | None = None
) -> StandardizedApiInfo:
    """Build the standardized info directly from a parsed, described signature.

    `api_name` overrides the signature token (the pipeline passes the full
    dotted doc path so campaign targets can resolve the callable).
    """
    by_name: dict[str, str] = {}
    for d in descs:
        by_name.setdefault(d.name, d.text)
    params: list[ParamInfo] = []
    for name in sig.inputs:
        params.append(infer_param_spec(name, by_name.get(name, ""), params))
    return StandardizedApiInfo(
        api_name=api_name or sig.api_name,
        params=tuple(params),
        output_count=len(sig.outputs),
        provenance=Provenance.PARSED,
    )


# --- parameter corpus -------------------------------------------------------


@dataclass
class ParamCorpus:
    """Multimap from normalized parameter name to observed (pattern, source)."""

    entries: dict[str, list[tuple[ParamInfo, str]]] = field(default_factory=dict)

    def add(self, param: ParamInfo, source_api: str) -> None:
        self.entries.setdefault(normalize_param_name(param.name), []).append((param, source_api))

    def lookup(self, name: str) -> list[tuple[ParamInfo, str]]:
        """Exact-name hits first; otherwise everything under the normalized name."""
        candidates = self.entries.get(normalize_param_name(name), [])
        exact = [(p, src) for p, src in candidates if p.name == name]
        return exact or candidates


def build_param_corpus(infos: list[StandardizedApiInfo]) -> ParamCorpus:
    """Index every parameter of well-documented infos by normalized name."""
    for info in infos:
        if info.provenance is not Provenance.PARSED:
            raise ValueError(f"{info.api_name}: corpus sources must have parsed provenance")
    corpus = ParamCorpus()
    for info in sorted(infos, key=lambda i: i.api_name):
        for param in info.params:
            corpus.add(param, info.api_name)
    return corpus


def _pattern_key(param: ParamInfo) -> str:
    obj = info_to_obj(
        StandardizedApiInfo(api_name="_", params=(param,), output_count=0)
    )["params"][0]
    obj["name"] = ""
    return json.dumps(obj, sort_keys=True)


def _most_frequent_pattern(candidates: list[tuple[ParamInfo, str]]) -> ParamInfo:
    groups: dict[str, tuple[int, str, ParamInfo]] = {}
    for param, source in candidates:
        key = _pattern_key(param)
        count, best_source, exemplar = groups.get(key, (0, source, param))
        groups[key] = (count + 1, min(best_source, source), exemplar)
    # most frequent wins; ties break toward the smallest source api
    _, _, winner = min(groups.values(), key=lambda g: (-g[0], g[1]))
    return winner


def _retarget(pattern: ParamInfo, name: str, earlier: list[ParamInfo]) -> ParamInfo:
    """Rename a borrowed pattern and remap its dependencies into the new API.

    Edge sources resolve by exact then normalized match against earlier
    parameters; unresolvable references are dropped.
    """
    earlier_names = [p.name for p in earlier]
    by_norm = {normalize_param_name(n): n for n in reversed(earlier_names)}

    def resolve(source: str) -> str | None:
        if source in earlier_names:
            return source
        return by_norm.get(normalize_param_name(source))

    edges = []
    for edge in pattern.description.depends_on:
        target = resolve(edge.source)
        if target is not None and target != name:
            edges.append(DependencyEdge(target, edge.kind, edge.axes))
    size_spec = pattern.size_spec
    if size_spec is not None and any(isinstance(d, RefDim) for d in size_spec.dims):
        dims = []
        ok = True
        for dim in size_spec.dims:
            if isinstance(dim, RefDim):
                target = resolve(dim.param)
                if target is None:
                    ok = False
                    break
                dims.append(RefDim(target, dim.axis))
            else:
                dims.append(dim)
        size_spec = SizeSpec(dims=tuple(dims)) if ok else None
    return ParamInfo(
        name=name,
        flag=pattern.flag,
        default=pattern.default,
        type_domain=pattern.type_domain,
        size_spec=size_spec,
        description=DescriptionSpec(
            raw_text=pattern.description.raw_text,
            value_range=pattern.description.value_range,
            options=pattern.description.options,
            depends_on=tuple(edges),
        ),
    )


_FALLBACK_TYPES = frozenset({ScalarType.FLOAT32})


def enrich_poorly_documented(
    sig: SignatureInfo,
    corpus: ParamCorpus,
    backend: EnrichmentBackend = CorpusInference(),
    api_name: str | None = None,
) -> StandardizedApiInfo:
    """Standardize a signature-only API; never propagates backend failure."""
    if isinstance(backend, ExternalLlm):
        try:
            info = _enrich_via_llm(sig, corpus, backend)
            if info is not None:
                return info
        except BackendUnavailable as exc:
            log.warning("llm backend unavailable (%s); falling back to corpus", exc)

    params: list[ParamInfo] = []
    for name in sig.inputs:
        candidates = corpus.lookup(name)
        if candidates:
            pattern = _most_frequent_pattern(candidates)
            params.append(_retarget(pattern, name, params))
        else:
            params.append(ParamInfo(name=name, type_domain=_FALLBACK_TYPES))
    return StandardizedApiInfo(
        api_name=api_name or sig.api_name,
        params=tuple(params),
        output_count=len(sig.outputs),
        provenance=Provenance.ENRICHED,
    )


# --- optional LLM backend ---------------------------------------------------


def render_llm_prompt(sig: SignatureInfo, exemplars: list[StandardizedApiInfo]) -> str:
    """Deterministic Input/Task/Output prompt for the external backend."""
    lines = [
        "Input:",
        sig.render(),
        "",
        "Task:",
        "1. Identify the API name from the function signature.",
        "2. Classify parameters as input or output based on the arrow and bracket markers.",
        "3. Generate standardized API information containing: the API name; every input",
        "   parameter with flag, default, type, size and description; and the number of",
        "   output parameters.",
        "4. When full documentation is given, derive the fields directly from it.",
        "5. When only a signature is given, infer missing details from the exemplar",
        "   parameter patterns below.",
        "",
        "Output:",
        "A single JSON object in the standardized API information format.",
    ]
    if exemplars:
        lines += ["", "Exemplars:"]
        for info in exemplars:
            lines.append(json.dumps(info_to_obj(info), indent=2, sort_keys=True))
    return "\n".join(lines)


def _enrich_via_llm(
    sig: SignatureInfo, corpus: ParamCorpus, backend: ExternalLlm
) -> StandardizedApiInfo | None:
    """One POST to the backend; None means the reply was unusable."""
    if backend.prompt_template:
        prompt = backend.prompt_template.format(signature=sig.render())
    else:
        exemplars: list[StandardizedApiInfo] = []
        prompt = render_llm_prompt(sig, exemplars)
    body = json.dumps({"model": backend.model, "prompt": prompt}).encode("utf-8")
    headers = {"Content-Type": "application/json"}
    key = os.environ.get("DOCFUZZ_LLM_KEY")
    if key:
        headers["Authorization"] = f"Bearer {key}"
    request = urllib.request.Request(backend.endpoint, data=body, headers=headers)
    try:
        with urllib.request.urlopen(request, timeout=backend.timeout_s) as resp:
            reply = json.loads(resp.read().decode("utf-8"))
    except (urllib.error.URLError, TimeoutError, OSError, json.JSONDecodeError) as exc:
        raise BackendUnavailable(str(exc))
    content = reply.get("content") if isinstance(reply, dict) else None
    if content is None:
        log.warning("llm reply missing content field; falling back to corpus")
        return None
    try:
        text = content if isinstance(content, str) else json.dumps(content)
        info = schema_from_json(text)
    except Exception as exc:
        log.warning("llm reply did not parse as standardized info (%s)", exc)
        return None
    if validate(info):
        log.warning("llm reply failed validation; falling back to corpus")
        return None
    return StandardizedApiInfo(
        api_name=info.api_name,
        params=info.params,
        output_count=info.output_count,
        provenance=Provenance.ENRICHED,
    )
