"""Docstring classification and signature parsing.

Raw docstrings come in three shapes: a full body with ``@brief``/``@param``
tags, a bare one-line signature, or no documentation at all. This module
classifies a body, pulls the signature apart into input/output parameter
lists, and collects per-parameter description lines.

Signature grammar (one line)::

    name(in1, in2[, buf1[, buf2]]) -> out1, out2

The token before ``(`` is the API name. Names after the ``->`` arrow are
outputs. Bracketed names inside the parentheses are optional buffer
parameters; they count as outputs as well. Everything else inside the
parentheses is an input, in textual order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

UNDOCUMENTED_SENTINEL = "No documentation available"

_IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_ARROW_RE = re.compile(r"\s*->\s*")
# some docstring emitters prefix every continuation line with ". "
_DOT_PREFIX_RE = re.compile(r"^\s*\.( |$)")


class MalformedSignature(Exception):
    """Signature line cannot be parsed; route the doc to enrichment or skip it."""


class DocClass(Enum):
    WELL_DOCUMENTED = "well_documented"
    POORLY_DOCUMENTED = "poorly_documented"
    UNDOCUMENTED = "undocumented"


@dataclass(frozen=True)
class RawApiDoc:
    """A dotted API path plus its raw (possibly empty) docstring body."""

    api_path: str
    body: str

    def __post_init__(self) -> None:
        if not self.api_path:
            raise ValueError("api_path must be non-empty")


@dataclass(frozen=True)
class SignatureInfo:
    api_name: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    optional_buffer_params: tuple[str, ...] = ()

    def render(self) -> str:
        """Re-render as a signature line; parsing the result is the identity."""
        parts = ", ".join(self.inputs)
        for name in self.optional_buffer_params:
            parts += f"[, {name}]"
        return f"{self.api_name}({parts}) -> {', '.join(self.outputs)}"


@dataclass(frozen=True)
class ParamDescription:
    name: str
    text: str


@dataclass(frozen=True)
class ParsedDoc:
    """One stage-output record: classification plus whatever parsing yielded."""

    api_path: str
    doc_class: DocClass
    signature: SignatureInfo | None = None
    param_descriptions: tuple[ParamDescription, ...] = ()
    extra_overloads: int = 0


def _strip_dot_prefix(line: str) -> str:
    if _DOT_PREFIX_RE.match(line):
        return _DOT_PREFIX_RE.sub("", line, count=1)
    return line


def _body_lines(body: str) -> list[str]:
    return [_strip_dot_prefix(line).rstrip() for line in body.splitlines()]


def _signature_lines(body: str) -> list[str]:
    found = []
    for line in _body_lines(body):
        stripped = line.strip()
        if "(" in stripped and ")" in stripped and "->" in stripped:
            try:
                parse_signature(stripped)
            except MalformedSignature:
                continue
            found.append(stripped)
    return found


def classify_doc(doc: RawApiDoc) -> DocClass:
    """Total classification of a docstring body into the three shapes."""
    stripped = doc.body.strip()
    if not stripped or stripped == UNDOCUMENTED_SENTINEL:
        return DocClass.UNDOCUMENTED
    has_tags = any(
        line.strip().startswith(("@param", "@brief"))
        for line in _body_lines(doc.body)
    )
    if not has_tags and _signature_lines(doc.body):
        return DocClass.POORLY_DOCUMENTED
    return DocClass.WELL_DOCUMENTED


def _split_names(segment: str, what: str) -> list[str]:
    names = []
    for raw in segment.split(","):
        name = raw.strip()
        if not name:
            continue
        if not _IDENT_RE.match(name):
            raise MalformedSignature(f"bad {what} name {name!r}")
        names.append(name)
    return names


def _walk_params(segment: str) -> tuple[list[str], list[str]]:
    """Split the parenthesized section into plain and bracketed names.

    A ``[`` terminates the name before it in its pre-bracket context, so
    ``scale[, dst]`` yields inputs [scale] and optional [dst]; nested groups
    like ``[, dst[, mask]]`` flatten.
    """
    inputs: list[str] = []
    optional: list[str] = []
    token = ""
    depth = 0

    def flush(at_depth: int) -> None:
        nonlocal token
        name = token.strip()
        token = ""
        if not name:
            return
        if not _IDENT_RE.match(name):
            raise MalformedSignature(f"bad parameter name {name!r}")
        (optional if at_depth > 0 else inputs).append(name)

    for ch in segment:
        if ch == "[":
            flush(depth)
            depth += 1
        elif ch == "]":
            flush(depth)
            depth -= 1
            if depth < 0:
                raise MalformedSignature("unbalanced brackets")
        elif ch == ",":
            flush(depth)
        else:
            token += ch
    flush(depth)
    if depth != 0:
        raise MalformedSignature("unbalanced brackets")
    return inputs, optional


def parse_signature(sig_line: str) -> SignatureInfo:
    """Parse one signature line into name, inputs, outputs, optional buffers.

    Raises:
        MalformedSignature: missing arrow, unbalanced parens/brackets, or an
            empty/invalid name anywhere.
    """
    line = sig_line.strip()
    open_idx = line.find("(")
    if open_idx <= 0:
        raise MalformedSignature("no API name before '('")
    api_name = line[:open_idx].strip()
    if not re.match(r"^[A-Za-z_][A-Za-z0-9_.]*$", api_name):
        raise MalformedSignature(f"bad API name {api_name!r}")
    close_idx = line.find(")", open_idx)
    if close_idx < 0:
        raise MalformedSignature("unbalanced parentheses")
    segment = line[open_idx + 1 : close_idx]
    if "(" in segment:
        raise MalformedSignature("nested parentheses")
    inputs, optional = _walk_params(segment)

    if len(set(inputs)) != len(inputs) or len(set(optional)) != len(optional):
        raise MalformedSignature("duplicate parameter name")

    rest = line[close_idx + 1 :]
    arrow = _ARROW_RE.match(rest)
    if not arrow:
        raise MalformedSignature("missing '->' arrow")
    outputs = _split_names(rest[arrow.end() :], "output")
    if not outputs:
        raise MalformedSignature("no outputs after arrow")

    # bracketed buffers are outputs too
    for opt in optional:
        if opt not in outputs:
            outputs.append(opt)
    return SignatureInfo(
        api_name=api_name,
        inputs=tuple(inputs),
        outputs=tuple(outputs),
        optional_buffer_params=tuple(optional),
    )


def _is_continuation(line: str) -> bool:
    stripped = line.strip()
    return bool(stripped) and not stripped.startswith("@") and bool(re.match(r"\w", stripped))


def parse_param_descriptions(body: str) -> list[ParamDescription]:
    """Collect ``@param name text`` entries, folding wrapped continuation lines.

    Duplicate names are kept in order. Lines of bare punctuation (the "..."
    elision marker) neither fold nor continue an entry.
    """
    out: list[ParamDescription] = []
    current: tuple[str, list[str]] | None = None
    for line in _body_lines(body):
        stripped = line.strip()
        if stripped.startswith("@param"):
            if current:
                out.append(ParamDescription(current[0], " ".join(current[1]).strip()))
            rest = stripped[len("@param") :].strip()
            name, _, text = rest.partition(" ")
            current = (name, [text.strip()] if text.strip() else [])
        elif current and _is_continuation(line):
            current[1].append(stripped)
        else:
            if current:
                out.append(ParamDescription(current[0], " ".join(current[1]).strip()))
                current = None
    if current:
        out.append(ParamDescription(current[0], " ".join(current[1]).strip()))
    return out


def parse_doc(doc: RawApiDoc) -> ParsedDoc:
    """Classify and parse one raw doc into a stage-output record."""
    doc_class = classify_doc(doc)
    if doc_class is DocClass.UNDOCUMENTED:
        return ParsedDoc(api_path=doc.api_path, doc_class=doc_class)
    sig_lines = _signature_lines(doc.body)
    if not sig_lines:
        return ParsedDoc(api_path=doc.api_path, doc_class=doc_class)
    signature = parse_signature(sig_lines[0])
    descs = ()
    if doc_class is DocClass.WELL_DOCUMENTED:
        descs = tuple(parse_param_descriptions(doc.body))
    return ParsedDoc(
        api_path=doc.api_path,
        doc_class=doc_class,
        signature=signature,
        param_descriptions=descs,
        extra_overloads=len(sig_lines) - 1,
    )


def parsed_doc_to_json(parsed: ParsedDoc) -> dict:
    sig = None
    if parsed.signature is not None:
        sig = {
            "api_name": parsed.signature.api_name,
            "inputs": list(parsed.signature.inputs),
            "outputs": list(parsed.signature.outputs),
            "optional_buffer_params": list(parsed.signature.optional_buffer_params),
        }
    return {
        "api_path": parsed.api_path,
        "doc_class": parsed.doc_class.value,
        "signature": sig,
        "param_descriptions": [{"name": d.name, "text": d.text} for d in parsed.param_descriptions],
        "extra_overloads": parsed.extra_overloads,
    }


def parsed_doc_from_json(obj: dict) -> ParsedDoc:
    sig = None
    if obj.get("signature") is not None:
        raw = obj["signature"]
        sig = SignatureInfo(
            api_name=raw["api_name"],
            inputs=tuple(raw["inputs"]),
            outputs=tuple(raw["outputs"]),
            optional_buffer_params=tuple(raw.get("optional_buffer_params", ())),
        )
    return ParsedDoc(
        api_path=obj["api_path"],
        doc_class=DocClass(obj["doc_class"]),
        signature=sig,
        param_descriptions=tuple(
            ParamDescription(d["name"], d["text"]) for d in obj.get("param_descriptions", ())
        ),
        extra_overloads=obj.get("extra_overloads", 0),
    )
