"""Protocol v1 request loop.

The worker reads one JSON request per line from stdin, invokes the named
callable in its target namespace, and writes one JSON reply per line to
stdout, in request order. It deliberately catches only Python-level
exceptions: a native crash, abort, or kill must take the process down so
the supervisor observes the death itself. Timeouts are likewise the
supervisor's job; the worker never self-reports them.
"""

from __future__ import annotations

import importlib
import json
import sys
import time
from types import ModuleType
from typing import Any, TextIO

from .codec import decode_value, encode_value, has_non_finite

PROTOCOL_VERSION = 1


class Target:
    """A named namespace of callables resolved by dotted path."""

    def __init__(self, name: str, module: ModuleType, alias: str):
        self.name = name
        self.module = module
        self.alias = alias

    def resolve(self, api: str):
        parts = api.split(".")
        if parts and parts[0] == self.alias:
            parts = parts[1:]
        obj: Any = self.module
        for part in parts:
            obj = getattr(obj, part)
        if not callable(obj):
            raise TypeError(f"{api} is not callable")
        return obj


def load_target(spec: str) -> Target:
    """`mock` loads the bundled fault target; `module:<name>` imports one."""
    if spec == "mock":
        from . import mock_target

        return Target("mock", mock_target, alias="mockcv")
    if spec.startswith("module:"):
        name = spec.split(":", 1)[1]
        module = importlib.import_module(name)
        return Target(spec, module, alias=name.split(".")[0])
    raise ValueError(f"unknown target spec {spec!r}")


def _reply(stdout: TextIO, payload: dict) -> None:
    stdout.write(json.dumps(payload) + "\n")
    stdout.flush()


def _handle_call(request: dict, target: Target) -> dict:
    api = request["api"]
    args = [decode_value(a) for a in request.get("args", [])]
    fn = target.resolve(api)
    started = time.monotonic()
    result = fn(*args)
    duration_ms = int((time.monotonic() - started) * 1000)
    outputs = list(result) if isinstance(result, tuple) else [result]
    return {
        "id": request["id"],
        "status": "ok",
        "outputs": [encode_value(o) for o in outputs],
        "nan_detected": has_non_finite(outputs),
        "duration_ms": duration_ms,
    }


def serve(stdin: TextIO, stdout: TextIO, target: Target) -> None:
    """Loop until stdin closes. Emits the ready handshake first."""
    _reply(stdout, {"op": "ready", "protocol": PROTOCOL_VERSION, "target": target.name})
    for line in stdin:
        if not line.strip():
            continue
        request_id = None
        try:
            request = json.loads(line)
            if not isinstance(request, dict) or request.get("op") != "call":
                raise ValueError("expected a call request")
            request_id = request.get("id")
            _reply(stdout, _handle_call(request, target))
        except json.JSONDecodeError as exc:
            _reply(
                stdout,
                {
                    "id": request_id,
                    "status": "exception",
                    "exception": {"type": "ProtocolError", "message": str(exc)},
                    "duration_ms": 0,
                },
            )
        except Exception as exc:  # target-level failure, reported not fatal
            _reply(
                stdout,
                {
                    "id": request_id,
                    "status": "exception",
                    "exception": {"type": type(exc).__name__, "message": str(exc)},
                    "duration_ms": 0,
                },
            )


def serve_stdio(target_spec: str) -> None:
    serve(sys.stdin, sys.stdout, load_target(target_spec))
