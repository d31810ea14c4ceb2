"""Protocol tests against the real worker subprocess."""

from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from docfuzz_worker.codec import decode_value, encode_value


class WorkerProc:
    def __init__(self, target="mock"):
        self.proc = subprocess.Popen(
            [sys.executable, "-m", "docfuzz_worker", "--target", target],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self.ready = json.loads(self.proc.stdout.readline())
        self._id = 0

    def call(self, api, args, raw_line=None):
        self._id += 1
        if raw_line is None:
            request = {
                "id": self._id,
                "op": "call",
                "api": api,
                "args": [encode_value(a) for a in args],
                "timeout_ms": 10_000,
            }
            raw_line = json.dumps(request)
        self.proc.stdin.write(raw_line + "\n")
        self.proc.stdin.flush()
        line = self.proc.stdout.readline()
        if not line:
            return None  # worker died
        return json.loads(line)

    def close(self):
        if self.proc.poll() is None:
            self.proc.kill()
        self.proc.wait(timeout=10)


@pytest.fixture
def worker():
    w = WorkerProc()
    yield w
    w.close()


class TestHandshake:
    def test_ready_message(self, worker):
        assert worker.ready == {"op": "ready", "protocol": 1, "target": "mock"}


class TestCalls:
    def test_ndarray_round_trip_byte_identical(self, worker):
        img = (np.random.default_rng(0).random((4, 4, 3)) * 250).astype(np.uint8)
        sent = encode_value(img)
        reply = worker.call("mockcv.flip_axes", [img, 0])
        assert reply["status"] == "ok"
        flipped = decode_value(reply["outputs"][0])
        np.testing.assert_array_equal(flipped, np.flip(img, axis=0))
        # encode -> decode -> encode of the input is byte-identical
        assert encode_value(decode_value(sent)) == sent

    def test_collapsed_points_flag_nan(self, worker):
        pts = np.full((8, 1, 2), 0.1, dtype=np.float32)
        reply = worker.call("mockcv.find_transform", [pts, pts.copy()])
        assert reply["status"] == "ok"
        assert reply["nan_detected"] is True
        assert len(reply["outputs"]) == 2

    def test_exception_reported_not_fatal(self, worker):
        a = np.zeros((2, 2, 3), dtype=np.uint8)
        b = np.zeros((2, 2, 3), dtype=np.float32)
        reply = worker.call("mockcv.blend_linear", [a, b, 0.5])
        assert reply["status"] == "exception"
        assert reply["exception"]["type"] == "error"
        assert "Formats of input arguments" in reply["exception"]["message"]
        # the loop continues afterwards
        follow_up = worker.call("mockcv.blend_linear", [a, a.copy(), 0.5])
        assert follow_up["status"] == "ok"

    def test_unknown_api_is_exception(self, worker):
        reply = worker.call("mockcv.summon_bugs", [])
        assert reply["status"] == "exception"
        assert reply["exception"]["type"] == "AttributeError"

    def test_abort_fault_kills_without_reply(self, worker):
        huge = np.zeros((4096, 2, 3), dtype=np.uint8)
        reply = worker.call("mockcv.equalize_hist", [huge])
        assert reply is None
        assert worker.proc.wait(timeout=10) != 0

    def test_malformed_line_protocol_error_and_continue(self, worker):
        reply = worker.call(None, None, raw_line="certainly {not json")
        assert reply["status"] == "exception"
        assert reply["exception"]["type"] == "ProtocolError"
        ok = worker.call("mockcv.rotation_matrix", [0.5, 45.0, 1.0])
        assert ok["status"] == "ok"

    def test_ids_echoed_in_order(self, worker):
        for _ in range(5):
            reply = worker.call("mockcv.rotation_matrix", [0.5, 45.0, 1.0])
            assert reply["id"] == worker._id


class TestModuleTarget:
    def test_python_module_namespace(self):
        w = WorkerProc(target="module:math")
        try:
            assert w.ready["target"] == "module:math"
            reply = w.call("math.sqrt", [2.25])
            assert reply["status"] == "ok"
            assert decode_value(reply["outputs"][0]) == 1.5
        finally:
            w.close()

    def test_unknown_target_exits_with_usage_error(self):
        proc = subprocess.run(
            [sys.executable, "-m", "docfuzz_worker", "--target", "bogus"],
            capture_output=True,
            text=True,
            timeout=30,
        )
        assert proc.returncode == 2
