"""Campaign execution: worker supervision, the bug oracle, and reports.

The orchestrator drives generated cases through an isolated worker
process speaking newline-delimited JSON over stdin/stdout. A dead or
hung worker is itself a signal (crash-class); the worker is restarted
and the campaign continues with the next case, so one crash never
shadows the rest of the budget.

Every execution maps to exactly one verdict:

* worker death, timeout, or breached memory ceiling -> crash bug
* NaN/Inf in any output of a valid-mode case        -> NaN bug
* exception on a valid-mode case                    -> exception bug
* exception on an adversarial case                  -> pass, unless the
  message looks like an internal assertion
* anything else                                     -> pass

Bugs deduplicate on (api, verdict, signature); signatures mask digits
and hex addresses so two stack addresses collapse into one report.

Campaigns can also record a transcript of worker responses and later
replay it without any worker present; replay verifies a hash of each
case's arguments so a drifted generator fails loudly instead of
misattributing responses.
"""

from __future__ import annotations

import gzip
import hashlib
import json
import logging
import os
import re
import select
import subprocess
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Union

import psutil

from .constraint_engine import ApiConstraintSet, constraint_sets_from_json
from .generation_engine import (
    GenConfig,
    TestCase,
    ValidityMode,
    case_stream,
    case_to_json,
    case_to_obj,
)
from .values import EncodedValue, ValueError_, contains_non_finite, from_wire

log = logging.getLogger(__name__)

DEFAULT_RSS_LIMIT = 2 * 1024**3

# exception types adversarial inputs are allowed to raise
DEFAULT_ALLOWLIST = (
    "TypeError",
    "ValueError",
    "OverflowError",
    "ZeroDivisionError",
    "IndexError",
    "KeyError",
    "AttributeError",
    "MemoryError",
    "error",  # cv-style catch-all exception type
)

_INTERNAL_FAULT_RE = re.compile(
    r"INTERNAL_ASSERT|ASSERT_FAILED|assertion|Assertion|SIGSEGV|SIGABRT|SIGBUS|signal\s+\d+"
)

_HEX_RE = re.compile(r"0x[0-9a-fA-F]+")
_DIGITS_RE = re.compile(r"\d+")


class WorkerSpawnFailure(Exception):
    """The worker process could not be started or never handshook."""


class ProtocolViolation(Exception):
    """The worker replied with something that is not a protocol message."""


class ReplayMismatch(Exception):
    """A transcript entry does not correspond to the generated case."""


# --- execution results --------------------------------------------------------


@dataclass(frozen=True)
class OkOutcome:
    outputs: tuple[EncodedValue, ...]
    nan_detected: bool
    duration_ms: int


@dataclass(frozen=True)
class ExceptionOutcome:
    type_name: str
    message: str


@dataclass(frozen=True)
class TimeoutOutcome:
    pass


@dataclass(frozen=True)
class WorkerDeathOutcome:
    exit_code: int | None
    signal: int | None


@dataclass(frozen=True)
class RssLimitOutcome:
    rss_bytes: int


Outcome = Union[OkOutcome, ExceptionOutcome, TimeoutOutcome, WorkerDeathOutcome, RssLimitOutcome]


@dataclass(frozen=True)
class ExecutionResult:
    case_index: int
    outcome: Outcome


class Verdict(str, Enum):
    PASS = "pass"
    CRASH_BUG = "crash"
    NAN_BUG = "nan"
    EXCEPTION_BUG = "exception"


@dataclass
class CampaignConfig:
    gen: GenConfig = field(default_factory=GenConfig)
    constraints_path: str | None = None
    target: str = "mock"  # "mock" or "module:<name>"
    timeout_ms: int = 10_000
    parallel_workers: int = 1
    exception_allowlist: tuple[str, ...] = DEFAULT_ALLOWLIST
    worker_command: tuple[str, ...] = ("docfuzz-worker",)
    rss_limit_bytes: int = DEFAULT_RSS_LIMIT
    replay_transcript: str | None = None
    record_transcript: str | None = None
    out_dir: str | None = None
    dump_cases_dir: str | None = None

    def __post_init__(self) -> None:
        if self.timeout_ms < 1:
            raise ValueError("timeout_ms must be >= 1")
        if self.parallel_workers < 1:
            raise ValueError("parallel_workers must be >= 1")


def classify(res: ExecutionResult, case: TestCase, cfg: CampaignConfig) -> Verdict:
    """Total mapping from an execution result to exactly one verdict."""
    outcome = res.outcome
    if isinstance(outcome, (WorkerDeathOutcome, TimeoutOutcome, RssLimitOutcome)):
        return Verdict.CRASH_BUG
    if isinstance(outcome, OkOutcome):
        if outcome.nan_detected and case.validity_mode is ValidityMode.VALID_ONLY:
            return Verdict.NAN_BUG
        return Verdict.PASS
    if case.validity_mode is ValidityMode.VALID_ONLY:
        return Verdict.EXCEPTION_BUG
    if outcome.type_name in cfg.exception_allowlist:
        return Verdict.PASS
    if _INTERNAL_FAULT_RE.search(outcome.message) or _INTERNAL_FAULT_RE.search(outcome.type_name):
        return Verdict.EXCEPTION_BUG
    return Verdict.PASS


def dedup_signature(res: ExecutionResult) -> str:
    """Stable identity of a bug outcome; addresses and counters are masked."""
    outcome = res.outcome
    if isinstance(outcome, TimeoutOutcome):
        return "timeout"
    if isinstance(outcome, RssLimitOutcome):
        return "rss-limit"
    if isinstance(outcome, WorkerDeathOutcome):
        code = "" if outcome.exit_code is None else str(outcome.exit_code)
        sig = "" if outcome.signal is None else str(outcome.signal)
        return f"exit:{code}|signal:{sig}"
    if isinstance(outcome, ExceptionOutcome):
        first_line = outcome.message.splitlines()[0] if outcome.message else ""
        masked = _HEX_RE.sub("0x#", first_line)
        masked = _DIGITS_RE.sub("#", masked)
        return f"{outcome.type_name}:{masked}"
    indices = [str(i) for i, out in enumerate(outcome.outputs) if contains_non_finite(out)]
    return "nan:" + ",".join(indices)


@dataclass
class BugReport:
    api_name: str
    verdict: Verdict
    signature: str
    first_case: TestCase
    first_case_index: int
    occurrences: int = 1
    reproducer_path: str | None = None


# --- outcome (de)serialization for transcripts --------------------------------


def outcome_to_obj(outcome: Outcome) -> dict:
    if isinstance(outcome, OkOutcome):
        return {
            "kind": "ok",
            "outputs": [o.to_wire() for o in outcome.outputs],
            "nan_detected": outcome.nan_detected,
            "duration_ms": outcome.duration_ms,
        }
    if isinstance(outcome, ExceptionOutcome):
        return {"kind": "exception", "type": outcome.type_name, "message": outcome.message}
    if isinstance(outcome, TimeoutOutcome):
        return {"kind": "timeout"}
    if isinstance(outcome, RssLimitOutcome):
        return {"kind": "rss_limit", "rss_bytes": outcome.rss_bytes}
    return {"kind": "worker_death", "exit_code": outcome.exit_code, "signal": outcome.signal}


def outcome_from_obj(obj: dict) -> Outcome:
    kind = obj["kind"]
    if kind == "ok":
        return OkOutcome(
            outputs=tuple(from_wire(o) for o in obj["outputs"]),
            nan_detected=obj["nan_detected"],
            duration_ms=obj["duration_ms"],
        )
    if kind == "exception":
        return ExceptionOutcome(type_name=obj["type"], message=obj["message"])
    if kind == "timeout":
        return TimeoutOutcome()
    if kind == "rss_limit":
        return RssLimitOutcome(rss_bytes=obj.get("rss_bytes", 0))
    return WorkerDeathOutcome(exit_code=obj.get("exit_code"), signal=obj.get("signal"))


def case_fingerprint(case: TestCase) -> str:
    return hashlib.sha256(case_to_json(case).encode("utf-8")).hexdigest()


def _slim_outcome(outcome: Outcome) -> Outcome:
    """Shrink an outcome for recording.

    Transcripts preserve verdicts and dedup signatures, not payloads: clean
    outputs drop entirely and NaN-carrying outputs reduce to one marker per
    position so the "nan:<indices>" signature survives replay.
    """
    if not isinstance(outcome, OkOutcome) or not outcome.outputs:
        return outcome
    if not outcome.nan_detected:
        return OkOutcome((), False, outcome.duration_ms)
    from .values import FloatVal

    markers = tuple(
        FloatVal(float("nan")) if contains_non_finite(o) else FloatVal(0.0)
        for o in outcome.outputs
    )
    return OkOutcome(markers, True, outcome.duration_ms)


# --- targets ------------------------------------------------------------------


class WorkerTarget:
    """One supervised worker subprocess; restartable across crashes.

    Replies are read straight off the pipe with select-based deadlines
    (POSIX), so a hung worker is detected without helper threads.
    """

    def __init__(
        self,
        command: tuple[str, ...],
        target: str,
        timeout_ms: int,
        rss_limit_bytes: int = DEFAULT_RSS_LIMIT,
        keep_outputs: bool = True,
    ):
        self._command = tuple(command) + ("--target", target)
        self._timeout_s = timeout_ms / 1000.0
        self._rss_limit = rss_limit_bytes
        self._keep_outputs = keep_outputs
        self._proc: subprocess.Popen | None = None
        self._buf = bytearray()
        self._next_id = 0
        self._calls_since_rss_check = 0
        self._spawn()

    def _spawn(self) -> None:
        try:
            self._proc = subprocess.Popen(
                self._command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                bufsize=0,
            )
        except OSError as exc:
            raise WorkerSpawnFailure(f"cannot spawn {self._command}: {exc}")
        self._buf = bytearray()
        try:
            hello = self._read_line(timeout=max(self._timeout_s, 10.0))
        except (TimeoutOutcomeSignal, WorkerEof):
            self._kill()
            raise WorkerSpawnFailure("worker never sent its ready handshake")
        try:
            ready = json.loads(hello)
        except json.JSONDecodeError:
            self._kill()
            raise WorkerSpawnFailure(f"bad handshake line: {hello!r}")
        if ready.get("op") != "ready" or ready.get("protocol") != 1:
            self._kill()
            raise WorkerSpawnFailure(f"unsupported handshake: {ready!r}")

    def _read_line(self, timeout: float) -> str:
        assert self._proc is not None and self._proc.stdout is not None
        fd = self._proc.stdout.fileno()
        deadline = time.monotonic() + timeout
        while True:
            nl = self._buf.find(b"\n")
            if nl >= 0:
                line = bytes(self._buf[: nl + 1])
                del self._buf[: nl + 1]
                return line.decode("utf-8")
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutOutcomeSignal()
            readable, _, _ = select.select([fd], [], [], remaining)
            if not readable:
                raise TimeoutOutcomeSignal()
            chunk = os.read(fd, 1 << 16)
            if not chunk:
                raise WorkerEof()
            self._buf += chunk

    def _death_outcome(self) -> WorkerDeathOutcome:
        assert self._proc is not None
        try:
            self._proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait(timeout=10)
        rc = self._proc.returncode
        self._proc = None
        if rc is not None and rc < 0:
            return WorkerDeathOutcome(exit_code=None, signal=-rc)
        return WorkerDeathOutcome(exit_code=rc, signal=None)

    def _kill(self) -> None:
        if self._proc is not None:
            self._proc.kill()
            self._proc.wait(timeout=10)
            self._proc = None

    def execute(self, api: str, case: TestCase) -> ExecutionResult:
        if self._proc is None:
            self._spawn()  # restart before the next case after a death
        assert self._proc is not None
        self._next_id += 1
        request = {
            "id": self._next_id,
            "op": "call",
            "api": api,
            "args": [v.to_wire() for v in case.args.values()],
            "timeout_ms": int(self._timeout_s * 1000),
        }
        try:
            assert self._proc.stdin is not None
            self._proc.stdin.write((json.dumps(request) + "\n").encode("utf-8"))
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError):
            return ExecutionResult(case.case_index, self._death_outcome())
        try:
            line = self._read_line(timeout=self._timeout_s)
        except TimeoutOutcomeSignal:
            self._kill()
            return ExecutionResult(case.case_index, TimeoutOutcome())
        except WorkerEof:
            return ExecutionResult(case.case_index, self._death_outcome())
        try:
            reply = json.loads(line)
            if not isinstance(reply, dict):
                raise ProtocolViolation("reply is not an object")
            if reply.get("id") != self._next_id:
                raise ProtocolViolation(f"reply id {reply.get('id')} != {self._next_id}")
            if reply.get("status") == "ok":
                nan_detected = bool(reply.get("nan_detected", False))
                # outputs are only needed for NaN signatures and transcripts
                decode = self._keep_outputs or nan_detected
                outcome: Outcome = OkOutcome(
                    outputs=(
                        tuple(from_wire(o) for o in reply.get("outputs", [])) if decode else ()
                    ),
                    nan_detected=nan_detected,
                    duration_ms=int(reply.get("duration_ms", 0)),
                )
            elif reply.get("status") == "exception":
                exc = reply.get("exception") or {}
                outcome = ExceptionOutcome(
                    type_name=str(exc.get("type", "Unknown")),
                    message=str(exc.get("message", "")),
                )
            else:
                raise ProtocolViolation(f"unknown status {reply.get('status')!r}")
        except (json.JSONDecodeError, ProtocolViolation, ValueError_, KeyError, TypeError) as exc:
            log.warning("protocol violation from worker: %s", exc)
            self._kill()
            return ExecutionResult(case.case_index, WorkerDeathOutcome(exit_code=None, signal=None))
        # memory-leak detection is best effort: sample RSS periodically
        self._calls_since_rss_check += 1
        if (
            isinstance(outcome, OkOutcome)
            and self._rss_limit
            and self._proc is not None
            and self._calls_since_rss_check >= 8
        ):
            self._calls_since_rss_check = 0
            try:
                rss = psutil.Process(self._proc.pid).memory_info().rss
            except psutil.Error:
                rss = 0
            if rss > self._rss_limit:
                self._kill()
                return ExecutionResult(case.case_index, RssLimitOutcome(rss_bytes=rss))
        return ExecutionResult(case.case_index, outcome)

    def close(self) -> None:
        if self._proc is not None:
            try:
                if self._proc.stdin:
                    self._proc.stdin.close()
                self._proc.terminate()
                self._proc.wait(timeout=5)
            except Exception:
                self._proc.kill()
            self._proc = None


class TimeoutOutcomeSignal(Exception):
    pass


class WorkerEof(Exception):
    pass


class ReplayTarget:
    """Serves recorded outcomes instead of a live worker."""

    def __init__(self, transcript_path: str):
        self._entries: dict[tuple[str, int], dict] = {}
        opener = gzip.open if str(transcript_path).endswith(".gz") else open
        with opener(transcript_path, "rt", encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                entry = json.loads(line)
                self._entries[(entry["api"], entry["case_index"])] = entry

    def execute(self, api: str, case: TestCase) -> ExecutionResult:
        entry = self._entries.get((api, case.case_index))
        if entry is None:
            raise ReplayMismatch(f"no transcript entry for {api}[{case.case_index}]")
        if entry["args_sha256"] != case_fingerprint(case):
            raise ReplayMismatch(
                f"{api}[{case.case_index}]: generated case does not match the recording"
            )
        return ExecutionResult(case.case_index, outcome_from_obj(entry["outcome"]))

    def close(self) -> None:
        pass


# --- the campaign -------------------------------------------------------------


@dataclass
class ApiStats:
    cases_executed: int = 0
    verdicts: dict[str, int] = field(
        default_factory=lambda: {v.value: 0 for v in Verdict}
    )
    valid_cases: int = 0
    valid_successes: int = 0

    @property
    def srg(self) -> float:
        return self.valid_successes / self.valid_cases if self.valid_cases else 1.0


@dataclass
class CampaignReport:
    per_api: dict[str, ApiStats]
    bugs: list[BugReport]
    cases_executed: int
    wall_time_s: float
    generation_success_rate: float

    def bug_keys(self) -> set[tuple[str, str, str]]:
        return {(b.api_name, b.verdict.value, b.signature) for b in self.bugs}


def _make_target(cfg: CampaignConfig):
    if cfg.replay_transcript:
        return ReplayTarget(cfg.replay_transcript)
    return WorkerTarget(
        cfg.worker_command,
        cfg.target,
        cfg.timeout_ms,
        cfg.rss_limit_bytes,
        keep_outputs=False,  # campaigns decode outputs only on NaN hits
    )


def _run_one_api(
    cs: ApiConstraintSet,
    cfg: CampaignConfig,
    target,
    transcript: list[dict] | None,
) -> tuple[ApiStats, dict[tuple[str, str], BugReport]]:
    stats = ApiStats()
    bugs: dict[tuple[str, str], BugReport] = {}
    dump_dir = Path(cfg.dump_cases_dir) / cs.api_name if cfg.dump_cases_dir else None
    if dump_dir:
        dump_dir.mkdir(parents=True, exist_ok=True)
    for case in case_stream(cs, cfg.gen):
        if dump_dir:
            (dump_dir / f"{case.case_index:06d}.json").write_text(case_to_json(case))
        result = target.execute(cs.api_name, case)
        if transcript is not None:
            transcript.append(
                {
                    "api": cs.api_name,
                    "case_index": case.case_index,
                    "args_sha256": case_fingerprint(case),
                    "outcome": outcome_to_obj(_slim_outcome(result.outcome)),
                }
            )
        verdict = classify(result, case, cfg)
        stats.cases_executed += 1
        stats.verdicts[verdict.value] += 1
        if case.validity_mode is ValidityMode.VALID_ONLY:
            stats.valid_cases += 1
            if verdict not in (Verdict.EXCEPTION_BUG, Verdict.CRASH_BUG):
                stats.valid_successes += 1
        if verdict is not Verdict.PASS:
            signature = dedup_signature(result)
            key = (verdict.value, signature)
            if key in bugs:
                bugs[key].occurrences += 1
            else:
                bugs[key] = BugReport(
                    api_name=cs.api_name,
                    verdict=verdict,
                    signature=signature,
                    first_case=case,
                    first_case_index=case.case_index,
                )
    return stats, bugs


# lane-local state for process-based parallel campaigns
_LANE_CFG: CampaignConfig | None = None
_LANE_TARGET = None


def _lane_init(cfg: CampaignConfig) -> None:
    global _LANE_CFG, _LANE_TARGET
    _LANE_CFG = cfg
    _LANE_TARGET = None


def _lane_run(cs: ApiConstraintSet):
    """Run one API on this lane's worker; the worker dies with the lane."""
    global _LANE_TARGET
    assert _LANE_CFG is not None
    if _LANE_TARGET is None:
        _LANE_TARGET = _make_target(_LANE_CFG)
    transcript = [] if _LANE_CFG.record_transcript else None
    stats, bugs = _run_one_api(cs, _LANE_CFG, _LANE_TARGET, transcript)
    return cs.api_name, stats, bugs, transcript


def run_campaign(
    cfg: CampaignConfig,
    constraint_sets: list[ApiConstraintSet] | None = None,
) -> CampaignReport:
    """Fuzz every API in the constraints file through the target.

    With parallel_workers > 1 the APIs are distributed over that many lane
    processes, each owning one supervised worker; a lane that goes away
    closes its worker's stdin, so no orphan workers outlive a campaign.

    Raises:
        WorkerSpawnFailure: the worker executable cannot be started at all.
    """
    if constraint_sets is None:
        if not cfg.constraints_path:
            raise ValueError("need constraint_sets or cfg.constraints_path")
        constraint_sets = constraint_sets_from_json(Path(cfg.constraints_path).read_text())
    started = time.monotonic()
    per_api: dict[str, ApiStats] = {}
    api_bugs: dict[str, dict[tuple[str, str], BugReport]] = {}
    transcripts: dict[str, list[dict]] = {}

    lanes = min(cfg.parallel_workers, max(len(constraint_sets), 1))
    if lanes <= 1:
        _lane_init(cfg)
        try:
            for cs in constraint_sets:
                api, stats, bugs, transcript = _lane_run(cs)
                per_api[api] = stats
                api_bugs[api] = bugs
                if transcript is not None:
                    transcripts[api] = transcript
        finally:
            global _LANE_TARGET
            if _LANE_TARGET is not None:
                _LANE_TARGET.close()
                _LANE_TARGET = None
    else:
        import multiprocessing

        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(processes=lanes, initializer=_lane_init, initargs=(cfg,)) as pool:
            for api, stats, bugs, transcript in pool.map(_lane_run, constraint_sets, chunksize=1):
                per_api[api] = stats
                api_bugs[api] = bugs
                if transcript is not None:
                    transcripts[api] = transcript

    # deterministic aggregation in constraints-file order
    ordered_bugs: list[BugReport] = []
    for cs in constraint_sets:
        bugs = sorted(api_bugs.get(cs.api_name, {}).values(), key=lambda b: b.first_case_index)
        ordered_bugs.extend(bugs)
    total_valid = sum(s.valid_cases for s in per_api.values())
    total_valid_ok = sum(s.valid_successes for s in per_api.values())
    report = CampaignReport(
        per_api={cs.api_name: per_api[cs.api_name] for cs in constraint_sets},
        bugs=ordered_bugs,
        cases_executed=sum(s.cases_executed for s in per_api.values()),
        wall_time_s=time.monotonic() - started,
        generation_success_rate=(total_valid_ok / total_valid) if total_valid else 1.0,
    )
    if cfg.record_transcript:
        _write_transcript(cfg.record_transcript, constraint_sets, transcripts)
    if cfg.out_dir:
        write_report(cfg, report)
    return report


def _write_transcript(
    path: str, constraint_sets: list[ApiConstraintSet], transcripts: dict[str, list[dict]]
) -> None:
    opener = gzip.open if path.endswith(".gz") else open
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with opener(path, "wt", encoding="utf-8") as fh:
        for cs in constraint_sets:
            for entry in transcripts.get(cs.api_name, []):
                fh.write(json.dumps(entry) + "\n")


# --- report artifacts ----------------------------------------------------------


def report_to_obj(cfg: CampaignConfig, report: CampaignReport) -> dict:
    return {
        "target": cfg.target,
        "seed": cfg.gen.rng_seed,
        "budget_per_api": cfg.gen.budget_per_api,
        "strategy_flags": {
            "type": cfg.gen.strategy_flags.type,
            "size": cfg.gen.strategy_flags.size,
            "value_noise": cfg.gen.strategy_flags.value_noise,
            "value_mask": cfg.gen.strategy_flags.value_mask,
            "value_division": cfg.gen.strategy_flags.value_division,
        },
        "apis": {
            api: {
                "cases_executed": stats.cases_executed,
                "verdicts": stats.verdicts,
                "generation_success_rate": stats.srg,
            }
            for api, stats in report.per_api.items()
        },
        "bugs": [
            {
                "api_name": b.api_name,
                "verdict": b.verdict.value,
                "signature": b.signature,
                "first_case_index": b.first_case_index,
                "occurrences": b.occurrences,
                "reproducer_path": b.reproducer_path,
            }
            for b in report.bugs
        ],
        "cases_executed": report.cases_executed,
        "wall_time_s": report.wall_time_s,
        "generation_success_rate": report.generation_success_rate,
    }


_REPRO_TEMPLATE = '''#!/usr/bin/env python3
"""Replays one recorded fuzz case against {target!r} and reports the outcome.

Exit codes: 0 clean, 3 NaN/Inf in outputs, 4 exception. A hard crash
terminates the process before any verdict is printed.
"""

import base64
import importlib
import json
import math
import sys

import numpy as np

CASE = {case_json!r}
TARGET = {target!r}
API = {api!r}


def decode(obj):
    kind = obj["kind"]
    if kind in ("int", "float", "bool", "str"):
        v = obj["value"]
        if kind == "float" and isinstance(v, str):
            return float(v)
        return v
    if kind == "null":
        return None
    if kind == "enum":
        return obj["value"]
    if kind == "seq":
        return tuple(decode(item) for item in obj["items"])
    if kind == "ndarray":
        dtypes = {{"uint8": "<u1", "int32": "<i4", "float32": "<f4", "float64": "<f8", "bool": "|b1"}}
        data = base64.b64decode(obj["data"])
        return np.frombuffer(data, dtype=dtypes[obj["dtype"]]).reshape(obj["shape"]).copy()
    raise ValueError(f"unknown kind {{kind}}")


def has_non_finite(value):
    if isinstance(value, (tuple, list)):
        return any(has_non_finite(v) for v in value)
    if isinstance(value, np.ndarray) and np.issubdtype(value.dtype, np.floating):
        return value.size > 0 and not np.isfinite(value).all()
    if isinstance(value, float):
        return not math.isfinite(value)
    return False


def resolve(namespace, dotted):
    parts = dotted.split(".")
    module = importlib.import_module(namespace)
    obj = module
    for part in parts[1:]:
        obj = getattr(obj, part)
    return obj


def main():
    case = json.loads(CASE)
    args = [decode(v) for v in case["args"].values()]
    namespace = "docfuzz_worker.mock_target" if TARGET == "mock" else TARGET.split(":", 1)[1]
    fn = resolve(namespace, API)
    try:
        outputs = fn(*args)
    except Exception as exc:
        print(f"EXCEPTION {{type(exc).__name__}}: {{exc}}")
        return 4
    if has_non_finite(outputs):
        print("NAN detected in outputs")
        return 3
    print("PASS")
    return 0


if __name__ == "__main__":
    sys.exit(main())
'''


def write_reproducer(path: Path, bug: BugReport, target: str) -> None:
    path.write_text(
        _REPRO_TEMPLATE.format(
            case_json=case_to_json(bug.first_case),
            target=target,
            api=bug.api_name,
        )
    )


def write_report(cfg: CampaignConfig, report: CampaignReport) -> None:
    out = Path(cfg.out_dir)
    (out / "bugs").mkdir(parents=True, exist_ok=True)
    (out / "repro").mkdir(parents=True, exist_ok=True)
    counters: dict[str, int] = {}
    for bug in report.bugs:
        n = counters.get(bug.api_name, 0) + 1
        counters[bug.api_name] = n
        stem = f"{bug.api_name}-{n}"
        repro = out / "repro" / f"{stem}.py"
        write_reproducer(repro, bug, cfg.target)
        bug.reproducer_path = str(repro)
        (out / "bugs" / f"{stem}.json").write_text(
            json.dumps(
                {
                    "api_name": bug.api_name,
                    "verdict": bug.verdict.value,
                    "signature": bug.signature,
                    "first_case_index": bug.first_case_index,
                    "occurrences": bug.occurrences,
                    "first_case": case_to_obj(bug.first_case),
                },
                indent=2,
            )
        )
    (out / "campaign.json").write_text(json.dumps(report_to_obj(cfg, report), indent=2))
