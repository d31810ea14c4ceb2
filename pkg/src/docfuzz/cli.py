"""The docfuzz command line: parse -> enrich -> extract -> fuzz -> report.

Each stage reads and writes plain JSON artifacts and is independently
re-runnable; rerunning with unchanged inputs produces byte-identical
outputs. Logs go to stderr as JSON lines. Exit codes: 0 campaign clean,
1 bugs found (reports written), 2 configuration or usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import shlex
import sys
from pathlib import Path

from .constraint_engine import constraint_sets_to_json, extract_constraints
from .doc_parser import DocClass, RawApiDoc, parse_doc, parsed_doc_from_json, parsed_doc_to_json
from .enrichment import (
    CorpusInference,
    ExternalLlm,
    build_param_corpus,
    enrich_poorly_documented,
    standardize_well_documented,
)
from .generation_engine import GenConfig, StrategyFlags
from .orchestrator import CampaignConfig, run_campaign
from .schema import infos_from_json, infos_to_json, validate

log = logging.getLogger("docfuzz")


class _JsonLineFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        payload = {
            "level": record.levelname.lower(),
            "logger": record.name,
            "msg": record.getMessage(),
        }
        return json.dumps(payload)


def _setup_logging(level: str) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_JsonLineFormatter())
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(getattr(logging, level.upper(), logging.INFO))


class ConfigError(Exception):
    pass


# --- stages -------------------------------------------------------------------


def stage_parse(in_path: str, out_path: str) -> dict:
    raw = json.loads(Path(in_path).read_text())
    if not isinstance(raw, list):
        raise ConfigError(f"{in_path}: expected a JSON array of {{api_path, body}}")
    parsed = [parse_doc(RawApiDoc(api_path=d["api_path"], body=d.get("body", ""))) for d in raw]
    Path(out_path).write_text(
        json.dumps([parsed_doc_to_json(p) for p in parsed], indent=2)
    )
    counts: dict[str, int] = {}
    for p in parsed:
        counts[p.doc_class.value] = counts.get(p.doc_class.value, 0) + 1
    log.info("parsed %d docs: %s", len(parsed), counts)
    return counts


def stage_enrich(
    sigs_path: str,
    out_path: str,
    corpus_path: str | None = None,
    backend_name: str = "corpus",
    endpoint: str | None = None,
    model: str = "",
) -> int:
    parsed = [parsed_doc_from_json(o) for o in json.loads(Path(sigs_path).read_text())]
    well = [p for p in parsed if p.doc_class is DocClass.WELL_DOCUMENTED and p.signature]
    poor = [p for p in parsed if p.doc_class is DocClass.POORLY_DOCUMENTED and p.signature]
    infos = [
        standardize_well_documented(p.signature, list(p.param_descriptions), api_name=p.api_path)
        for p in well
    ]
    corpus_sources = list(infos)
    if corpus_path:
        from .schema import Provenance

        extra = infos_from_json(Path(corpus_path).read_text())
        # the corpus only learns from directly documented parameters
        corpus_sources += [i for i in extra if i.provenance is Provenance.PARSED]
    corpus = build_param_corpus(corpus_sources)
    if backend_name == "llm":
        if not endpoint:
            raise ConfigError("llm backend requires --endpoint")
        backend = ExternalLlm(endpoint=endpoint, model=model)
    else:
        backend = CorpusInference()
    infos += [
        enrich_poorly_documented(p.signature, corpus, backend, api_name=p.api_path) for p in poor
    ]
    Path(out_path).write_text(infos_to_json(infos))
    log.info("standardized %d apis (%d enriched)", len(infos), len(poor))
    return len(infos)


def stage_extract(std_path: str, out_path: str, apis: list[str] | None = None) -> dict:
    infos = infos_from_json(Path(std_path).read_text())
    if apis:
        by_name = {i.api_name: i for i in infos}
        missing = [a for a in apis if a not in by_name]
        if missing:
            raise ConfigError(f"unknown apis in filter: {missing}")
        infos = [by_name[a] for a in apis]
    for info in infos:
        report = validate(info)
        if report:
            raise ConfigError(f"{info.api_name} failed validation: {[str(v) for v in report]}")
    sets = [extract_constraints(info) for info in infos]
    Path(out_path).write_text(constraint_sets_to_json(sets))
    metrics = {"apis": len(sets), "total_constraints": sum(cs.constraint_count for cs in sets)}
    print(json.dumps(metrics))
    log.info("extracted constraints: %s", metrics)
    return metrics


def _gen_config(args: argparse.Namespace) -> GenConfig:
    flags = StrategyFlags()
    for name in args.disable or []:
        flags = flags.disabled(name)
    return GenConfig(
        budget_per_api=args.budget,
        rng_seed=args.seed,
        dim_range=(1, args.dim_max),
        adversarial_ratio=args.adversarial_ratio,
        strategy_flags=flags,
    )


def stage_fuzz(args: argparse.Namespace) -> int:
    cfg = CampaignConfig(
        gen=_gen_config(args),
        constraints_path=args.constraints,
        target=args.target,
        timeout_ms=args.timeout_ms,
        parallel_workers=args.workers,
        worker_command=tuple(shlex.split(args.worker_cmd)),
        replay_transcript=args.replay,
        record_transcript=args.record_transcript,
        out_dir=args.out,
        dump_cases_dir=args.dump_cases,
    )
    report = run_campaign(cfg)
    log.info(
        "campaign done: %d cases, %d bugs, srg=%.4f",
        report.cases_executed,
        len(report.bugs),
        report.generation_success_rate,
    )
    return 1 if report.bugs else 0


def budget_sweep(campaign: dict, step: int = 50) -> list[tuple[int, int]]:
    """Cumulative distinct bugs as the per-API budget grows."""
    budget = campaign["budget_per_api"]
    firsts = [b["first_case_index"] for b in campaign["bugs"]]
    points = []
    budgets = list(range(step, budget + 1, step))
    if not budgets or budgets[-1] != budget:
        budgets.append(budget)
    for b in budgets:
        points.append((b, sum(1 for f in firsts if f < b)))
    return points


def stage_report(campaign_path: str, csv_path: str | None, step: int) -> None:
    campaign = json.loads(Path(campaign_path).read_text())
    rows = []
    for api, stats in campaign["apis"].items():
        v = stats["verdicts"]
        rows.append(
            (api, stats["cases_executed"], v["pass"], v["crash"], v["nan"], v["exception"],
             f"{stats['generation_success_rate']:.4f}")
        )
    header = ("api", "cases", "pass", "crash", "nan", "exception", "srg")
    widths = [max(len(str(r[i])) for r in rows + [header]) for i in range(len(header))]
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    for r in rows:
        print("  ".join(str(c).ljust(w) for c, w in zip(r, widths)))
    print()
    print(f"bugs: {len(campaign['bugs'])}   overall srg: {campaign['generation_success_rate']:.4f}")
    for bug in campaign["bugs"]:
        print(f"  [{bug['verdict']}] {bug['api_name']} sig={bug['signature']!r} "
              f"first_case={bug['first_case_index']} x{bug['occurrences']}")
    if csv_path:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["budget", "distinct_bugs"])
            writer.writerows(budget_sweep(campaign, step))
        log.info("sweep csv written to %s", csv_path)


def _load_pipeline_config(path: str) -> dict:
    text = Path(path).read_text()
    if path.endswith(".json"):
        return json.loads(text)
    try:
        import tomllib  # py311+
    except ModuleNotFoundError:
        import tomli as tomllib
    return tomllib.loads(text)


def stage_pipeline(config_path: str) -> int:
    cfg = _load_pipeline_config(config_path)
    pipe = cfg.get("pipeline", {})
    fuzz = cfg.get("fuzz", {})
    docs = pipe.get("docs")
    workdir = Path(pipe.get("workdir", "."))
    if not docs:
        raise ConfigError("pipeline.docs is required")
    workdir.mkdir(parents=True, exist_ok=True)
    sigs = workdir / "sigs.json"
    std = workdir / "std_all.json"
    constraints = workdir / "constraints.json"
    stage_parse(docs, str(sigs))
    stage_enrich(str(sigs), str(std))
    stage_extract(str(std), str(constraints), apis=pipe.get("apis"))
    ns = argparse.Namespace(
        constraints=str(constraints),
        target=fuzz.get("target", "mock"),
        budget=fuzz.get("budget", 600),
        seed=fuzz.get("seed", 0),
        dim_max=fuzz.get("dim_max", 64),
        adversarial_ratio=fuzz.get("adversarial_ratio", 0.2),
        disable=fuzz.get("disable", []),
        timeout_ms=fuzz.get("timeout_ms", 10_000),
        workers=fuzz.get("workers", 1),
        worker_cmd=fuzz.get("worker_cmd", "docfuzz-worker"),
        replay=fuzz.get("replay"),
        record_transcript=fuzz.get("record_transcript"),
        out=str(workdir / "report"),
        dump_cases=fuzz.get("dump_cases"),
    )
    code = stage_fuzz(ns)
    stage_report(str(workdir / "report" / "campaign.json"), str(workdir / "sweep.csv"), step=50)
    return code


# --- argument parsing -----------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="docfuzz", description=__doc__)
    parser.add_argument("--log-level", default="info")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="classify and parse raw docstrings")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("enrich", help="produce standardized api information")
    p.add_argument("--sigs", required=True)
    p.add_argument("--corpus", help="extra standardized infos to learn parameter patterns from")
    p.add_argument("--backend", choices=("corpus", "llm"), default="corpus")
    p.add_argument("--endpoint")
    p.add_argument("--model", default="")
    p.add_argument("--out", required=True)

    p = sub.add_parser("extract", help="resolve constraints and dependency order")
    p.add_argument("--std", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--apis", help="comma-separated ordered api filter")

    p = sub.add_parser("fuzz", help="run a fuzzing campaign")
    p.add_argument("--constraints", required=True)
    p.add_argument("--target", default="mock")
    p.add_argument("--budget", type=int, default=600)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim-max", type=int, default=64)
    p.add_argument("--adversarial-ratio", type=float, default=0.2)
    p.add_argument(
        "--disable",
        action="append",
        choices=("type", "size", "value_noise", "value_mask", "value_division"),
        help="disable one generation strategy (repeatable)",
    )
    p.add_argument("--timeout-ms", type=int, default=10_000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--worker-cmd", default="docfuzz-worker")
    p.add_argument("--replay", help="replay a recorded transcript instead of a live worker")
    p.add_argument("--record-transcript")
    p.add_argument("--dump-cases")
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="render campaign.json and the budget-sweep csv")
    p.add_argument("--campaign", required=True)
    p.add_argument("--csv")
    p.add_argument("--step", type=int, default=50)

    p = sub.add_parser("pipeline", help="run every stage from a config file")
    p.add_argument("--config", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.log_level)
    try:
        if args.command == "parse":
            stage_parse(args.in_path, args.out)
            return 0
        if args.command == "enrich":
            stage_enrich(
                args.sigs, args.out, args.corpus, args.backend, args.endpoint, args.model
            )
            return 0
        if args.command == "extract":
            stage_extract(args.std, args.out, args.apis.split(",") if args.apis else None)
            return 0
        if args.command == "fuzz":
            return stage_fuzz(args)
        if args.command == "report":
            stage_report(args.campaign, args.csv, args.step)
            return 0
        if args.command == "pipeline":
            return stage_pipeline(args.config)
        parser.error(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"docfuzz: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"docfuzz: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
