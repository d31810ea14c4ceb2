"""Shared fixtures: the bundled corpus, campaign configs, and the live matrix."""

from __future__ import annotations

import importlib.util
import json
import sys
from importlib import resources
from pathlib import Path

import pytest

from docfuzz.constraint_engine import extract_constraints
from docfuzz.doc_parser import DocClass, RawApiDoc, parse_doc
from docfuzz.enrichment import (
    build_param_corpus,
    enrich_poorly_documented,
    standardize_well_documented,
)
from docfuzz.generation_engine import GenConfig, StrategyFlags
from docfuzz.orchestrator import CampaignConfig, run_campaign

FIXTURES = Path(__file__).parent / "fixtures"
TRANSCRIPT_S11 = FIXTURES / "transcript_s11.jsonl.gz"

# the fixed acceptance configuration: three seeds at the standard 600-case budget
ACCEPT_SEEDS = (11, 12, 13)
ACCEPT_BUDGET = 600
ACCEPT_DIMS = (1, 8)
ACCEPT_ADVERSARIAL = 0.1

# campaign order puts the hard-abort API first (crash isolation depends on it)
CAMPAIGN_APIS = [
    "mockcv.equalize_hist",
    "mockcv.integral_image",
    "mockcv.find_transform",
    "mockcv.normalize_gamma",
    "mockcv.estimate_blur",
    "mockcv.blend_linear",
    "mockcv.rotation_matrix",
    "mockcv.draw_markers",
    "mockcv.convert_gray",
    "mockcv.threshold_binary",
]
FAULT_APIS = CAMPAIGN_APIS[:6]

PLANTED_BUGS = {
    ("mockcv.equalize_hist", "crash"),
    ("mockcv.integral_image", "crash"),
    ("mockcv.find_transform", "nan"),
    ("mockcv.normalize_gamma", "nan"),
    ("mockcv.estimate_blur", "exception"),
    ("mockcv.blend_linear", "exception"),
}
# which planted bug each ablation flag is keyed to
STRATEGY_KEYED_BUGS = {
    "size": ("mockcv.equalize_hist", "crash"),
    "type": ("mockcv.integral_image", "crash"),
    "value_division": ("mockcv.find_transform", "nan"),
    "value_noise": ("mockcv.normalize_gamma", "nan"),
    "value_mask": ("mockcv.estimate_blur", "exception"),
}

WORKER_AVAILABLE = importlib.util.find_spec("docfuzz_worker") is not None
WORKER_COMMAND = (sys.executable, "-m", "docfuzz_worker")

needs_worker = pytest.mark.skipif(
    not WORKER_AVAILABLE, reason="secondary worker package not installed"
)


def bundled_docs() -> list[RawApiDoc]:
    text = resources.files("docfuzz").joinpath("fixtures/docs.json").read_text()
    return [RawApiDoc(**d) for d in json.loads(text)]


@pytest.fixture(scope="session")
def corpus_infos():
    """Every standardizable API of the bundled corpus, enriched where needed."""
    parsed = [parse_doc(d) for d in bundled_docs()]
    well = [p for p in parsed if p.doc_class is DocClass.WELL_DOCUMENTED and p.signature]
    poor = [p for p in parsed if p.doc_class is DocClass.POORLY_DOCUMENTED and p.signature]
    infos = [
        standardize_well_documented(p.signature, list(p.param_descriptions), api_name=p.api_path)
        for p in well
    ]
    corpus = build_param_corpus(infos)
    infos += [enrich_poorly_documented(p.signature, corpus, api_name=p.api_path) for p in poor]
    return infos


@pytest.fixture(scope="session")
def constraint_sets(corpus_infos):
    return {info.api_name: extract_constraints(info) for info in corpus_infos}


def accept_gen_config(seed: int, disable: str | None = None) -> GenConfig:
    flags = StrategyFlags()
    if disable:
        flags = flags.disabled(disable)
    return GenConfig(
        budget_per_api=ACCEPT_BUDGET,
        rng_seed=seed,
        dim_range=ACCEPT_DIMS,
        adversarial_ratio=ACCEPT_ADVERSARIAL,
        strategy_flags=flags,
    )


def live_campaign_config(seed: int, disable: str | None = None, **kwargs) -> CampaignConfig:
    return CampaignConfig(
        gen=accept_gen_config(seed, disable),
        worker_command=WORKER_COMMAND,
        target="mock",
        timeout_ms=10_000,
        parallel_workers=2,
        **kwargs,
    )


@pytest.fixture(scope="session")
def campaign_matrix(constraint_sets):
    """All live acceptance campaigns: full per seed, plus every ablation.

    Keys: ("full", seed, None) over the ten campaign APIs and
    ("ablation", seed, flag) over the six fault APIs.
    """
    if not WORKER_AVAILABLE:
        pytest.skip("secondary worker package not installed")
    full_sets = [constraint_sets[a] for a in CAMPAIGN_APIS]
    fault_sets = [constraint_sets[a] for a in FAULT_APIS]
    matrix = {}
    for seed in ACCEPT_SEEDS:
        matrix[("full", seed, None)] = run_campaign(live_campaign_config(seed), full_sets)
        for flag in STRATEGY_KEYED_BUGS:
            matrix[("ablation", seed, flag)] = run_campaign(
                live_campaign_config(seed, disable=flag), fault_sets
            )
    return matrix
