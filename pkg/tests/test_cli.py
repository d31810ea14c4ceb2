from __future__ import annotations

import csv
import json
import subprocess
import sys
from importlib import resources
from pathlib import Path

import pytest

from docfuzz.cli import budget_sweep, main

from .conftest import CAMPAIGN_APIS, TRANSCRIPT_S11, bundled_docs


def _run_cli(*argv, timeout=120):
    return subprocess.run(
        [sys.executable, "-m", "docfuzz", *argv],
        capture_output=True,
        text=True,
        timeout=timeout,
    )


@pytest.fixture(scope="module")
def docs_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "docs.json"
    path.write_text(resources.files("docfuzz").joinpath("fixtures/docs.json").read_text())
    return path


class TestParseStage:
    def test_parse_three_listing_fixture(self, tmp_path):
        # a corpus holding exactly the three documentation shapes
        keep = {"cv2.getRotationMatrix2D", "cv2.calcBackProject", "cv2.aruco"}
        fixture = [
            {"api_path": d.api_path, "body": d.body}
            for d in bundled_docs()
            if d.api_path in keep
        ]
        docs = tmp_path / "three.json"
        docs.write_text(json.dumps(fixture))
        out = tmp_path / "sigs.json"
        assert main(["parse", "--in", str(docs), "--out", str(out)]) == 0
        counts = {}
        for record in json.loads(out.read_text()):
            counts[record["doc_class"]] = counts.get(record["doc_class"], 0) + 1
        assert counts == {
            "well_documented": 1,
            "poorly_documented": 1,
            "undocumented": 1,
        }

    def test_parse_classifies_bundled_listings(self, docs_path, tmp_path):
        out = tmp_path / "sigs.json"
        code = main(["parse", "--in", str(docs_path), "--out", str(out)])
        assert code == 0
        sigs = json.loads(out.read_text())
        classes = {}
        for record in sigs:
            classes[record["doc_class"]] = classes.get(record["doc_class"], 0) + 1
        assert classes["undocumented"] == 1
        assert classes["poorly_documented"] >= 1
        assert classes["well_documented"] >= 20
        rot = next(r for r in sigs if r["api_path"] == "cv2.getRotationMatrix2D")
        assert rot["signature"]["inputs"] == ["center", "angle", "scale"]

    def test_stage_reruns_byte_identical(self, docs_path, tmp_path):
        outs = {}
        for tag in ("a", "b"):
            sigs = tmp_path / f"sigs_{tag}.json"
            std = tmp_path / f"std_{tag}.json"
            cons = tmp_path / f"cons_{tag}.json"
            main(["parse", "--in", str(docs_path), "--out", str(sigs)])
            main(["enrich", "--sigs", str(sigs), "--out", str(std)])
            main(["extract", "--std", str(std), "--out", str(cons)])
            outs[tag] = (sigs.read_bytes(), std.read_bytes(), cons.read_bytes())
        assert outs["a"] == outs["b"]


class TestUsageErrors:
    def test_missing_constraints_flag_exits_2(self):
        proc = _run_cli("fuzz", "--out", "x")
        assert proc.returncode == 2

    def test_missing_input_file_exits_2(self, tmp_path):
        code = main(["parse", "--in", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")])
        assert code == 2

    def test_unknown_api_filter_exits_2(self, docs_path, tmp_path):
        sigs, std = tmp_path / "sigs.json", tmp_path / "std.json"
        main(["parse", "--in", str(docs_path), "--out", str(sigs)])
        main(["enrich", "--sigs", str(sigs), "--out", str(std)])
        code = main(
            ["extract", "--std", str(std), "--out", str(tmp_path / "c.json"), "--apis", "mockcv.bogus"]
        )
        assert code == 2


class TestPipeline:
    def _write_config(self, tmp_path, docs_path, as_toml: bool):
        workdir = tmp_path / "work"
        fuzz = {
            "target": "mock",
            "budget": 600,
            "seed": 11,
            "dim_max": 8,
            "adversarial_ratio": 0.1,
            "replay": str(TRANSCRIPT_S11),
        }
        pipe = {"docs": str(docs_path), "workdir": str(workdir), "apis": CAMPAIGN_APIS}
        if as_toml:
            lines = ["[pipeline]"]
            lines.append(f'docs = "{pipe["docs"]}"')
            lines.append(f'workdir = "{pipe["workdir"]}"')
            apis = ", ".join(f'"{a}"' for a in CAMPAIGN_APIS)
            lines.append(f"apis = [{apis}]")
            lines.append("[fuzz]")
            lines.append('target = "mock"')
            lines.append("budget = 600")
            lines.append("seed = 11")
            lines.append("dim_max = 8")
            lines.append("adversarial_ratio = 0.1")
            lines.append(f'replay = "{fuzz["replay"]}"')
            path = tmp_path / "pipeline.toml"
            path.write_text("\n".join(lines))
        else:
            path = tmp_path / "pipeline.json"
            path.write_text(json.dumps({"pipeline": pipe, "fuzz": fuzz}))
        return path, workdir

    @pytest.mark.parametrize("as_toml", [False, True], ids=["json", "toml"])
    def test_full_pipeline_over_bundled_corpus(self, docs_path, tmp_path, as_toml):
        config, workdir = self._write_config(tmp_path, docs_path, as_toml)
        code = main(["pipeline", "--config", str(config)])
        assert code == 1  # bugs found
        campaign = json.loads((workdir / "report" / "campaign.json").read_text())
        assert len(campaign["bugs"]) == 6
        assert (workdir / "sweep.csv").exists()
        bug_files = sorted((workdir / "report" / "bugs").glob("*.json"))
        repro_files = sorted((workdir / "report" / "repro").glob("*.py"))
        assert len(bug_files) == 6 and len(repro_files) == 6

    def test_enrich_accepts_mixed_provenance_corpus_file(self, docs_path, tmp_path):
        sigs, std = tmp_path / "sigs.json", tmp_path / "std.json"
        main(["parse", "--in", str(docs_path), "--out", str(sigs)])
        main(["enrich", "--sigs", str(sigs), "--out", str(std)])
        # std.json holds parsed and enriched infos; feeding it back must work
        out2 = tmp_path / "std2.json"
        code = main(["enrich", "--sigs", str(sigs), "--corpus", str(std), "--out", str(out2)])
        assert code == 0
        assert json.loads(out2.read_text())

    def test_extract_metrics_line(self, docs_path, tmp_path, capsys):
        sigs, std, cons = (tmp_path / n for n in ("sigs.json", "std.json", "cons.json"))
        main(["parse", "--in", str(docs_path), "--out", str(sigs)])
        main(["enrich", "--sigs", str(sigs), "--out", str(std)])
        capsys.readouterr()
        code = main(["extract", "--std", str(std), "--out", str(cons)])
        assert code == 0
        metrics = json.loads(capsys.readouterr().out.strip())
        assert metrics["apis"] >= 20
        assert metrics["total_constraints"] > metrics["apis"]


class TestFuzzReplayFlags:
    def test_dump_cases_with_replay_prefix(self, docs_path, tmp_path):
        sigs, std, cons = (tmp_path / n for n in ("sigs.json", "std.json", "cons.json"))
        main(["parse", "--in", str(docs_path), "--out", str(sigs)])
        main(["enrich", "--sigs", str(sigs), "--out", str(std)])
        main(["extract", "--std", str(std), "--out", str(cons), "--apis", ",".join(CAMPAIGN_APIS)])
        dump = tmp_path / "cases"
        # a 10-case budget is a prefix of the recorded 600-case transcript
        code = main([
            "fuzz", "--constraints", str(cons), "--target", "mock",
            "--budget", "10", "--seed", "11", "--dim-max", "8",
            "--adversarial-ratio", "0.1", "--replay", str(TRANSCRIPT_S11),
            "--dump-cases", str(dump), "--out", str(tmp_path / "report"),
        ])
        assert code in (0, 1)
        dumped = sorted((dump / "mockcv.equalize_hist").glob("*.json"))
        assert len(dumped) == 10
        case = json.loads(dumped[0].read_text())
        assert case["api_name"] == "mockcv.equalize_hist"
        assert "args" in case and "applied" in case


class TestReportCommand:
    def test_sweep_csv(self, tmp_path):
        campaign = {
            "budget_per_api": 600,
            "generation_success_rate": 0.99,
            "apis": {
                "a": {
                    "cases_executed": 600,
                    "verdicts": {"pass": 599, "crash": 0, "nan": 1, "exception": 0},
                    "generation_success_rate": 1.0,
                }
            },
            "bugs": [
                {"api_name": "a", "verdict": "nan", "signature": "nan:0",
                 "first_case_index": 42, "occurrences": 3, "reproducer_path": None},
            ],
        }
        path = tmp_path / "campaign.json"
        path.write_text(json.dumps(campaign))
        csv_path = tmp_path / "sweep.csv"
        code = main(["report", "--campaign", str(path), "--csv", str(csv_path)])
        assert code == 0
        rows = list(csv.reader(csv_path.open()))
        assert rows[0] == ["budget", "distinct_bugs"]
        assert [int(n) for _, n in rows[1:]] == sorted(int(n) for _, n in rows[1:])
        assert rows[1] == ["50", "1"]  # first case index 42 < 50

    def test_budget_sweep_endpoint_included(self):
        campaign = {"budget_per_api": 130, "bugs": [{"first_case_index": 125}]}
        points = budget_sweep(campaign, step=50)
        assert points[-1] == (130, 1)
        assert points[0] == (50, 0)
