import csv
import json

import pytest

from cegisplan.bench import (
    CSV_COLUMNS,
    BenchResult,
    GenConfig,
    bench_run,
    export_report,
    histogram_from_csv,
    load_report,
    make_oracle_factory,
    report_csv,
)
from cegisplan.cegis import LoopConfig
from cegisplan.plan import print_plan


def test_perfect_bench(tmp_path):
    res = bench_run(GenConfig(4, seed=1, problem_count=20), "perfect")
    assert res.success_count == 20 and res.histogram == {1: 20}
    path = export_report(res, tmp_path / "r.csv")
    lines = path.read_text().splitlines()
    assert len(lines) == 21 and lines[0] == ",".join(CSV_COLUMNS)
    assert histogram_from_csv(path) == {1: 20}


def test_json_report_round_trip(tmp_path):
    res = bench_run(GenConfig(3, seed=2, problem_count=5), "noisy:0.3")
    again = load_report(export_report(res, tmp_path / "r.json"))
    assert again.runs == res.runs and again.max_trials == res.max_trials
    data = json.loads((tmp_path / "r.json").read_text())
    assert data["success_count"] == res.success_count


def test_failures_land_in_top_bucket(corpus):
    bad = print_plan(corpus.plans["newprob_incorrect"])
    factory = lambda problem, i: make_oracle_factory("perfect")(problem, i) if i else _Fixed(bad)
    res = bench_run(None, factory, LoopConfig(max_trials=4), problems=[corpus.problems["newprob"]] * 2)
    assert [r.outcome for r in res.runs] == ["exhausted", "solved"]
    assert res.histogram == {1: 1, 4: 1}


class _Fixed:
    def __init__(self, text):
        self.text = text

    def query(self, q):
        from cegisplan.oracle import response_from_text

        return response_from_text(self.text, q.objects)


def test_noisy_bench_is_reproducible():
    gen = GenConfig(4, seed=5, problem_count=10)
    a = report_csv(bench_run(gen, "noisy:0.2"), timing=False)
    b = report_csv(bench_run(gen, "noisy:0.2", workers=4), timing=False)
    assert a == b


def test_aborted_runs_are_reported(corpus, tmp_path):
    transcript = tmp_path / "t.json"
    transcript.write_text(json.dumps(corpus.transcripts["newprob"][:1]))
    res = bench_run(None, f"scripted:{transcript}", problems=[corpus.problems["newprob"]], records_dir=tmp_path / "rec")
    assert res.runs[0].outcome == "aborted" and "TranscriptExhausted" in res.runs[0].error
    assert len(list((tmp_path / "rec").glob("*.jsonl"))) == 1


def test_csv_without_timing_has_empty_column(tmp_path):
    res = bench_run(GenConfig(3, problem_count=3), "perfect")
    rows = list(csv.DictReader(report_csv(res, timing=False).splitlines()))
    assert [r["wall_ms"] for r in rows] == ["", "", ""]
    assert BenchResult.from_json(res.to_json()).runs == res.runs


def test_bad_oracle_specs():
    with pytest.raises(ValueError):
        make_oracle_factory("oracle-of-delphi")
    with pytest.raises(ValueError):
        make_oracle_factory("scripted")
    with pytest.raises(ValueError):
        bench_run(None, "perfect")
