"""Benchmark harness: run the loop over a problem family and export plot-ready reports.

CSV columns are ``problem_index,n_blocks,outcome,trials,wall_ms``. Runs
that do not solve their problem report ``max_trials`` trials, so a trial
histogram puts every failure in the top bucket.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .cegis import LoopConfig, RunAborted, RunRecord, cegis_solve
from .generate import GenConfig, GoalStyle, gen_problem  # noqa: F401  (GoalStyle re-exported)
from .oracle.base import Oracle
from .oracle.http import HttpOracle, load_endpoint_config
from .oracle.mock import NoisyOracle, PerfectOracle, ScriptedOracle
from .pddl import Problem

log = logging.getLogger(__name__)

CSV_COLUMNS = ("problem_index", "n_blocks", "outcome", "trials", "wall_ms")

OracleFactory = Callable[[Problem, int], Oracle]


@dataclass
class RunSummary:
    problem_index: int
    problem_name: str
    n_blocks: int
    outcome: str
    trials: int
    wall_ms: float
    error: str | None = None


@dataclass
class BenchResult:
    max_trials: int
    runs: list[RunSummary] = field(default_factory=list)
    oracle: str = ""
    seed: int | None = None

    @property
    def success_count(self) -> int:
        return sum(r.outcome == "solved" for r in self.runs)

    @property
    def histogram(self) -> dict[int, int]:
        return dict(sorted(Counter(r.trials for r in self.runs).items()))

    @property
    def wall_ms(self) -> float:
        return sum(r.wall_ms for r in self.runs)

    def to_json(self) -> dict:
        return {
            "max_trials": self.max_trials,
            "oracle": self.oracle,
            "seed": self.seed,
            "success_count": self.success_count,
            "histogram": {str(k): v for k, v in self.histogram.items()},
            "wall_ms": self.wall_ms,
            "runs": [asdict(r) for r in self.runs],
        }

    @classmethod
    def from_json(cls, d: dict) -> "BenchResult":
        return cls(d["max_trials"], [RunSummary(**r) for r in d["runs"]], d.get("oracle", ""), d.get("seed"))


def make_oracle_factory(
    spec: str,
    seed: int = 0,
    p_err: float = 0.2,
    prefix_respecting: bool = True,
    endpoint_config: str | None = None,
    **endpoint_overrides,
) -> OracleFactory:
    """Oracle per problem from a spec string.

    ``perfect``, ``noisy`` or ``noisy:P`` (P overrides ``p_err``),
    ``scripted:FILE`` (a JSON array of completions) or ``http``.
    Noisy oracles are seeded with ``"{seed}:{problem index}"``.
    """
    kind, _, arg = spec.partition(":")
    if kind == "perfect":
        return lambda problem, index: PerfectOracle(problem)
    if kind == "noisy":
        p = float(arg) if arg else p_err
        return lambda problem, index: NoisyOracle(problem, p, f"{seed}:{index}", prefix_respecting)
    if kind == "scripted":
        if not arg:
            raise ValueError("scripted oracle needs a transcript file: scripted:FILE")
        responses = ScriptedOracle.from_file(arg).responses
        return lambda problem, index: ScriptedOracle(responses)
    if kind == "http":
        cfg = load_endpoint_config(endpoint_config, **endpoint_overrides)
        return lambda problem, index: HttpOracle(cfg)
    raise ValueError(f"unknown oracle spec {spec!r}")


def _run_one(index: int, problem: Problem, factory: OracleFactory, loop: LoopConfig, records_dir: Path | None):
    try:
        record = cegis_solve(problem, factory(problem, index), loop)
    except RunAborted as e:
        record = e.record
    except Exception as e:  # a broken run must not sink the whole bench
        log.exception("run %d (%s) failed", index, problem.name)
        record = RunRecord(problem.name, loop.max_trials, outcome="aborted", error=f"{type(e).__name__}: {e}")
    if records_dir is not None:
        record.write(records_dir / f"{index:04d}-{problem.name}.jsonl")
    trials = record.trials_used if record.solved else loop.max_trials
    return RunSummary(index, problem.name, len(problem.objects), record.outcome, trials, record.wall_ms, record.error)


def bench_run(
    gen: GenConfig | None,
    oracle: str | OracleFactory,
    loop: LoopConfig | None = None,
    problems: Sequence[Problem] | None = None,
    workers: int = 1,
    records_dir: str | Path | None = None,
) -> BenchResult:
    """Run the loop on every generated (or given) problem and aggregate."""
    loop = loop or LoopConfig()
    if problems is None:
        if gen is None:
            raise ValueError("need a GenConfig or an explicit problem list")
        problems = [gen_problem(gen, i) for i in range(gen.problem_count)]
    factory = make_oracle_factory(oracle, seed=gen.seed if gen else 0) if isinstance(oracle, str) else oracle
    rdir = Path(records_dir) if records_dir is not None else None
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        runs = list(pool.map(lambda ip: _run_one(ip[0], ip[1], factory, loop, rdir), enumerate(problems)))
    runs.sort(key=lambda r: r.problem_index)
    return BenchResult(loop.max_trials, runs, oracle if isinstance(oracle, str) else "custom", gen.seed if gen else None)


def report_csv(result: BenchResult, timing: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in result.runs:
        w.writerow([r.problem_index, r.n_blocks, r.outcome, r.trials, f"{r.wall_ms:.3f}" if timing else ""])
    return buf.getvalue()


def export_report(result: BenchResult, path: str | Path, fmt: str | None = None, timing: bool = True) -> Path:
    """Write a CSV or JSON report; the format defaults to the file suffix.

    ``timing=False`` leaves ``wall_ms`` empty so reruns compare byte for byte.
    """
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".") or "csv").lower()
    if fmt == "csv":
        path.write_text(report_csv(result, timing))
    elif fmt == "json":
        data = result.to_json()
        if not timing:
            data["wall_ms"] = None
            for r in data["runs"]:
                r["wall_ms"] = None
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return path


def load_report(path: str | Path) -> BenchResult:
    return BenchResult.from_json(json.loads(Path(path).read_text()))


def histogram_from_csv(path: str | Path) -> dict[int, int]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return dict(sorted(Counter(int(r["trials"]) for r in rows).items()))
