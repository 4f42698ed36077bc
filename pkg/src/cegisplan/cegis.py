"""The counterexample-guided synthesis loop around a solution oracle."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

from .oracle.base import Oracle, OracleTransportError
from .oracle.mock import TranscriptExhausted
from .oracle.prompts import (
    FeedbackMode,
    PromptConfig,
    build_feedback_prompt,
    build_initial_prompt,
    build_no_plan_prompt,
    estimate_tokens,
)
from .pddl import Problem
from .plan import Plan, parse_plan, print_plan
from .semantics import CexKind, Counterexample, Semantics, counterexample, verify

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class LoopConfig:
    max_trials: int = 10
    feedback_mode: FeedbackMode = FeedbackMode.RICH_PREFIX
    semantics: Semantics = Semantics.STRICT_4OPS
    prompt: PromptConfig = field(default_factory=PromptConfig)

    def __post_init__(self):
        if self.max_trials < 1:
            raise ValueError("max_trials must be at least 1")
        object.__setattr__(self, "feedback_mode", FeedbackMode(self.feedback_mode))
        object.__setattr__(self, "semantics", Semantics(self.semantics))


@dataclass
class TrialRecord:
    index: int
    n_messages: int
    prompt_chars: int
    prompt_tokens: int
    raw_response: str
    plan: Plan | None
    parse_error: str | None
    verdict: dict | None
    counterexample: dict | None
    wall_ms: float

    @property
    def valid(self) -> bool:
        return self.verdict is not None and self.verdict["status"] == "valid"

    def score(self) -> tuple:
        """Sort key for the most useful failed trial: fewest violations, longest feasible prefix."""
        if self.verdict is None:
            return (float("inf"), 0)
        if self.verdict["status"] == "infeasible":
            return (len(self.verdict["violated"]), -(self.verdict["failing_step"] - 1))
        return (0, -len(self.plan or ()))

    def to_json(self) -> dict:
        return {
            "type": "trial",
            "trial": self.index,
            "n_messages": self.n_messages,
            "prompt_chars": self.prompt_chars,
            "prompt_tokens": self.prompt_tokens,
            "raw_response": self.raw_response,
            "plan": print_plan(self.plan) if self.plan is not None else None,
            "parse_error": self.parse_error,
            "verdict": self.verdict,
            "counterexample": self.counterexample,
            "wall_ms": self.wall_ms,
        }

    @classmethod
    def from_json(cls, d: dict) -> "TrialRecord":
        return cls(
            index=d["trial"],
            n_messages=d["n_messages"],
            prompt_chars=d["prompt_chars"],
            prompt_tokens=d["prompt_tokens"],
            raw_response=d["raw_response"],
            plan=parse_plan(d["plan"]) if d["plan"] is not None else None,
            parse_error=d["parse_error"],
            verdict=d["verdict"],
            counterexample=d["counterexample"],
            wall_ms=d["wall_ms"],
        )


@dataclass
class RunRecord:
    problem_name: str
    max_trials: int
    trials: list[TrialRecord] = field(default_factory=list)
    outcome: str = "running"  # solved | exhausted | aborted
    plan: Plan | None = None
    error: str | None = None

    @property
    def solved(self) -> bool:
        return self.outcome == "solved"

    @property
    def trials_used(self) -> int:
        return len(self.trials)

    @property
    def wall_ms(self) -> float:
        return sum(t.wall_ms for t in self.trials)

    def best_trial(self) -> TrialRecord | None:
        """Diagnostic pick among failed trials; ties go to the earliest."""
        failed = [t for t in self.trials if not t.valid]
        return min(failed, key=lambda t: (t.score(), t.index)) if failed else None

    def summary(self) -> dict:
        best = self.best_trial() if self.outcome == "exhausted" else None
        return {
            "type": "summary",
            "schema_version": SCHEMA_VERSION,
            "problem": self.problem_name,
            "outcome": self.outcome,
            "trials_used": self.trials_used,
            "max_trials": self.max_trials,
            "plan": print_plan(self.plan) if self.plan is not None else None,
            "best_trial": best.index if best else None,
            "error": self.error,
            "wall_ms": self.wall_ms,
        }

    def to_json_lines(self) -> str:
        rows = [t.to_json() for t in self.trials] + [self.summary()]
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json_lines())
        return path

    @classmethod
    def from_json_lines(cls, text: str) -> "RunRecord":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        summary = rows[-1]
        if summary.get("type") != "summary":
            raise ValueError("run record has no trailing summary line")
        if summary.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {summary.get('schema_version')}")
        return cls(
            problem_name=summary["problem"],
            max_trials=summary["max_trials"],
            trials=[TrialRecord.from_json(r) for r in rows[:-1]],
            outcome=summary["outcome"],
            plan=parse_plan(summary["plan"]) if summary["plan"] else None,
            error=summary["error"],
        )

    @classmethod
    def read(cls, path: str | Path) -> "RunRecord":
        return cls.from_json_lines(Path(path).read_text())


class RunAborted(RuntimeError):
    """The oracle failed at transport level; ``record`` holds the trials so far."""

    def __init__(self, record: RunRecord, cause: Exception):
        self.record = record
        super().__init__(f"run on {record.problem_name} aborted after {record.trials_used} trial(s): {cause}")


def cegis_solve(
    problem: Problem,
    oracle: Oracle,
    config: LoopConfig | None = None,
    clock: Callable[[], float] = time.perf_counter,
) -> RunRecord:
    """Query, verify and feed back counterexamples until a plan verifies.

    Trial 1 is the few-shot prompt. Each later trial appends the previous
    reply and one feedback turn, so all counterexamples stay in the
    conversation. A reply without a plan block still costs a trial.
    """
    config = config or LoopConfig()
    prompt_cfg = replace(config.prompt, feedback_mode=config.feedback_mode)
    record = RunRecord(problem.name, config.max_trials)
    query = build_initial_prompt(problem, prompt_cfg)
    for t in range(1, config.max_trials + 1):
        start = clock()
        try:
            response = oracle.query(query)
        except (OracleTransportError, TranscriptExhausted) as e:
            record.outcome, record.error = "aborted", f"{type(e).__name__}: {e}"
            raise RunAborted(record, e) from e
        verdict = cex = None
        if response.parsed is not None:
            verdict = verify(problem, response.parsed, config.semantics)
            if not verdict.is_valid:
                if config.feedback_mode is FeedbackMode.WEAK_INVALID:
                    cex = Counterexample(CexKind.INVALID_WHOLE_PLAN, plan=response.parsed)
                else:
                    cex = counterexample(verdict)
        text = query.text
        record.trials.append(
            TrialRecord(
                index=t,
                n_messages=len(query.messages),
                prompt_chars=len(text),
                prompt_tokens=estimate_tokens(text),
                raw_response=response.raw_text,
                plan=response.parsed,
                parse_error=str(response.parse_error) if response.parse_error else None,
                verdict=verdict.to_json() if verdict else None,
                counterexample=cex.to_json() if cex else None,
                wall_ms=(clock() - start) * 1000.0,
            )
        )
        log.debug("%s trial %d: %s", problem.name, t, verdict.status.value if verdict else "no plan")
        if verdict is not None and verdict.is_valid:
            record.outcome, record.plan = "solved", response.parsed
            return record
        if t == config.max_trials:
            break
        if cex is None:
            query = build_no_plan_prompt(query, response, prompt_cfg)
        else:
            query = build_feedback_prompt(query, response, cex, prompt_cfg)
    record.outcome = "exhausted"
    return record


def replay(record: RunRecord, problem: Problem, semantics: Semantics | str = Semantics.STRICT_4OPS) -> list[bool]:
    """Re-verify every recorded plan; True where the stored verdict is reproduced."""
    out = []
    for t in record.trials:
        if t.plan is None:
            out.append(t.verdict is None)
        else:
            out.append(verify(problem, t.plan, semantics).to_json() == t.verdict)
    return out
