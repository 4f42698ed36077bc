"""Deterministic stand-ins for an LLM: scripted, perfect and noisy oracles."""

from __future__ import annotations

import json
import random
from pathlib import Path
from typing import Sequence

from ..generate import reference_solve
from ..pddl import Problem
from ..plan import Plan, PlanParseError, all_actions, parse_plan, print_plan
from .base import OracleQuery, OracleResponse, response_from_text
from .prompts import RICH_PREFIX_SENTENCE, WEAK_INVALID_SENTENCE


class TranscriptExhausted(RuntimeError):
    pass


class ScriptedOracle:
    """Replays a fixed list of raw completions, one per query."""

    def __init__(self, responses: Sequence[str]):
        self.responses = list(responses)
        self.calls = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedOracle":
        data = json.loads(Path(path).read_text())
        if not isinstance(data, list) or not all(isinstance(x, str) for x in data):
            raise ValueError(f"{path}: a transcript is a JSON array of strings")
        return cls(data)

    def query(self, query: OracleQuery) -> OracleResponse:
        if self.calls >= len(self.responses):
            raise TranscriptExhausted(f"transcript has only {len(self.responses)} response(s)")
        text = self.responses[self.calls]
        self.calls += 1
        return response_from_text(text, query.objects)


class PerfectOracle:
    """Always answers with the reference solver's plan."""

    def __init__(self, problem: Problem):
        self.plan = reference_solve(problem)

    def query(self, query: OracleQuery) -> OracleResponse:
        return response_from_text(print_plan(self.plan), query.objects)


def rejected_plans(query: OracleQuery) -> tuple[list[Plan], list[Plan]]:
    """Invalid prefixes and whole invalid plans reported so far in the conversation."""
    prefixes, whole = [], []
    for m in query.messages:
        if m.role != "user":
            continue
        for sentence, bucket in ((RICH_PREFIX_SENTENCE, prefixes), (WEAK_INVALID_SENTENCE, whole)):
            if m.content.startswith(sentence):
                try:
                    bucket.append(parse_plan(m.content))
                except PlanParseError:
                    pass
    return prefixes, whole


class NoisyOracle:
    """Reference plan with each action independently replaced with probability ``p_err``.

    With ``prefix_respecting`` the oracle reads the rejected prefixes and
    plans out of the conversation and redraws (up to ``max_redraws`` times)
    any candidate that starts with one of them; if every redraw is
    rejected it falls back to the uncorrupted reference plan.
    """

    def __init__(
        self,
        problem: Problem,
        p_err: float,
        seed: int | str = 0,
        prefix_respecting: bool = True,
        max_redraws: int = 200,
    ):
        if not 0.0 <= p_err <= 1.0:
            raise ValueError("p_err must be in [0, 1]")
        self.reference = reference_solve(problem)
        self.p_err = p_err
        self.prefix_respecting = prefix_respecting
        self.max_redraws = max_redraws
        self.rng = random.Random(seed)
        self.vocabulary = all_actions(problem.objects)

    def _draw(self) -> Plan:
        out = []
        for a in self.reference:
            if self.rng.random() < self.p_err:
                a = self.rng.choice([b for b in self.vocabulary if b != a])
            out.append(a)
        return Plan(tuple(out))

    def candidate(self, query: OracleQuery) -> Plan:
        if not self.prefix_respecting:
            return self._draw()
        prefixes, whole = rejected_plans(query)
        for _ in range(self.max_redraws):
            plan = self._draw()
            if plan not in whole and not any(plan.startswith(p) for p in prefixes):
                return plan
        return self.reference

    def query(self, query: OracleQuery) -> OracleResponse:
        return response_from_text(print_plan(self.candidate(query)), query.objects)
