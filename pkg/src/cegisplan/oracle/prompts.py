"""Prompt construction: few-shot initial prompt and counterexample feedback turns.

The feedback sentences are fixed strings so runs are reproducible and
golden-testable.
"""

from __future__ import annotations

import enum
import functools
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources

from ..pddl import Problem, print_problem
from ..plan import Plan, print_plan
from ..semantics import CexKind, ContractViolation, Counterexample, verify
from .base import Message, OracleQuery, OracleResponse

RICH_PREFIX_SENTENCE = "Any plan with the following prefix is not correct:"
WEAK_INVALID_SENTENCE = "The following plan is not valid:"
GOAL_GAP_SENTENCE = "The plan is executable but does not achieve:"
NO_PLAN_SENTENCE = "Your reply contained no START-PLAN block."

SYSTEM_PROMPT = """\
You are a planner for the blocksworld-4ops domain. States use the predicates \
(on x y), (on-table x), (clear x), (arm-empty) and (holding x). The actions are:
pick-up x: x is clear, on the table, and the hand is empty; afterwards the hand holds x.
put-down x: the hand holds x; afterwards x is on the table and clear, and the hand is empty.
stack x y: the hand holds x and y is clear; afterwards x is on y, x is clear, y is not, and the hand is empty.
unstack x y: x is on y, x is clear, and the hand is empty; afterwards the hand holds x and y is clear.
Answer with one numbered action per line between the lines START-PLAN and END-PLAN."""

TARGET_LABEL = "NEWPROB"

_warned: set = set()


class FeedbackMode(str, enum.Enum):
    WEAK_INVALID = "weak"
    RICH_PREFIX = "rich"


class ContextOverflowRisk(UserWarning):
    pass


class InvalidFewShotExample(UserWarning):
    pass


@dataclass(frozen=True)
class FewShotExample:
    problem: Problem
    plan: Plan


@functools.cache
def default_examples() -> tuple[FewShotExample, ...]:
    from ..corpus import builtin_corpus

    c = builtin_corpus()
    return (FewShotExample(c.problems["oldprob1"], c.plans["oldprob1"]),)


@dataclass(frozen=True)
class PromptConfig:
    """Prompt settings.

    Few-shot pairs are verified when the config is built; an invalid pair
    raises with ``strict_examples`` and otherwise warns with
    ``InvalidFewShotExample``.
    """

    few_shot_examples: tuple[FewShotExample, ...] = field(default_factory=default_examples)
    feedback_mode: FeedbackMode = FeedbackMode.RICH_PREFIX
    max_prompt_tokens_hint: int = 8000
    system_prompt: str | None = SYSTEM_PROMPT
    strict_examples: bool = False

    def __post_init__(self):
        object.__setattr__(self, "feedback_mode", FeedbackMode(self.feedback_mode))
        for i, ex in enumerate(self.few_shot_examples, 1):
            v = verify(ex.problem, ex.plan)
            if v.is_valid:
                continue
            msg = f"few-shot example {i} ({ex.problem.name}) does not verify: {v.to_json()['explanation'] or v.status.value}"
            if self.strict_examples:
                raise ValueError(msg)
            if ex not in _warned:
                _warned.add(ex)
                warnings.warn(msg, InvalidFewShotExample, stacklevel=3)


def estimate_tokens(text: str) -> int:
    return math.ceil(len(text) / 4)


def _check_size(query: OracleQuery, config: PromptConfig) -> OracleQuery:
    est = estimate_tokens(query.text)
    if est > config.max_prompt_tokens_hint:
        warnings.warn(
            f"prompt is about {est} tokens, above the hint of {config.max_prompt_tokens_hint}",
            ContextOverflowRisk,
            stacklevel=3,
        )
    return query


def build_initial_prompt(problem: Problem, config: PromptConfig | None = None) -> OracleQuery:
    config = config or PromptConfig()
    parts = []
    for k, ex in enumerate(config.few_shot_examples, 1):
        label = f"OLDPROB{k}"
        parts.append(f"Given the block world problem {label}:\n{print_problem(ex.problem)}")
        parts.append(f"The solution for the problem {label} is:\n{print_plan(ex.plan)}\n")
    parts.append(f"Now, given a new block world problem {TARGET_LABEL}:\n{print_problem(problem)}")
    parts.append(
        f"Give a plan that solves {TARGET_LABEL}. Write one numbered action per line "
        "between START-PLAN and END-PLAN."
    )
    messages = []
    if config.system_prompt:
        messages.append(Message("system", config.system_prompt))
    messages.append(Message("user", "\n".join(parts)))
    meta = {"problem": problem.name, "trial": 1, "objects": problem.objects}
    return _check_size(OracleQuery(tuple(messages), meta), config)


def _retry_line() -> str:
    return f"Please give a corrected plan for {TARGET_LABEL} between START-PLAN and END-PLAN."


def feedback_text(response: OracleResponse, cex: Counterexample, mode: FeedbackMode) -> str:
    if response.parsed is None:
        raise ContractViolation("feedback needs a parsed plan; use build_no_plan_prompt")
    mode = FeedbackMode(mode)
    if mode is FeedbackMode.WEAK_INVALID:
        body = f"{WEAK_INVALID_SENTENCE}\n{print_plan(response.parsed)}"
    elif cex.kind is CexKind.INVALID_PREFIX:
        body = f"{RICH_PREFIX_SENTENCE}\n{print_plan(cex.plan)}"
    elif cex.kind is CexKind.GOAL_GAP:
        body = GOAL_GAP_SENTENCE + "\n" + "\n".join(sorted(str(a) for a in cex.missing))
    else:
        body = f"{WEAK_INVALID_SENTENCE}\n{print_plan(cex.plan)}"
    return f"{body}\n{_retry_line()}"


def _extend(previous: OracleQuery, response: OracleResponse, text: str, config: PromptConfig) -> OracleQuery:
    messages = previous.messages + (Message("assistant", response.raw_text), Message("user", text))
    meta = dict(previous.metadata)
    meta["trial"] = meta.get("trial", 1) + 1
    return _check_size(OracleQuery(messages, meta), config)


def build_feedback_prompt(
    previous: OracleQuery,
    response: OracleResponse,
    cex: Counterexample,
    config: PromptConfig | None = None,
) -> OracleQuery:
    """Append the oracle's reply and a counterexample turn to the conversation."""
    config = config or PromptConfig(few_shot_examples=())
    return _extend(previous, response, feedback_text(response, cex, config.feedback_mode), config)


def build_no_plan_prompt(
    previous: OracleQuery, response: OracleResponse, config: PromptConfig | None = None
) -> OracleQuery:
    config = config or PromptConfig(few_shot_examples=())
    text = f"{NO_PLAN_SENTENCE}\n{_retry_line()}"
    return _extend(previous, response, text, config)


def prompt_asset(name: str) -> str:
    """Static operator-description prompts: translate_instruction, pick_up, put_down, stack, unstack."""
    return resources.files(__package__).joinpath("assets", f"{name}.txt").read_text()


def prompt_asset_names() -> list[str]:
    d = resources.files(__package__).joinpath("assets")
    return sorted(p.name[:-4] for p in d.iterdir() if p.name.endswith(".txt"))
