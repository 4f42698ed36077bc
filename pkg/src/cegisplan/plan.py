"""Plans over the four blocksworld operators and the START-PLAN/END-PLAN text format."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

log = logging.getLogger(__name__)

OPERATORS = ("pick-up", "put-down", "stack", "unstack")
OP_ARITY = {"pick-up": 1, "put-down": 1, "stack": 2, "unstack": 2}
SYNONYMS = {
    "pick-up": "pick-up",
    "pickup": "pick-up",
    "pick_up": "pick-up",
    "put-down": "put-down",
    "putdown": "put-down",
    "put_down": "put-down",
    "stack": "stack",
    "unstack": "unstack",
}

START, END = "START-PLAN", "END-PLAN"


class PlanParseError(ValueError):
    pass


class NoPlanBlock(PlanParseError):
    def __init__(self, detail: str = "no START-PLAN ... END-PLAN block found"):
        super().__init__(detail)


class MalformedStep(PlanParseError):
    def __init__(self, line: int, reason: str):
        self.line, self.reason = line, reason
        super().__init__(f"line {line}: {reason}")


class UnknownBlock(PlanParseError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown block {name!r}")


class UnknownOperator(PlanParseError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown operator {name!r}")


@dataclass(frozen=True, order=True)
class Action:
    op: str
    args: tuple[str, ...]

    def __post_init__(self):
        if self.op not in OP_ARITY:
            raise UnknownOperator(self.op)
        if len(self.args) != OP_ARITY[self.op]:
            raise ValueError(f"{self.op} takes {OP_ARITY[self.op]} block(s), got {len(self.args)}")
        if len(self.args) == 2 and self.args[0] == self.args[1]:
            raise ValueError(f"{self.op} needs two distinct blocks, got {self.args[0]} twice")

    @property
    def block(self) -> str:
        """The block that moves."""
        return self.args[0]

    @property
    def other(self) -> str | None:
        return self.args[1] if len(self.args) == 2 else None

    def __str__(self) -> str:
        return " ".join((self.op, *self.args))


def PickUp(b: str) -> Action:
    return Action("pick-up", (b,))


def PutDown(b: str) -> Action:
    return Action("put-down", (b,))


def Stack(top: str, dest: str) -> Action:
    return Action("stack", (top, dest))


def Unstack(top: str, below: str) -> Action:
    return Action("unstack", (top, below))


@dataclass(frozen=True)
class Plan:
    actions: tuple[Action, ...] = ()
    # set by the parser when step numbers were not 1, 2, 3, ...
    misnumbered: bool = field(default=False, compare=False)

    def __len__(self) -> int:
        return len(self.actions)

    def __iter__(self) -> Iterator[Action]:
        return iter(self.actions)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return Plan(self.actions[i])
        return self.actions[i]

    def startswith(self, prefix: "Plan") -> bool:
        return self.actions[: len(prefix)] == prefix.actions

    def __add__(self, other: "Plan") -> "Plan":
        return Plan(self.actions + tuple(other.actions))


def all_actions(objects: Sequence[str]) -> list[Action]:
    """Every ground action over ``objects`` in a fixed order."""
    out = [PickUp(b) for b in objects] + [PutDown(b) for b in objects]
    out += [Stack(a, c) for a in objects for c in objects if a != c]
    out += [Unstack(a, c) for a in objects for c in objects if a != c]
    return out


_STEP_RE = re.compile(r"^(\d+)\s*[.):]?\s+(.*)$")
_MARK_RE = re.compile(r"\b(START-PLAN|END-PLAN)\b", re.IGNORECASE)


def _find_block(text: str) -> tuple[int, list[str]]:
    lines = text.splitlines()
    start = None
    for i, line in enumerate(lines):
        m = _MARK_RE.search(line)
        if not m:
            continue
        word = m.group(1).upper()
        if start is None and word == START:
            start = i
        elif start is not None and word == END:
            return start + 1, lines[start + 1 : i]
    if start is None:
        raise NoPlanBlock()
    raise NoPlanBlock(f"START-PLAN on line {start + 1} has no matching END-PLAN")


def parse_action(words: Sequence[str], objects: Iterable[str] | None = None, line: int = 0) -> Action:
    if not words:
        raise MalformedStep(line, "empty step")
    op = SYNONYMS.get(words[0].lower())
    if op is None:
        raise UnknownOperator(words[0])
    args = tuple(w.lower() for w in words[1:])
    if len(args) != OP_ARITY[op]:
        raise MalformedStep(line, f"{op} takes {OP_ARITY[op]} argument(s), got {len(args)}")
    if objects is not None:
        known = set(objects)
        for a in args:
            if a not in known:
                raise UnknownBlock(a)
    try:
        return Action(op, args)
    except ValueError as e:
        raise MalformedStep(line, str(e)) from None


def parse_plan(text: str, objects: Iterable[str] | None = None) -> Plan:
    """Parse the first START-PLAN/END-PLAN block in ``text``.

    Prose around the block is ignored. Inside it, blank lines and code
    fences are skipped and every other line must be ``N. op arg [arg]``.
    Step numbers that do not run 1, 2, 3, ... are tolerated but flag the
    plan as ``misnumbered``. With ``objects`` given, every argument must be
    one of them.
    """
    objects = None if objects is None else tuple(objects)
    first_line, body = _find_block(text)
    actions = []
    numbers = []
    for offset, raw in enumerate(body):
        lineno = first_line + offset + 1
        line = raw.strip()
        if not line or line.startswith("```"):
            continue
        m = _STEP_RE.match(line)
        if not m:
            raise MalformedStep(lineno, f"expected 'N. operator args', got {line!r}")
        numbers.append(int(m.group(1)))
        words = m.group(2).replace("(", " ").replace(")", " ").replace(",", " ").split()
        actions.append(parse_action(words, objects, lineno))
    misnumbered = numbers != list(range(1, len(numbers) + 1))
    if misnumbered:
        log.warning("plan steps are not numbered consecutively from 1: %s", numbers)
    return Plan(tuple(actions), misnumbered=misnumbered)


def plan_lines(plan: Plan) -> list[str]:
    return [f"{i}. {a}" for i, a in enumerate(plan, 1)]


def print_plan(plan: Plan) -> str:
    return "\n".join([START, *plan_lines(plan), END])
