"""Transition relation, plan verification and counterexample extraction.

Two semantics are supported. ``STRICT_4OPS`` is classic four-operator
blocksworld: stack needs the block in hand and unstack puts it in hand.
``APPENDIX`` additionally allows stacking a clear block straight from the
table and unstacking a block straight onto the table; unstack then has two
possible outcomes, so verification tracks the set of reachable states and a
plan is valid if some resolution of the choices reaches the goal.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field

from .pddl import (
    HAND,
    TABLE,
    Atom,
    InitMode,
    Problem,
    WorldState,
    state_from_init,
)
from .plan import Action, Plan, all_actions, plan_lines

MAX_ENUM_BLOCKS = 6


class Semantics(str, enum.Enum):
    STRICT_4OPS = "strict"
    APPENDIX = "appendix"


class ContractViolation(RuntimeError):
    pass


class TooLarge(ValueError):
    pass


@dataclass(frozen=True)
class StepFailure:
    step_index: int
    action: Action
    violated: tuple[str, ...]
    explanation: str

    def __post_init__(self):
        if not self.violated:
            raise ValueError("a step failure needs at least one violated precondition")


class PreconditionViolation(Exception):
    def __init__(self, failure: StepFailure):
        self.failure = failure
        super().__init__(failure.explanation)


def _where(state: WorldState, block: str) -> str:
    s = state.support_of(block)
    if s == TABLE:
        return "on the table"
    if s == HAND:
        return "in the hand"
    return f"on {s}"


def _describe(state: WorldState, block: str) -> str:
    top = state.block_on(block)
    if top is not None:
        return f"{block} has {top} on it"
    return f"{block} is {_where(state, block)}"


def _fail(state: WorldState, action: Action, checks: list[tuple[str, bool, str]]):
    bad = [(ident, why) for ident, ok, why in checks if not ok]
    if bad:
        text = f"{action}: " + "; ".join(why for _, why in bad)
        raise PreconditionViolation(StepFailure(0, action, tuple(i for i, _ in bad), text))


def _hand_desc(state: WorldState) -> str:
    return "the hand is empty" if state.arm_empty else f"the hand holds {state.holding}"


def successors(state: WorldState, action: Action, semantics: Semantics | str = Semantics.STRICT_4OPS) -> list[WorldState]:
    """All states ``action`` can lead to from ``state``, canonical outcome first.

    Raises ``PreconditionViolation`` when there are none. The reported
    precondition identifiers are those of the four-operator reading.
    """
    semantics = Semantics(semantics)
    unknown = [b for b in action.args if b not in state.blocks]
    if unknown:
        raise PreconditionViolation(
            StepFailure(0, action, ("action.declared",), f"{action}: undeclared block(s) {' '.join(unknown)}")
        )
    op, b, c = action.op, action.block, action.other
    if op == "pick-up":
        _fail(state, action, [
            ("pickup.clear", state.clear(b), f"{b} must be clear, but {_describe(state, b)}"),
            ("pickup.on_table", state.on_table(b), f"{b} must be on the table, but it is {_where(state, b)}"),
            ("pickup.arm_empty", state.arm_empty, f"the hand must be empty, but {_hand_desc(state)}"),
        ])
        return [state.moved(b, HAND)]
    if op == "put-down":
        _fail(state, action, [
            ("putdown.holding", state.holding == b, f"{b} must be in the hand, but {_hand_desc(state)}"),
        ])
        return [state.moved(b, TABLE)]
    if op == "stack":
        hand_checks = [
            ("stack.holding", state.holding == b, f"{b} must be in the hand, but {_hand_desc(state)}"),
            ("stack.dest_clear", state.clear(c), f"{c} must be clear, but {_describe(state, c)}"),
        ]
        if all(ok for _, ok, _ in hand_checks):
            return [state.moved(b, c)]
        if semantics is Semantics.APPENDIX:
            if state.on_table(b) and state.clear(b) and state.clear(c) and state.arm_empty:
                return [state.moved(b, c)]
        _fail(state, action, hand_checks)
    # unstack
    _fail(state, action, [
        ("unstack.on", state.on(b, c), f"{b} must be on {c}, but it is {_where(state, b)}"),
        ("unstack.clear", state.clear(b), f"{b} must be clear, but {_describe(state, b)}"),
        ("unstack.arm_empty", state.arm_empty, f"the hand must be empty, but {_hand_desc(state)}"),
    ])
    out = [state.moved(b, HAND)]
    if semantics is Semantics.APPENDIX:
        out.append(state.moved(b, TABLE))
    return out


def apply(state: WorldState, action: Action, semantics: Semantics | str = Semantics.STRICT_4OPS) -> WorldState:
    """Canonical successor of ``state`` under ``action``.

    Under ``APPENDIX`` semantics unstack also has a to-table outcome; use
    ``successors`` to see it.
    """
    return successors(state, action, semantics)[0]


class Status(str, enum.Enum):
    VALID = "valid"
    INFEASIBLE = "infeasible"
    GOAL_UNSATISFIED = "goal_unsatisfied"


@dataclass(frozen=True)
class Verdict:
    status: Status
    final_state: WorldState | None = None
    failure: StepFailure | None = None
    missing: frozenset[Atom] = frozenset()
    prefix: Plan | None = None

    @property
    def is_valid(self) -> bool:
        return self.status is Status.VALID

    def to_json(self) -> dict:
        return {
            "status": self.status.value,
            "failing_step": self.failure.step_index if self.failure else None,
            "violated": list(self.failure.violated) if self.failure else [],
            "missing_atoms": sorted(str(a) for a in self.missing),
            "prefix": plan_lines(self.prefix) if self.prefix is not None else None,
            "explanation": self.failure.explanation if self.failure else None,
        }


class CexKind(str, enum.Enum):
    INVALID_PREFIX = "invalid_prefix"
    INVALID_WHOLE_PLAN = "invalid_whole_plan"
    GOAL_GAP = "goal_gap"


@dataclass(frozen=True)
class Counterexample:
    kind: CexKind
    plan: Plan | None = None
    missing: frozenset[Atom] = field(default=frozenset())

    def __post_init__(self):
        if self.kind is CexKind.INVALID_PREFIX and not self.plan:
            raise ValueError("an invalid prefix cannot be empty")

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "plan": plan_lines(self.plan) if self.plan is not None else None,
            "missing_atoms": sorted(str(a) for a in self.missing),
        }


def run_plan(
    init: WorldState, plan: Plan, semantics: Semantics | str = Semantics.STRICT_4OPS
) -> tuple[list[WorldState], StepFailure | None]:
    """Execute ``plan``; return the reachable final states or the first failure."""
    frontier = [init]
    for i, action in enumerate(plan, 1):
        nxt: list[WorldState] = []
        first: PreconditionViolation | None = None
        for s in frontier:
            try:
                nxt.extend(successors(s, action, semantics))
            except PreconditionViolation as e:
                first = first or e
        if not nxt:
            f = first.failure
            return frontier, StepFailure(i, f.action, f.violated, f"step {i}: {f.explanation}")
        frontier = list(dict.fromkeys(nxt))
    return frontier, None


def verify(
    problem: Problem,
    plan: Plan,
    semantics: Semantics | str = Semantics.STRICT_4OPS,
    init_mode: InitMode | str = InitMode.NORMALIZE,
) -> Verdict:
    init = state_from_init(problem, init_mode)
    finals, failure = run_plan(init, plan, semantics)
    if failure is not None:
        return Verdict(Status.INFEASIBLE, finals[0], failure=failure, prefix=plan[: failure.step_index])
    for s in finals:
        if not problem.goal.missing(s):
            return Verdict(Status.VALID, s)
    return Verdict(Status.GOAL_UNSATISFIED, finals[0], missing=problem.goal.missing(finals[0]))


def counterexample(verdict: Verdict) -> Counterexample:
    if verdict.status is Status.INFEASIBLE:
        return Counterexample(CexKind.INVALID_PREFIX, plan=verdict.prefix)
    if verdict.status is Status.GOAL_UNSATISFIED:
        return Counterexample(CexKind.GOAL_GAP, missing=verdict.missing)
    raise ContractViolation("a valid plan has no counterexample")


def minimal_infeasible_prefix(
    problem: Problem,
    plan: Plan,
    semantics: Semantics | str = Semantics.STRICT_4OPS,
) -> Counterexample:
    """Shortest prefix of ``plan`` that no completion can repair.

    Its last action fails from the state reached by the actions before it,
    so every plan starting with it is invalid. Executable plans that miss
    the goal yield a goal gap instead.
    """
    return counterexample(verify(problem, plan, semantics))


def reachable_states(problem: Problem, depth: int | None = None) -> dict[WorldState, int]:
    """Breadth-first closure of the init state under four-operator moves.

    Maps each state to its distance from init, in discovery order.
    ``depth=None`` runs to the fixpoint.
    """
    if len(problem.objects) > MAX_ENUM_BLOCKS:
        raise TooLarge(f"{len(problem.objects)} blocks exceeds the enumeration limit of {MAX_ENUM_BLOCKS}")
    init = state_from_init(problem)
    seen = {init: 0}
    queue = deque([init])
    actions = all_actions(problem.objects)
    while queue:
        s = queue.popleft()
        d = seen[s]
        if depth is not None and d >= depth:
            continue
        for a in actions:
            try:
                t = apply(s, a)
            except PreconditionViolation:
                continue
            if t not in seen:
                seen[t] = d + 1
                queue.append(t)
    return seen


def transition_graph(problem: Problem) -> dict[WorldState, dict[Action, WorldState]]:
    """Labelled four-operator edges among all states reachable from init."""
    actions = all_actions(problem.objects)
    graph = {}
    for s in reachable_states(problem):
        edges = {}
        for a in actions:
            try:
                edges[a] = apply(s, a)
            except PreconditionViolation:
                pass
        graph[s] = edges
    return graph
