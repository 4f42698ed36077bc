"""Blocksworld problem files: atoms, world states, and the PDDL problem fragment.

Only the ``blocksworld-4ops`` problem fragment is understood: ``define``,
``:domain``, ``:objects``, ``:init`` and ``:goal (and ...)`` with the
predicates ``on``, ``on-table``, ``clear``, ``arm-empty`` and ``holding``.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

TABLE = "<table>"
HAND = "<hand>"

BLOCK_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_-]*$")

ARITY = {"on": 2, "on-table": 1, "clear": 1, "arm-empty": 0, "holding": 1}
GOAL_PREDICATES = frozenset({"on", "on-table", "clear"})


class PddlError(ValueError):
    pass


class PddlSyntaxError(PddlError):
    def __init__(self, line: int, col: int, expected: str):
        self.line, self.col, self.expected = line, col, expected
        super().__init__(f"{line}:{col}: expected {expected}")


class SemanticError(PddlError):
    pass


class InconsistentInit(PddlError):
    pass


class InitMode(str, enum.Enum):
    NORMALIZE = "normalize"
    STRICT = "strict"


@dataclass(frozen=True, order=True)
class Atom:
    predicate: str
    args: tuple[str, ...] = ()

    def __post_init__(self):
        if self.predicate not in ARITY:
            raise SemanticError(f"unknown predicate {self.predicate!r}")
        if len(self.args) != ARITY[self.predicate]:
            raise SemanticError(
                f"{self.predicate} takes {ARITY[self.predicate]} argument(s), got {len(self.args)}"
            )
        if self.predicate == "on" and self.args[0] == self.args[1]:
            raise SemanticError(f"(on {self.args[0]} {self.args[0]}) places a block on itself")

    def __str__(self) -> str:
        return "(" + " ".join((self.predicate, *self.args)) + ")"


def On(upper: str, lower: str) -> Atom:
    return Atom("on", (upper, lower))


def OnTable(block: str) -> Atom:
    return Atom("on-table", (block,))


def Clear(block: str) -> Atom:
    return Atom("clear", (block,))


def Holding(block: str) -> Atom:
    return Atom("holding", (block,))


ARM_EMPTY = Atom("arm-empty")


@dataclass(frozen=True)
class WorldState:
    """Closed-world blocksworld configuration.

    ``placement`` pairs every block with what supports it: ``TABLE``,
    ``HAND`` or another block. ``clear`` and ``arm_empty`` are derived.
    A held block is not clear and cannot support anything.
    """

    placement: tuple[tuple[str, str], ...]

    @classmethod
    def from_support(cls, support: Mapping[str, str]) -> "WorldState":
        state = cls(tuple(sorted(support.items())))
        state.check()
        return state

    def check(self) -> None:
        support = self.support
        held = [b for b, s in support.items() if s == HAND]
        if len(held) > 1:
            raise InconsistentInit(f"more than one block in hand: {held}")
        below: dict[str, str] = {}
        for block, under in support.items():
            if under in (TABLE, HAND):
                continue
            if under not in support:
                raise InconsistentInit(f"{block} rests on undeclared block {under}")
            if under == block:
                raise InconsistentInit(f"{block} rests on itself")
            if under in below:
                raise InconsistentInit(f"{below[under]} and {block} both rest on {under}")
            if support[under] == HAND:
                raise InconsistentInit(f"{block} rests on {under}, which is in hand")
            below[under] = block
        for block in support:
            seen = {block}
            cur = support[block]
            while cur not in (TABLE, HAND):
                if cur in seen:
                    raise InconsistentInit(f"support cycle through {block}")
                seen.add(cur)
                cur = support[cur]

    @property
    def support(self) -> dict[str, str]:
        return dict(self.placement)

    @property
    def blocks(self) -> tuple[str, ...]:
        return tuple(b for b, _ in self.placement)

    @property
    def holding(self) -> str | None:
        for block, under in self.placement:
            if under == HAND:
                return block
        return None

    @property
    def arm_empty(self) -> bool:
        return self.holding is None

    def support_of(self, block: str) -> str:
        for b, under in self.placement:
            if b == block:
                return under
        raise KeyError(block)

    def on_table(self, block: str) -> bool:
        return self.support_of(block) == TABLE

    def on(self, upper: str, lower: str) -> bool:
        return self.support_of(upper) == lower

    def block_on(self, block: str) -> str | None:
        for b, under in self.placement:
            if under == block:
                return b
        return None

    def clear(self, block: str) -> bool:
        return self.support_of(block) != HAND and self.block_on(block) is None

    def holds(self, atom: Atom) -> bool:
        p, a = atom.predicate, atom.args
        if p == "on":
            return self.on(*a)
        if p == "on-table":
            return self.on_table(a[0])
        if p == "clear":
            return self.clear(a[0])
        if p == "holding":
            return self.holding == a[0]
        return self.arm_empty

    def moved(self, block: str, where: str) -> "WorldState":
        return WorldState(tuple((b, where if b == block else s) for b, s in self.placement))

    def towers(self) -> list[list[str]]:
        """Towers listed top block first, ordered by their bottom block."""
        out = []
        for bottom in self.blocks:
            if not self.on_table(bottom):
                continue
            tower = [bottom]
            while (up := self.block_on(tower[-1])) is not None:
                tower.append(up)
            out.append(tower[::-1])
        return out

    def atoms(self) -> list[Atom]:
        """Complete atom description, in the order the printer emits it."""
        out = [ARM_EMPTY] if self.arm_empty else []
        for block, under in self.placement:
            if under == TABLE:
                out.append(OnTable(block))
            elif under == HAND:
                out.append(Holding(block))
            else:
                out.append(On(block, under))
        out.extend(Clear(b) for b in self.blocks if self.clear(b))
        return out


@dataclass(frozen=True)
class GoalSpec:
    atoms: tuple[Atom, ...]

    def __post_init__(self):
        if not self.atoms:
            raise SemanticError("empty goal")
        below: dict[str, str] = {}
        above: dict[str, str] = {}
        for atom in self.atoms:
            if atom.predicate not in GOAL_PREDICATES:
                raise SemanticError(f"{atom} is not allowed in a goal")
            if atom.predicate == "on":
                x, y = atom.args
                where = below.setdefault(x, y)
                if where != y:
                    raise SemanticError(f"goal places {x} on both {where} and {y}")
                if above.setdefault(y, x) != x:
                    raise SemanticError(f"goal stacks both {above[y]} and {x} on {y}")
            elif atom.predicate == "on-table":
                if below.setdefault(atom.args[0], TABLE) != TABLE:
                    raise SemanticError(f"goal puts {atom.args[0]} on the table and on a block")
        for atom in self.atoms:
            if atom.predicate == "clear" and atom.args[0] in above:
                raise SemanticError(f"goal requires {atom.args[0]} clear and covered")

    def __iter__(self) -> Iterator[Atom]:
        return iter(self.atoms)

    def __len__(self) -> int:
        return len(self.atoms)

    def missing(self, state: WorldState) -> frozenset[Atom]:
        return frozenset(a for a in self.atoms if not state.holds(a))


@dataclass(frozen=True)
class Problem:
    name: str
    domain_name: str
    objects: tuple[str, ...]
    init: tuple[Atom, ...]
    goal: GoalSpec
    source: str | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        seen = set()
        for obj in self.objects:
            if not BLOCK_RE.match(obj):
                raise SemanticError(f"bad block name {obj!r}")
            if obj in seen:
                raise SemanticError(f"duplicate object {obj}")
            seen.add(obj)
        for atom in (*self.init, *self.goal):
            for arg in atom.args:
                if arg not in seen:
                    raise SemanticError(f"{atom} mentions undeclared block {arg}")


# ---------------------------------------------------------------- parsing


_TOKEN_RE = re.compile(r"\s+|;[^\n]*|\(|\)|[^\s();]+")


@dataclass
class _Tok:
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    line, line_start = 1, 0
    for m in _TOKEN_RE.finditer(text):
        s = m.group()
        if not s.isspace() and not s.startswith(";"):
            toks.append(_Tok(s, line, m.start() - line_start + 1))
        nl = s.count("\n")
        if nl:
            line += nl
            line_start = m.start() + s.rfind("\n") + 1
    return toks


def _read_sexpr(toks: list[_Tok], i: int) -> tuple[object, int]:
    if i >= len(toks):
        last = toks[-1] if toks else _Tok("", 1, 1)
        raise PddlSyntaxError(last.line, last.col + len(last.text), "'(' or token, found end of input")
    tok = toks[i]
    if tok.text == ")":
        raise PddlSyntaxError(tok.line, tok.col, "'(' or token, found ')'")
    if tok.text != "(":
        return tok, i + 1
    items = []
    i += 1
    while True:
        if i >= len(toks):
            raise PddlSyntaxError(tok.line, tok.col, "')' closing this list")
        if toks[i].text == ")":
            return (tok, items), i + 1
        item, i = _read_sexpr(toks, i)
        items.append(item)


def _is_list(x) -> bool:
    return isinstance(x, tuple)


def _where(x) -> _Tok:
    return x[0] if _is_list(x) else x


def _expect_list(x, what: str) -> list:
    if not _is_list(x):
        raise PddlSyntaxError(x.line, x.col, what)
    return x[1]


def _word(x, what: str) -> str:
    if _is_list(x):
        t = x[0]
        raise PddlSyntaxError(t.line, t.col, what)
    return x.text


def _atom(x, context: str) -> Atom:
    items = _expect_list(x, f"an atom in {context}")
    if not items:
        t = x[0]
        raise PddlSyntaxError(t.line, t.col, f"a predicate in {context}")
    words = [_word(it, "a predicate or block name").lower() for it in items]
    pred, args = words[0], tuple(words[1:])
    if pred not in ARITY:
        raise SemanticError(f"unknown predicate {pred!r} in {context} at line {x[0].line}")
    return Atom(pred, args)


def parse_problem(text: str) -> Problem:
    toks = _tokenize(text)
    if not toks:
        raise PddlSyntaxError(1, 1, "'(define'")
    tree, end = _read_sexpr(toks, 0)
    if end != len(toks):
        t = toks[end]
        raise PddlSyntaxError(t.line, t.col, "end of input after the define form")
    items = _expect_list(tree, "'(define'")
    if not items or _word(items[0], "define").lower() != "define":
        t = _where(items[0]) if items else tree[0]
        raise PddlSyntaxError(t.line, t.col, "define")

    name = domain = None
    objects: list[str] = []
    init: list[Atom] = []
    goal_atoms: list[Atom] = []
    have_goal = False
    for section in items[1:]:
        body = _expect_list(section, "a (problem ...) or (:keyword ...) section")
        if not body:
            t = section[0]
            raise PddlSyntaxError(t.line, t.col, "a section keyword")
        key = _word(body[0], "a section keyword").lower()
        rest = body[1:]
        if key == "problem":
            if len(rest) != 1:
                raise PddlSyntaxError(section[0].line, section[0].col, "(problem NAME)")
            name = _word(rest[0], "a problem name")
        elif key == ":domain":
            if len(rest) != 1:
                raise PddlSyntaxError(section[0].line, section[0].col, "(:domain NAME)")
            domain = _word(rest[0], "a domain name")
        elif key == ":objects":
            objects = [_word(r, "a block name").lower() for r in rest]
        elif key == ":init":
            init = [_atom(r, ":init") for r in rest]
        elif key == ":goal":
            have_goal = True
            if len(rest) != 1:
                raise PddlSyntaxError(section[0].line, section[0].col, "(:goal (and ...))")
            g = _expect_list(rest[0], "(and ...) or an atom")
            if g and not _is_list(g[0]) and g[0].text.lower() == "and":
                goal_atoms = [_atom(r, ":goal") for r in g[1:]]
            else:
                goal_atoms = [_atom(rest[0], ":goal")]
        else:
            t = _where(body[0])
            raise PddlSyntaxError(t.line, t.col, "problem, :domain, :objects, :init or :goal")
    t = tree[0]
    if name is None:
        raise PddlSyntaxError(t.line, t.col, "a (problem NAME) section")
    if domain is None:
        raise PddlSyntaxError(t.line, t.col, "a (:domain NAME) section")
    if not have_goal:
        raise PddlSyntaxError(t.line, t.col, "a (:goal ...) section")
    return Problem(name, domain, tuple(objects), tuple(init), GoalSpec(tuple(goal_atoms)), source=text)


def print_problem(problem: Problem) -> str:
    lines = [
        f"(define (problem {problem.name})",
        f"(:domain {problem.domain_name})",
        "(:objects " + "".join(f"{o} " for o in problem.objects) + ")",
        "(:init",
        *(str(a) for a in problem.init),
        ")",
        "(:goal",
        "(and",
        *(str(a) for a in problem.goal),
        ")))",
    ]
    return "\n".join(lines) + "\n"


def state_from_init(problem: Problem, mode: InitMode | str = InitMode.NORMALIZE) -> WorldState:
    """Close the declarative init list into a ``WorldState``.

    Placement comes from ``on``/``on-table``/``holding`` atoms. Declared
    ``clear`` and ``arm-empty`` atoms are ignored in normalize mode; strict
    mode requires them to match the derived ones exactly.
    """
    mode = InitMode(mode)
    support: dict[str, str] = {}

    def place(block: str, where: str) -> None:
        if block in support:
            raise InconsistentInit(f"{block} placed twice")
        support[block] = where

    for atom in problem.init:
        if atom.predicate == "on":
            place(*atom.args)
        elif atom.predicate == "on-table":
            place(atom.args[0], TABLE)
        elif atom.predicate == "holding":
            place(atom.args[0], HAND)
    unplaced = [b for b in problem.objects if b not in support]
    if unplaced:
        raise InconsistentInit(f"unplaced block(s): {' '.join(unplaced)}")
    state = WorldState.from_support({b: support[b] for b in problem.objects})

    if mode is InitMode.STRICT:
        declared_clear = {a.args[0] for a in problem.init if a.predicate == "clear"}
        derived_clear = {b for b in problem.objects if state.clear(b)}
        problems = []
        if declared_clear - derived_clear:
            problems.append("declared clear but occupied: " + " ".join(sorted(declared_clear - derived_clear)))
        if derived_clear - declared_clear:
            problems.append("clear but not declared: " + " ".join(sorted(derived_clear - declared_clear)))
        declared_empty = ARM_EMPTY in problem.init
        if declared_empty != state.arm_empty:
            problems.append("arm-empty declaration does not match the hand")
        if problems:
            raise InconsistentInit("; ".join(problems))
    return state


def problem_from_state(
    name: str,
    objects: Iterable[str],
    init: WorldState,
    goal: Iterable[Atom],
    domain_name: str = "blocksworld-4ops",
) -> Problem:
    return Problem(name, domain_name, tuple(objects), tuple(init.atoms()), GoalSpec(tuple(goal)))
