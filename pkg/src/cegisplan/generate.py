"""Seeded random blocksworld problems and the unstack-then-rebuild reference solver."""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass

from .pddl import TABLE, HAND, Atom, Problem, WorldState, problem_from_state, state_from_init
from .plan import Plan, PickUp, PutDown, Stack, Unstack


class GoalStyle(str, enum.Enum):
    FULL_TOWERS = "full"
    PARTIAL_ATOMS = "partial"


@dataclass(frozen=True)
class GenConfig:
    n_blocks: int
    seed: int = 0
    problem_count: int = 20
    goal_style: GoalStyle = GoalStyle.PARTIAL_ATOMS

    def __post_init__(self):
        if self.n_blocks < 1:
            raise ValueError("n_blocks must be at least 1")
        if self.problem_count < 0:
            raise ValueError("problem_count must be non-negative")


class UnsatisfiableGoal(ValueError):
    pass


def lah(n: int, k: int) -> int:
    """Ways to split n labelled blocks into k unordered non-empty towers."""
    if n == 0 and k == 0:
        return 1
    if k < 1 or k > n:
        return 0
    return math.comb(n - 1, k - 1) * math.factorial(n) // math.factorial(k)


def random_towers(blocks: list[str], rng: random.Random) -> list[list[str]]:
    """Uniformly random arm-empty configuration, towers listed bottom first.

    Draw the tower count with Lah-number weights, then cut a random
    permutation at k-1 random gaps; each unordered set of k towers arises
    from exactly k! (permutation, cut) pairs, so the result is uniform.
    """
    n = len(blocks)
    k = rng.choices(range(1, n + 1), weights=[lah(n, k) for k in range(1, n + 1)])[0]
    order = blocks[:]
    rng.shuffle(order)
    cuts = sorted(rng.sample(range(1, n), k - 1))
    bounds = [0, *cuts, n]
    return [order[a:b] for a, b in zip(bounds, bounds[1:])]


def towers_state(blocks: list[str], towers: list[list[str]]) -> WorldState:
    support = {}
    for tower in towers:
        for i, b in enumerate(tower):
            support[b] = TABLE if i == 0 else tower[i - 1]
    return WorldState.from_support({b: support[b] for b in blocks})


def _position_atoms(state: WorldState) -> list[Atom]:
    return [a for a in state.atoms() if a.predicate in ("on", "on-table")]


def gen_problem(config: GenConfig, index: int) -> Problem:
    """Problem ``index`` of the family described by ``config``.

    The init is a uniformly random arm-empty configuration. The goal
    describes a second random configuration: completely for
    ``FULL_TOWERS``, as a random non-empty subset of its on/on-table atoms
    for ``PARTIAL_ATOMS``. Goals already true in the init are redrawn while
    another configuration exists, so every problem is solvable and, for
    n >= 2, non-trivial.
    """
    n = config.n_blocks
    rng = random.Random(f"bw:{config.seed}:{n}:{index}")
    blocks = [f"b{i}" for i in range(1, n + 1)]
    init = towers_state(blocks, random_towers(blocks, rng))
    goal: list[Atom] = _position_atoms(init)
    for _ in range(100):
        target = towers_state(blocks, random_towers(blocks, rng))
        atoms = _position_atoms(target)
        if config.goal_style is GoalStyle.PARTIAL_ATOMS:
            atoms = sorted(rng.sample(atoms, rng.randint(1, len(atoms))), key=atoms.index)
        if n == 1 or any(not init.holds(a) for a in atoms):
            goal = atoms
            break
    name = f"bw-rand-{n}-{config.seed}-{index}"
    return problem_from_state(name, blocks, init, goal)


def gen_problems(config: GenConfig) -> list[Problem]:
    return [gen_problem(config, i) for i in range(config.problem_count)]


def _goal_support(problem: Problem) -> tuple[dict[str, str], set[str]]:
    target: dict[str, str] = {}
    clear = set()
    for atom in problem.goal:
        if atom.predicate == "on":
            target[atom.args[0]] = atom.args[1]
        elif atom.predicate == "on-table":
            target[atom.args[0]] = TABLE
        else:
            clear.add(atom.args[0])
    for start in target:
        seen = {start}
        cur = target.get(start)
        while cur is not None and cur != TABLE:
            if cur in seen:
                raise UnsatisfiableGoal(f"goal stacks {start} in a cycle")
            seen.add(cur)
            cur = target.get(cur)
    return target, clear


def reference_solve(problem: Problem) -> Plan:
    """Ground-truth plan: clear misplaced blocks to the table, then rebuild.

    A block is settled when it sits where the goal wants it (blocks with no
    goal position count as settled only on the table) on top of a settled
    block or the table. Unsettled blocks are moved to the table top-down,
    then goal towers are built bottom-up. Each block moves at most twice,
    so the plan has at most 4n actions.
    """
    target, _ = _goal_support(problem)
    state = state_from_init(problem)
    support = state.support
    actions = []

    def settled(b: str) -> bool:
        where = support[b]
        want = target.get(b, TABLE)
        if where != want:
            return False
        return where == TABLE or settled(where)

    held = state.holding
    if held is not None:
        actions.append(PutDown(held))
        support[held] = TABLE

    def on_top(b: str) -> str | None:
        return next((x for x, s in support.items() if s == b), None)

    changed = True
    while changed:
        changed = False
        for b in problem.objects:
            if support[b] not in (TABLE, HAND) and on_top(b) is None and not settled(b):
                actions += [Unstack(b, support[b]), PutDown(b)]
                support[b] = TABLE
                changed = True

    changed = True
    while changed:
        changed = False
        for b in problem.objects:
            dest = target.get(b)
            if dest in (None, TABLE) or settled(b):
                continue
            if settled(dest) and on_top(dest) is None:
                actions += [PickUp(b), Stack(b, dest)]
                support[b] = dest
                changed = True

    unplaced = [b for b, d in target.items() if not settled(b)]
    if unplaced:
        raise UnsatisfiableGoal(f"cannot place {' '.join(unplaced)}")
    return Plan(tuple(actions))
