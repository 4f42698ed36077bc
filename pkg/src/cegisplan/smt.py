"""SMT-LIB2 encoding of plan verification and external solver integration.

Each state k of the plan gets its own uninterpreted functions over an
integer block sort::

    s{k}_table : Int -> Bool        s{k}_hand  : Int -> Bool
    s{k}_clear : Int -> Bool        s{k}_stacked : Int Int -> Bool
    s{k}_handsfree : Bool

Blocks are distinct integer constants 1..n. Quantifiers over blocks are
expanded over the n block constants, which keeps every script
quantifier-free (QF_UFLIA) and decidable.

``CORRECTED`` pins every field of every state, so the script is sat iff the
plan is valid under the matching native semantics. ``LITERAL_APPENDIX``
transcribes the hand-written operator constraints as given, including the
stack/unstack frame that only preserves ``stacked(x, y)`` when x is not the
moved block *and* y is not the destination. That leaves pairs such as
(moved, other) free, so some invalid plans come out sat.
"""

from __future__ import annotations

import enum
import os
import shlex
import shutil
import subprocess
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

from .pddl import Problem, WorldState, state_from_init
from .plan import Action, Plan
from .semantics import Semantics, Verdict, verify

DEFAULT_TIMEOUT = 30.0
FIELDS = ("table", "hand", "stacked", "clear", "handsfree")


class EncodingMode(str, enum.Enum):
    CORRECTED = "corrected"
    LITERAL_APPENDIX = "literal-appendix"


class SolverResult(str, enum.Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SmtEncoding:
    script: str
    step_count: int
    state_symbols: tuple[tuple[str, ...], ...]
    mode: EncodingMode = EncodingMode.CORRECTED
    semantics: Semantics = Semantics.STRICT_4OPS


def _and(terms: Sequence[str]) -> str:
    terms = list(terms)
    if not terms:
        return "true"
    if len(terms) == 1:
        return terms[0]
    return "(and " + " ".join(terms) + ")"


def _not(t: str) -> str:
    return f"(not {t})"


def _lit(t: str, value: bool) -> str:
    return t if value else _not(t)


class _Encoder:
    def __init__(self, problem: Problem, mode: EncodingMode, semantics: Semantics):
        self.problem = problem
        self.mode = mode
        self.semantics = semantics
        self.blocks = list(problem.objects)
        self.const = {b: f"blk_{b}" for b in self.blocks}
        self.lines: list[str] = []

    # term builders
    def t(self, k, b):
        return f"(s{k}_table {self.const[b]})"

    def h(self, k, b):
        return f"(s{k}_hand {self.const[b]})"

    def c(self, k, b):
        return f"(s{k}_clear {self.const[b]})"

    def s(self, k, x, y):
        return f"(s{k}_stacked {self.const[x]} {self.const[y]})"

    def f(self, k):
        return f"s{k}_handsfree"

    def assert_(self, term: str, comment: str | None = None):
        if comment:
            self.lines.append(f"; {comment}")
        self.lines.append(f"(assert {term})")

    def same(self, k, term_fn, *args):
        return f"(= {term_fn(k, *args)} {term_fn(k + 1, *args)})"

    def declare_state(self, k: int) -> tuple[str, ...]:
        names = tuple(f"s{k}_{fld}" for fld in FIELDS)
        for fld in ("table", "hand", "clear"):
            self.lines.append(f"(declare-fun s{k}_{fld} (Int) Bool)")
        self.lines.append(f"(declare-fun s{k}_stacked (Int Int) Bool)")
        self.lines.append(f"(declare-fun s{k}_handsfree () Bool)")
        return names

    def init_state(self, state: WorldState):
        terms = []
        for b in self.blocks:
            terms.append(_lit(self.t(0, b), state.on_table(b)))
            terms.append(_lit(self.h(0, b), state.holding == b))
            terms.append(_lit(self.c(0, b), state.clear(b)))
        for x in self.blocks:
            for y in self.blocks:
                terms.append(_lit(self.s(0, x, y), state.on(x, y)))
        terms.append(_lit(self.f(0), state.arm_empty))
        self.assert_(_and(terms), "initial state")

    def frame_unary(self, k, keep: Iterable[str], fields=("hand", "table", "clear")):
        fn = {"hand": self.h, "table": self.t, "clear": self.c}
        return [self.same(k, fn[fld], x) for x in keep for fld in fields]

    def frame_stacked(self, k, changed_pair: tuple[str, str] | None):
        out = []
        for x in self.blocks:
            for y in self.blocks:
                if changed_pair is None:
                    out.append(self.same(k, self.s, x, y))
                elif self.mode is EncodingMode.CORRECTED:
                    if (x, y) != changed_pair:
                        out.append(self.same(k, self.s, x, y))
                elif x != changed_pair[0] and y != changed_pair[1]:
                    out.append(self.same(k, self.s, x, y))
        return out

    def step(self, k: int, action: Action):
        """Constraints between state k and k+1 for ``action``."""
        b, o = action.block, action.other
        n = k + 1
        others = [x for x in self.blocks if x not in action.args]
        corrected = self.mode is EncodingMode.CORRECTED
        table_cases = self.semantics is Semantics.APPENDIX
        if action.op == "pick-up":
            body = [
                self.t(k, b), self.c(k, b), _not(self.h(k, b)),
                self.h(n, b), _not(self.t(n, b)), _not(self.c(n, b)),
            ]
            if corrected:
                body += [self.f(k), _not(self.f(n))]
            body += self.frame_unary(k, others) + self.frame_stacked(k, None)
            return _and(body)
        if action.op == "put-down":
            body = [_not(self.h(n, b)), self.t(n, b), self.c(n, b)]
            if corrected:
                body += [self.h(k, b), _not(self.f(k)), self.f(n)]
            body += self.frame_unary(k, others) + self.frame_stacked(k, None)
            return _and(body)
        frame = self.frame_unary(k, others) + self.frame_stacked(k, (b, o))
        if corrected:
            frame += self.frame_unary(k, [o], ("hand", "table"))
        if action.op == "stack":
            post = [
                _not(self.t(n, b)), _not(self.h(n, b)), self.s(n, b, o),
                self.c(n, b), _not(self.c(n, o)), self.f(n),
            ]
            from_hand = [self.h(k, b), _not(self.s(k, b, o)), self.c(k, o), _not(self.f(k))] + post
            cases = [_and(from_hand)]
            if table_cases:
                from_table = [
                    self.t(k, b), _not(self.s(k, b, o)), self.c(k, b), self.c(k, o), self.f(k),
                ] + post
                cases.insert(0, _and(from_table))
        else:
            pre = [self.s(k, b, o), self.c(k, b), self.f(k), _not(self.s(n, b, o))]
            to_hand = pre + [self.h(n, b), self.c(n, o), _not(self.c(n, b)), _not(self.f(n))]
            if corrected:
                to_hand.append(_not(self.t(n, b)))
            cases = [_and(to_hand)]
            if table_cases:
                to_table = pre + [self.t(n, b), self.c(n, b), self.c(n, o), self.f(n)]
                if corrected:
                    to_table.append(_not(self.h(n, b)))
                cases.insert(0, _and(to_table))
        choice = cases[0] if len(cases) == 1 else "(or " + " ".join(cases) + ")"
        return _and(frame + [choice])

    def goal(self, k: int):
        terms = []
        for atom in self.problem.goal:
            if atom.predicate == "on":
                terms.append(self.s(k, *atom.args))
            elif atom.predicate == "on-table":
                terms.append(self.t(k, atom.args[0]))
            else:
                terms.append(self.c(k, atom.args[0]))
        self.assert_(_and(terms), "goal at the final state")


def emit_smtlib(
    problem: Problem,
    plan: Plan,
    mode: EncodingMode | str = EncodingMode.CORRECTED,
    semantics: Semantics | str | None = None,
) -> SmtEncoding:
    """SMT-LIB2 script that is sat iff ``plan`` is valid for ``problem``.

    ``semantics`` picks whether the stack-from-table and unstack-to-table
    cases are encoded; it defaults to four-operator for ``CORRECTED`` and
    to the two-case reading for ``LITERAL_APPENDIX``.
    """
    mode = EncodingMode(mode)
    if semantics is None:
        semantics = Semantics.STRICT_4OPS if mode is EncodingMode.CORRECTED else Semantics.APPENDIX
    semantics = Semantics(semantics)
    enc = _Encoder(problem, mode, semantics)
    L = enc.lines
    L.append(f"; problem {problem.name}, {len(plan)} step(s), {mode.value} encoding, {semantics.value} semantics")
    L.append("(set-logic QF_UFLIA)")
    for i, b in enumerate(enc.blocks, 1):
        L.append(f"(declare-const {enc.const[b]} Int)")
        L.append(f"(assert (= {enc.const[b]} {i}))")
    if len(enc.blocks) > 1:
        L.append("(assert (distinct " + " ".join(enc.const[b] for b in enc.blocks) + "))")
    symbols = [enc.declare_state(k) for k in range(len(plan) + 1)]
    enc.init_state(state_from_init(problem))
    for k, action in enumerate(plan):
        enc.assert_(enc.step(k, action), f"step {k + 1}: {action}")
    enc.goal(len(plan))
    L.append("(check-sat)")
    return SmtEncoding("\n".join(L) + "\n", len(plan), tuple(symbols), mode, semantics)


def default_solver_cmd() -> str | None:
    """``SOLVER_CMD`` if set, else a z3 or cvc5 found on PATH."""
    env = os.environ.get("SOLVER_CMD")
    if env:
        return env
    if shutil.which("z3"):
        return "z3 -smt2 {file}"
    if shutil.which("cvc5"):
        return "cvc5 --lang smt2 {file}"
    return None


def parse_solver_output(text: str) -> SolverResult:
    for line in text.splitlines():
        word = line.strip()
        if word.startswith("(error"):
            raise SolverError(f"solver reported an error: {word}")
        if word in ("sat", "unsat", "unknown"):
            return SolverResult(word)
    raise SolverError(f"no sat/unsat/unknown in solver output: {text[:200]!r}")


def check_with_solver(
    encoding: SmtEncoding | str,
    solver_cmd: str | None = None,
    timeout: float = DEFAULT_TIMEOUT,
) -> SolverResult:
    """Run an external solver on the script.

    ``solver_cmd`` is a command line; a ``{file}`` placeholder is replaced
    with a temporary .smt2 file, otherwise the script goes to stdin.
    """
    script = encoding.script if isinstance(encoding, SmtEncoding) else encoding
    cmd = solver_cmd or default_solver_cmd()
    if not cmd:
        raise SolverError("no SMT solver configured (set SOLVER_CMD or put z3 on PATH)")
    with tempfile.TemporaryDirectory() as tmp:
        stdin = script
        if "{file}" in cmd:
            path = os.path.join(tmp, "query.smt2")
            with open(path, "w") as fh:
                fh.write(script)
            argv = [a.replace("{file}", path) for a in shlex.split(cmd)]
            stdin = None
        else:
            argv = shlex.split(cmd)
        try:
            proc = subprocess.run(argv, input=stdin, capture_output=True, text=True, timeout=timeout)
        except FileNotFoundError as e:
            raise SolverError(f"solver binary not found: {argv[0]}") from e
        except subprocess.TimeoutExpired as e:
            raise SolverError(f"solver timed out after {timeout}s") from e
    if proc.returncode != 0:
        raise SolverError(f"solver exited with {proc.returncode}: {(proc.stderr or proc.stdout).strip()[:200]}")
    return parse_solver_output(proc.stdout)


def check_many(
    encodings: Sequence[SmtEncoding],
    solver_cmd: str | None = None,
    timeout: float = DEFAULT_TIMEOUT,
    workers: int = 4,
) -> list[SolverResult]:
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(lambda e: check_with_solver(e, solver_cmd, timeout), encodings))


@dataclass(frozen=True)
class CrossCheck:
    agree: bool
    verdict: Verdict
    smt: SolverResult
    encoding: SmtEncoding

    def to_json(self) -> dict:
        return {
            "agree": self.agree,
            "native": self.verdict.to_json(),
            "smt": self.smt.value,
        }


def cross_check(
    problem: Problem,
    plan: Plan,
    solver_cmd: str | None = None,
    semantics: Semantics | str = Semantics.STRICT_4OPS,
    timeout: float = DEFAULT_TIMEOUT,
) -> CrossCheck:
    """Compare native validity with satisfiability of the corrected encoding."""
    verdict = verify(problem, plan, semantics)
    enc = emit_smtlib(problem, plan, EncodingMode.CORRECTED, semantics)
    res = check_with_solver(enc, solver_cmd, timeout)
    agree = res is not SolverResult.UNKNOWN and verdict.is_valid == (res is SolverResult.SAT)
    return CrossCheck(agree, verdict, res, enc)
