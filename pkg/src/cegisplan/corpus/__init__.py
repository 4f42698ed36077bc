"""Named fixture corpora laid out as ``problems/*.pddl``, ``plans/*.plan``, ``transcripts/*.json``."""

from __future__ import annotations

import json
import shutil
from dataclasses import dataclass, field
from pathlib import Path

from ..pddl import Problem, parse_problem
from ..plan import Plan, parse_plan

BUILTIN_DIR = Path(__file__).parent


@dataclass
class Corpus:
    root: Path
    problems: dict[str, Problem] = field(default_factory=dict)
    plans: dict[str, Plan] = field(default_factory=dict)
    transcripts: dict[str, list[str]] = field(default_factory=dict)

    def plan_for(self, name: str) -> Plan:
        return self.plans[name]

    def export(self, out: str | Path) -> Path:
        out = Path(out)
        for sub in ("problems", "plans", "transcripts"):
            (out / sub).mkdir(parents=True, exist_ok=True)
            for f in sorted((self.root / sub).glob("*")):
                shutil.copy(f, out / sub / f.name)
        return out


def load_corpus(root: str | Path) -> Corpus:
    root = Path(root)
    c = Corpus(root)
    for f in sorted((root / "problems").glob("*.pddl")):
        c.problems[f.stem] = parse_problem(f.read_text())
    for f in sorted((root / "plans").glob("*.plan")):
        c.plans[f.stem] = parse_plan(f.read_text())
    for f in sorted((root / "transcripts").glob("*.json")):
        c.transcripts[f.stem] = json.loads(f.read_text())
    return c


def builtin_corpus() -> Corpus:
    """OLDPROB1 and NEWPROB with their plans, the infeasible prefix and a two-turn transcript."""
    return load_corpus(BUILTIN_DIR)


def named_corpus(name: str) -> Corpus:
    if name == "builtin":
        return builtin_corpus()
    return load_corpus(name)
