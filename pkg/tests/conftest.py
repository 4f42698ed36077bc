import shutil

import pytest

from cegisplan.corpus import builtin_corpus
from cegisplan.smt import default_solver_cmd


@pytest.fixture(scope="session")
def corpus():
    return builtin_corpus()


@pytest.fixture(scope="session")
def newprob(corpus):
    return corpus.problems["newprob"]


@pytest.fixture(scope="session")
def oldprob1(corpus):
    return corpus.problems["oldprob1"]


@pytest.fixture(scope="session")
def solver_cmd():
    cmd = default_solver_cmd()
    if not cmd or not shutil.which(cmd.split()[0]):
        pytest.skip("no SMT solver configured")
    return cmd


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
