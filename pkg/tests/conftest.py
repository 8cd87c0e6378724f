import random
import sys
from pathlib import Path

import pytest

from hoistc.randprog import random_core_program, random_surface_program
from hoistc.syntax import parse

# deep let chains (the 200-variable network) recurse past the default limit
sys.setrecursionlimit(100_000)

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"


# (criterion, passed, detail) rows filled in by the acceptance suite
ACCEPTANCE: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


def load(name: str):
    return parse((PROGRAMS / name).read_text())


@pytest.fixture(scope="session")
def programs_dir() -> Path:
    return PROGRAMS


@pytest.fixture(scope="session")
def core_corpus():
    rng = random.Random(20240601)
    return [random_core_program(rng) for _ in range(1000)]


@pytest.fixture(scope="session")
def surface_corpus():
    rng = random.Random(4242)
    return [random_surface_program(rng, max_flips=10) for _ in range(500)]
