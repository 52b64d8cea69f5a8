import random
import sys
from pathlib import Path

import pytest

from pwidth.core.instance import parse_instance
from pwidth.pwtree.dsl import parse_tree

DATA = Path(__file__).parent / "data"


def read(name: str) -> str:
    return (DATA / name).read_text()


@pytest.fixture
def fig1():
    return parse_tree(read("fig1.tree"))


@pytest.fixture
def itern_star():
    return parse_tree(read("itern_star.tree"))


@pytest.fixture
def fig1_instance():
    return parse_instance(read("fig1.atoms"))


@pytest.fixture
def rng():
    return random.Random(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS):
        terminalreporter.write_line(line)
