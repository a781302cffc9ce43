from __future__ import annotations

import pytest

from revelation.fixtures import example1, example2
from revelation.oracle import corpus, verify_instance


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def ex1():
    return example1()


@pytest.fixture
def ex2():
    return example2()


@pytest.fixture(scope="session")
def standard_corpus():
    return corpus(200)


@pytest.fixture(scope="session")
def corpus_reports(standard_corpus):
    """verify_instance on every corpus member, computed once per session."""
    return [(spec, inst, verify_instance(inst, seed=spec.seed)) for spec, inst in standard_corpus]


@pytest.fixture
def acceptance_log(request):
    def log(line: str):
        print(line)
        request.config.acceptance_lines.append(line)

    return log
