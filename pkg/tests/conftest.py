import functools

import numpy as np
import pytest

from patmoments import build_dfa, ecoli_model, embed, parse_pattern

ACCEPTANCE_LINES: list[str] = []


@functools.lru_cache(maxsize=None)
def ecoli_chain(pattern: str, seq_len: int = 400000):
    model = ecoli_model()
    return embed(build_dfa(parse_pattern(pattern, model.alphabet), model.order), model, seq_len)


@pytest.fixture(scope="session")
def ecoli():
    return ecoli_model()


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
